#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "pmlwave/experiments.hpp"

using namespace pmlwave;

int main(int argc, char** argv) {
  CLI::App app{"PML wave scattering runs and sweeps"};
  std::string preset_name, config_path, out = "out", sweep_param, sweep_values;
  std::vector<std::string> sets;
  bool frequency = false, print_only = false, list = false;
  app.add_option("--preset", preset_name, "example1 or example2");
  app.add_option("--config", config_path, "key = value file applied after the preset")->check(CLI::ExistingFile);
  app.add_option("--out", out, "artifact directory");
  app.add_option("--sweep-param", sweep_param, "sigma or thickness");
  app.add_option("--sweep-values", sweep_values, "comma separated, ascending");
  app.add_option("--set", sets, "override one key, e.g. --set pml.sigma=20");
  app.add_flag("--frequency-domain", frequency, "compare PML and DtN Helmholtz solves instead");
  app.add_flag("--print-config", print_only, "print the resolved configuration and exit");
  app.add_flag("--list-presets", list, "list presets and exit");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& name : preset_names()) std::cout << name << '\n';
    return 0;
  }
  RunConfig config;
  try {
    if (!preset_name.empty()) config = preset(preset_name);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      config = parse_config(in, config_path, config);
    }
    if (!sweep_param.empty()) apply_setting(config, "sweep.param", sweep_param, "--sweep-param");
    if (!sweep_values.empty()) apply_setting(config, "sweep.values", sweep_values, "--sweep-values");
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set", "expected key=value, got '" + s + "'");
      apply_setting(config, s.substr(0, eq), s.substr(eq + 1), "--set");
    }
    validate(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  if (print_only) {
    std::cout << format_config(config);
    return 0;
  }
  try {
    run_example(config, out, frequency);
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << " (see " << out << "/manifest.txt)\n";
    return 1;
  }
  std::cout << "wrote " << out << '\n';
  return 0;
}
