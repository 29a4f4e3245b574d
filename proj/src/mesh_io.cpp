#include "pmlwave/mesh_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pmlwave {

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << std::setprecision(17);
  out << "vertices " << mesh.vertices.size() << '\n';
  for (const auto& p : mesh.vertices) out << p.x << ' ' << p.y << '\n';
  out << "triangles " << mesh.triangles.size() << '\n';
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    const auto& t = mesh.triangles[k];
    out << t[0] << ' ' << t[1] << ' ' << t[2] << ' '
        << (mesh.regions[k] == Region::kPml ? 1 : 0) << '\n';
  }
  out << "boundary " << mesh.boundary.size() << '\n';
  for (const auto& e : mesh.boundary)
    out << e.a << ' ' << e.b << ' ' << (e.tag == BoundaryTag::kOuter ? 1 : 0) << '\n';
}

void write_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw GeometryError("cannot open " + path + " for writing");
  write_mesh(out, mesh);
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return std::istringstream(line);
    }
    fail("unexpected end of file");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw GeometryError("mesh file line " + std::to_string(number_) + ": " + what);
  }

  std::size_t header(const std::string& keyword) {
    auto line = next();
    std::string word;
    long long count = -1;
    if (!(line >> word >> count) || word != keyword || count < 0)
      fail("expected '" + keyword + " <count>'");
    return static_cast<std::size_t>(count);
  }

 private:
  std::istream& in_;
  int number_ = 0;
};

}  // namespace

Mesh read_mesh(std::istream& in, double R) {
  LineReader reader(in);
  Mesh raw;
  raw.vertices.resize(reader.header("vertices"));
  for (auto& p : raw.vertices) {
    auto line = reader.next();
    if (!(line >> p.x >> p.y)) reader.fail("expected 'x y'");
  }
  const auto nt = reader.header("triangles");
  const int nv = raw.vertex_count();
  for (std::size_t k = 0; k < nt; ++k) {
    auto line = reader.next();
    int i, j, l, region;
    if (!(line >> i >> j >> l >> region)) reader.fail("expected 'i j k region'");
    for (int v : {i, j, l})
      if (v < 0 || v >= nv) reader.fail("vertex index out of range");
    raw.triangles.push_back({i, j, l});
    raw.regions.push_back(region == 1 ? Region::kPml : Region::kPhysical);
  }
  const auto nb = reader.header("boundary");
  for (std::size_t k = 0; k < nb; ++k) {
    auto line = reader.next();
    int a, b, tag;
    if (!(line >> a >> b >> tag)) reader.fail("expected 'i j tag'");
    if (a < 0 || b < 0 || a >= nv || b >= nv) reader.fail("vertex index out of range");
    raw.boundary.push_back({a, b, tag == 1 ? BoundaryTag::kOuter : BoundaryTag::kSurface});
  }

  double rho = 0.0;
  for (const auto& e : raw.boundary) {
    if (e.tag != BoundaryTag::kOuter) continue;
    rho = std::max({rho, norm(raw.vertices[e.a]), norm(raw.vertices[e.b])});
  }
  const double tol = 1e-8 * std::max(rho, R);

  // Physical vertices first, original order preserved within each class.
  std::vector<bool> physical(raw.vertices.size(), false);
  for (int k = 0; k < raw.triangle_count(); ++k)
    if (raw.regions[k] == Region::kPhysical)
      for (int v : raw.triangles[k]) physical[v] = true;
  std::vector<int> order, position(raw.vertices.size());
  for (int v = 0; v < nv; ++v)
    if (physical[v]) order.push_back(v);
  const int n_phys = static_cast<int>(order.size());
  for (int v = 0; v < nv; ++v)
    if (!physical[v]) order.push_back(v);
  for (int i = 0; i < nv; ++i) position[order[i]] = i;

  Mesh mesh;
  mesh.R = R;
  mesh.rho = rho;
  mesh.physical_vertex_count = n_phys;
  for (int v : order) mesh.vertices.push_back(raw.vertices[v]);
  for (const auto& t : raw.triangles) mesh.triangles.push_back({position[t[0]], position[t[1]], position[t[2]]});
  mesh.regions = raw.regions;
  for (const auto& e : raw.boundary) mesh.boundary.push_back({position[e.a], position[e.b], e.tag});
  for (int v = 0; v < nv; ++v)
    if (std::abs(norm(mesh.vertices[v]) - R) <= tol) mesh.interface_vertices.push_back(v);
  std::sort(mesh.interface_vertices.begin(), mesh.interface_vertices.end(), [&](int a, int b) {
    return std::atan2(mesh.vertices[a].y, mesh.vertices[a].x) <
           std::atan2(mesh.vertices[b].y, mesh.vertices[b].x);
  });

  if (auto problem = validate_mesh(mesh); !problem.empty())
    throw GeometryError("imported mesh is invalid: " + problem);
  return mesh;
}

Mesh read_mesh(const std::string& path, double R) {
  std::ifstream in(path);
  if (!in) throw GeometryError("cannot open mesh file " + path);
  return read_mesh(in, R);
}

}  // namespace pmlwave
