#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "doctest.h"
#include "pmlwave/geometry.hpp"
#include "pmlwave/mesh_io.hpp"

using namespace pmlwave;

namespace {

const std::vector<Point> kBox{{-0.3, 0.8}, {0.3, 0.8}, {0.3, 1.2}, {-0.3, 1.2}};

void check_invariants(const Mesh& m, const SurfaceProfile& profile, double h) {
  CHECK(validate_mesh(m).empty());
  const double tol = 1e-8 * m.rho;
  for (int k = 0; k < m.triangle_count(); ++k) {
    CHECK(m.signed_area(k) > 0.0);
    const double rc = norm(m.centroid(k));
    CHECK((m.regions[k] == Region::kPml) == (rc > m.R));
  }
  for (const auto& e : m.boundary) {
    for (int v : {e.a, e.b}) {
      const Point p = m.vertices[v];
      if (e.tag == BoundaryTag::kOuter) CHECK(std::abs(norm(p) - m.rho) <= tol);
    }
  }
  for (int v : m.interface_vertices) CHECK(std::abs(norm(m.vertices[v]) - m.R) <= tol);
  const auto q = mesh_quality(m);
  CHECK(q.max_edge <= 2.0 * h);
  CHECK(q.min_angle_deg >= 15.0);
  (void)profile;
}

// Surface edges lie on the profile unless they belong to the obstacle.
void check_surface_on_profile(const Mesh& m, const SurfaceProfile& profile) {
  for (const auto& e : m.boundary) {
    if (e.tag != BoundaryTag::kSurface) continue;
    for (int v : {e.a, e.b}) {
      const Point p = m.vertices[v];
      CHECK(std::abs(p.y - profile(p.x)) <= 1e-8 * m.rho);
    }
  }
}

}  // namespace

TEST_CASE("default profile values") {
  const auto h = SurfaceProfile::default_rough();
  CHECK(h(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(h(1.0) == 0.0);
  CHECK(h(-2.5) == 0.0);
  CHECK(h(std::numbers::pi / 8) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(h.support_radius() == doctest::Approx(std::numbers::pi / 4));
  CHECK(h.reach() < 2.0);
}

TEST_CASE("profile continuity is enforced with the location") {
  auto step = [](double) { return 0.5; };
  try {
    SurfaceProfile::from_pieces({{-0.5, 0.5, step}});
    FAIL("discontinuous profile accepted");
  } catch (const GeometryError& e) {
    CHECK(std::string(e.what()).find("x1 = -0.5") != std::string::npos);
  }
  auto ramp_up = [](double x) { return x + 1.0; };
  auto ramp_down = [](double x) { return 1.0 - x; };
  CHECK_NOTHROW(SurfaceProfile::from_pieces({{-1.0, 0.0, ramp_up}, {0.0, 1.0, ramp_down}}));
  auto off = [](double x) { return 1.1 - x; };
  CHECK_THROWS_AS(SurfaceProfile::from_pieces({{-1.0, 0.0, ramp_up}, {0.0, 1.0, off}}),
                  GeometryError);
}

TEST_CASE("default rough profile mesh at h = 0.05") {
  const auto profile = SurfaceProfile::default_rough();
  const Mesh m = generate_mesh(profile, {2.0, 3.0, 0.05, {}});
  CHECK(m.vertex_count() >= 5000);
  CHECK(m.vertex_count() <= 20000);
  // Regression value of this generator.
  CHECK(m.vertex_count() == 5952);
  check_invariants(m, profile, 0.05);
  check_surface_on_profile(m, profile);
  CHECK(m.area() ==
        doctest::Approx(0.5 * std::numbers::pi * 9.0).epsilon(5e-3));
}

TEST_CASE("flat mesh is mirror symmetric") {
  const Mesh m = generate_mesh(SurfaceProfile::flat(), {2.0, 3.0, 0.5, {}});
  check_invariants(m, SurfaceProfile::flat(), 0.5);
  auto key = [](Point p) { return std::make_pair(std::round(p.x * 1e8), std::round(p.y * 1e8)); };
  std::multiset<std::pair<double, double>> pts, mirrored;
  for (const auto& p : m.vertices) {
    pts.insert(key(p));
    mirrored.insert(key({-p.x, p.y}));
  }
  CHECK(pts == mirrored);
}

TEST_CASE("PML centroids lie in the annulus") {
  const Mesh m = generate_mesh(SurfaceProfile::default_rough(), {2.0, 3.4, 0.05, {}});
  int pml = 0;
  for (int k = 0; k < m.triangle_count(); ++k) {
    if (m.regions[k] != Region::kPml) continue;
    ++pml;
    const double r = norm(m.centroid(k));
    CHECK(r > 2.0);
    CHECK(r < 3.4);
  }
  CHECK(pml > 0);
}

TEST_CASE("boundary closes into loops") {
  for (bool obstacle : {false, true}) {
    const Mesh m = generate_mesh(SurfaceProfile::default_rough(),
                                 {2.0, 3.0, 0.1, obstacle ? kBox : std::vector<Point>{}});
    std::map<int, int> degree;
    for (const auto& e : m.boundary) {
      ++degree[e.a];
      ++degree[e.b];
    }
    for (const auto& [v, d] : degree) CHECK(d == 2);
    // Walk the loops.
    std::map<int, std::vector<int>> adj;
    for (const auto& e : m.boundary) {
      adj[e.a].push_back(e.b);
      adj[e.b].push_back(e.a);
    }
    std::set<int> seen;
    int loops = 0;
    for (const auto& [start, _] : adj) {
      if (seen.count(start)) continue;
      ++loops;
      int prev = -1, cur = start;
      do {
        seen.insert(cur);
        const int next = adj[cur][0] == prev ? adj[cur][1] : adj[cur][0];
        prev = cur;
        cur = next;
      } while (cur != start);
    }
    CHECK(loops == (obstacle ? 2 : 1));
    CHECK(seen.size() == degree.size());
  }
}

TEST_CASE("obstacle mesh") {
  const auto profile = SurfaceProfile::default_rough();
  const Mesh m = generate_mesh(profile, {2.0, 3.0, 0.05, kBox});
  check_invariants(m, profile, 0.05);
  CHECK(m.area() == doctest::Approx(0.5 * std::numbers::pi * 9.0 - 0.24).epsilon(5e-3));
  CHECK_FALSE(locate(m, {0.0, 1.0}).has_value());
  CHECK(locate(m, {0.0, 0.5}).has_value());
}

TEST_CASE("refinement roughly quadruples the triangle count") {
  const auto profile = SurfaceProfile::default_rough();
  for (double h : {0.2, 0.1}) {
    const double coarse = generate_mesh(profile, {2.0, 3.0, h, {}}).triangle_count();
    const double fine = generate_mesh(profile, {2.0, 3.0, h / 2, {}}).triangle_count();
    CHECK(fine / coarse >= 2.0);
    CHECK(fine / coarse <= 8.0);
  }
}

TEST_CASE("infeasible parameters are rejected") {
  const auto profile = SurfaceProfile::default_rough();
  CHECK_THROWS_AS(generate_mesh(profile, {3.0, 2.0, 0.05, {}}), GeometryError);
  CHECK_THROWS_AS(generate_mesh(profile, {2.0, 2.0, 0.05, {}}), GeometryError);
  CHECK_THROWS_AS(generate_mesh(profile, {0.7, 3.0, 0.05, {}}), GeometryError);
  CHECK_THROWS_AS(generate_mesh(profile, {2.0, 3.0, 0.6, {}}), GeometryError);
  CHECK_THROWS_AS(generate_mesh(profile, {2.0, 3.0, 0.05, {{0, 0.5}, {2.5, 0.5}, {0, 1}}}),
                  GeometryError);
}

TEST_CASE("physical submesh does not depend on the outer radius") {
  const auto profile = SurfaceProfile::default_rough();
  const Mesh a = generate_mesh(profile, {2.0, 3.0, 0.1, {}});
  const Mesh b = generate_mesh(profile, {2.0, 4.6, 0.1, {}});
  REQUIRE(a.physical_vertex_count == b.physical_vertex_count);
  for (int v = 0; v < a.physical_vertex_count; ++v) {
    CHECK(a.vertices[v].x == b.vertices[v].x);
    CHECK(a.vertices[v].y == b.vertices[v].y);
  }
  const auto sa = physical_submesh(a), sb = physical_submesh(b);
  CHECK(sa.mesh.triangles == sb.mesh.triangles);
  CHECK(validate_mesh(sa.mesh).empty());
  CHECK(sa.mesh.interface_vertices.size() == a.interface_vertices.size());
}

TEST_CASE("point location") {
  const Mesh m = generate_mesh(SurfaceProfile::default_rough(), {2.0, 3.0, 0.1, {}});
  const PointLocator locator(m);
  for (int v = 0; v < m.vertex_count(); v += 37) {
    const auto loc = locator.locate(m.vertices[v]);
    REQUIRE(loc.has_value());
    const auto& t = m.triangles[loc->triangle];
    int corner = -1;
    for (int i = 0; i < 3; ++i)
      if (t[i] == v) corner = i;
    REQUIRE(corner >= 0);
    CHECK(loc->barycentric[corner] == doctest::Approx(1.0).epsilon(1e-10));
  }
  for (int k = 0; k < m.triangle_count(); k += 53) {
    const auto loc = locator.locate(m.centroid(k));
    REQUIRE(loc.has_value());
    CHECK(loc->triangle == k);
    for (double l : loc->barycentric) CHECK(std::abs(l - 1.0 / 3.0) <= 1e-12);
  }
  const auto src = locator.locate({0.0, 0.5});
  REQUIRE(src.has_value());
  CHECK(m.regions[src->triangle] == Region::kPhysical);
  double sum = 0.0;
  for (double l : src->barycentric) {
    CHECK(l >= -1e-10);
    CHECK(l <= 1.0 + 1e-10);
    sum += l;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  CHECK_FALSE(locator.locate({0.0, -0.5}).has_value());
  CHECK_FALSE(locator.locate({5.0, 1.0}).has_value());
}

TEST_CASE("mesh file round trip") {
  const Mesh m = generate_mesh(SurfaceProfile::default_rough(), {2.0, 3.0, 0.2, {}});
  std::stringstream buf;
  write_mesh(buf, m);
  const Mesh r = read_mesh(buf, 2.0);
  CHECK(r.vertex_count() == m.vertex_count());
  CHECK(r.triangle_count() == m.triangle_count());
  CHECK(r.rho == doctest::Approx(3.0));
  CHECK(r.physical_vertex_count == m.physical_vertex_count);
  CHECK(r.interface_vertices == m.interface_vertices);
  CHECK(r.area() == doctest::Approx(m.area()).epsilon(1e-14));
}

TEST_CASE("malformed mesh files report the line") {
  std::stringstream in("# comment\nvertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 7 0\n");
  try {
    read_mesh(in, 0.5);
    FAIL("bad index accepted");
  } catch (const GeometryError& e) {
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
}
