// Ring-structured mesh generator for the truncated half-disk.
//
// Concentric semicircular rings at radii r_k carry round(pi r_k / h) segments
// each; neighbouring rings are stitched by the shorter-diagonal rule. The circle
// r = R and the outer circle r = rho are rings, so the interface is resolved
// exactly. A flat surface without obstacle gives a fully ring-structured disk
// (mirror symmetric). Otherwise the rings start at a core radius enclosing the
// perturbation and the obstacle, and the core is filled by a conforming
// Delaunay triangulation (see delaunay_core.cpp).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mesh_internal.hpp"
#include "pmlwave/geometry.hpp"

namespace pmlwave {

namespace detail {

std::vector<double> ring_radii(double r_start, double r_end, double h, int min_layers) {
  const int layers = std::max(min_layers, static_cast<int>(std::ceil((r_end - r_start) / h - 1e-9)));
  std::vector<double> radii(layers + 1);
  for (int k = 0; k <= layers; ++k) radii[k] = r_start + (r_end - r_start) * k / layers;
  radii.back() = r_end;
  return radii;
}

int ring_segments(double r, double h) {
  return std::max(2, static_cast<int>(std::lround(std::numbers::pi * r / h)));
}

void append_ring(std::vector<Point>& vertices, double r, int segments, std::vector<int>& ids) {
  ids.resize(segments + 1);
  for (int j = 0; j <= segments; ++j) {
    const double theta = std::numbers::pi * j / segments;
    Point p{r * std::cos(theta), r * std::sin(theta)};
    // Keep exact mirror images and exact zeros on the axis.
    if (j == 0) p = {r, 0.0};
    if (j == segments) p = {-r, 0.0};
    if (2 * j == segments) p = {0.0, r};
    ids[j] = static_cast<int>(vertices.size());
    vertices.push_back(p);
  }
  // Enforce the mirror pairing bit-for-bit.
  for (int j = 0; 2 * j < segments; ++j) {
    const Point p = vertices[ids[j]];
    vertices[ids[segments - j]] = {-p.x, p.y};
  }
}

void add_oriented(std::vector<std::array<int, 3>>& tris, const std::vector<Point>& v, int a,
                  int b, int c) {
  const double det =
      (v[b].x - v[a].x) * (v[c].y - v[a].y) - (v[b].y - v[a].y) * (v[c].x - v[a].x);
  if (det >= 0.0)
    tris.push_back({a, b, c});
  else
    tris.push_back({a, c, b});
}

void stitch_rings(const std::vector<Point>& v, const std::vector<int>& inner,
                  const std::vector<int>& outer, std::vector<std::array<int, 3>>& tris) {
  std::size_t i = 0, j = 0;
  auto dist = [&](int a, int b) { return std::hypot(v[a].x - v[b].x, v[a].y - v[b].y); };
  while (i + 1 < inner.size() || j + 1 < outer.size()) {
    bool advance_inner;
    if (i + 1 == inner.size()) {
      advance_inner = false;
    } else if (j + 1 == outer.size()) {
      advance_inner = true;
    } else {
      // Shorter new diagonal; ties go to the ring that is behind in angle.
      const double d_inner = dist(inner[i + 1], outer[j]);
      const double d_outer = dist(inner[i], outer[j + 1]);
      advance_inner = d_inner < d_outer;
      if (std::abs(d_inner - d_outer) <= 1e-12 * (d_inner + d_outer)) {
        const double t_inner = std::atan2(v[inner[i + 1]].y, v[inner[i + 1]].x);
        const double t_outer = std::atan2(v[outer[j + 1]].y, v[outer[j + 1]].x);
        advance_inner = t_inner <= t_outer;
      }
    }
    if (advance_inner) {
      add_oriented(tris, v, inner[i], inner[i + 1], outer[j]);
      ++i;
    } else {
      add_oriented(tris, v, inner[i], outer[j + 1], outer[j]);
      ++j;
    }
  }
}

}  // namespace detail

namespace {

void check_parameters(const SurfaceProfile& profile, const MeshOptions& o) {
  std::ostringstream err;
  if (!(o.R > 0.0) || !(o.rho > o.R)) {
    err << "mesh requires 0 < R < rho (got R = " << o.R << ", rho = " << o.rho << ")";
    throw GeometryError(err.str());
  }
  if (!(o.h_target > 0.0) || !(o.h_target <= 0.5 * (o.rho - o.R))) {
    err << "h_target must lie in (0, (rho - R)/2]; got " << o.h_target;
    throw GeometryError(err.str());
  }
  if (profile.reach() >= o.R || profile.support_radius() >= o.R) {
    err << "surface perturbation (reach " << profile.reach() << ") spills past R = " << o.R;
    throw GeometryError(err.str());
  }
  for (const auto& p : o.obstacle) {
    if (norm(p) >= o.R || p.y <= profile(p.x)) {
      err << "obstacle vertex (" << p.x << ", " << p.y << ") is not inside the physical region";
      throw GeometryError(err.str());
    }
  }
}

}  // namespace

Mesh generate_mesh(const SurfaceProfile& profile, const MeshOptions& options) {
  check_parameters(profile, options);
  const double h = options.h_target;
  const double R = options.R;
  Mesh mesh;
  mesh.R = R;
  mesh.rho = options.rho;

  std::vector<int> ring;  // current innermost ring of the structured part

  if (options.obstacle.empty() && profile.is_flat()) {
    // Structured disk down to the centre: vertex 0 is the origin.
    mesh.vertices.push_back({0.0, 0.0});
    const auto radii = detail::ring_radii(0.0, R, h, 2);
    std::vector<int> prev;
    for (std::size_t k = 1; k < radii.size(); ++k) {
      std::vector<int> ids;
      detail::append_ring(mesh.vertices, radii[k], detail::ring_segments(radii[k], h), ids);
      if (k == 1) {
        for (std::size_t j = 0; j + 1 < ids.size(); ++j)
          detail::add_oriented(mesh.triangles, mesh.vertices, 0, ids[j], ids[j + 1]);
        mesh.boundary.push_back({ids.back(), 0, BoundaryTag::kSurface});
        mesh.boundary.push_back({0, ids.front(), BoundaryTag::kSurface});
      } else {
        detail::stitch_rings(mesh.vertices, prev, ids, mesh.triangles);
        mesh.boundary.push_back({ids.back(), prev.back(), BoundaryTag::kSurface});
        mesh.boundary.push_back({prev.front(), ids.front(), BoundaryTag::kSurface});
      }
      prev = std::move(ids);
    }
    ring = prev;

  } else {
    detail::CoreResult core = detail::delaunay_core(profile, options);
    mesh.vertices = std::move(core.vertices);
    mesh.triangles = std::move(core.triangles);
    mesh.boundary = std::move(core.boundary);
    ring = std::move(core.outer_ring);
    const auto radii = core.radius < R ? detail::ring_radii(core.radius, R, h, 1)
                                       : std::vector<double>{R};
    for (std::size_t k = 1; k < radii.size(); ++k) {
      std::vector<int> ids;
      detail::append_ring(mesh.vertices, radii[k], detail::ring_segments(radii[k], h), ids);
      detail::stitch_rings(mesh.vertices, ring, ids, mesh.triangles);
      mesh.boundary.push_back({ids.back(), ring.back(), BoundaryTag::kSurface});
      mesh.boundary.push_back({ring.front(), ids.front(), BoundaryTag::kSurface});
      ring = std::move(ids);
    }
  }

  mesh.interface_vertices = ring;
  mesh.physical_vertex_count = mesh.vertex_count();
  const int physical_triangles = mesh.triangle_count();

  const auto pml_radii = detail::ring_radii(R, options.rho, h, 1);
  for (std::size_t k = 1; k < pml_radii.size(); ++k) {
    std::vector<int> ids;
    detail::append_ring(mesh.vertices, pml_radii[k], detail::ring_segments(pml_radii[k], h), ids);
    detail::stitch_rings(mesh.vertices, ring, ids, mesh.triangles);
    mesh.boundary.push_back({ids.back(), ring.back(), BoundaryTag::kSurface});
    mesh.boundary.push_back({ring.front(), ids.front(), BoundaryTag::kSurface});
    ring = std::move(ids);
  }
  for (std::size_t j = 0; j + 1 < ring.size(); ++j)
    mesh.boundary.push_back({ring[j], ring[j + 1], BoundaryTag::kOuter});

  mesh.regions.assign(mesh.triangles.size(), Region::kPml);
  std::fill(mesh.regions.begin(), mesh.regions.begin() + physical_triangles, Region::kPhysical);

  if (auto problem = validate_mesh(mesh); !problem.empty())
    throw GeometryError("generated mesh is invalid: " + problem +
                        " (profile too steep for h_target?)");
  return mesh;
}

}  // namespace pmlwave
