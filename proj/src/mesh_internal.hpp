#pragma once

#include <array>
#include <vector>

#include "pmlwave/geometry.hpp"

namespace pmlwave::detail {

std::vector<double> ring_radii(double r_start, double r_end, double h, int min_layers);
int ring_segments(double r, double h);
void append_ring(std::vector<Point>& vertices, double r, int segments, std::vector<int>& ids);
void add_oriented(std::vector<std::array<int, 3>>& tris, const std::vector<Point>& v, int a,
                  int b, int c);
void stitch_rings(const std::vector<Point>& v, const std::vector<int>& inner,
                  const std::vector<int>& outer, std::vector<std::array<int, 3>>& tris);

/// Incremental Bowyer-Watson triangulation of a point set.
std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Point>& points);

struct CoreResult {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary;
  std::vector<int> outer_ring;
  double radius = 0.0;
};

/// Unstructured fill of {|x| < r_core, x2 > h(x1)} minus the obstacle.
CoreResult delaunay_core(const SurfaceProfile& profile, const MeshOptions& options);

}  // namespace pmlwave::detail
