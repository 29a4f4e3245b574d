#pragma once

#include <iosfwd>
#include <string>

#include "pmlwave/geometry.hpp"

namespace pmlwave {

// Plain-text mesh format, 0-based indices:
//
//   vertices N
//   x y                      (N lines)
//   triangles M
//   i j k region             (M lines, region 0 = physical, 1 = PML)
//   boundary K
//   i j tag                  (K lines, tag 0 = surface, 1 = outer)
//
// Lines starting with '#' are comments.

void write_mesh(std::ostream& out, const Mesh& mesh);
void write_mesh(const std::string& path, const Mesh& mesh);

/// Reads a mesh and restores the derived data: rho from the outer boundary,
/// the interface vertices on |x| = R, and a physical-first vertex order.
Mesh read_mesh(std::istream& in, double R);
Mesh read_mesh(const std::string& path, double R);

}  // namespace pmlwave
