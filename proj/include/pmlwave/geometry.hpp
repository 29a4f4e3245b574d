#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmlwave {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double norm(Point p) { return std::hypot(p.x, p.y); }

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One piece of a surface perturbation: height(x1) on [a, b].
struct ProfilePiece {
  double a = 0.0;
  double b = 0.0;
  std::function<double(double)> height;
};

/// Local perturbation x2 = h(x1) of the flat line x2 = 0.
///
/// Outside the union of its pieces the profile is identically zero. The
/// pieces must be ordered, non-overlapping and glue continuously to each
/// other and to zero at the outer ends.
class SurfaceProfile {
 public:
  static constexpr double kContinuityTolerance = 1e-10;

  SurfaceProfile() = default;

  /// Validates continuity and returns the profile. Throws GeometryError with
  /// the offending x1 location when two adjacent values differ.
  static SurfaceProfile from_pieces(std::vector<ProfilePiece> pieces);

  static SurfaceProfile flat();

  /// amplitude * sin(wavenumber * x1) on [-half_width, half_width].
  static SurfaceProfile sine_bump(double amplitude, double wavenumber, double half_width);

  /// 0.3 sin(4 x1) on [-pi/4, pi/4].
  static SurfaceProfile default_rough();

  double operator()(double x1) const;

  /// Every non-zero value lies in |x1| <= support_radius().
  double support_radius() const { return support_radius_; }

  /// Largest |(x1, h(x1))| over the support, i.e. the radius of the smallest
  /// origin-centred disk containing the perturbed part of the curve.
  double reach() const { return reach_; }

  bool is_flat() const { return pieces_.empty(); }

  const std::string& description() const { return description_; }

 private:
  std::vector<ProfilePiece> pieces_;
  double support_radius_ = 0.0;
  double reach_ = 0.0;
  std::string description_ = "flat";
};

enum class BoundaryTag { kSurface, kOuter };
enum class Region { kPhysical, kPml };

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::kSurface;
};

/// Conforming triangulation of the truncated half-disk above the surface.
///
/// Vertices of the physical region |x| <= R come first; `physical_vertex_count`
/// marks the split. Generated meshes with the same profile, R and h_target
/// therefore share a bit-identical physical submesh whatever the outer radius.
struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary;
  std::vector<Region> regions;
  /// Vertices on the circle |x| = R, ordered by polar angle from 0 to pi.
  std::vector<int> interface_vertices;
  int physical_vertex_count = 0;
  double R = 0.0;
  double rho = 0.0;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }

  double signed_area(int triangle) const;
  Point centroid(int triangle) const;
  double area() const;

  /// Dirichlet vertices: endpoints of every boundary edge.
  std::vector<bool> boundary_vertex_mask() const;
};

struct MeshOptions {
  double R = 2.0;
  double rho = 3.0;
  double h_target = 0.05;
  /// Optional sound-soft obstacle, counter-clockwise polygon inside |x| < R.
  std::vector<Point> obstacle;
};

/// Deterministic mesh of the half-disk of radius rho above the profile, with
/// the circle r = R resolved exactly by mesh vertices.
Mesh generate_mesh(const SurfaceProfile& profile, const MeshOptions& options);

struct MeshQuality {
  double min_angle_deg = 0.0;
  double max_edge = 0.0;
  double min_signed_area = 0.0;
};

MeshQuality mesh_quality(const Mesh& mesh);

/// Structural checks shared by the generator and the importer. Returns an
/// empty string when the mesh is valid, otherwise a description.
std::string validate_mesh(const Mesh& mesh);

/// Triangles restricted to the physical region, renumbered compactly.
/// `parent_vertex[i]` is the index of submesh vertex i in `mesh`.
struct Submesh {
  Mesh mesh;
  std::vector<int> parent_vertex;
};

Submesh physical_submesh(const Mesh& mesh);

struct Location {
  int triangle = -1;
  std::array<double, 3> barycentric{};
};

/// Bucket grid over the mesh bounding box for point location.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh);

  /// std::nullopt when the point lies outside every triangle.
  std::optional<Location> locate(Point p) const;

 private:
  const Mesh* mesh_;
  double x0_ = 0.0;
  double y0_ = 0.0;
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

std::optional<Location> locate(const Mesh& mesh, Point p);

}  // namespace pmlwave
