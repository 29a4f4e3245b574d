#include "pmlwave/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

namespace pmlwave {

SurfaceProfile SurfaceProfile::from_pieces(std::vector<ProfilePiece> pieces) {
  std::sort(pieces.begin(), pieces.end(),
            [](const ProfilePiece& l, const ProfilePiece& r) { return l.a < r.a; });
  SurfaceProfile profile;
  if (pieces.empty()) return profile;

  auto reject = [](double x, double left, double right) {
    std::ostringstream msg;
    msg << "surface profile is discontinuous at x1 = " << x << " (left value " << left
        << ", right value " << right << ")";
    throw GeometryError(msg.str());
  };

  double prev_end = -std::numeric_limits<double>::infinity();
  double prev_value = 0.0;
  for (const auto& piece : pieces) {
    if (!piece.height) throw GeometryError("surface profile piece has no height function");
    if (!(piece.a < piece.b)) throw GeometryError("surface profile piece has an empty interval");
    if (piece.a < prev_end - kContinuityTolerance)
      throw GeometryError("surface profile pieces overlap near x1 = " + std::to_string(piece.a));
    const double start = piece.height(piece.a);
    if (!std::isfinite(start) || !std::isfinite(piece.height(piece.b)))
      throw GeometryError("surface profile height is not finite");
    // A gap between pieces is flat, so both sides must meet zero there.
    const bool touching = std::abs(piece.a - prev_end) <= kContinuityTolerance;
    const double left = touching ? prev_value : 0.0;
    if (std::abs(start - left) > kContinuityTolerance) reject(piece.a, left, start);
    if (!touching && std::isfinite(prev_end) && std::abs(prev_value) > kContinuityTolerance)
      reject(prev_end, prev_value, 0.0);
    prev_end = piece.b;
    prev_value = piece.height(piece.b);
  }
  if (std::abs(prev_value) > kContinuityTolerance) reject(prev_end, prev_value, 0.0);

  profile.support_radius_ = std::max(std::abs(pieces.front().a), std::abs(pieces.back().b));
  double reach = profile.support_radius_;
  for (const auto& piece : pieces) {
    constexpr int kSamples = 4096;
    for (int i = 0; i <= kSamples; ++i) {
      const double x = piece.a + (piece.b - piece.a) * i / kSamples;
      reach = std::max(reach, std::hypot(x, piece.height(x)));
    }
  }
  profile.reach_ = reach;
  profile.pieces_ = std::move(pieces);
  profile.description_ = "piecewise";
  return profile;
}

SurfaceProfile SurfaceProfile::flat() { return SurfaceProfile{}; }

SurfaceProfile SurfaceProfile::sine_bump(double amplitude, double wavenumber, double half_width) {
  auto profile = from_pieces({{-half_width, half_width, [amplitude, wavenumber](double x) {
                                 return amplitude * std::sin(wavenumber * x);
                               }}});
  std::ostringstream desc;
  desc << amplitude << "*sin(" << wavenumber << "*x) on [" << -half_width << "," << half_width
       << "]";
  profile.description_ = desc.str();
  return profile;
}

SurfaceProfile SurfaceProfile::default_rough() {
  return sine_bump(0.3, 4.0, std::numbers::pi / 4.0);
}

double SurfaceProfile::operator()(double x1) const {
  for (const auto& piece : pieces_) {
    if (x1 >= piece.a && x1 <= piece.b) return piece.height(x1);
  }
  return 0.0;
}

double Mesh::signed_area(int triangle) const {
  const auto& t = triangles[triangle];
  const Point a = vertices[t[0]], b = vertices[t[1]], c = vertices[t[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

Point Mesh::centroid(int triangle) const {
  const auto& t = triangles[triangle];
  const Point a = vertices[t[0]], b = vertices[t[1]], c = vertices[t[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

double Mesh::area() const {
  double total = 0.0;
  for (int k = 0; k < triangle_count(); ++k) total += signed_area(k);
  return total;
}

std::vector<bool> Mesh::boundary_vertex_mask() const {
  std::vector<bool> mask(vertices.size(), false);
  for (const auto& e : boundary) {
    mask[e.a] = true;
    mask[e.b] = true;
  }
  return mask;
}

MeshQuality mesh_quality(const Mesh& mesh) {
  MeshQuality q;
  q.min_angle_deg = 180.0;
  q.min_signed_area = std::numeric_limits<double>::infinity();
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    const auto& t = mesh.triangles[k];
    q.min_signed_area = std::min(q.min_signed_area, mesh.signed_area(k));
    for (int i = 0; i < 3; ++i) {
      const Point a = mesh.vertices[t[i]];
      const Point b = mesh.vertices[t[(i + 1) % 3]];
      const Point c = mesh.vertices[t[(i + 2) % 3]];
      const double ux = b.x - a.x, uy = b.y - a.y, vx = c.x - a.x, vy = c.y - a.y;
      const double angle = std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy);
      q.min_angle_deg = std::min(q.min_angle_deg, angle * 180.0 / std::numbers::pi);
      q.max_edge = std::max(q.max_edge, std::hypot(ux, uy));
    }
  }
  return q;
}

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

}  // namespace

std::string validate_mesh(const Mesh& mesh) {
  std::ostringstream err;
  if (mesh.regions.size() != mesh.triangles.size()) return "region count does not match triangles";
  const int nv = mesh.vertex_count();
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    for (int v : mesh.triangles[k]) {
      if (v < 0 || v >= nv) {
        err << "triangle " << k << " references vertex " << v << " out of range";
        return err.str();
      }
    }
    if (!(mesh.signed_area(k) > 0.0)) {
      err << "triangle " << k << " has non-positive signed area " << mesh.signed_area(k);
      return err.str();
    }
  }

  const double scale = std::max(mesh.rho, 1.0);
  std::vector<int> order(nv);
  for (int i = 0; i < nv; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int l, int r) {
    return std::pair{mesh.vertices[l].x, mesh.vertices[l].y} <
           std::pair{mesh.vertices[r].x, mesh.vertices[r].y};
  });
  for (int i = 0; i < nv; ++i) {
    const Point p = mesh.vertices[order[i]];
    for (int j = i + 1; j < nv; ++j) {
      const Point q = mesh.vertices[order[j]];
      if (q.x - p.x > 1e-12 * scale) break;
      if (std::hypot(q.x - p.x, q.y - p.y) <= 1e-12 * scale) {
        err << "vertices " << order[i] << " and " << order[j] << " coincide";
        return err.str();
      }
    }
  }

  std::map<EdgeKey, int> use;
  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) ++use[edge_key(t[i], t[(i + 1) % 3])];
  }
  std::map<EdgeKey, int> tagged;
  for (const auto& e : mesh.boundary) ++tagged[edge_key(e.a, e.b)];
  for (const auto& [key, count] : use) {
    if (count > 2) {
      err << "edge (" << key.first << "," << key.second << ") shared by " << count << " triangles";
      return err.str();
    }
    const bool is_tagged = tagged.count(key) > 0;
    if (count == 1 && !is_tagged) {
      err << "boundary edge (" << key.first << "," << key.second << ") carries no tag";
      return err.str();
    }
    if (count == 2 && is_tagged) {
      err << "interior edge (" << key.first << "," << key.second << ") is tagged as boundary";
      return err.str();
    }
  }
  for (const auto& [key, count] : tagged) {
    if (count != 1 || use.count(key) == 0) {
      err << "tagged edge (" << key.first << "," << key.second << ") is not a mesh edge";
      return err.str();
    }
  }
  return {};
}

Submesh physical_submesh(const Mesh& mesh) {
  Submesh sub;
  std::vector<int> local(mesh.vertices.size(), -1);
  std::vector<bool> used(mesh.vertices.size(), false);
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    if (mesh.regions[k] != Region::kPhysical) continue;
    for (int v : mesh.triangles[k]) used[v] = true;
  }
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (!used[v]) continue;
    local[v] = static_cast<int>(sub.parent_vertex.size());
    sub.parent_vertex.push_back(v);
    sub.mesh.vertices.push_back(mesh.vertices[v]);
  }
  std::map<EdgeKey, int> use;
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    if (mesh.regions[k] != Region::kPhysical) continue;
    const auto& t = mesh.triangles[k];
    sub.mesh.triangles.push_back({local[t[0]], local[t[1]], local[t[2]]});
    sub.mesh.regions.push_back(Region::kPhysical);
    for (int i = 0; i < 3; ++i) ++use[edge_key(local[t[i]], local[t[(i + 1) % 3]])];
  }
  for (const auto& e : mesh.boundary) {
    if (e.tag != BoundaryTag::kSurface || local[e.a] < 0 || local[e.b] < 0) continue;
    if (use.count(edge_key(local[e.a], local[e.b])) == 0) continue;
    sub.mesh.boundary.push_back({local[e.a], local[e.b], BoundaryTag::kSurface});
  }
  for (int v : mesh.interface_vertices) sub.mesh.interface_vertices.push_back(local[v]);
  // The interface arc closes the submesh from outside.
  for (std::size_t i = 0; i + 1 < sub.mesh.interface_vertices.size(); ++i) {
    sub.mesh.boundary.push_back({sub.mesh.interface_vertices[i],
                                 sub.mesh.interface_vertices[i + 1], BoundaryTag::kOuter});
  }
  sub.mesh.physical_vertex_count = sub.mesh.vertex_count();
  sub.mesh.R = mesh.R;
  sub.mesh.rho = mesh.R;
  return sub;
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (const auto& p : mesh.vertices) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int nt = std::max(1, mesh.triangle_count());
  const double extent = std::max(xmax - xmin, ymax - ymin);
  cell_ = std::max(extent / std::sqrt(static_cast<double>(nt)), 1e-12);
  x0_ = xmin - 1e-9 * extent;
  y0_ = ymin - 1e-9 * extent;
  nx_ = static_cast<int>((xmax - x0_) / cell_) + 1;
  ny_ = static_cast<int>((ymax - y0_) / cell_) + 1;
  buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    double bx0 = std::numeric_limits<double>::infinity(), by0 = bx0, bx1 = -bx0, by1 = -bx0;
    for (int v : mesh.triangles[k]) {
      bx0 = std::min(bx0, mesh.vertices[v].x);
      bx1 = std::max(bx1, mesh.vertices[v].x);
      by0 = std::min(by0, mesh.vertices[v].y);
      by1 = std::max(by1, mesh.vertices[v].y);
    }
    const int i0 = std::clamp(static_cast<int>((bx0 - x0_) / cell_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((bx1 - x0_) / cell_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((by0 - y0_) / cell_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((by1 - y0_) / cell_), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(k);
  }
}

std::optional<Location> PointLocator::locate(Point p) const {
  const int i = static_cast<int>(std::floor((p.x - x0_) / cell_));
  const int j = static_cast<int>(std::floor((p.y - y0_) / cell_));
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return std::nullopt;
  constexpr double kTol = 1e-10;
  std::optional<Location> best;
  double best_violation = std::numeric_limits<double>::infinity();
  for (int k : buckets_[static_cast<std::size_t>(j) * nx_ + i]) {
    const auto& t = mesh_->triangles[k];
    const Point a = mesh_->vertices[t[0]], b = mesh_->vertices[t[1]], c = mesh_->vertices[t[2]];
    const double det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    const double l1 = ((p.x - a.x) * (c.y - a.y) - (p.y - a.y) * (c.x - a.x)) / det;
    const double l2 = ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) / det;
    const double l0 = 1.0 - l1 - l2;
    const double violation = -std::min({l0, l1, l2, 0.0});
    if (violation <= kTol && violation < best_violation) {
      best_violation = violation;
      best = Location{k, {l0, l1, l2}};
      if (violation == 0.0) break;
    }
  }
  return best;
}

std::optional<Location> locate(const Mesh& mesh, Point p) { return PointLocator(mesh).locate(p); }

}  // namespace pmlwave
