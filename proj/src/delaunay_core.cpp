// Conforming Delaunay fill of the core disk when an obstacle is present.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "mesh_internal.hpp"

namespace pmlwave::detail {

namespace {

double orient(Point a, Point b, Point c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Positive when d lies strictly inside the circumcircle of the CCW triangle abc.
long double incircle(Point a, Point b, Point c, Point d) {
  const long double adx = a.x - d.x, ady = a.y - d.y;
  const long double bdx = b.x - d.x, bdy = b.y - d.y;
  const long double cdx = c.x - d.x, cdy = c.y - d.y;
  return (adx * adx + ady * ady) * (bdx * cdy - bdy * cdx) -
         (bdx * bdx + bdy * bdy) * (adx * cdy - ady * cdx) +
         (cdx * cdx + cdy * cdy) * (adx * bdy - ady * bdx);
}

class BowyerWatson {
 public:
  explicit BowyerWatson(const std::vector<Point>& input) : pts_(input) {
    double xmin = std::numeric_limits<double>::infinity(), ymin = xmin, xmax = -xmin, ymax = -xmin;
    for (const auto& p : input) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    const double m = std::max({xmax - xmin, ymax - ymin, 1e-3}) * 10.0;
    n_input_ = static_cast<int>(input.size());
    pts_.push_back({cx - 2.0 * m, cy - m});
    pts_.push_back({cx + 2.0 * m, cy - m});
    pts_.push_back({cx, cy + 2.0 * m});
    tris_.push_back({{n_input_, n_input_ + 1, n_input_ + 2}, {-1, -1, -1}, true});
    for (int i = 0; i < n_input_; ++i) insert(i);
  }

  std::vector<std::array<int, 3>> triangles() const {
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      if (t.v[0] >= n_input_ || t.v[1] >= n_input_ || t.v[2] >= n_input_) continue;
      out.push_back(t.v);
    }
    return out;
  }

 private:
  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> nb;  // neighbour across the edge opposite v[k]
    bool alive;
  };

  int locate(Point p) {
    int t = last_;
    if (t < 0 || !tris_[t].alive) t = first_alive();
    const int max_steps = 4 * static_cast<int>(tris_.size()) + 16;
    for (int step = 0; step < max_steps; ++step) {
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const Tri& tr = tris_[t];
        const Point a = pts_[tr.v[(k + 1) % 3]], b = pts_[tr.v[(k + 2) % 3]];
        if (orient(a, b, p) < 0.0 && tr.nb[k] >= 0) {
          t = tr.nb[k];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
      const Tri& tr = tris_[i];
      if (!tr.alive) continue;
      if (orient(pts_[tr.v[0]], pts_[tr.v[1]], p) >= 0.0 &&
          orient(pts_[tr.v[1]], pts_[tr.v[2]], p) >= 0.0 &&
          orient(pts_[tr.v[2]], pts_[tr.v[0]], p) >= 0.0)
        return i;
    }
    return t;
  }

  int first_alive() const {
    for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i)
      if (tris_[i].alive) return i;
    return 0;
  }

  void insert(int pi) {
    const Point p = pts_[pi];
    const int start = locate(p);
    std::vector<int> cavity{start};
    std::set<int> in_cavity{start};
    for (std::size_t head = 0; head < cavity.size(); ++head) {
      const Tri& tr = tris_[cavity[head]];
      for (int k = 0; k < 3; ++k) {
        const int n = tr.nb[k];
        if (n < 0 || in_cavity.count(n)) continue;
        const Tri& nt = tris_[n];
        if (incircle(pts_[nt.v[0]], pts_[nt.v[1]], pts_[nt.v[2]], p) > 0.0L) {
          in_cavity.insert(n);
          cavity.push_back(n);
        }
      }
    }

    struct Rim {
      int a, b, outside;
    };
    std::vector<Rim> rim;
    for (int t : cavity) {
      const Tri& tr = tris_[t];
      for (int k = 0; k < 3; ++k) {
        const int n = tr.nb[k];
        if (n >= 0 && in_cavity.count(n)) continue;
        rim.push_back({tr.v[(k + 1) % 3], tr.v[(k + 2) % 3], n});
      }
    }
    for (int t : cavity) tris_[t].alive = false;

    std::map<int, int> by_first, by_second;
    std::vector<int> created;
    for (const auto& e : rim) {
      const int id = static_cast<int>(tris_.size());
      tris_.push_back({{e.a, e.b, pi}, {-1, -1, e.outside}, true});
      created.push_back(id);
      by_first[e.a] = id;
      by_second[e.b] = id;
      if (e.outside >= 0) {
        Tri& o = tris_[e.outside];
        for (int k = 0; k < 3; ++k) {
          const int oa = o.v[(k + 1) % 3], ob = o.v[(k + 2) % 3];
          if (oa == e.b && ob == e.a) o.nb[k] = id;
        }
      }
    }
    for (int id : created) {
      Tri& t = tris_[id];
      // Edge (b, p) is opposite a; its twin is the new triangle starting at b.
      t.nb[0] = by_first.at(t.v[1]);
      // Edge (p, a) is opposite b; its twin is the new triangle ending at a.
      t.nb[1] = by_second.at(t.v[0]);
    }
    last_ = created.empty() ? last_ : created.front();
  }

  std::vector<Point> pts_;
  std::vector<Tri> tris_;
  int n_input_ = 0;
  int last_ = 0;
};

bool point_in_polygon(const std::vector<Point>& poly, Point p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - a.x - t * vx, p.y - a.y - t * vy);
}

}  // namespace

std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Point>& points) {
  return BowyerWatson(points).triangles();
}

CoreResult delaunay_core(const SurfaceProfile& profile, const MeshOptions& options) {
  const double h = options.h_target;
  double reach = profile.reach();
  for (const auto& p : options.obstacle) reach = std::max(reach, norm(p));
  CoreResult core;
  core.radius = std::min(reach + 3.0 * h, options.R);
  if (reach + 0.5 * h > options.R) {
    std::ostringstream err;
    err << "obstacle and surface perturbation (reach " << reach
        << ") leave no room for elements of size " << h << " inside R = " << options.R;
    throw GeometryError(err.str());
  }
  const double rc = core.radius;

  // Fixed boundary points: core ring, then the bottom curve, then the obstacle.
  std::vector<Point> pts;
  append_ring(pts, rc, ring_segments(rc, h), core.outer_ring);
  const int ring_right = core.outer_ring.front();
  const int ring_left = core.outer_ring.back();

  constexpr int kSamples = 8192;
  std::vector<double> xs(kSamples + 1), arc(kSamples + 1, 0.0);
  for (int i = 0; i <= kSamples; ++i) xs[i] = -rc + 2.0 * rc * i / kSamples;
  for (int i = 1; i <= kSamples; ++i)
    arc[i] = arc[i - 1] + std::hypot(xs[i] - xs[i - 1], profile(xs[i]) - profile(xs[i - 1]));
  const int n_bottom = std::max(2, static_cast<int>(std::lround(arc.back() / h)));
  std::vector<int> bottom{ring_left};
  for (int k = 1; k < n_bottom; ++k) {
    const double target = arc.back() * k / n_bottom;
    const auto it = std::lower_bound(arc.begin(), arc.end(), target);
    const std::size_t i = std::max<std::size_t>(1, it - arc.begin());
    const double w = (target - arc[i - 1]) / (arc[i] - arc[i - 1]);
    const double x = xs[i - 1] + w * (xs[i] - xs[i - 1]);
    bottom.push_back(static_cast<int>(pts.size()));
    pts.push_back({x, profile(x)});
  }
  bottom.push_back(ring_right);

  std::vector<int> obstacle_ids;
  const auto& poly = options.obstacle;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i], b = poly[(i + 1) % poly.size()];
    const int n = std::max(1, static_cast<int>(std::ceil(std::hypot(b.x - a.x, b.y - a.y) / h)));
    for (int k = 0; k < n; ++k) {
      obstacle_ids.push_back(static_cast<int>(pts.size()));
      pts.push_back({a.x + (b.x - a.x) * k / n, a.y + (b.y - a.y) * k / n});
    }
  }
  const int n_fixed = static_cast<int>(pts.size());

  // Closed outline of the core: ring from theta = 0 to pi, bottom back to x = rc.
  std::vector<Point> outline;
  for (int id : core.outer_ring) outline.push_back(pts[id]);
  for (std::size_t k = 1; k + 1 < bottom.size(); ++k) outline.push_back(pts[bottom[k]]);
  std::vector<Point> hole;
  for (int id : obstacle_ids) hole.push_back(pts[id]);
  auto inside_core = [&](Point p) {
    return point_in_polygon(outline, p) && (hole.empty() || !point_in_polygon(hole, p));
  };

  std::vector<std::pair<int, int>> segments;
  for (std::size_t k = 0; k + 1 < bottom.size(); ++k) segments.push_back({bottom[k], bottom[k + 1]});
  for (std::size_t k = 0; k < obstacle_ids.size(); ++k)
    segments.push_back({obstacle_ids[k], obstacle_ids[(k + 1) % obstacle_ids.size()]});
  std::vector<std::pair<int, int>> all_segments = segments;
  for (std::size_t k = 0; k + 1 < core.outer_ring.size(); ++k)
    all_segments.push_back({core.outer_ring[k], core.outer_ring[k + 1]});

  // Hexagonal lattice of interior points kept clear of every boundary segment.
  const double dy = h * std::sqrt(3.0) / 2.0;
  double ymin = 0.0;
  for (int id : bottom) ymin = std::min(ymin, pts[id].y);
  for (int row = 0;; ++row) {
    const double y = ymin + row * dy;
    if (y > rc) break;
    const double offset = (row % 2) * 0.5 * h;
    for (int j = -static_cast<int>(rc / h) - 2; j <= static_cast<int>(rc / h) + 2; ++j) {
      const Point p{j * h + offset, y};
      if (!inside_core(p)) continue;
      bool clear = true;
      for (const auto& [a, b] : all_segments) {
        if (segment_distance(p, pts[a], pts[b]) < 0.55 * h) {
          clear = false;
          break;
        }
      }
      if (clear) pts.push_back(p);
    }
  }

  auto keep_triangles = [&](const std::vector<std::array<int, 3>>& tris) {
    std::vector<std::array<int, 3>> kept;
    for (const auto& t : tris) {
      const Point c{(pts[t[0]].x + pts[t[1]].x + pts[t[2]].x) / 3.0,
                    (pts[t[0]].y + pts[t[1]].y + pts[t[2]].y) / 3.0};
      if (inside_core(c)) kept.push_back(t);
    }
    return kept;
  };

  auto edge_set = [](const std::vector<std::array<int, 3>>& tris) {
    std::set<std::pair<int, int>> edges;
    for (const auto& t : tris)
      for (int i = 0; i < 3; ++i)
        edges.insert({std::min(t[i], t[(i + 1) % 3]), std::max(t[i], t[(i + 1) % 3])});
    return edges;
  };

  std::vector<std::array<int, 3>> tris;
  for (int attempt = 0;; ++attempt) {
    tris = keep_triangles(delaunay_triangulate(pts));
    const auto edges = edge_set(tris);
    std::vector<int> encroaching;
    bool missing = false;
    for (const auto& [a, b] : all_segments) {
      if (edges.count({std::min(a, b), std::max(a, b)})) continue;
      missing = true;
      const Point m{0.5 * (pts[a].x + pts[b].x), 0.5 * (pts[a].y + pts[b].y)};
      const double r = 0.5 * std::hypot(pts[a].x - pts[b].x, pts[a].y - pts[b].y);
      for (int i = n_fixed; i < static_cast<int>(pts.size()); ++i)
        if (std::hypot(pts[i].x - m.x, pts[i].y - m.y) <= r * (1.0 + 1e-9)) encroaching.push_back(i);
    }
    if (!missing) break;
    if (encroaching.empty() || attempt > 20)
      throw GeometryError("core triangulation could not recover the boundary segments");
    std::sort(encroaching.begin(), encroaching.end());
    encroaching.erase(std::unique(encroaching.begin(), encroaching.end()), encroaching.end());
    for (auto it = encroaching.rbegin(); it != encroaching.rend(); ++it) pts.erase(pts.begin() + *it);
  }

  // Laplacian smoothing of the free points; a move is kept only when the
  // point stays inside and away from the boundary.
  for (int sweep = 0; sweep < 4; ++sweep) {
    std::vector<Point> sum(pts.size(), Point{0.0, 0.0});
    std::vector<int> count(pts.size(), 0);
    for (const auto& [a, b] : edge_set(tris)) {
      sum[a].x += pts[b].x;
      sum[a].y += pts[b].y;
      sum[b].x += pts[a].x;
      sum[b].y += pts[a].y;
      ++count[a];
      ++count[b];
    }
    std::vector<Point> moved = pts;
    for (int i = n_fixed; i < static_cast<int>(pts.size()); ++i) {
      if (count[i] == 0) continue;
      const Point target{sum[i].x / count[i], sum[i].y / count[i]};
      if (!inside_core(target)) continue;
      bool clear = true;
      for (const auto& [a, b] : all_segments) {
        if (segment_distance(target, pts[a], pts[b]) < 0.45 * h) {
          clear = false;
          break;
        }
      }
      if (clear) moved[i] = target;
    }
    auto candidate = keep_triangles(delaunay_triangulate(moved));
    const auto edges = edge_set(candidate);
    bool conforming = true;
    for (const auto& [a, b] : all_segments)
      if (!edges.count({std::min(a, b), std::max(a, b)})) conforming = false;
    if (!conforming) break;
    pts = std::move(moved);
    tris = std::move(candidate);
  }

  core.vertices = std::move(pts);
  core.triangles = std::move(tris);
  for (auto& t : core.triangles) {
    if (orient(core.vertices[t[0]], core.vertices[t[1]], core.vertices[t[2]]) < 0.0)
      std::swap(t[1], t[2]);
  }
  for (const auto& [a, b] : segments) core.boundary.push_back({a, b, BoundaryTag::kSurface});
  return core;
}

}  // namespace pmlwave::detail
