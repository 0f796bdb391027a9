#include "mfglab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <string>

namespace mfglab {

namespace {

constexpr double kUnitTol = 1e-12;

double clamp1(double v) { return std::max(-1.0, std::min(1.0, v)); }

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::max(0.0, std::min(1.0, (p - a).dot(ab) / len2));
  return (p - (a + t * ab)).norm();
}

bool segments_intersect(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
  auto orient = [](const Eigen::Vector2d& p, const Eigen::Vector2d& q,
                   const Eigen::Vector2d& r) {
    const double v = (q.x() - p.x()) * (r.y() - p.y()) -
                     (q.y() - p.y()) * (r.x() - p.x());
    if (v > 0) return 1;
    if (v < 0) return -1;
    return 0;
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  auto on = [&](const Eigen::Vector2d& p, const Eigen::Vector2d& q,
                const Eigen::Vector2d& r) {
    return orient(p, q, r) == 0 && r.x() >= std::min(p.x(), q.x()) &&
           r.x() <= std::max(p.x(), q.x()) && r.y() >= std::min(p.y(), q.y()) &&
           r.y() <= std::max(p.y(), q.y());
  };
  return on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b);
}

}  // namespace

ConvexCone::ConvexCone(Vec apex_, Vec axis_, double half_angle_)
    : apex(std::move(apex_)), axis(std::move(axis_)), half_angle(half_angle_) {
  if (apex.size() != axis.size() || apex.size() < 2)
    throw GeometryError("cone: apex/axis dimension mismatch");
  if (std::abs(axis.norm() - 1.0) > kUnitTol)
    throw GeometryError("cone: axis must be a unit vector");
  if (!(half_angle > 0.0) || !(half_angle < std::numbers::pi / 2.0))
    throw GeometryError("cone: half angle must lie strictly in (0, pi/2)");
}

TruncatedCone::TruncatedCone(ConvexCone cone_, double radius_)
    : cone(std::move(cone_)), radius(radius_) {
  if (!(radius > 0.0)) throw GeometryError("truncated cone: radius must be > 0");
}

bool cone_membership(const TruncatedCone& tc, const Vec& x) {
  const Vec d = x - tc.cone.apex;
  const double r = d.norm();
  if (r >= tc.radius) return false;
  if (r == 0.0) return true;  // closure convention at the apex
  const double angle = std::acos(clamp1(d.dot(tc.cone.axis) / r));
  return angle <= tc.cone.half_angle;
}

std::optional<double> rho_of(const TruncatedCone& tc, const Vec& xi) {
  if (std::abs(xi.norm() - 1.0) > 1e-9)
    throw GeometryError("rho_of: xi must be a unit vector");
  const double beta = std::acos(clamp1(xi.dot(tc.cone.axis)));
  const double gamma_min = beta - tc.cone.half_angle;
  // Smallest angle between xi and a cone direction; the dot with xi is
  // maximal there. rho > 0 needs that maximum to be negative.
  const double rho = -std::cos(gamma_min);
  if (!(rho > 0.0)) return std::nullopt;
  return rho;
}

std::vector<ConvexCone> corner_cones_of(const std::vector<Eigen::Vector2d>& v) {
  const std::size_t n = v.size();
  std::vector<ConvexCone> cones;
  cones.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector2d& prev = v[(k + n - 1) % n];
    const Eigen::Vector2d& cur = v[k];
    const Eigen::Vector2d& next = v[(k + 1) % n];
    const Eigen::Vector2d d1 = (next - cur).normalized();
    const Eigen::Vector2d d2 = (prev - cur).normalized();
    const double a1 = std::atan2(d1.y(), d1.x());
    double interior = std::atan2(d2.y(), d2.x()) - a1;
    while (interior <= 0) interior += 2.0 * std::numbers::pi;
    if (interior >= std::numbers::pi - 1e-12)
      throw GeometryError("corner_cones_of: vertex " + std::to_string(k) +
                          " is reflex or flat (interior angle >= pi)");
    const double mid = a1 + 0.5 * interior;
    Vec apex(2), axis(2);
    apex << cur.x(), cur.y();
    axis << std::cos(mid), std::sin(mid);
    cones.emplace_back(apex, axis, 0.5 * interior);
  }
  return cones;
}

PolygonalInclusion::PolygonalInclusion(std::vector<Eigen::Vector2d> vertices)
    : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw GeometryError("polygon needs >= 3 vertices");
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = vertices_[i];
    const auto& b = vertices_[(i + 1) % n];
    area2 += a.x() * b.y() - b.x() * a.y();
  }
  if (std::abs(area2) < 1e-14) throw GeometryError("polygon is degenerate");
  if (area2 < 0.0) std::reverse(vertices_.begin(), vertices_.end());

  min_edge_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double len = (vertices_[(i + 1) % n] - vertices_[i]).norm();
    if (len < 1e-14) throw GeometryError("polygon has a zero-length edge");
    min_edge_ = std::min(min_edge_, len);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip adjacent edges (they share a vertex).
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(vertices_[i], vertices_[(i + 1) % n], vertices_[j],
                             vertices_[(j + 1) % n]))
        throw GeometryError("polygon is self-intersecting");
    }
  }
  cones_ = corner_cones_of(vertices_);
}

bool PolygonalInclusion::contains(double px, double py) const {
  const Eigen::Vector2d p(px, py);
  const std::size_t n = vertices_.size();
  const double scale = min_edge_;
  for (std::size_t i = 0; i < n; ++i) {
    if (point_segment_distance(p, vertices_[i], vertices_[(i + 1) % n]) <=
        1e-12 * scale)
      return true;  // nodes exactly on the boundary count as inside
  }
  bool inside = false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = vertices_[i];
    const auto& b = vertices_[(i + 1) % n];
    if ((a.y() > py) != (b.y() > py)) {
      const double xint = a.x() + (py - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (px < xint) inside = !inside;
    }
  }
  return inside;
}

double PolygonalInclusion::corner_radius(std::size_t k) const {
  const std::size_t n = vertices_.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < n; ++e) {
    if (e == k || (e + 1) % n == k) continue;  // edges adjacent to vertex k
    best = std::min(best, point_segment_distance(vertices_[k], vertices_[e],
                                                 vertices_[(e + 1) % n]));
  }
  return 0.5 * best;
}

Grid::Grid(BoundingBox box, int cells_x, int cells_y,
           std::optional<PolygonalInclusion> inclusion)
    : box_(box), nx_(cells_x), ny_(cells_y), inclusion_(std::move(inclusion)) {
  if (nx_ < 2 || ny_ < 2) throw GeometryError("grid needs >= 2 cells per axis");
  if (!(box_.width() > 0) || !(box_.height() > 0))
    throw GeometryError("grid bounding box is empty");
  hx_ = box_.width() / nx_;
  hy_ = box_.height() / ny_;

  if (inclusion_) {
    for (const auto& v : inclusion_->vertices()) {
      if (!(v.x() > box_.x0 && v.x() < box_.x1 && v.y() > box_.y0 &&
            v.y() < box_.y1))
        throw GeometryError("inclusion polygon is not strictly inside the domain");
    }
  }

  classes_.resize(node_count());
  for (int j = 0; j <= ny_; ++j) {
    for (int i = 0; i <= nx_; ++i) {
      NodeClass c;
      if (is_boundary(i, j)) {
        c = NodeClass::boundary;
      } else if (inclusion_ && inclusion_->contains(x(i), y(j))) {
        c = NodeClass::interior_inside;
      } else {
        c = NodeClass::interior_outside;
      }
      classes_[index(i, j)] = c;
    }
  }

  // The complement of the inclusion must stay connected (flood fill over
  // nodes not flagged inside, 4-connectivity).
  if (inclusion_) {
    std::vector<char> seen(node_count(), 0);
    std::deque<std::pair<int, int>> queue;
    queue.emplace_back(0, 0);
    seen[index(0, 0)] = 1;
    int reached = 0;
    int outside_total = 0;
    for (int id = 0; id < node_count(); ++id)
      if (classes_[id] != NodeClass::interior_inside) ++outside_total;
    while (!queue.empty()) {
      auto [i, j] = queue.front();
      queue.pop_front();
      ++reached;
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int ni = i + di[k], nj = j + dj[k];
        if (ni < 0 || nj < 0 || ni > nx_ || nj > ny_) continue;
        const int id = index(ni, nj);
        if (seen[id] || classes_[id] == NodeClass::interior_inside) continue;
        seen[id] = 1;
        queue.emplace_back(ni, nj);
      }
    }
    if (reached != outside_total)
      throw GeometryError("inclusion disconnects the grid complement");
  }

  boundary_nodes_.reserve(2 * (nx_ + ny_));
  boundary_s_.reserve(2 * (nx_ + ny_));
  const double W = box_.width(), H = box_.height();
  for (int i = 0; i <= nx_; ++i) {
    boundary_nodes_.push_back(index(i, 0));
    boundary_s_.push_back(i * hx_);
  }
  for (int j = 1; j <= ny_; ++j) {
    boundary_nodes_.push_back(index(nx_, j));
    boundary_s_.push_back(W + j * hy_);
  }
  for (int i = nx_ - 1; i >= 0; --i) {
    boundary_nodes_.push_back(index(i, ny_));
    boundary_s_.push_back(W + H + (nx_ - i) * hx_);
  }
  for (int j = ny_ - 1; j >= 1; --j) {
    boundary_nodes_.push_back(index(0, j));
    boundary_s_.push_back(2 * W + H + (ny_ - j) * hy_);
  }

  interior_index_.assign(node_count(), -1);
  for (int j = 1; j < ny_; ++j)
    for (int i = 1; i < nx_; ++i) interior_index_[index(i, j)] = interior_count_++;
}

}  // namespace mfglab
