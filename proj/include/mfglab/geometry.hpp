#ifndef MFGLAB_GEOMETRY_HPP
#define MFGLAB_GEOMETRY_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mfglab {

using Vec = Eigen::VectorXd;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Open convex cone with apex x_c, unit axis v_c and half opening angle
/// theta_c in (0, pi/2). Points are classified by the angle between
/// (x - apex) and the axis.
struct ConvexCone {
  Vec apex;
  Vec axis;           // unit within 1e-12
  double half_angle;  // strict (0, pi/2)

  ConvexCone(Vec apex_, Vec axis_, double half_angle_);
  int dim() const { return static_cast<int>(apex.size()); }
};

/// Cone intersected with the open ball of radius `radius` about the apex.
/// Its boundary splits into the lateral part and the spherical cap.
struct TruncatedCone {
  ConvexCone cone;
  double radius;

  TruncatedCone(ConvexCone cone_, double radius_);
  int dim() const { return cone.dim(); }
};

/// True iff the angular condition 0 <= angle(x - apex, axis) <= theta_c and
/// the radial condition |x - apex| < radius both hold. The apex itself is
/// inside (angle taken as 0 there).
bool cone_membership(const TruncatedCone& cone, const Vec& x);

/// Largest rho with xi . (x - apex)/|x - apex| <= -rho < 0 over the closed
/// cone, i.e. rho = -cos(angle(xi, axis) - theta_c). Empty when some cone
/// direction makes a non-negative dot with xi (probe direction invalid).
std::optional<double> rho_of(const TruncatedCone& cone, const Vec& xi);

/// Simple polygon in R^2, vertices normalized to counterclockwise order.
/// Every vertex must be strictly convex (interior angle < pi); the interior
/// cone of each vertex is derived on construction.
class PolygonalInclusion {
 public:
  explicit PolygonalInclusion(std::vector<Eigen::Vector2d> vertices);

  const std::vector<Eigen::Vector2d>& vertices() const { return vertices_; }
  const std::vector<ConvexCone>& corner_cones() const { return cones_; }
  double min_edge_length() const { return min_edge_; }

  /// Point-in-polygon; points on the boundary count as inside.
  bool contains(double x, double y) const;

  /// Half the distance from vertex k to the nearest non-adjacent edge:
  /// the default truncation radius of the corner probe region.
  double corner_radius(std::size_t k) const;

 private:
  std::vector<Eigen::Vector2d> vertices_;
  std::vector<ConvexCone> cones_;
  double min_edge_ = 0.0;
};

/// Derived interior cones, one per vertex (axis = interior bisector,
/// half_angle = half the interior angle). Throws on reflex corners.
std::vector<ConvexCone> corner_cones_of(const std::vector<Eigen::Vector2d>& ccw_vertices);

struct BoundingBox {
  double x0, y0, x1, y1;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

enum class NodeClass : std::uint8_t { boundary, interior_outside, interior_inside };

/// Structured node-centered grid on a rectangle, with per-node classification
/// against an optional polygonal inclusion. Immutable after construction.
class Grid {
 public:
  Grid(BoundingBox box, int cells_x, int cells_y,
       std::optional<PolygonalInclusion> inclusion = std::nullopt);

  const BoundingBox& box() const { return box_; }
  int cells_x() const { return nx_; }
  int cells_y() const { return ny_; }
  int nodes_x() const { return nx_ + 1; }
  int nodes_y() const { return ny_ + 1; }
  int node_count() const { return nodes_x() * nodes_y(); }
  double hx() const { return hx_; }
  double hy() const { return hy_; }

  int index(int i, int j) const { return j * nodes_x() + i; }
  double x(int i) const { return box_.x0 + i * hx_; }
  double y(int j) const { return box_.y0 + j * hy_; }

  NodeClass node_class(int i, int j) const { return classes_[index(i, j)]; }
  bool is_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == nx_ || j == ny_;
  }
  bool inside_inclusion(int i, int j) const {
    return classes_[index(i, j)] == NodeClass::interior_inside;
  }

  const std::optional<PolygonalInclusion>& inclusion() const { return inclusion_; }

  /// Boundary nodes in counterclockwise perimeter order starting at
  /// (x0, y0), with the arclength of each node.
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
  const std::vector<double>& boundary_arclength() const { return boundary_s_; }
  int boundary_count() const { return static_cast<int>(boundary_nodes_.size()); }
  double perimeter() const { return 2.0 * (box_.width() + box_.height()); }

  /// Number of interior (non-boundary) nodes; interior_index maps a node to
  /// its unknown slot, -1 on boundary nodes.
  int interior_count() const { return interior_count_; }
  int interior_index(int i, int j) const { return interior_index_[index(i, j)]; }

 private:
  BoundingBox box_;
  int nx_, ny_;
  double hx_, hy_;
  std::optional<PolygonalInclusion> inclusion_;
  std::vector<NodeClass> classes_;
  std::vector<int> boundary_nodes_;
  std::vector<double> boundary_s_;
  std::vector<int> interior_index_;
  int interior_count_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

}  // namespace mfglab

#endif  // MFGLAB_GEOMETRY_HPP
