#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfglab/geometry.hpp"

using namespace mfglab;
using std::numbers::pi;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

TruncatedCone cone2d(double apex_x, double apex_y, double axis_angle,
                     double half_angle, double radius) {
  return TruncatedCone(
      ConvexCone(v2(apex_x, apex_y), v2(std::cos(axis_angle), std::sin(axis_angle)),
                 half_angle),
      radius);
}

}  // namespace

TEST_CASE("cone membership: apex, axis point, radius cutoff") {
  const double h = 0.8;
  const TruncatedCone tc = cone2d(0.3, -0.2, 0.7, pi / 5, h);
  CHECK(cone_membership(tc, tc.cone.apex));  // angle taken as 0 at the apex
  CHECK(cone_membership(tc, Vec(tc.cone.apex + 0.5 * h * tc.cone.axis)));
  CHECK_FALSE(cone_membership(tc, Vec(tc.cone.apex + 2.0 * h * tc.cone.axis)));
  // just inside / outside the angular boundary
  const double eps = 1e-9;
  const Vec in_dir = v2(std::cos(0.7 + tc.cone.half_angle - eps),
                        std::sin(0.7 + tc.cone.half_angle - eps));
  const Vec out_dir = v2(std::cos(0.7 + tc.cone.half_angle + 1e-6),
                         std::sin(0.7 + tc.cone.half_angle + 1e-6));
  CHECK(cone_membership(tc, Vec(tc.cone.apex + 0.5 * h * in_dir)));
  CHECK_FALSE(cone_membership(tc, Vec(tc.cone.apex + 0.5 * h * out_dir)));
}

TEST_CASE("cone constructor rejects bad inputs") {
  CHECK_THROWS_AS(ConvexCone(v2(0, 0), v2(1, 1), 0.5), GeometryError);
  CHECK_THROWS_AS(ConvexCone(v2(0, 0), v2(1, 0), 0.0), GeometryError);
  CHECK_THROWS_AS(ConvexCone(v2(0, 0), v2(1, 0), pi / 2), GeometryError);
  CHECK_THROWS_AS(TruncatedCone(ConvexCone(v2(0, 0), v2(1, 0), 0.5), 0.0),
                  GeometryError);
}

TEST_CASE("corner cones of the unit square") {
  const std::vector<Eigen::Vector2d> square = {
      {0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto cones = corner_cones_of(square);
  REQUIRE(cones.size() == 4);
  CHECK(cones[0].half_angle == doctest::Approx(pi / 4).epsilon(1e-12));
  CHECK(cones[0].axis[0] == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-12));
  CHECK(cones[0].axis[1] == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-12));
  CHECK(cones[0].apex[0] == 0.0);
}

TEST_CASE("corner cones of an equilateral triangle") {
  const std::vector<Eigen::Vector2d> tri = {
      {0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}};
  const auto cones = corner_cones_of(tri);
  for (const auto& c : cones)
    CHECK(c.half_angle == doctest::Approx(pi / 6).epsilon(1e-12));
}

TEST_CASE("pentagon with a 170-degree corner is accepted") {
  // Vertex 0 has interior angle exactly 170 degrees (edges leave at +-85
  // degrees from the +x bisector); all other corners are sharper.
  const double a85 = 85.0 * pi / 180.0;
  const std::vector<Eigen::Vector2d> pent = {
      {0, 0},
      {std::cos(-a85), std::sin(-a85)},
      {2.0, -1.1},
      {2.6, 0.2},
      {std::cos(a85), std::sin(a85)}};
  const PolygonalInclusion poly(pent);
  const auto& cones = poly.corner_cones();
  REQUIRE(cones.size() == 5);
  // independent oracle: angle from the vertex coordinates via dot product
  const Eigen::Vector2d d1 = pent[1] - pent[0];
  const Eigen::Vector2d d2 = pent[4] - pent[0];
  const double oracle = std::acos(d1.dot(d2) / (d1.norm() * d2.norm()));
  CHECK(cones[0].half_angle == doctest::Approx(0.5 * oracle).epsilon(1e-12));
  CHECK(cones[0].half_angle == doctest::Approx(85.0 * pi / 180.0).epsilon(1e-12));
  CHECK(cones[0].half_angle < pi / 2);
}

TEST_CASE("reflex vertex is rejected") {
  const std::vector<Eigen::Vector2d> arrow = {
      {0, 0}, {2, 0}, {2, 2}, {1, 0.5}, {0, 2}};
  CHECK_THROWS_AS(PolygonalInclusion{arrow}, GeometryError);
}

TEST_CASE("degenerate polygons are rejected") {
  CHECK_THROWS_AS(PolygonalInclusion({{0, 0}, {1, 0}}), GeometryError);
  CHECK_THROWS_AS(PolygonalInclusion({{0, 0}, {1, 0}, {2, 0}}), GeometryError);
  const std::vector<Eigen::Vector2d> bowtie = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  CHECK_THROWS_AS(PolygonalInclusion{bowtie}, GeometryError);
}

TEST_CASE("clockwise input is normalized to counterclockwise") {
  const PolygonalInclusion poly({{0, 1}, {1, 1}, {1, 0}, {0, 0}});
  double area2 = 0;
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    area2 += a.x() * b.y() - b.x() * a.y();
  }
  CHECK(area2 > 0);
}

TEST_CASE("rho_of: axis-opposed probe gives cos(theta_c)") {
  for (double thc : {pi / 6, pi / 4, pi / 3}) {
    const TruncatedCone tc = cone2d(0, 0, 0.3, thc, 1.0);
    const Vec xi = -tc.cone.axis;
    const auto rho = rho_of(tc, xi);
    REQUIRE(rho.has_value());
    // minimize -xi.d over unit d with angle(d, axis) <= theta_c: the
    // extremum sits on the cone rim, giving cos(theta_c).
    CHECK(*rho == doctest::Approx(std::cos(thc)).epsilon(1e-12));
  }
}

TEST_CASE("rho_of failure cases") {
  const TruncatedCone tc = cone2d(0, 0, 0.0, pi / 4, 1.0);
  CHECK_FALSE(rho_of(tc, Vec(tc.cone.axis)).has_value());  // xi . axis = 1 > 0
  // xi at angle 3 pi / 4 from the axis: the rim reaches orthogonality
  const Vec xi = v2(std::cos(3 * pi / 4), std::sin(3 * pi / 4));
  CHECK_FALSE(rho_of(tc, xi).has_value());
  // slightly beyond the critical angle the minimum turns positive
  const Vec xi2 = v2(std::cos(3 * pi / 4 + 1e-3), std::sin(3 * pi / 4 + 1e-3));
  CHECK(rho_of(tc, xi2).has_value());
}

TEST_CASE("rho bound holds at sampled points of the truncated cone") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> uang(-1.0, 1.0), urad(0.0, 1.0);
  const TruncatedCone tc = cone2d(0.2, 0.1, 1.1, pi / 3, 0.7);
  const Vec xi = -tc.cone.axis;
  const double rho = *rho_of(tc, xi);
  for (int k = 0; k < 2000; ++k) {
    const double t = 1.1 + tc.cone.half_angle * uang(rng);
    const double r = tc.radius * urad(rng);
    const Vec x = tc.cone.apex + r * v2(std::cos(t), std::sin(t));
    if (!cone_membership(tc, x) || r == 0.0) continue;
    const Vec d = (x - tc.cone.apex) / r;
    CHECK(xi.dot(d) <= -rho + 1e-10);
  }
}

TEST_CASE("rho_of is monotone under shrinking half angle") {
  const Vec xi = v2(std::cos(2.9), std::sin(2.9));
  double prev = 0.0;
  for (double thc = pi / 3; thc > 0.05; thc -= 0.1) {
    const TruncatedCone tc = cone2d(0, 0, 0.0, thc, 1.0);
    const auto rho = rho_of(tc, xi);
    REQUIRE(rho.has_value());
    CHECK(*rho >= prev - 1e-15);
    prev = *rho;
  }
}

TEST_CASE("corner cones reproduce polygon membership near vertices") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int polygons_tested = 0;
  while (polygons_tested < 25) {
    const int nv = 3 + static_cast<int>(u01(rng) * 4);
    std::vector<double> angles;
    for (int i = 0; i < nv; ++i) angles.push_back(u01(rng) * 2 * pi);
    std::sort(angles.begin(), angles.end());
    bool spaced = true;
    for (int i = 0; i < nv; ++i) {
      const double gap = (i + 1 < nv ? angles[i + 1] : angles[0] + 2 * pi) - angles[i];
      if (gap < 0.35 || gap > pi - 0.05) spaced = false;
    }
    if (!spaced) continue;
    std::vector<Eigen::Vector2d> verts;
    for (double a : angles) verts.push_back({std::cos(a), std::sin(a)});
    PolygonalInclusion poly(verts);
    // reject slivers where a foreign edge intrudes into the vertex ball
    const double ball = poly.min_edge_length() / 4.0;
    bool thin = false;
    for (std::size_t k = 0; k < verts.size(); ++k)
      if (poly.corner_radius(k) * 2.0 < 2.0 * ball) thin = true;
    if (thin) continue;
    ++polygons_tested;
    const auto& cones = poly.corner_cones();
    for (std::size_t k = 0; k < verts.size(); ++k) {
      const TruncatedCone tc(cones[k], ball);
      for (int s = 0; s < 60; ++s) {
        const double ang = u01(rng) * 2 * pi;
        const double rad = ball * std::sqrt(u01(rng));
        const double px = verts[k].x() + rad * std::cos(ang);
        const double py = verts[k].y() + rad * std::sin(ang);
        if (rad < 1e-6 || rad > 0.999 * ball) continue;
        const Vec d = v2(px, py) - cones[k].apex;
        const double angle_to_axis =
            std::acos(std::clamp(d.dot(cones[k].axis) / d.norm(), -1.0, 1.0));
        // skip points within numerical reach of the angular boundary
        if (std::abs(angle_to_axis - cones[k].half_angle) < 1e-7) continue;
        CHECK(cone_membership(tc, v2(px, py)) == poly.contains(px, py));
      }
    }
  }
}

TEST_CASE("grid classification is a partition consistent with membership") {
  const PolygonalInclusion poly({{-0.25, -0.25}, {0.25, -0.25}, {0.25, 0.25}, {-0.25, 0.25}});
  const Grid grid({-1, -1, 1, 1}, 32, 32, poly);
  int counts[3] = {0, 0, 0};
  for (int j = 0; j < grid.nodes_y(); ++j) {
    for (int i = 0; i < grid.nodes_x(); ++i) {
      const NodeClass c = grid.node_class(i, j);
      ++counts[static_cast<int>(c)];
      if (c == NodeClass::interior_inside)
        CHECK(grid.inclusion()->contains(grid.x(i), grid.y(j)));
      if (grid.is_boundary(i, j)) CHECK(c == NodeClass::boundary);
    }
  }
  CHECK(counts[0] + counts[1] + counts[2] == grid.node_count());
  CHECK(counts[2] > 0);
}

TEST_CASE("grid rejects polygons touching or crossing the boundary") {
  CHECK_THROWS_AS(Grid({-1, -1, 1, 1}, 8, 8,
                       PolygonalInclusion({{-1.0, -0.2}, {0.2, -0.2}, {0.2, 0.2}, {-1.0, 0.2}})),
                  GeometryError);
}

TEST_CASE("boundary enumeration walks the perimeter counterclockwise") {
  const Grid grid({0, 0, 2, 1}, 4, 2);
  const auto& nodes = grid.boundary_nodes();
  CHECK(static_cast<int>(nodes.size()) == 2 * (4 + 2));
  CHECK(nodes.front() == grid.index(0, 0));
  CHECK(grid.boundary_arclength().front() == 0.0);
  // arclength is strictly increasing along the walk
  for (std::size_t k = 1; k < nodes.size(); ++k)
    CHECK(grid.boundary_arclength()[k] > grid.boundary_arclength()[k - 1]);
  CHECK(grid.boundary_arclength().back() < grid.perimeter());
}

TEST_CASE("corner radius is half the distance to the nearest non-adjacent edge") {
  const PolygonalInclusion square({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(square.corner_radius(k) == doctest::Approx(0.5).epsilon(1e-12));
}
