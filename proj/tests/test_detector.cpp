#include <doctest.h>

#include <cmath>
#include <iostream>
#include <numbers>

#include "mfglab/detector.hpp"

using namespace mfglab;
using std::numbers::pi;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

TruncatedCone make_cone(double ax, double ay, double axis_angle, double half_angle,
                        double radius) {
  return TruncatedCone(
      ConvexCone(v2(ax, ay), v2(std::cos(axis_angle), std::sin(axis_angle)), half_angle),
      radius);
}

std::vector<double> geometric_ladder(double start, double ratio, int count) {
  std::vector<double> out;
  double v = start;
  for (int k = 0; k < count; ++k) {
    out.push_back(v);
    v *= ratio;
  }
  return out;
}

/// Manufactured difference solutions built from the signed distances L1, L2
/// to the two lateral lines of the cone: both (L1 L2)^2 and |x - apex|^2/4
/// have vanishing normal derivative on the lateral faces, and the first
/// vanishes there itself. Globally smooth polynomials, exact Laplacians.
struct ManufacturedPairing {
  Eigen::Vector2d apex, n1, n2;
  double n12;

  ManufacturedPairing(const TruncatedCone& cone) {
    apex = Eigen::Vector2d(cone.cone.apex[0], cone.cone.apex[1]);
    const double thc = cone.cone.half_angle;
    const double a = std::atan2(cone.cone.axis[1], cone.cone.axis[0]);
    n1 = Eigen::Vector2d(-std::sin(a + thc), std::cos(a + thc));
    n2 = Eigen::Vector2d(-std::sin(a - thc), std::cos(a - thc));
    n12 = n1.dot(n2);
  }
  double l1(double x, double y) const {
    return n1.x() * (x - apex.x()) + n1.y() * (y - apex.y());
  }
  double l2(double x, double y) const {
    return n2.x() * (x - apex.x()) + n2.y() * (y - apex.y());
  }
  // v_a = r^2/4 + (L1 L2)^2: q(apex) = 1, flux-free lateral faces
  double v_a(double x, double y) const {
    const double dx = x - apex.x(), dy = y - apex.y();
    const double a = l1(x, y), b = l2(x, y);
    return 0.25 * (dx * dx + dy * dy) + a * a * b * b;
  }
  double q_a(double x, double y) const {  // D = 1: q = Lap v
    const double a = l1(x, y), b = l2(x, y);
    return 1.0 + 2.0 * b * b + 2.0 * a * a + 8.0 * a * b * n12;
  }
  // v_b = (L1 L2)^2: full lateral Cauchy data vanish
  double v_b(double x, double y) const {
    const double a = l1(x, y), b = l2(x, y);
    return a * a * b * b;
  }
  double q_b(double x, double y) const {
    const double a = l1(x, y), b = l2(x, y);
    return 2.0 * b * b + 2.0 * a * a + 8.0 * a * b * n12;
  }
};

}  // namespace

TEST_CASE("pairing volume side vanishes exactly for equal branches") {
  auto grid = std::make_shared<Grid>(BoundingBox{-1, -1, 1, 1}, 32, 32);
  PairingInput inp;
  inp.q_in = [](double x, double y) { return 2.0 + x * y; };
  inp.q_out = [](double x, double y) { return 2.0 + x * y; };
  inp.h_factor = [](double, double) { return 1.0; };
  inp.v_tilde = GridField(grid);
  const TruncatedCone cone = make_cone(0.1, -0.1, 0.5, pi / 4, 0.3);
  const IndicatorSample s =
      pairing_integral(inp, make_probe(20.0, Vec(-cone.cone.axis), cone.cone.apex), cone);
  CHECK(s.pairing_lhs == Complex(0.0, 0.0));
}

TEST_CASE("manufactured Green identity converges at second order") {
  const double axis_angle = 0.4, thc = pi / 5, radius = 0.35;
  const TruncatedCone cone = make_cone(0.05, -0.1, axis_angle, thc, radius);
  const ManufacturedPairing mf(cone);
  const CgoProbe probe = make_probe(12.0, Vec(-cone.cone.axis), cone.cone.apex);

  double prev = 0;
  for (int k = 0; k < 3; ++k) {
    const int cells = 32 << k;
    auto grid = std::make_shared<Grid>(BoundingBox{-1, -1, 1, 1}, cells, cells);
    PairingInput inp;
    inp.q_in = [&](double x, double y) { return mf.q_a(x, y); };
    inp.q_out = [](double, double) { return 0.0; };
    inp.h_factor = [](double, double) { return 1.0; };
    inp.v_tilde = GridField::sample(grid, [&](double x, double y) { return mf.v_a(x, y); });
    const IndicatorSample s = pairing_integral(inp, probe, cone);
    const double rel = s.mismatch / std::abs(s.pairing_lhs);
    if (k > 0) CHECK(prev / rel > 3.0);
    prev = rel;
    if (k == 2) CHECK(rel < 2e-5);
    // the lateral faces carry no flux by construction
    CHECK(s.lateral_flux_l2 < 1e-4 * inp.v_tilde.sup_norm());
  }
}

TEST_CASE("fully vanishing lateral Cauchy data is detected as such") {
  const TruncatedCone cone = make_cone(-0.1, 0.15, 1.1, pi / 6, 0.3);
  const ManufacturedPairing mf(cone);
  auto grid = std::make_shared<Grid>(BoundingBox{-1, -1, 1, 1}, 128, 128);
  PairingInput inp;
  inp.q_in = [&](double x, double y) { return mf.q_b(x, y); };
  inp.q_out = [](double, double) { return 0.0; };
  inp.h_factor = [](double, double) { return 1.0; };
  inp.v_tilde = GridField::sample(grid, [&](double x, double y) { return mf.v_b(x, y); });
  inp.transmission_tol = 2e-5;
  const IndicatorSample s = pairing_integral(
      inp, make_probe(8.0, Vec(-cone.cone.axis), cone.cone.apex), cone);
  CHECK(s.lateral_trace_l2 < 1e-7);
  CHECK(s.lateral_flux_l2 < 2e-5);
  CHECK(s.lateral_data_ok);
  CHECK(s.mismatch < 5e-3 * std::abs(s.pairing_lhs));
}

TEST_CASE("corner scan recovers a constant jump within two percent") {
  auto grid = std::make_shared<Grid>(BoundingBox{-1, -1, 1, 1}, 64, 64);
  const TruncatedCone cone = make_cone(0.0, 0.0, 0.8, pi / 4, 0.15);
  PairingInput inp;
  inp.q_in = [](double, double) { return 1.0; };
  inp.q_out = [](double, double) { return 0.0; };
  inp.h_factor = [](double, double) { return 1.0; };
  // v with Lap v = 1 so the boundary side matches: v = r^2 / 4
  inp.v_tilde = GridField::sample(grid, [&](double x, double y) {
    const double dx = x - 0.0, dy = y - 0.0;
    return 0.25 * (dx * dx + dy * dy);
  });
  const CornerVerdict v =
      corner_scan(inp, cone, geometric_ladder(5.0, 2.0, 6), Vec(), 5.0);
  CHECK(v.classification == CornerClass::jump_present);
  CHECK(std::abs(v.recovered_jump - 1.0) <= 0.02);
  CHECK(std::abs(v.upper_slope) <= 0.1);
}

TEST_CASE("corner scan classifies a Hoelder-vanishing factor as no jump") {
  auto grid = std::make_shared<Grid>(BoundingBox{-1, -1, 1, 1}, 64, 64);
  const Eigen::Vector2d apex(0.1, 0.05);
  const TruncatedCone cone = make_cone(apex.x(), apex.y(), -0.3, pi / 4, 0.15);
  PairingInput inp;
  // qbar = |x - x_c|^{1/2}: Hoelder with vanishing apex value
  inp.q_in = [apex](double x, double y) {
    return std::sqrt(std::hypot(x - apex.x(), y - apex.y()));
  };
  inp.q_out = [](double, double) { return 0.0; };
  inp.h_factor = [](double, double) { return 1.0; };
  // v = r^{5/2} / 6.25 has Lap v = r^{1/2}
  inp.v_tilde = GridField::sample(grid, [&](double x, double y) {
    const double r = std::hypot(x - apex.x(), y - apex.y());
    return std::pow(r, 2.5) / 6.25;
  });
  const CornerVerdict v =
      corner_scan(inp, cone, geometric_ladder(10.0, 2.0, 6), Vec(), 5.0);
  CHECK(v.classification == CornerClass::no_jump);
  CHECK(v.upper_slope <= -0.2);
}

TEST_CASE("recovered jump scales exactly with the coefficient branches") {
  auto grid = std::make_shared<Grid>(BoundingBox{-1, -1, 1, 1}, 48, 48);
  const TruncatedCone cone = make_cone(-0.2, 0.1, 2.0, pi / 5, 0.2);
  auto base_q = [](double x, double y) { return 1.0 + 0.2 * x - 0.1 * y; };
  PairingInput inp;
  inp.q_in = base_q;
  inp.q_out = [](double, double) { return 0.0; };
  inp.h_factor = [](double, double) { return 1.0; };
  inp.v_tilde = GridField(grid);
  const double scale = 3.7;
  PairingInput scaled = inp;
  scaled.q_in = [=](double x, double y) { return scale * base_q(x, y); };
  const auto ladder = geometric_ladder(5.0, 2.0, 6);
  const CornerVerdict a = corner_scan(inp, cone, ladder, Vec(), 5.0);
  const CornerVerdict b = corner_scan(scaled, cone, ladder, Vec(), 5.0);
  CHECK(std::abs(b.recovered_jump - scale * a.recovered_jump) <=
        1e-12 * std::abs(b.recovered_jump));
}

TEST_CASE("pairing is equivariant under translation and quarter rotation") {
  const Eigen::Vector2d shift(0.3, -0.2);
  auto grid = std::make_shared<Grid>(BoundingBox{-1, -1, 1, 1}, 48, 48);
  auto qfun = [](double x, double y) { return 1.0 + 0.3 * x + 0.2 * y * y; };
  auto vfun = [](double x, double y) { return 0.25 * (x * x + y * y); };

  PairingInput inp;
  inp.q_in = qfun;
  inp.q_out = [](double, double) { return 0.0; };
  inp.h_factor = [](double, double) { return 1.0; };
  inp.v_tilde = GridField::sample(grid, vfun);
  const TruncatedCone cone = make_cone(0.0, 0.0, 0.9, pi / 5, 0.15);
  const auto ladder = geometric_ladder(8.0, 2.0, 6);
  const CornerVerdict ref = corner_scan(inp, cone, ladder, Vec(), 5.0);

  // translated copy
  PairingInput tr = inp;
  tr.q_in = [&](double x, double y) { return qfun(x - shift.x(), y - shift.y()); };
  tr.v_tilde = GridField::sample(grid, [&](double x, double y) {
    return vfun(x - shift.x(), y - shift.y());
  });
  const TruncatedCone cone_tr = make_cone(shift.x(), shift.y(), 0.9, pi / 5, 0.15);
  const CornerVerdict vt = corner_scan(tr, cone_tr, ladder, Vec(), 5.0);
  CHECK(vt.classification == ref.classification);
  CHECK(std::abs(vt.recovered_jump - ref.recovered_jump) <=
        1e-9 * std::abs(ref.recovered_jump) + 1e-12);
  CHECK(vt.apex.x() == doctest::Approx(shift.x()).epsilon(1e-12));

  // quarter rotation: (x, y) -> (-y, x)
  PairingInput rot = inp;
  rot.q_in = [&](double x, double y) { return qfun(y, -x); };
  rot.v_tilde = GridField::sample(grid, [&](double x, double y) { return vfun(y, -x); });
  const TruncatedCone cone_rot = make_cone(0.0, 0.0, 0.9 + pi / 2, pi / 5, 0.15);
  const CornerVerdict vr = corner_scan(rot, cone_rot, ladder, Vec(), 5.0);
  CHECK(vr.classification == ref.classification);
  CHECK(std::abs(vr.recovered_jump - ref.recovered_jump) <=
        1e-9 * std::abs(ref.recovered_jump) + 1e-12);
}

namespace {

ExperimentSetup reference_kappa_setup(int cells) {
  ExperimentSetup setup;
  const PolygonalInclusion omega(
      {{-0.4, -0.4}, {0.4, -0.4}, {0.4, 0.4}, {-0.4, 0.4}});
  setup.grid = std::make_shared<Grid>(BoundingBox{-1, -1, 1, 1}, cells, cells, omega);
  setup.truth.inclusion = omega;
  setup.truth.kappa_in = [](double, double) { return 2.0; };
  setup.truth.kappa_out = [](double, double) { return 1.0; };
  setup.truth.f_in = {[](double, double) { return 1.0; }};
  setup.truth.f_out = {[](double, double) { return 1.0; }};
  setup.bc.f_traces = {
      sample_trace(*setup.grid, [](double, double x, double) { return x; })};
  setup.bc.g_traces = {constant_trace(*setup.grid, 0.0),
                       constant_trace(*setup.grid, 0.0),
                       constant_trace(*setup.grid, 1.0)};
  setup.bc.epsilon = 0.05;
  setup.tau_ladder = geometric_ladder(6.25, 2.0, 6);
  // 4 true corners with their interior cones, then 4 decoys in the complement
  for (std::size_t k = 0; k < omega.vertices().size(); ++k)
    setup.scan_cones.emplace_back(omega.corner_cones()[k], omega.corner_radius(k));
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0}) {
      const double angle = std::atan2(-sy, -sx);
      setup.scan_cones.push_back(
          make_cone(0.72 * sx, 0.72 * sy, angle, pi / 4, 0.2));
    }
  return setup;
}

}  // namespace

TEST_CASE("kappa experiment: four true corners, four decoys") {
  const ExperimentSetup setup = reference_kappa_setup(64);
  const ExperimentReport rep = run_kappa_experiment(setup);
  REQUIRE(rep.corners.size() == 8);
  for (int k = 0; k < 4; ++k) {
    INFO("true corner ", k, " note: ", rep.corners[k].verdict.note,
         " recovered ", std::abs(rep.corners[k].verdict.recovered_jump),
         " threshold ", rep.corners[k].verdict.threshold, " slope ",
         rep.corners[k].verdict.upper_slope);
    CHECK(rep.corners[k].verdict.classification == CornerClass::jump_present);
    CHECK(rep.corners[k].relative_error <= 0.10);
  }
  for (int k = 4; k < 8; ++k) {
    INFO("decoy ", k, " note: ", rep.corners[k].verdict.note);
    CHECK(rep.corners[k].verdict.classification == CornerClass::no_jump);
  }
  CHECK(rep.positivity_ok);
  CHECK(rep.min_m > 0.0);
}

TEST_CASE("kappa experiment with equal branches reports no jumps anywhere") {
  ExperimentSetup setup = reference_kappa_setup(48);
  setup.truth.kappa_in = setup.truth.kappa_out;
  const ExperimentReport rep = run_kappa_experiment(setup);
  for (const auto& c : rep.corners)
    CHECK(c.verdict.classification == CornerClass::no_jump);
}

TEST_CASE("f experiment order 1: jump recovery through m1") {
  ExperimentSetup setup = reference_kappa_setup(64);
  setup.truth.kappa_in = setup.truth.kappa_out = [](double, double) { return 1.0; };
  setup.truth.f_in = {[](double, double) { return 2.0; },
                      [](double, double) { return 1.0; }};
  setup.truth.f_out = {[](double, double) { return 1.0; },
                       [](double, double) { return 1.0; }};
  setup.bc.f_traces.clear();
  setup.bc.g_traces = {constant_trace(*setup.grid, 1.0)};
  const ExperimentReport rep = run_f_experiment(setup, 1);
  REQUIRE(rep.corners.size() == 8);
  for (int k = 0; k < 4; ++k) {
    INFO("true corner ", k, " note: ", rep.corners[k].verdict.note,
         " recovered ", std::abs(rep.corners[k].verdict.recovered_jump),
         " threshold ", rep.corners[k].verdict.threshold);
    CHECK(rep.corners[k].verdict.classification == CornerClass::jump_present);
    CHECK(rep.corners[k].relative_error <= 0.10);
  }
  for (int k = 4; k < 8; ++k)
    CHECK(rep.corners[k].verdict.classification == CornerClass::no_jump);
  CHECK(rep.positivity_ok);
}

TEST_CASE("f experiment order 2: jump in F2 via the squared m1 channel") {
  ExperimentSetup setup = reference_kappa_setup(64);
  setup.truth.kappa_in = setup.truth.kappa_out = [](double, double) { return 1.0; };
  setup.truth.f_in = {[](double, double) { return 1.0; },
                      [](double, double) { return 2.0; }};
  setup.truth.f_out = {[](double, double) { return 1.0; },
                       [](double, double) { return 1.0; }};
  setup.bc.f_traces.clear();
  setup.bc.g_traces = {constant_trace(*setup.grid, 1.0)};
  const ExperimentReport rep = run_f_experiment(setup, 2);
  REQUIRE(rep.corners.size() == 8);
  for (int k = 0; k < 4; ++k) {
    INFO("true corner ", k, " note: ", rep.corners[k].verdict.note,
         " recovered ", std::abs(rep.corners[k].verdict.recovered_jump),
         " threshold ", rep.corners[k].verdict.threshold);
    CHECK(rep.corners[k].verdict.classification == CornerClass::jump_present);
    CHECK(rep.corners[k].relative_error <= 0.10);
  }
  for (int k = 4; k < 8; ++k)
    CHECK(rep.corners[k].verdict.classification == CornerClass::no_jump);
}

TEST_CASE("experiment preconditions reject bad boundary classes") {
  ExperimentSetup setup = reference_kappa_setup(24);
  setup.bc.g_traces[0] = constant_trace(*setup.grid, 0.5);  // g1 must be 0
  CHECK_THROWS_AS(run_kappa_experiment(setup), std::invalid_argument);

  ExperimentSetup fsetup = reference_kappa_setup(24);
  fsetup.bc.f_traces.clear();
  fsetup.bc.g_traces = {constant_trace(*fsetup.grid, 0.0)};  // g1 must be > 0
  CHECK_THROWS_AS(run_f_experiment(fsetup, 1), std::invalid_argument);
}
