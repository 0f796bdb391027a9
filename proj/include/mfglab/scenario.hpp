#ifndef MFGLAB_SCENARIO_HPP
#define MFGLAB_SCENARIO_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mfglab/detector.hpp"
#include "mfglab/expression.hpp"

namespace mfglab {

/// Parse/validation failure; carries every schema error found, each prefixed
/// with its line number.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> errors)
      : std::runtime_error(join(errors)), errors(std::move(errors)) {}
  std::vector<std::string> errors;

 private:
  static std::string join(const std::vector<std::string>& es) {
    std::string out = "scenario errors:";
    for (const auto& e : es) out += "\n  " + e;
    return out;
  }
};

/// Explicit scan cone: apex, axis angle (radians), half angle, radius.
struct ConeSpec {
  double apex_x = 0, apex_y = 0;
  double axis_angle = 0;
  double half_angle = 0;
  double radius = 0;
};

/// Standalone probe cone for asymptotics verification (canonical apex/axis).
struct ProbeConeSpec {
  int dim = 2;
  double half_angle = 0;
  double radius = 1.0;
};

/// Declarative description of one experiment: domain, grid, inclusion
/// geometry, coefficient branches, boundary-data family, probe ladders and
/// tolerances. The text form is a flat key-value format with sections; see
/// parse_scenario/emit_scenario.
struct Scenario {
  int version = 1;

  std::array<double, 4> box{-1, -1, 1, 1};  // x0 y0 x1 y1
  int cells_x = 64, cells_y = 64;

  std::vector<std::array<double, 2>> inclusion_polygon;
  std::vector<std::array<double, 2>> candidate_polygon;
  std::vector<ConeSpec> scan_corners;

  double diffusion = 1.0;
  int taylor_order = 3;
  std::string kappa_in = "1", kappa_out = "1";
  double lambda_in = 0.0, lambda_out = 0.0;
  std::vector<std::string> f_in, f_out;  // per Taylor order, defaults "0"

  std::vector<std::string> f_boundary, g_boundary;  // expressions in s, x, y
  double epsilon = 0.05;
  std::vector<double> epsilon_ladder{0.01, 0.02, 0.04, 0.08, 0.16};

  std::vector<double> tau_ladder{6.25, 12.5, 25, 50, 100, 200};
  std::vector<double> alphas{0.3, 0.5, 1.0};
  std::vector<ProbeConeSpec> probe_cones;
  double cone_radius = 0.0;  // 0: half distance to the nearest far edge

  std::string kind = "custom";  // kappa | f-order-1 | f-order-2 | verify | custom
  double jump_snr = 5.0;

  double tol_newton = 1e-10;
  double small_data = 0.05;
  double tol_quadrature = 1e-9;
  double transmission = 1e-6;
  unsigned long long seed = 0;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Canonical normal form: fixed section and key order, 17-significant-digit
/// floats. parse(emit(s)) reproduces s exactly.
std::string emit_scenario(const Scenario& s);

/// Materializers binding a scenario to the solver modules.
GridPtr make_grid(const Scenario& s);
PiecewiseCoefficient make_coefficients(const Scenario& s);
BoundaryData make_boundary(const Scenario& s, const Grid& grid);
std::vector<TruncatedCone> make_scan_cones(const Scenario& s);
ExperimentSetup make_experiment_setup(const Scenario& s, int threads = 1);
std::vector<TruncatedCone> make_probe_cones(const Scenario& s);

}  // namespace mfglab

#endif  // MFGLAB_SCENARIO_HPP
