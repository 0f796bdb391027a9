#ifndef MFGLAB_DETECTOR_HPP
#define MFGLAB_DETECTOR_HPP

#include <string>
#include <vector>

#include "mfglab/cgo.hpp"
#include "mfglab/linearization.hpp"

namespace mfglab {

/// Inputs of the Green-identity pairing. q_in/q_out are the coefficient
/// fields of the two configurations being compared (exact callables, so the
/// jump term carries no interpolation error); h_factor is the multiplying
/// factor; v_tilde the difference solution, interpolated bicubically onto
/// the cone and its boundary.
struct PairingInput {
  ScalarFn q_in;
  ScalarFn q_out;
  ScalarFn h_factor;
  GridField v_tilde;
  double diffusion = 1.0;
  double transmission_tol = 1e-6;
};

struct IndicatorSample {
  double tau = 0;
  Complex pairing_lhs;    // volume integral of (q_in - q_out) h w over S_h
  Complex pairing_rhs;    // D (surface integral of w dnu v - v dnu w)
  Complex scaled_value;   // tau^n * pairing_lhs
  Complex normalizer;     // cone_integral(w, alpha = 0) at the same tau
  double mismatch = 0;    // |lhs - rhs|
  double lateral_trace_l2 = 0;  // v_tilde Cauchy data on the lateral faces
  double lateral_flux_l2 = 0;
  bool lateral_data_ok = false;
};

enum class CornerClass { jump_present, no_jump, inconclusive };
const char* to_string(CornerClass c);

struct CornerVerdict {
  Eigen::Vector2d apex;
  double rho = 0;
  double radius = 0;
  CornerClass classification = CornerClass::inconclusive;
  Complex recovered_jump;      // pairing_lhs / normalizer at tau_max
  double fitted_limit_abs = 0;  // |scaled_value| averaged on the upper ladder
  double threshold = 0;         // snr * normalized Green-identity mismatch
  double upper_slope = 0;       // log-log slope of |scaled| on the upper half
  double slope_residual = 0;
  std::vector<IndicatorSample> samples;
  std::string note;
};

/// Both sides of the Green identity for one probe, evaluated independently:
/// the volume side by cone quadrature with exact q callables, the boundary
/// side by surface quadrature of the interpolated difference solution.
IndicatorSample pairing_integral(const PairingInput& inp, const CgoProbe& probe,
                                 const TruncatedCone& cone,
                                 const QuadratureControl& ctl = {});

/// Scans one corner over a geometric tau ladder (>= 6 entries) and
/// classifies it. The jump estimate divides the pairing by the cone integral
/// of the probe, cancelling the lemma constant.
CornerVerdict corner_scan(const PairingInput& inp, const TruncatedCone& cone,
                          const std::vector<double>& tau_ladder,
                          const Vec& xi = Vec(), double snr = 5.0,
                          const QuadratureControl& ctl = {});

/// A complete synthetic-forward experiment: the true configuration against
/// the reference (out-branch everywhere) configuration.
struct ExperimentSetup {
  GridPtr grid;
  PiecewiseCoefficient truth;
  BoundaryData bc;
  double diffusion = 1.0;
  std::vector<TruncatedCone> scan_cones;
  std::vector<double> tau_ladder;
  double jump_snr = 5.0;
  double transmission_tol = 1e-6;
  int threads = 1;
};

struct CornerResult {
  CornerVerdict verdict;
  double ground_truth = 0;  // (q_in - q_out)(apex) * h(apex) from the scenario
  double relative_error = 0;
};

struct ExperimentReport {
  std::string kind;
  std::vector<CornerResult> corners;
  double min_m = 0;
  bool positivity_ok = false;
  bool solver_converged = false;
  double precondition_min = 0;  // min |grad u1| or |m1| along the inclusion boundary
  bool ok = false;
  std::vector<std::string> notes;
};

/// Theorem-2.2-style pipeline: boundary class g1 = g2 = 0, g3 > 0, f1 with
/// nonvanishing grad u1 on the inclusion boundary; the kappa jump is probed
/// through h = |grad u1|^2 in the second-order difference solution.
ExperimentReport run_kappa_experiment(const ExperimentSetup& setup);

/// Theorem-2.3-style pipeline for the Taylor coefficient F^(ell), ell = 1, 2:
/// psi = 0, g1 > 0; h = m1 (ell = 1) or [m1]^2 (ell = 2).
ExperimentReport run_f_experiment(const ExperimentSetup& setup, int ell);

}  // namespace mfglab

#endif  // MFGLAB_DETECTOR_HPP
