#ifndef MFGLAB_CGO_HPP
#define MFGLAB_CGO_HPP

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "mfglab/geometry.hpp"
#include "mfglab/numerics.hpp"

namespace mfglab {

/// Harmonic complex-exponential probe w(x) = exp(tau (xi + i xi_perp).(x - apex)).
/// xi and xi_perp are orthonormal, so (xi + i xi_perp) is isotropic and w is
/// entire harmonic.
struct CgoProbe {
  double tau;
  Vec xi;
  Vec xi_perp;
  Vec apex;

  CgoProbe(double tau_, Vec xi_, Vec xi_perp_, Vec apex_);

  Complex evaluate(const Vec& x) const;
  /// Directional derivative (grad w) . dir = tau ((xi + i xi_perp) . dir) w.
  Complex directional_deriv(const Vec& x, const Vec& dir) const;
};

/// Deterministic orthonormal complement of xi: the 90-degree rotation in 2-d,
/// the normalized projection of a fixed reference axis in 3-d (next reference
/// when nearly parallel).
Vec make_xi_perp(const Vec& xi);
CgoProbe make_probe(double tau, const Vec& xi, const Vec& apex);

struct QuadratureControl {
  double rel_tol = 1e-9;
  int gl_order = 8;
  /// Direct polar quadrature is used for tau*radius below this limit; the
  /// Gamma-identity reduction takes over beyond it.
  double direct_limit = 20.0;
  /// Exponential tails are dropped once rho*tau*radius exceeds this.
  double tail_cutoff = 45.0;
};

/// Tensor polar quadrature over a truncated cone. Radial panels are capped at
/// pi/(2 tau) so the probe oscillation stays resolved; angular panels scale
/// with tau*radius. `refine` doubles every panel count.
class ConeQuadrature {
 public:
  ConeQuadrature(const TruncatedCone& cone, double tau, int refine = 0,
                 int gl_order = 8);

  int dim() const { return dim_; }
  double measure() const { return measure_; }
  int node_count() const;

  /// Sum of f(x, r) over all nodes with the polar volume weights;
  /// r = |x - apex|.
  template <class F>
  Complex integrate(F&& f) const {
    Complex sum = 0;
    Vec x(dim_);
    for (std::size_t a = 0; a < dirs_.size(); ++a) {
      const double wa = ang_weights_[a];
      for (std::size_t q = 0; q < rg_nodes_.size(); ++q) {
        const double r = rg_nodes_[q];
        for (int c = 0; c < dim_; ++c) x[c] = apex_[c] + r * dirs_[a][c];
        sum += wa * rg_weights_[q] * f(x, r);
      }
    }
    return sum;
  }

  /// Integral of |x - cone apex|^alpha w(x) over the cone, specialized to
  /// avoid per-node point construction.
  Complex probe_moment(const CgoProbe& p, double alpha) const;

  const std::vector<double>& radial_nodes() const { return r_nodes_; }
  const std::vector<double>& radial_weights() const { return r_weights_; }

 private:
  int dim_;
  Vec apex_;
  std::vector<double> r_nodes_;    // radial Gauss-Legendre nodes on [0, h]
  std::vector<double> r_weights_;  // include the r^{n-1} Jacobian factor
  std::vector<double> rg_nodes_;   // apex-graded variant for fractional moments
  std::vector<double> rg_weights_;
  std::vector<Vec> dirs_;          // unit directions
  std::vector<double> ang_weights_;  // include sin(theta1) for n = 3
  double measure_ = 0;
};

/// Finite Laplace moment: integral of r^alpha e^{-mu r} over (0, delta),
/// evaluated as Gamma(alpha+1)/mu^(alpha+1) minus the (delta, inf) tail.
/// Requires Re mu > 0; the tail uses the substitution r = delta + s/Re mu
/// truncated at e^{-30}.
Complex laplace_moment(double alpha, Complex mu, double delta,
                       const QuadratureControl& ctl = {});

/// Integral of |x - apex|^alpha w over the truncated cone. Direct polar
/// quadrature with refinement verification for tau*h <= direct_limit; the
/// angular reduction of the radial Gamma identity beyond that. Throws
/// QuadratureError (with both values) if refinements disagree, and
/// std::invalid_argument when rho_of fails for (cone, xi).
Complex cone_integral(const CgoProbe& p, const TruncatedCone& cone,
                      double alpha = 0.0, const QuadratureControl& ctl = {});

/// Surface norms of the probe over the cone boundary. The lateral part and
/// the spherical cap are reported separately as well: the exponential decay
/// rate rho*h holds on the cap, while the lateral faces (which reach the
/// apex) only decay algebraically.
struct BoundaryNorms {
  double l2 = 0;
  double h1 = 0;
  double normal_deriv_l2 = 0;
  double cap_l2 = 0;
  double cap_normal_deriv_l2 = 0;
  double lateral_l2 = 0;
  double lateral_normal_deriv_l2 = 0;
};
BoundaryNorms boundary_norms(const CgoProbe& p, const TruncatedCone& cone,
                             const QuadratureControl& ctl = {});

/// Power-law / exponential-rate fits over a tau ladder.
struct RateFit {
  std::vector<double> taus;
  std::vector<double> values;
  double exponent = 0;
  double residual = 0;
  bool ok = false;
  std::string note;
};

struct AsymptoticsReport {
  int dim = 0;
  double rho = 0;
  double radius = 0;
  RateFit volume;  // |integral of w| ~ tau^{-n}
  std::vector<std::pair<double, RateFit>> moments;  // alpha -> fit
  ExpRateFit cap_l2_rate;
  ExpRateFit cap_normal_rate;
  std::vector<double> h1_over_l2;       // per ladder entry
  std::vector<double> h1_bound;         // sqrt(2 tau^2 + 1)
  double tau_n_upper_spread = 0;        // spread of tau^n |I| on upper half
  std::vector<BoundaryNorms> norms;     // per ladder entry
  std::vector<Complex> volume_values;   // per ladder entry
  bool ok = false;
  std::vector<std::string> failures;
};

/// Fits the Lemma-type decay rates over a geometric tau ladder and flags
/// fits whose residual exceeds `residual_threshold`.
AsymptoticsReport verify_asymptotics(const TruncatedCone& cone, const Vec& xi,
                                     const std::vector<double>& tau_ladder,
                                     const std::vector<double>& alphas = {},
                                     double residual_threshold = 0.02,
                                     const QuadratureControl& ctl = {});

}  // namespace mfglab

#endif  // MFGLAB_CGO_HPP
