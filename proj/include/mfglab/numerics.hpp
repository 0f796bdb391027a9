#ifndef MFGLAB_NUMERICS_HPP
#define MFGLAB_NUMERICS_HPP

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfglab {

using Complex = std::complex<double>;

/// Raised when two quadrature refinements disagree beyond tolerance.
/// Carries both values so the caller can inspect the discrepancy.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, Complex coarse, Complex fine)
      : std::runtime_error(what), coarse_value(coarse), fine_value(fine) {}
  Complex coarse_value;
  Complex fine_value;
};

/// Gauss-Legendre nodes/weights on [-1, 1]. Computed once per order by
/// Newton iteration on the Legendre polynomial, then cached.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int order);

/// Composite Gauss-Legendre over [a, b] split into `panels` equal panels.
template <class F>
auto integrate_panels(F&& f, double a, double b, int panels, int order = 8)
    -> decltype(f(0.0)) {
  const GaussRule& gl = gauss_legendre(order);
  const double dx = (b - a) / panels;
  decltype(f(0.0)) sum{};
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * dx;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double x = lo + 0.5 * dx * (gl.nodes[q] + 1.0);
      sum += (0.5 * dx * gl.weights[q]) * f(x);
    }
  }
  return sum;
}

/// Least-squares line through (log tau, log value): value ~ C * tau^exponent.
/// residual is the RMS misfit in log space.
struct PowerFit {
  double exponent = 0.0;
  double log_prefactor = 0.0;
  double residual = 0.0;
  bool valid = false;  // false when a value was non-positive or < 4 samples
};
PowerFit fit_power_law(const std::vector<double>& taus,
                       const std::vector<double>& values);

/// Three-parameter fit log value = a + c*log(tau) - rate*tau, separating an
/// exponential decay rate from an algebraic prefactor.
struct ExpRateFit {
  double rate = 0.0;
  double prefactor_exponent = 0.0;
  double log_prefactor = 0.0;
  double residual = 0.0;
  bool valid = false;
};
ExpRateFit fit_exponential_rate(const std::vector<double>& taus,
                                const std::vector<double>& values);

/// True when the ladder is geometric (constant ratio within rel. 1e-9).
bool is_geometric_ladder(const std::vector<double>& ladder);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
/// written to disjoint slots; execution order is unspecified but the caller's
/// storage layout keeps output deterministic.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace mfglab

#endif  // MFGLAB_NUMERICS_HPP
