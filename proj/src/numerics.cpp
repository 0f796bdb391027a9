#include "mfglab/numerics.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

namespace mfglab {

namespace {

GaussRule compute_gauss_legendre(int order) {
  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int m = (order + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < order; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = order * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
  static std::mutex mtx;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_gauss_legendre(order)).first;
  return it->second;
}

PowerFit fit_power_law(const std::vector<double>& taus,
                       const std::vector<double>& values) {
  PowerFit fit;
  if (taus.size() != values.size() || taus.size() < 4) return fit;
  const int n = static_cast<int>(taus.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    if (!(values[i] > 0.0) || !(taus[i] > 0.0)) return fit;
    const double x = std::log(taus[i]);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double det = n * sxx - sx * sx;
  fit.exponent = (n * sxy - sx * sy) / det;
  fit.log_prefactor = (sy - fit.exponent * sx) / n;
  double ss = 0;
  for (int i = 0; i < n; ++i) {
    const double r = std::log(values[i]) - fit.log_prefactor -
                     fit.exponent * std::log(taus[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.valid = true;
  return fit;
}

ExpRateFit fit_exponential_rate(const std::vector<double>& taus,
                                const std::vector<double>& values) {
  ExpRateFit fit;
  if (taus.size() != values.size() || taus.size() < 4) return fit;
  const int n = static_cast<int>(taus.size());
  // Normal equations for least squares on columns [1, log tau, tau].
  double a[3][3] = {};
  double b[3] = {};
  for (int i = 0; i < n; ++i) {
    if (!(values[i] > 0.0) || !(taus[i] > 0.0)) return fit;
    const double c[3] = {1.0, std::log(taus[i]), taus[i]};
    const double y = std::log(values[i]);
    for (int r = 0; r < 3; ++r) {
      b[r] += c[r] * y;
      for (int s = 0; s < 3; ++s) a[r][s] += c[r] * c[s];
    }
  }
  // Gaussian elimination with partial pivoting on the 3x3 system.
  int piv[3] = {0, 1, 2};
  for (int k = 0; k < 3; ++k) {
    int best = k;
    for (int r = k + 1; r < 3; ++r)
      if (std::abs(a[piv[r]][k]) > std::abs(a[piv[best]][k])) best = r;
    std::swap(piv[k], piv[best]);
    const double d = a[piv[k]][k];
    if (std::abs(d) < 1e-300) return fit;
    for (int r = k + 1; r < 3; ++r) {
      const double f = a[piv[r]][k] / d;
      for (int s = k; s < 3; ++s) a[piv[r]][s] -= f * a[piv[k]][s];
      b[piv[r]] -= f * b[piv[k]];
    }
  }
  double sol[3];
  for (int k = 2; k >= 0; --k) {
    double v = b[piv[k]];
    for (int s = k + 1; s < 3; ++s) v -= a[piv[k]][s] * sol[s];
    sol[k] = v / a[piv[k]][k];
  }
  fit.log_prefactor = sol[0];
  fit.prefactor_exponent = sol[1];
  fit.rate = -sol[2];
  double ss = 0;
  for (int i = 0; i < n; ++i) {
    const double r = std::log(values[i]) - sol[0] - sol[1] * std::log(taus[i]) -
                     sol[2] * taus[i];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.valid = true;
  return fit;
}

bool is_geometric_ladder(const std::vector<double>& ladder) {
  if (ladder.size() < 2) return false;
  const double ratio = ladder[1] / ladder[0];
  if (!(ratio > 1.0)) return false;
  for (std::size_t i = 1; i + 1 < ladder.size(); ++i) {
    const double r = ladder[i + 1] / ladder[i];
    if (std::abs(r - ratio) > 1e-9 * ratio) return false;
  }
  return true;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace mfglab
