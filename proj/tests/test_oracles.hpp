#ifndef MFGLAB_TEST_ORACLES_HPP
#define MFGLAB_TEST_ORACLES_HPP

// Independent reference integrators for test oracles. These deliberately do
// not share code with the library quadrature paths they check.

#include <cmath>
#include <complex>
#include <functional>

namespace oracles {

template <class T, class F>
T simpson(F&& f, double a, double b) {
  return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

template <class T, class F>
T adaptive_simpson_rec(F&& f, double a, double b, T whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const T left = simpson<T>(f, a, m);
  const T right = simpson<T>(f, m, b);
  const T delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson on [a, b]; works for double and std::complex<double>.
template <class T, class F>
T adaptive_simpson(F&& f, double a, double b, double tol = 1e-12, int depth = 40) {
  return adaptive_simpson_rec(f, a, b, simpson<T>(f, a, b), tol, depth);
}

}  // namespace oracles

#endif  // MFGLAB_TEST_ORACLES_HPP
