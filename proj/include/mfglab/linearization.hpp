#ifndef MFGLAB_LINEARIZATION_HPP
#define MFGLAB_LINEARIZATION_HPP

#include "mfglab/mfg.hpp"

namespace mfglab {

/// Solution of the order-1 or order-2 linearized system. Order 1: m1 is the
/// harmonic extension of g1 and u1 solves -D Lap u1 = F1 m1 with trace f1.
/// Order 2: m2 solves -D Lap m2 = 2 div(m1 kappa grad u1) with trace 2 g2,
/// u2 solves -D Lap u2 = -kappa |grad u1|^2 + F1 m2 + F2 m1^2 with trace 2 f2.
struct LinearizedSolution {
  int order = 1;
  GridField u_k;
  GridField m_k;
  GridField source_u;  // Poisson right-hand side actually used
  GridField source_m;
};

LinearizedSolution solve_linear_order1(const PiecewiseCoefficient& coeff,
                                       const std::vector<double>& f1,
                                       const std::vector<double>& g1,
                                       double diffusion, GridPtr grid);

LinearizedSolution solve_linear_order2(const PiecewiseCoefficient& coeff,
                                       const LinearizedSolution& prev,
                                       const std::vector<double>& f2,
                                       const std::vector<double>& g2,
                                       double diffusion, GridPtr grid);

/// Compares the nonlinear solution against its Taylor expansion
/// u(eps) ~ eps u1 + eps^2 u2 / 2 over the epsilon ladder and fits the decay
/// order of the remainder. Expected slope is 3; the check passes at >= 2.9.
struct TaylorReport {
  std::vector<double> epsilons;
  std::vector<double> remainder_u;  // sup norms
  std::vector<double> remainder_m;
  double slope_u = 0;
  double slope_m = 0;
  double residual_u = 0;
  double residual_m = 0;
  bool pass = false;
  std::string note;
};

TaylorReport taylor_consistency_check(const PiecewiseCoefficient& coeff,
                                      const BoundaryData& bc, double diffusion,
                                      GridPtr grid, double required_slope = 2.9,
                                      const SolverOptions& opts = {});

}  // namespace mfglab

#endif  // MFGLAB_LINEARIZATION_HPP
