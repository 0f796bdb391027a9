#ifndef MFGLAB_MFG_HPP
#define MFGLAB_MFG_HPP

#include <optional>
#include <string>
#include <vector>

#include "mfglab/elliptic.hpp"
#include "mfglab/field.hpp"

namespace mfglab {

/// Piecewise coefficient set for the stationary quadratic-Hamiltonian system:
/// each quantity evaluates as out + (in - out) * chi_omega. The Taylor
/// branches f_in/f_out hold F^(l), l = 1..L; F(x, 0) equals lambda branchwise.
struct PiecewiseCoefficient {
  std::optional<PolygonalInclusion> inclusion;
  ScalarFn kappa_in = [](double, double) { return 0.0; };
  ScalarFn kappa_out = [](double, double) { return 0.0; };
  double lambda_in = 0.0;
  double lambda_out = 0.0;
  std::vector<ScalarFn> f_in;   // F^(l) inside branch, index 0 <-> l = 1
  std::vector<ScalarFn> f_out;  // F^(l) outside branch

  bool inside(double x, double y) const {
    return inclusion && inclusion->contains(x, y);
  }
  double kappa(double x, double y) const {
    return inside(x, y) ? kappa_in(x, y) : kappa_out(x, y);
  }
  double lambda(double x, double y) const {
    return inside(x, y) ? lambda_in : lambda_out;
  }
  int taylor_order() const { return static_cast<int>(f_in.size()); }
  double f_coeff(int ell, double x, double y) const {  // ell = 1..L
    const auto& branch = inside(x, y) ? f_in : f_out;
    return branch[ell - 1](x, y);
  }
};

/// Nodal samples of a coefficient set on a grid, with per-quantity flags
/// recording whether the branches actually differ near the inclusion
/// boundary (the admissibility jump conditions).
struct CoefficientTables {
  GridField kappa;
  GridField lambda;
  std::vector<GridField> f;  // F^(l), index 0 <-> l = 1
  bool kappa_jump = false;
  bool lambda_jump = false;
  std::vector<bool> f_jump;
};
CoefficientTables sample_coefficients(const PiecewiseCoefficient& coeff, GridPtr grid);

/// Dirichlet boundary family psi = sum_l eps^l f_l, phi = sum_l eps^l g_l
/// over the perimeter nodes, with the epsilon ladder used by linearization
/// checks and a designated epsilon for single solves.
struct BoundaryData {
  std::vector<std::vector<double>> f_traces;  // index 0 <-> l = 1
  std::vector<std::vector<double>> g_traces;
  std::vector<double> epsilon_ladder;
  double epsilon = 0.05;

  std::vector<double> psi_at(double eps, const Grid& grid) const;
  std::vector<double> phi_at(double eps, const Grid& grid) const;
};

struct SolverOptions {
  double tolerance = 1e-10;      // sup-norm residual
  int max_iterations = 50;
  int max_damping_halvings = 5;
  double small_data_delta = 0.05;
  const GridField* forcing_u = nullptr;  // appended manufactured forcing
  const GridField* forcing_m = nullptr;
};

struct MfgSolution {
  GridField u;
  GridField m;
  double lambda_used = 0.0;  // outside-branch ergodic constant
  int newton_iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  bool small_data_violated = false;
  double min_m = 0.0;
  std::string diagnostics;
};

/// Nodewise residuals of the value equation and the Fokker-Planck equation
/// at interior nodes (zero on boundary rows): centered 5-point Laplacian,
/// centered gradient for |grad u|^2, flux-form divergence for div(kappa m
/// grad u). F is the truncated Taylor series with F(x,0) = lambda branchwise.
void assemble_residual(const CoefficientTables& tables, const GridField& u,
                       const GridField& m, double diffusion, GridField& res_u,
                       GridField& res_m);

/// Damped Newton iteration on the coupled discrete system from the zero
/// initial guess. Diverged iterations return converged = false with the last
/// iterate and diagnostics; out-of-small-data boundary data only flags the
/// result.
MfgSolution solve_forward(const PiecewiseCoefficient& coeff, const BoundaryData& bc,
                          double diffusion, GridPtr grid,
                          const SolverOptions& opts = {});

/// Variant with explicit boundary traces instead of the epsilon family.
MfgSolution solve_forward_traces(const PiecewiseCoefficient& coeff,
                                 const std::vector<double>& psi,
                                 const std::vector<double>& phi, double diffusion,
                                 GridPtr grid, const SolverOptions& opts = {});

/// One-sided second-order normal-derivative traces on the boundary (corner
/// nodes of the rectangle carry no normal and are skipped).
struct MeasurementRecord {
  std::vector<int> boundary_slot;  // index into Grid::boundary_nodes
  std::vector<double> arclength;
  std::vector<double> x, y;
  std::vector<double> psi, phi;
  std::vector<double> dnu_u, dnu_m;
};
MeasurementRecord measure(const MfgSolution& sol);

}  // namespace mfglab

#endif  // MFGLAB_MFG_HPP
