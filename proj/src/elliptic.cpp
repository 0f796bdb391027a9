#include "mfglab/elliptic.hpp"

#include <vector>

namespace mfglab {

DirichletPoissonSolver::DirichletPoissonSolver(GridPtr grid, double diffusion)
    : grid_(std::move(grid)), diffusion_(diffusion) {
  if (!(diffusion_ > 0)) throw SolverError("diffusion coefficient must be > 0");
  const Grid& g = *grid_;
  const double ax = diffusion_ / (g.hx() * g.hx());
  const double ay = diffusion_ / (g.hy() * g.hy());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * g.interior_count());
  for (int j = 1; j < g.cells_y(); ++j) {
    for (int i = 1; i < g.cells_x(); ++i) {
      const int row = g.interior_index(i, j);
      trip.emplace_back(row, row, 2 * ax + 2 * ay);
      if (g.interior_index(i + 1, j) >= 0)
        trip.emplace_back(row, g.interior_index(i + 1, j), -ax);
      if (g.interior_index(i - 1, j) >= 0)
        trip.emplace_back(row, g.interior_index(i - 1, j), -ax);
      if (g.interior_index(i, j + 1) >= 0)
        trip.emplace_back(row, g.interior_index(i, j + 1), -ay);
      if (g.interior_index(i, j - 1) >= 0)
        trip.emplace_back(row, g.interior_index(i, j - 1), -ay);
    }
  }
  Eigen::SparseMatrix<double> A(g.interior_count(), g.interior_count());
  A.setFromTriplets(trip.begin(), trip.end());
  factorization_.compute(A);
  if (factorization_.info() != Eigen::Success)
    throw SolverError("Dirichlet Laplacian factorization failed");
}

GridField DirichletPoissonSolver::solve(const GridField& rhs,
                                        const std::vector<double>& trace) const {
  const Grid& g = *grid_;
  if (static_cast<int>(trace.size()) != g.boundary_count())
    throw SolverError("trace size does not match boundary node count");
  GridField out(grid_);
  const auto& bnodes = g.boundary_nodes();
  for (std::size_t k = 0; k < bnodes.size(); ++k) out[bnodes[k]] = trace[k];

  const double ax = diffusion_ / (g.hx() * g.hx());
  const double ay = diffusion_ / (g.hy() * g.hy());
  Eigen::VectorXd b(g.interior_count());
  for (int j = 1; j < g.cells_y(); ++j) {
    for (int i = 1; i < g.cells_x(); ++i) {
      double v = rhs.empty() ? 0.0 : rhs(i, j);
      if (g.is_boundary(i + 1, j)) v += ax * out(i + 1, j);
      if (g.is_boundary(i - 1, j)) v += ax * out(i - 1, j);
      if (g.is_boundary(i, j + 1)) v += ay * out(i, j + 1);
      if (g.is_boundary(i, j - 1)) v += ay * out(i, j - 1);
      b[g.interior_index(i, j)] = v;
    }
  }
  const Eigen::VectorXd x = factorization_.solve(b);
  if (factorization_.info() != Eigen::Success)
    throw SolverError("Dirichlet Poisson solve failed");
  for (int j = 1; j < g.cells_y(); ++j)
    for (int i = 1; i < g.cells_x(); ++i) out(i, j) = x[g.interior_index(i, j)];
  return out;
}

GridField DirichletPoissonSolver::harmonic_extension(
    const std::vector<double>& trace) const {
  return solve(GridField(), trace);
}

std::vector<double> constant_trace(const Grid& grid, double value) {
  return std::vector<double>(grid.boundary_count(), value);
}

std::vector<double> sample_trace(
    const Grid& grid, const std::function<double(double, double, double)>& f) {
  std::vector<double> out(grid.boundary_count());
  const auto& nodes = grid.boundary_nodes();
  const auto& arcs = grid.boundary_arclength();
  for (int k = 0; k < grid.boundary_count(); ++k) {
    const int id = nodes[k];
    const int i = id % grid.nodes_x();
    const int j = id / grid.nodes_x();
    out[k] = f(arcs[k], grid.x(i), grid.y(j));
  }
  return out;
}

}  // namespace mfglab
