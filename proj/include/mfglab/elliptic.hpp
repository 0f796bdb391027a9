#ifndef MFGLAB_ELLIPTIC_HPP
#define MFGLAB_ELLIPTIC_HPP

#include <Eigen/Sparse>
#include <memory>

#include "mfglab/field.hpp"

namespace mfglab {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// -D Lap v = rhs on interior nodes, v = trace on the rectangle boundary,
/// 5-point stencil. The factorization is done once and reused across solves
/// on the same grid.
class DirichletPoissonSolver {
 public:
  DirichletPoissonSolver(GridPtr grid, double diffusion);

  /// rhs is read at interior nodes; trace lists values per boundary node in
  /// perimeter order (Grid::boundary_nodes).
  GridField solve(const GridField& rhs, const std::vector<double>& trace) const;

  /// Discrete-harmonic extension of boundary data.
  GridField harmonic_extension(const std::vector<double>& trace) const;

  double diffusion() const { return diffusion_; }

 private:
  GridPtr grid_;
  double diffusion_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factorization_;
};

/// Uniform trace vector, and a trace sampled from a function of
/// (arclength, x, y) along the perimeter.
std::vector<double> constant_trace(const Grid& grid, double value);
std::vector<double> sample_trace(
    const Grid& grid, const std::function<double(double, double, double)>& f);

}  // namespace mfglab

#endif  // MFGLAB_ELLIPTIC_HPP
