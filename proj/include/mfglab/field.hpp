#ifndef MFGLAB_FIELD_HPP
#define MFGLAB_FIELD_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "mfglab/geometry.hpp"

namespace mfglab {

using ScalarFn = std::function<double(double, double)>;

enum class Interp { bilinear, bicubic };

/// Scalar field sampled at the nodes of a structured grid. The value type is
/// real for PDE fields and complex for probe dumps.
template <class T = double>
class BasicGridField {
 public:
  BasicGridField() = default;
  explicit BasicGridField(GridPtr grid, T init = T{})
      : grid_(std::move(grid)), values_(grid_->node_count(), init) {}

  static BasicGridField sample(GridPtr grid, const std::function<T(double, double)>& f) {
    BasicGridField out(grid);
    for (int j = 0; j < grid->nodes_y(); ++j)
      for (int i = 0; i < grid->nodes_x(); ++i)
        out(i, j) = f(grid->x(i), grid->y(j));
    return out;
  }

  const Grid& grid() const { return *grid_; }
  GridPtr grid_ptr() const { return grid_; }
  bool empty() const { return values_.empty(); }

  T& operator()(int i, int j) { return values_[grid_->index(i, j)]; }
  const T& operator()(int i, int j) const { return values_[grid_->index(i, j)]; }
  T& operator[](int id) { return values_[id]; }
  const T& operator[](int id) const { return values_[id]; }
  const std::vector<T>& values() const { return values_; }
  std::vector<T>& values() { return values_; }

  double sup_norm() const {
    double m = 0;
    for (const auto& v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Discrete L2 norm weighted by the cell area.
  double l2_norm() const {
    double s = 0;
    for (const auto& v : values_) s += std::norm(v);
    return std::sqrt(s * grid_->hx() * grid_->hy());
  }

  /// Interpolated value at (x, y). Bicubic uses Catmull-Rom tensor weights
  /// with clamped border indices.
  T interp(double x, double y, Interp method = Interp::bicubic) const;

  /// Gradient of the interpolant at (x, y); bicubic gives O(h^2) accuracy.
  void interp_grad(double x, double y, T& gx, T& gy,
                   Interp method = Interp::bicubic) const;

  /// Centered second-order gradient fields (one-sided at the domain edge).
  std::pair<BasicGridField, BasicGridField> gradient() const;

  /// 5-point discrete Laplacian at interior node (i, j).
  T laplacian(int i, int j) const {
    const double hx = grid_->hx(), hy = grid_->hy();
    return ((*this)(i + 1, j) - 2.0 * (*this)(i, j) + (*this)(i - 1, j)) / (hx * hx) +
           ((*this)(i, j + 1) - 2.0 * (*this)(i, j) + (*this)(i, j - 1)) / (hy * hy);
  }

 private:
  void cell_of(double x, double y, int& i0, int& j0, double& fx, double& fy) const;

  GridPtr grid_;
  std::vector<T> values_;
};

using GridField = BasicGridField<double>;
using ComplexGridField = BasicGridField<std::complex<double>>;

/// Wraps a field as a callable using the given interpolation.
ScalarFn field_interpolant(const GridField& f, Interp method = Interp::bicubic);

template <class T>
void BasicGridField<T>::cell_of(double x, double y, int& i0, int& j0, double& fx,
                                double& fy) const {
  const auto& b = grid_->box();
  const double gx = (x - b.x0) / grid_->hx();
  const double gy = (y - b.y0) / grid_->hy();
  i0 = std::max(0, std::min(grid_->cells_x() - 1, static_cast<int>(std::floor(gx))));
  j0 = std::max(0, std::min(grid_->cells_y() - 1, static_cast<int>(std::floor(gy))));
  fx = gx - i0;
  fy = gy - j0;
}

namespace detail {
// Catmull-Rom basis and derivative at parameter t in [0, 1] for samples at
// offsets {-1, 0, 1, 2}.
inline void catmull_rom(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2 * t2 - t);
  w[1] = 0.5 * (3 * t3 - 5 * t2 + 2);
  w[2] = 0.5 * (-3 * t3 + 4 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}
inline void catmull_rom_deriv(double t, double w[4]) {
  const double t2 = t * t;
  w[0] = 0.5 * (-3 * t2 + 4 * t - 1);
  w[1] = 0.5 * (9 * t2 - 10 * t);
  w[2] = 0.5 * (-9 * t2 + 8 * t + 1);
  w[3] = 0.5 * (3 * t2 - 2 * t);
}
}  // namespace detail

template <class T>
T BasicGridField<T>::interp(double x, double y, Interp method) const {
  int i0, j0;
  double fx, fy;
  cell_of(x, y, i0, j0, fx, fy);
  if (method == Interp::bilinear) {
    return (1 - fx) * (1 - fy) * (*this)(i0, j0) + fx * (1 - fy) * (*this)(i0 + 1, j0) +
           (1 - fx) * fy * (*this)(i0, j0 + 1) + fx * fy * (*this)(i0 + 1, j0 + 1);
  }
  double wx[4], wy[4];
  detail::catmull_rom(fx, wx);
  detail::catmull_rom(fy, wy);
  const int nx = grid_->nodes_x() - 1, ny = grid_->nodes_y() - 1;
  T out{};
  for (int b = 0; b < 4; ++b) {
    const int j = std::max(0, std::min(ny, j0 - 1 + b));
    T row{};
    for (int a = 0; a < 4; ++a) {
      const int i = std::max(0, std::min(nx, i0 - 1 + a));
      row += wx[a] * (*this)(i, j);
    }
    out += wy[b] * row;
  }
  return out;
}

template <class T>
void BasicGridField<T>::interp_grad(double x, double y, T& gx, T& gy,
                                    Interp method) const {
  int i0, j0;
  double fx, fy;
  cell_of(x, y, i0, j0, fx, fy);
  const double hx = grid_->hx(), hy = grid_->hy();
  if (method == Interp::bilinear) {
    const T dx0 = (*this)(i0 + 1, j0) - (*this)(i0, j0);
    const T dx1 = (*this)(i0 + 1, j0 + 1) - (*this)(i0, j0 + 1);
    const T dy0 = (*this)(i0, j0 + 1) - (*this)(i0, j0);
    const T dy1 = (*this)(i0 + 1, j0 + 1) - (*this)(i0 + 1, j0);
    gx = ((1 - fy) * dx0 + fy * dx1) / hx;
    gy = ((1 - fx) * dy0 + fx * dy1) / hy;
    return;
  }
  double wx[4], wy[4], dwx[4], dwy[4];
  detail::catmull_rom(fx, wx);
  detail::catmull_rom(fy, wy);
  detail::catmull_rom_deriv(fx, dwx);
  detail::catmull_rom_deriv(fy, dwy);
  const int nx = grid_->nodes_x() - 1, ny = grid_->nodes_y() - 1;
  T sx{}, sy{};
  for (int b = 0; b < 4; ++b) {
    const int j = std::max(0, std::min(ny, j0 - 1 + b));
    T row{}, drow{};
    for (int a = 0; a < 4; ++a) {
      const int i = std::max(0, std::min(nx, i0 - 1 + a));
      row += wx[a] * (*this)(i, j);
      drow += dwx[a] * (*this)(i, j);
    }
    sx += wy[b] * drow;
    sy += dwy[b] * row;
  }
  gx = sx / hx;
  gy = sy / hy;
}

template <class T>
std::pair<BasicGridField<T>, BasicGridField<T>> BasicGridField<T>::gradient() const {
  BasicGridField gx(grid_), gy(grid_);
  const int nx = grid_->nodes_x(), ny = grid_->nodes_y();
  const double hx = grid_->hx(), hy = grid_->hy();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (i == 0)
        gx(i, j) = (-3.0 * (*this)(0, j) + 4.0 * (*this)(1, j) - (*this)(2, j)) / (2 * hx);
      else if (i == nx - 1)
        gx(i, j) = (3.0 * (*this)(i, j) - 4.0 * (*this)(i - 1, j) + (*this)(i - 2, j)) / (2 * hx);
      else
        gx(i, j) = ((*this)(i + 1, j) - (*this)(i - 1, j)) / (2 * hx);
      if (j == 0)
        gy(i, j) = (-3.0 * (*this)(i, 0) + 4.0 * (*this)(i, 1) - (*this)(i, 2)) / (2 * hy);
      else if (j == ny - 1)
        gy(i, j) = (3.0 * (*this)(i, j) - 4.0 * (*this)(i, j - 1) + (*this)(i, j - 2)) / (2 * hy);
      else
        gy(i, j) = ((*this)(i, j + 1) - (*this)(i, j - 1)) / (2 * hy);
    }
  }
  return {std::move(gx), std::move(gy)};
}

}  // namespace mfglab

#endif  // MFGLAB_FIELD_HPP
