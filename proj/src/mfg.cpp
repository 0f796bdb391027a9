#include "mfglab/mfg.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfglab {

namespace {

double factorial(int n) {
  double f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

/// F(x, m) = lambda(x) + sum_l F^(l)(x) m^l / l!
double coupling_value(const CoefficientTables& t, int id, double lambda, double m) {
  double value = lambda;
  double mp = 1.0;
  for (std::size_t l = 1; l <= t.f.size(); ++l) {
    mp *= m;
    value += t.f[l - 1][id] * mp / factorial(static_cast<int>(l));
  }
  return value;
}

double coupling_derivative(const CoefficientTables& t, int id, double m) {
  double value = 0.0;
  double mp = 1.0;
  for (std::size_t l = 1; l <= t.f.size(); ++l) {
    value += t.f[l - 1][id] * mp / factorial(static_cast<int>(l - 1));
    mp *= m;
  }
  return value;
}

}  // namespace

CoefficientTables sample_coefficients(const PiecewiseCoefficient& coeff, GridPtr grid) {
  CoefficientTables t;
  t.kappa = GridField(grid);
  t.lambda = GridField(grid);
  t.f.assign(coeff.taylor_order(), GridField(grid));
  for (int j = 0; j < grid->nodes_y(); ++j) {
    for (int i = 0; i < grid->nodes_x(); ++i) {
      const double x = grid->x(i), y = grid->y(j);
      const int id = grid->index(i, j);
      const bool in = coeff.inside(x, y);
      t.kappa[id] = in ? coeff.kappa_in(x, y) : coeff.kappa_out(x, y);
      t.lambda[id] = in ? coeff.lambda_in : coeff.lambda_out;
      for (int l = 1; l <= coeff.taylor_order(); ++l)
        t.f[l - 1][id] = (in ? coeff.f_in : coeff.f_out)[l - 1](x, y);
    }
  }
  // Jump flags: compare the two branches at inside nodes that touch the
  // membership interface.
  t.f_jump.assign(coeff.taylor_order(), false);
  if (coeff.inclusion) {
    for (int j = 1; j < grid->cells_y(); ++j) {
      for (int i = 1; i < grid->cells_x(); ++i) {
        if (!grid->inside_inclusion(i, j)) continue;
        const bool at_interface =
            !grid->inside_inclusion(i + 1, j) || !grid->inside_inclusion(i - 1, j) ||
            !grid->inside_inclusion(i, j + 1) || !grid->inside_inclusion(i, j - 1);
        if (!at_interface) continue;
        const double x = grid->x(i), y = grid->y(j);
        if (std::abs(coeff.kappa_in(x, y) - coeff.kappa_out(x, y)) > 1e-12)
          t.kappa_jump = true;
        if (std::abs(coeff.lambda_in - coeff.lambda_out) > 1e-12) t.lambda_jump = true;
        for (int l = 1; l <= coeff.taylor_order(); ++l)
          if (std::abs(coeff.f_in[l - 1](x, y) - coeff.f_out[l - 1](x, y)) > 1e-12)
            t.f_jump[l - 1] = true;
      }
    }
  }
  return t;
}

std::vector<double> BoundaryData::psi_at(double eps, const Grid& grid) const {
  std::vector<double> out(grid.boundary_count(), 0.0);
  double ep = 1.0;
  for (const auto& f : f_traces) {
    ep *= eps;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += ep * f[k];
  }
  return out;
}

std::vector<double> BoundaryData::phi_at(double eps, const Grid& grid) const {
  std::vector<double> out(grid.boundary_count(), 0.0);
  double ep = 1.0;
  for (const auto& g : g_traces) {
    ep *= eps;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += ep * g[k];
  }
  return out;
}

void assemble_residual(const CoefficientTables& tables, const GridField& u,
                       const GridField& m, double diffusion, GridField& res_u,
                       GridField& res_m) {
  const Grid& g = u.grid();
  const double hx = g.hx(), hy = g.hy();
  const double ax = 1.0 / (hx * hx), ay = 1.0 / (hy * hy);
  res_u = GridField(u.grid_ptr());
  res_m = GridField(u.grid_ptr());
  for (int j = 1; j < g.cells_y(); ++j) {
    for (int i = 1; i < g.cells_x(); ++i) {
      const int id = g.index(i, j);
      const double lap_u = (u(i + 1, j) - 2 * u(i, j) + u(i - 1, j)) * ax +
                           (u(i, j + 1) - 2 * u(i, j) + u(i, j - 1)) * ay;
      const double gx = (u(i + 1, j) - u(i - 1, j)) / (2 * hx);
      const double gy = (u(i, j + 1) - u(i, j - 1)) / (2 * hy);
      res_u[id] = -diffusion * lap_u +
                  0.5 * tables.kappa[id] * (gx * gx + gy * gy) + tables.lambda[id] -
                  coupling_value(tables, id, tables.lambda[id], m(i, j));

      const double lap_m = (m(i + 1, j) - 2 * m(i, j) + m(i - 1, j)) * ax +
                           (m(i, j + 1) - 2 * m(i, j) + m(i, j - 1)) * ay;
      // flux form: face value of kappa m is the mean of the nodal products
      const double ke = 0.5 * (tables.kappa(i, j) * m(i, j) +
                               tables.kappa(i + 1, j) * m(i + 1, j));
      const double kw = 0.5 * (tables.kappa(i, j) * m(i, j) +
                               tables.kappa(i - 1, j) * m(i - 1, j));
      const double kn = 0.5 * (tables.kappa(i, j) * m(i, j) +
                               tables.kappa(i, j + 1) * m(i, j + 1));
      const double ks = 0.5 * (tables.kappa(i, j) * m(i, j) +
                               tables.kappa(i, j - 1) * m(i, j - 1));
      const double div = (ke * (u(i + 1, j) - u(i, j)) - kw * (u(i, j) - u(i - 1, j))) * ax +
                         (kn * (u(i, j + 1) - u(i, j)) - ks * (u(i, j) - u(i, j - 1))) * ay;
      res_m[id] = -diffusion * lap_m - div;
    }
  }
}

MfgSolution solve_forward_traces(const PiecewiseCoefficient& coeff,
                                 const std::vector<double>& psi,
                                 const std::vector<double>& phi, double diffusion,
                                 GridPtr grid, const SolverOptions& opts) {
  if (!(diffusion > 0)) throw SolverError("diffusion coefficient must be > 0");
  const Grid& g = *grid;
  const CoefficientTables tables = sample_coefficients(coeff, grid);
  const int n_int = g.interior_count();

  MfgSolution sol;
  sol.u = GridField(grid);
  sol.m = GridField(grid);
  sol.lambda_used = coeff.lambda_out;
  const auto& bnodes = g.boundary_nodes();
  double psi_norm = 0.0, phi_norm = 0.0;
  for (std::size_t k = 0; k < bnodes.size(); ++k) {
    sol.u[bnodes[k]] = psi[k];
    sol.m[bnodes[k]] = phi[k];
    psi_norm = std::max(psi_norm, std::abs(psi[k]));
    phi_norm = std::max(phi_norm, std::abs(phi[k]));
  }
  if (psi_norm + phi_norm > opts.small_data_delta) {
    sol.small_data_violated = true;
    sol.diagnostics += "boundary data exceeds the small-data bound; ";
  }

  auto residual_sup = [&](const GridField& ru, const GridField& rm) {
    double s = 0;
    for (int j = 1; j < g.cells_y(); ++j)
      for (int i = 1; i < g.cells_x(); ++i) {
        const int id = g.index(i, j);
        double vu = ru[id], vm = rm[id];
        if (opts.forcing_u) vu -= (*opts.forcing_u)[id];
        if (opts.forcing_m) vm -= (*opts.forcing_m)[id];
        s = std::max(s, std::max(std::abs(vu), std::abs(vm)));
      }
    return s;
  };

  GridField res_u, res_m;
  assemble_residual(tables, sol.u, sol.m, diffusion, res_u, res_m);
  double res_norm = residual_sup(res_u, res_m);

  const double hx = g.hx(), hy = g.hy();
  const double ax = 1.0 / (hx * hx), ay = 1.0 / (hy * hy);

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs(2 * n_int);

  while (res_norm > opts.tolerance) {
    if (sol.newton_iterations >= opts.max_iterations) {
      sol.diagnostics += "Newton reached the iteration cap; ";
      sol.residual_norm = res_norm;
      sol.min_m = *std::min_element(sol.m.values().begin(), sol.m.values().end());
      return sol;
    }

    trip.clear();
    for (int j = 1; j < g.cells_y(); ++j) {
      for (int i = 1; i < g.cells_x(); ++i) {
        const int id = g.index(i, j);
        const int ru = g.interior_index(i, j);
        const int rm = ru + n_int;
        rhs[ru] = -(res_u[id] - (opts.forcing_u ? (*opts.forcing_u)[id] : 0.0));
        rhs[rm] = -(res_m[id] - (opts.forcing_m ? (*opts.forcing_m)[id] : 0.0));

        const double k_c = tables.kappa(i, j);
        const double gx = (sol.u(i + 1, j) - sol.u(i - 1, j)) / (2 * hx);
        const double gy = (sol.u(i, j + 1) - sol.u(i, j - 1)) / (2 * hy);

        // value-equation row: d/du and d/dm
        trip.emplace_back(ru, ru, diffusion * (2 * ax + 2 * ay));
        auto add_u = [&](int ii, int jj, double v) {
          const int col = g.interior_index(ii, jj);
          if (col >= 0) trip.emplace_back(ru, col, v);
        };
        add_u(i + 1, j, -diffusion * ax + 0.5 * k_c * gx / hx);
        add_u(i - 1, j, -diffusion * ax - 0.5 * k_c * gx / hx);
        add_u(i, j + 1, -diffusion * ay + 0.5 * k_c * gy / hy);
        add_u(i, j - 1, -diffusion * ay - 0.5 * k_c * gy / hy);
        trip.emplace_back(ru, rm, -coupling_derivative(tables, id, sol.m(i, j)));

        // Fokker-Planck row
        const double ke = 0.5 * (k_c * sol.m(i, j) + tables.kappa(i + 1, j) * sol.m(i + 1, j));
        const double kw = 0.5 * (k_c * sol.m(i, j) + tables.kappa(i - 1, j) * sol.m(i - 1, j));
        const double kn = 0.5 * (k_c * sol.m(i, j) + tables.kappa(i, j + 1) * sol.m(i, j + 1));
        const double ks = 0.5 * (k_c * sol.m(i, j) + tables.kappa(i, j - 1) * sol.m(i, j - 1));
        auto add_mu = [&](int ii, int jj, double v) {
          const int col = g.interior_index(ii, jj);
          if (col >= 0) trip.emplace_back(rm, col, v);
        };
        // d/du entries of -div(kappa m grad u)
        add_mu(i + 1, j, -ke * ax);
        add_mu(i - 1, j, -kw * ax);
        add_mu(i, j + 1, -kn * ay);
        add_mu(i, j - 1, -ks * ay);
        trip.emplace_back(rm, ru, (ke + kw) * ax + (kn + ks) * ay);
        // d/dm entries
        const double lap_u = (sol.u(i + 1, j) - 2 * sol.u(i, j) + sol.u(i - 1, j)) * ax +
                             (sol.u(i, j + 1) - 2 * sol.u(i, j) + sol.u(i, j - 1)) * ay;
        trip.emplace_back(rm, rm, diffusion * (2 * ax + 2 * ay) - 0.5 * k_c * lap_u);
        auto add_mm = [&](int ii, int jj, double v) {
          const int col = g.interior_index(ii, jj);
          if (col >= 0) trip.emplace_back(rm, col + n_int, v);
        };
        add_mm(i + 1, j, -diffusion * ax -
                             0.5 * tables.kappa(i + 1, j) * (sol.u(i + 1, j) - sol.u(i, j)) * ax);
        add_mm(i - 1, j, -diffusion * ax +
                             0.5 * tables.kappa(i - 1, j) * (sol.u(i, j) - sol.u(i - 1, j)) * ax);
        add_mm(i, j + 1, -diffusion * ay -
                             0.5 * tables.kappa(i, j + 1) * (sol.u(i, j + 1) - sol.u(i, j)) * ay);
        add_mm(i, j - 1, -diffusion * ay +
                             0.5 * tables.kappa(i, j - 1) * (sol.u(i, j) - sol.u(i, j - 1)) * ay);
      }
    }

    Eigen::SparseMatrix<double> J(2 * n_int, 2 * n_int);
    J.setFromTriplets(trip.begin(), trip.end());
    lu.compute(J);
    if (lu.info() != Eigen::Success) {
      sol.diagnostics += "Jacobian factorization failed; ";
      sol.residual_norm = res_norm;
      return sol;
    }
    const Eigen::VectorXd delta = lu.solve(rhs);

    // backtracking line search: halve until the sup-norm residual drops
    double step = 1.0;
    bool accepted = false;
    GridField u_try = sol.u, m_try = sol.m;
    for (int halving = 0; halving <= opts.max_damping_halvings; ++halving) {
      for (int j = 1; j < g.cells_y(); ++j)
        for (int i = 1; i < g.cells_x(); ++i) {
          const int id = g.index(i, j);
          const int r = g.interior_index(i, j);
          u_try[id] = sol.u[id] + step * delta[r];
          m_try[id] = sol.m[id] + step * delta[r + n_int];
        }
      assemble_residual(tables, u_try, m_try, diffusion, res_u, res_m);
      const double tryn = residual_sup(res_u, res_m);
      if (tryn < res_norm) {
        sol.u = u_try;
        sol.m = m_try;
        res_norm = tryn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++sol.newton_iterations;
    if (!accepted) {
      std::ostringstream os;
      os << "Newton stagnation: no residual decrease over "
         << opts.max_damping_halvings + 1 << " damped steps at residual " << res_norm
         << "; ";
      sol.diagnostics += os.str();
      sol.residual_norm = res_norm;
      sol.min_m = *std::min_element(sol.m.values().begin(), sol.m.values().end());
      return sol;  // divergence report with the last iterate
    }
  }

  sol.converged = true;
  sol.residual_norm = res_norm;
  sol.min_m = *std::min_element(sol.m.values().begin(), sol.m.values().end());
  return sol;
}

MfgSolution solve_forward(const PiecewiseCoefficient& coeff, const BoundaryData& bc,
                          double diffusion, GridPtr grid, const SolverOptions& opts) {
  return solve_forward_traces(coeff, bc.psi_at(bc.epsilon, *grid),
                              bc.phi_at(bc.epsilon, *grid), diffusion, grid, opts);
}

MeasurementRecord measure(const MfgSolution& sol) {
  const Grid& g = sol.u.grid();
  MeasurementRecord rec;
  const auto& bnodes = g.boundary_nodes();
  const auto& arcs = g.boundary_arclength();
  const int nx = g.cells_x(), ny = g.cells_y();
  for (int k = 0; k < g.boundary_count(); ++k) {
    const int id = bnodes[k];
    const int i = id % g.nodes_x();
    const int j = id / g.nodes_x();
    const bool corner = (i == 0 || i == nx) && (j == 0 || j == ny);
    if (corner) continue;  // no unique outward normal
    auto one_sided = [&](const GridField& fld) {
      if (i == 0) return (3 * fld(0, j) - 4 * fld(1, j) + fld(2, j)) / (2 * g.hx());
      if (i == nx)
        return (3 * fld(nx, j) - 4 * fld(nx - 1, j) + fld(nx - 2, j)) / (2 * g.hx());
      if (j == 0) return (3 * fld(i, 0) - 4 * fld(i, 1) + fld(i, 2)) / (2 * g.hy());
      return (3 * fld(i, ny) - 4 * fld(i, ny - 1) + fld(i, ny - 2)) / (2 * g.hy());
    };
    rec.boundary_slot.push_back(k);
    rec.arclength.push_back(arcs[k]);
    rec.x.push_back(g.x(i));
    rec.y.push_back(g.y(j));
    rec.psi.push_back(sol.u[id]);
    rec.phi.push_back(sol.m[id]);
    rec.dnu_u.push_back(one_sided(sol.u));
    rec.dnu_m.push_back(one_sided(sol.m));
  }
  return rec;
}

}  // namespace mfglab
