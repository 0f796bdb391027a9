#include "mfglab/cgo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mfglab {

namespace {

constexpr double kPi = std::numbers::pi;

int clampi(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

struct Frame {
  Vec e1, e2, e3;
  int dim;
};

Vec orthonormal_complement(const Vec& v) {
  const int n = static_cast<int>(v.size());
  for (int ref = 0; ref < n; ++ref) {
    Vec r = Vec::Zero(n);
    r[ref] = 1.0;
    Vec proj = r - r.dot(v) * v;
    const double nrm = proj.norm();
    if (nrm > 0.1) return proj / nrm;
  }
  throw GeometryError("no orthonormal complement found");
}

Frame frame_of(const ConvexCone& cone) {
  Frame f;
  f.dim = cone.dim();
  f.e1 = cone.axis;
  f.e2 = orthonormal_complement(cone.axis);
  if (f.dim == 3) {
    f.e3 = Vec(3);
    f.e3 << f.e1[1] * f.e2[2] - f.e1[2] * f.e2[1],
        f.e1[2] * f.e2[0] - f.e1[0] * f.e2[2],
        f.e1[0] * f.e2[1] - f.e1[1] * f.e2[0];
  }
  return f;
}

struct PanelRule {
  std::vector<double> nodes, weights;
};

PanelRule panel_rule(double a, double b, int panels, int order) {
  PanelRule out;
  const GaussRule& gl = gauss_legendre(order);
  out.nodes.reserve(panels * gl.nodes.size());
  out.weights.reserve(panels * gl.nodes.size());
  const double dx = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * dx;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      out.nodes.push_back(lo + 0.5 * dx * (gl.nodes[q] + 1.0));
      out.weights.push_back(0.5 * dx * gl.weights[q]);
    }
  }
  return out;
}

void append_panel(PanelRule& out, double lo, double hi, const GaussRule& gl) {
  const double dx = hi - lo;
  for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
    out.nodes.push_back(lo + 0.5 * dx * (gl.nodes[q] + 1.0));
    out.weights.push_back(0.5 * dx * gl.weights[q]);
  }
}

/// Radial rule on [0, h]: uniform oscillation-resolving panels, with the
/// panel touching r = 0 refined geometrically so fractional moments r^alpha
/// are integrated to full accuracy.
PanelRule radial_rule(double h, int panels, int order) {
  PanelRule out;
  const GaussRule& gl = gauss_legendre(order);
  const double dx = h / panels;
  double lo = dx * std::ldexp(1.0, -30);
  append_panel(out, 0.0, lo, gl);
  while (lo < dx * (1.0 - 1e-12)) {
    const double hi = std::min(2.0 * lo, dx);
    append_panel(out, lo, hi, gl);
    lo = hi;
  }
  for (int p = 1; p < panels; ++p) append_panel(out, p * dx, (p + 1) * dx, gl);
  return out;
}

/// Angular node set over the cone opening: theta in [-theta_c, theta_c] for
/// n = 2, (theta1, phi) in [0, theta_c] x [0, 2 pi) with the sin(theta1)
/// Jacobian folded into the weight for n = 3.
struct AngularRule {
  std::vector<Vec> dirs;
  std::vector<double> weights;
};

AngularRule angular_rule(const ConvexCone& cone, int theta_panels, int phi_panels,
                         int order) {
  AngularRule out;
  const Frame f = frame_of(cone);
  if (f.dim == 2) {
    const PanelRule th = panel_rule(-cone.half_angle, cone.half_angle,
                                    theta_panels, order);
    out.dirs.reserve(th.nodes.size());
    out.weights = th.weights;
    for (double t : th.nodes)
      out.dirs.push_back(std::cos(t) * f.e1 + std::sin(t) * f.e2);
  } else {
    const PanelRule th = panel_rule(0.0, cone.half_angle, theta_panels, order);
    const PanelRule ph = panel_rule(0.0, 2.0 * kPi, phi_panels, order);
    out.dirs.reserve(th.nodes.size() * ph.nodes.size());
    out.weights.reserve(th.nodes.size() * ph.nodes.size());
    for (std::size_t a = 0; a < th.nodes.size(); ++a) {
      const double t = th.nodes[a];
      const double st = std::sin(t), ct = std::cos(t);
      for (std::size_t b = 0; b < ph.nodes.size(); ++b) {
        const double p = ph.nodes[b];
        out.dirs.push_back(ct * f.e1 + st * (std::cos(p) * f.e2 + std::sin(p) * f.e3));
        out.weights.push_back(th.weights[a] * ph.weights[b] * st);
      }
    }
  }
  return out;
}

int radial_panels(double tau, double h, int refine) {
  const int base = std::max(1, static_cast<int>(std::ceil(2.0 * tau * h / kPi)));
  return clampi(base << refine, 1, 1 << 15);
}

int theta_panels_for(double span, double tau_h, int refine) {
  // one oscillation period per panel is comfortably inside GL8 accuracy
  const int base =
      std::max(2, static_cast<int>(std::ceil(span * (1.0 + tau_h) / kPi)));
  return clampi(base << refine, 2, 1 << 15);
}

int phi_panels_for(double tau_h_sin, int refine) {
  const int base = std::max(4, static_cast<int>(std::ceil(2.0 * (1.0 + tau_h_sin))));
  return clampi(base << refine, 4, 1 << 15);
}

Complex isotropic_dot(const CgoProbe& p, const Vec& v) {
  return Complex(p.xi.dot(v), p.xi_perp.dot(v));
}

/// Tail of the Laplace moment: integral of r^alpha e^{-mu r} over
/// (delta, inf), via r = delta + s / Re(mu), truncated at s = 30.
Complex laplace_tail(double alpha, Complex mu, double delta,
                     const QuadratureControl& ctl, double scale_hint = 0.0) {
  const double re = mu.real();
  if (re * delta > 700.0) return 0.0;
  const double s_max = 30.0;
  auto integrand = [&](double s) {
    const double r = delta + s / re;
    return std::pow(r, alpha) * std::exp(-mu * r) / re;
  };
  const int base = std::max(
      4, static_cast<int>(std::ceil(s_max * std::abs(mu.imag()) / re / kPi)));
  const int panels = clampi(base, 4, 1 << 14);
  const Complex coarse = integrate_panels(integrand, 0.0, s_max, panels, ctl.gl_order);
  const Complex fine = integrate_panels(integrand, 0.0, s_max, 2 * panels, ctl.gl_order);
  const double tol = std::max(ctl.rel_tol * std::max(std::abs(fine), scale_hint),
                              1e-13 * std::exp(-re * delta));
  if (std::abs(fine - coarse) > tol)
    throw QuadratureError("laplace tail quadrature did not converge", coarse, fine);
  return fine;
}

}  // namespace

CgoProbe::CgoProbe(double tau_, Vec xi_, Vec xi_perp_, Vec apex_)
    : tau(tau_), xi(std::move(xi_)), xi_perp(std::move(xi_perp_)), apex(std::move(apex_)) {
  if (tau < 0) throw std::invalid_argument("probe: tau must be >= 0");
  if (xi.size() != xi_perp.size() || xi.size() != apex.size())
    throw std::invalid_argument("probe: dimension mismatch");
  if (std::abs(xi.norm() - 1.0) > 1e-12 || std::abs(xi_perp.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("probe: xi and xi_perp must be unit vectors");
  if (std::abs(xi.dot(xi_perp)) > 1e-12)
    throw std::invalid_argument("probe: xi and xi_perp must be orthogonal");
}

Complex CgoProbe::evaluate(const Vec& x) const {
  const Vec d = x - apex;
  return std::exp(tau * Complex(xi.dot(d), xi_perp.dot(d)));
}

Complex CgoProbe::directional_deriv(const Vec& x, const Vec& dir) const {
  return tau * Complex(xi.dot(dir), xi_perp.dot(dir)) * evaluate(x);
}

Vec make_xi_perp(const Vec& xi) {
  if (xi.size() == 2) {
    Vec p(2);
    p << -xi[1], xi[0];
    return p;
  }
  return orthonormal_complement(xi);
}

CgoProbe make_probe(double tau, const Vec& xi, const Vec& apex) {
  return CgoProbe(tau, xi, make_xi_perp(xi), apex);
}

ConeQuadrature::ConeQuadrature(const TruncatedCone& tc, double tau, int refine,
                               int gl_order)
    : dim_(tc.dim()), apex_(tc.cone.apex) {
  const double h = tc.radius;
  const double tau_h = tau * h;
  const int rp = radial_panels(tau, h, refine);
  const PanelRule rad = panel_rule(0.0, h, rp, gl_order);
  r_nodes_ = rad.nodes;
  r_weights_.resize(rad.nodes.size());
  for (std::size_t q = 0; q < rad.nodes.size(); ++q)
    r_weights_[q] = rad.weights[q] * std::pow(rad.nodes[q], dim_ - 1);
  // fractional moments r^alpha need the apex panel graded geometrically
  const PanelRule graded = radial_rule(h, rp, gl_order);
  rg_nodes_ = graded.nodes;
  rg_weights_.resize(graded.nodes.size());
  for (std::size_t q = 0; q < graded.nodes.size(); ++q)
    rg_weights_[q] = graded.weights[q] * std::pow(graded.nodes[q], dim_ - 1);

  const int pth = theta_panels_for(dim_ == 2 ? 2.0 * tc.cone.half_angle
                                             : tc.cone.half_angle,
                                   tau_h, refine);
  const int pph =
      dim_ == 3 ? phi_panels_for(tau_h * std::sin(tc.cone.half_angle), refine) : 0;
  AngularRule ang = angular_rule(tc.cone, pth, pph, gl_order);
  dirs_ = std::move(ang.dirs);
  ang_weights_ = std::move(ang.weights);

  double wr = 0, wa = 0;
  for (double w : r_weights_) wr += w;
  for (double w : ang_weights_) wa += w;
  measure_ = wr * wa;
}

int ConeQuadrature::node_count() const {
  return static_cast<int>(r_nodes_.size() * dirs_.size());
}

Complex ConeQuadrature::probe_moment(const CgoProbe& p, double alpha) const {
  const Complex shift = std::exp(p.tau * isotropic_dot(p, Vec(apex_ - p.apex)));
  const bool fractional = alpha != std::floor(alpha);
  const auto& rn = fractional ? rg_nodes_ : r_nodes_;
  const auto& rw = fractional ? rg_weights_ : r_weights_;
  Complex sum = 0;
  for (std::size_t a = 0; a < dirs_.size(); ++a) {
    const Complex tz = p.tau * isotropic_dot(p, dirs_[a]);
    Complex inner = 0;
    if (alpha == 0.0) {
      for (std::size_t q = 0; q < rn.size(); ++q)
        inner += rw[q] * std::exp(tz * rn[q]);
    } else {
      for (std::size_t q = 0; q < rn.size(); ++q)
        inner += rw[q] * std::pow(rn[q], alpha) * std::exp(tz * rn[q]);
    }
    sum += ang_weights_[a] * inner;
  }
  return shift * sum;
}

Complex laplace_moment(double alpha, Complex mu, double delta,
                       const QuadratureControl& ctl) {
  if (!(mu.real() > 0.0))
    throw std::invalid_argument("laplace_moment: Re(mu) must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("laplace_moment: delta must be > 0");
  if (!(alpha >= 0.0)) throw std::invalid_argument("laplace_moment: alpha must be >= 0");
  const Complex whole = std::tgamma(alpha + 1.0) / std::pow(mu, Complex(alpha + 1.0));
  return whole - laplace_tail(alpha, mu, delta, ctl);
}

Complex cone_integral(const CgoProbe& p, const TruncatedCone& cone, double alpha,
                      const QuadratureControl& ctl) {
  const auto rho = rho_of(cone, p.xi);
  if (!rho)
    throw std::invalid_argument("cone_integral: probe direction invalid for cone");
  if (!(alpha >= 0.0)) throw std::invalid_argument("cone_integral: alpha must be >= 0");

  const int n = cone.dim();
  const double h = cone.radius;
  const double tau_h = p.tau * h;

  if (tau_h <= ctl.direct_limit) {
    const Complex coarse = ConeQuadrature(cone, p.tau, 0, ctl.gl_order).probe_moment(p, alpha);
    const ConeQuadrature fine_rule(cone, p.tau, 1, ctl.gl_order);
    const Complex fine = fine_rule.probe_moment(p, alpha);
    if (std::abs(fine - coarse) >
        std::max(ctl.rel_tol * std::abs(fine), 1e-15 * fine_rule.measure()))
      throw QuadratureError("cone quadrature did not converge", coarse, fine);
    return fine;
  }

  // Large tau*h: reduce the radial integral per direction with the Gamma
  // identity; only the angular integral is done numerically. The tail term
  // carries the oscillation but is exponentially small.
  const Complex shift =
      std::exp(p.tau * isotropic_dot(p, Vec(cone.cone.apex - p.apex)));
  const double span = (n == 2) ? 2.0 * cone.cone.half_angle : cone.cone.half_angle;

  auto angular = [&](int pth, int pph, auto&& per_dir) {
    const AngularRule ang = angular_rule(cone.cone, pth, pph, ctl.gl_order);
    Complex s = 0;
    for (std::size_t a = 0; a < ang.dirs.size(); ++a)
      s += ang.weights[a] * per_dir(ang.dirs[a]);
    return s;
  };

  auto main_term = [&](const Vec& d) {
    const Complex mu = -p.tau * isotropic_dot(p, d);
    return std::tgamma(n + alpha) / std::pow(mu, Complex(n + alpha));
  };
  int pth = 16, pph = (n == 3) ? 16 : 0;
  Complex main_c = angular(pth, pph, main_term);
  Complex main_f;
  for (int k = 0;; ++k) {
    main_f = angular(2 * pth, 2 * pph, main_term);
    if (std::abs(main_f - main_c) <= ctl.rel_tol * std::abs(main_f)) break;
    if (k >= 6)
      throw QuadratureError("cone integral angular quadrature did not converge",
                            main_c, main_f);
    main_c = main_f;
    pth *= 2;
    if (n == 3) pph *= 2;
  }

  Complex tail = 0;
  if (*rho * tau_h <= ctl.tail_cutoff) {
    const double per_dir_scale = std::abs(main_f);
    auto tail_term = [&](const Vec& d) {
      return laplace_tail(n - 1 + alpha, -p.tau * isotropic_dot(p, d), h, ctl,
                          per_dir_scale);
    };
    const int tth = theta_panels_for(span, tau_h, 0);
    const int tph = (n == 3)
                        ? phi_panels_for(tau_h * std::sin(cone.cone.half_angle), 0)
                        : 0;
    const Complex tc_ = angular(tth, tph, tail_term);
    const Complex tf_ = angular(2 * tth, 2 * tph, tail_term);
    if (std::abs(tf_ - tc_) >
        std::max(ctl.rel_tol * std::abs(tf_), 1e-13 * std::abs(main_f)))
      throw QuadratureError("cone integral tail quadrature did not converge", tc_, tf_);
    tail = tf_;
  }
  return shift * (main_f - tail);
}

namespace {

struct SurfaceAccum {
  double w2 = 0;        // integral of |w|^2
  double dnu2 = 0;      // integral of |dw/dnu|^2
};

/// Cap integrals are computed with e^{-2 rho tau h} factored out so they
/// survive far into the exponential decay without underflow.
struct CapAccum {
  double w2_scaled = 0;
  double dnu2_scaled = 0;
  double log_scale = 0;  // log of the factored-out scale for |w|^2
};

}  // namespace

BoundaryNorms boundary_norms(const CgoProbe& p, const TruncatedCone& cone,
                             const QuadratureControl& ctl) {
  const auto rho = rho_of(cone, p.xi);
  if (!rho)
    throw std::invalid_argument("boundary_norms: probe direction invalid for cone");
  const int n = cone.dim();
  const double h = cone.radius;
  const double tau = p.tau;
  const Frame f = frame_of(cone.cone);
  const double thc = cone.cone.half_angle;

  // |w|^2 on the cone surface varies like e^{2 tau xi.d r}: panel counts
  // follow the decay rate rather than an oscillation rate.
  // GL8 resolves ~4 e-folds per panel at 1e-9; use 3 for margin.
  auto decay_panels = [&](double scale, int refine) {
    const int base = std::max(4, static_cast<int>(std::ceil(scale / 3.0)));
    return clampi(base << refine, 4, 1 << 14);
  };

  auto eval = [&](int refine, SurfaceAccum& lat, CapAccum& cap) {
    lat = SurfaceAccum{};
    cap = CapAccum{};
    const double tau_h = tau * h;
    auto nd2 = [&](const Vec& nu) {
      const Complex zn = isotropic_dot(p, nu);
      return tau * tau * std::norm(zn);
    };
    if (n == 2) {
      const PanelRule rad = panel_rule(0.0, h, decay_panels(2 * tau_h, refine), ctl.gl_order);
      for (double sgn : {-1.0, 1.0}) {
        const Vec d = std::cos(thc) * f.e1 + sgn * std::sin(thc) * f.e2;
        const Vec nu = -std::sin(thc) * f.e1 + sgn * std::cos(thc) * f.e2;
        const double zr = 2.0 * tau * p.xi.dot(d);
        const double m2 = nd2(nu);
        for (std::size_t q = 0; q < rad.nodes.size(); ++q) {
          const double v = rad.weights[q] * std::exp(zr * rad.nodes[q]);
          lat.w2 += v;
          lat.dnu2 += m2 * v;
        }
      }
      const PanelRule th =
          panel_rule(-thc, thc, decay_panels(2 * tau_h, refine), ctl.gl_order);
      cap.log_scale = -2.0 * (*rho) * tau_h;
      for (std::size_t q = 0; q < th.nodes.size(); ++q) {
        const double t = th.nodes[q];
        const Vec d = std::cos(t) * f.e1 + std::sin(t) * f.e2;
        const double expo = 2.0 * tau_h * p.xi.dot(d) - cap.log_scale;
        const double v = th.weights[q] * h * std::exp(expo);
        cap.w2_scaled += v;
        cap.dnu2_scaled += nd2(d) * v;
      }
    } else {
      const PanelRule rad = panel_rule(0.0, h, decay_panels(2 * tau_h, refine), ctl.gl_order);
      const PanelRule ph =
          panel_rule(0.0, 2.0 * kPi, decay_panels(2 * tau_h * std::sin(thc), refine),
                     ctl.gl_order);
      for (std::size_t b = 0; b < ph.nodes.size(); ++b) {
        const double phi = ph.nodes[b];
        const Vec u = std::cos(phi) * f.e2 + std::sin(phi) * f.e3;
        const Vec d = std::cos(thc) * f.e1 + std::sin(thc) * u;
        const Vec nu = -std::sin(thc) * f.e1 + std::cos(thc) * u;
        const double zr = 2.0 * tau * p.xi.dot(d);
        const double m2 = nd2(nu);
        const double wphi = ph.weights[b] * std::sin(thc);
        for (std::size_t q = 0; q < rad.nodes.size(); ++q) {
          const double v = wphi * rad.weights[q] * rad.nodes[q] * std::exp(zr * rad.nodes[q]);
          lat.w2 += v;
          lat.dnu2 += m2 * v;
        }
      }
      const PanelRule th =
          panel_rule(0.0, thc, decay_panels(2 * tau_h, refine), ctl.gl_order);
      cap.log_scale = -2.0 * (*rho) * tau_h;
      for (std::size_t a = 0; a < th.nodes.size(); ++a) {
        const double t = th.nodes[a];
        for (std::size_t b = 0; b < ph.nodes.size(); ++b) {
          const double phi = ph.nodes[b];
          const Vec d = std::cos(t) * f.e1 +
                        std::sin(t) * (std::cos(phi) * f.e2 + std::sin(phi) * f.e3);
          const double expo = 2.0 * tau_h * p.xi.dot(d) - cap.log_scale;
          const double v =
              th.weights[a] * ph.weights[b] * h * h * std::sin(t) * std::exp(expo);
          cap.w2_scaled += v;
          cap.dnu2_scaled += nd2(d) * v;
        }
      }
    }
  };

  SurfaceAccum lat0, lat1;
  CapAccum cap0, cap1;
  eval(0, lat0, cap0);
  eval(1, lat1, cap1);
  auto close = [&](double a, double b) {
    return std::abs(a - b) <= std::max(100.0 * ctl.rel_tol * std::abs(b), 1e-290);
  };
  if (!close(lat0.w2, lat1.w2) || !close(cap0.w2_scaled, cap1.w2_scaled))
    throw QuadratureError("boundary norm quadrature did not converge",
                          Complex(lat0.w2, cap0.w2_scaled),
                          Complex(lat1.w2, cap1.w2_scaled));

  BoundaryNorms out;
  const double cap_scale = std::exp(0.5 * cap1.log_scale);
  out.lateral_l2 = std::sqrt(lat1.w2);
  out.lateral_normal_deriv_l2 = std::sqrt(lat1.dnu2);
  out.cap_l2 = cap_scale * std::sqrt(cap1.w2_scaled);
  out.cap_normal_deriv_l2 = cap_scale * std::sqrt(cap1.dnu2_scaled);
  const double w2 = lat1.w2 + cap_scale * cap_scale * cap1.w2_scaled;
  const double dnu2 = lat1.dnu2 + cap_scale * cap_scale * cap1.dnu2_scaled;
  out.l2 = std::sqrt(w2);
  out.normal_deriv_l2 = std::sqrt(dnu2);
  out.h1 = std::sqrt(w2 * (1.0 + 2.0 * tau * tau));
  return out;
}

AsymptoticsReport verify_asymptotics(const TruncatedCone& cone, const Vec& xi,
                                     const std::vector<double>& tau_ladder,
                                     const std::vector<double>& alphas,
                                     double residual_threshold,
                                     const QuadratureControl& ctl) {
  AsymptoticsReport rep;
  rep.dim = cone.dim();
  rep.radius = cone.radius;
  const auto rho = rho_of(cone, xi);
  if (!rho)
    throw std::invalid_argument("verify_asymptotics: probe direction invalid for cone");
  rep.rho = *rho;
  if (tau_ladder.size() < 4)
    throw std::invalid_argument("verify_asymptotics: need >= 4 ladder entries");
  if (!is_geometric_ladder(tau_ladder))
    throw std::invalid_argument("verify_asymptotics: tau ladder must be geometric");
  if (rep.rho * cone.radius * tau_ladder.back() > 700.0)
    throw std::invalid_argument("verify_asymptotics: rho*h*tau_max exceeds 700");

  const int n = rep.dim;
  std::vector<double> abs_volume, cap_l2s, cap_dnus;
  for (double tau : tau_ladder) {
    const CgoProbe p = make_probe(tau, xi, cone.cone.apex);
    const Complex I = cone_integral(p, cone, 0.0, ctl);
    rep.volume_values.push_back(I);
    abs_volume.push_back(std::abs(I));
    const BoundaryNorms bn = boundary_norms(p, cone, ctl);
    rep.norms.push_back(bn);
    cap_l2s.push_back(bn.cap_l2);
    cap_dnus.push_back(bn.cap_normal_deriv_l2);
    rep.h1_over_l2.push_back(bn.l2 > 0 ? bn.h1 / bn.l2 : 0.0);
    rep.h1_bound.push_back(std::sqrt(2.0 * tau * tau + 1.0));
  }

  auto make_fit = [&](const std::vector<double>& vals) {
    RateFit rf;
    rf.taus = tau_ladder;
    rf.values = vals;
    const PowerFit pf = fit_power_law(tau_ladder, vals);
    rf.exponent = pf.exponent;
    rf.residual = pf.residual;
    rf.ok = pf.valid && pf.residual <= residual_threshold;
    if (!pf.valid)
      rf.note = "fit invalid (non-positive value or too few samples)";
    else if (!rf.ok)
      rf.note = "fit residual above threshold";
    return rf;
  };

  rep.volume = make_fit(abs_volume);
  if (rep.volume.ok && std::abs(rep.volume.exponent + n) > 0.05) {
    rep.volume.ok = false;
    rep.volume.note = "volume exponent deviates from -n by more than 0.05";
  }
  if (!rep.volume.ok) rep.failures.push_back("volume: " + rep.volume.note);

  for (double alpha : alphas) {
    std::vector<double> vals;
    for (double tau : tau_ladder) {
      const CgoProbe p = make_probe(tau, xi, cone.cone.apex);
      vals.push_back(std::abs(cone_integral(p, cone, alpha, ctl)));
    }
    RateFit rf = make_fit(vals);
    if (rf.ok && rf.exponent > -(alpha + n) + 0.05) {
      rf.ok = false;
      rf.note = "moment exponent above -(alpha+n)+0.05";
    }
    if (!rf.ok)
      rep.failures.push_back("moment alpha=" + std::to_string(alpha) + ": " + rf.note);
    rep.moments.emplace_back(alpha, std::move(rf));
  }

  rep.cap_l2_rate = fit_exponential_rate(tau_ladder, cap_l2s);
  rep.cap_normal_rate = fit_exponential_rate(tau_ladder, cap_dnus);
  const double target = rep.rho * cone.radius;
  for (auto [fit, name] : {std::pair<ExpRateFit*, const char*>{&rep.cap_l2_rate, "cap l2"},
                           {&rep.cap_normal_rate, "cap normal derivative"}}) {
    if (!fit->valid || fit->residual > residual_threshold)
      rep.failures.push_back(std::string(name) + ": exponential fit failed");
    else if (fit->rate < 0.95 * target)
      rep.failures.push_back(std::string(name) + ": rate below 0.95 rho h");
  }

  // Spread of tau^n |I| on the upper half of the ladder (geometric midpoint).
  const double mid = std::sqrt(tau_ladder.front() * tau_ladder.back());
  double mn = std::numeric_limits<double>::infinity(), mx = 0, mean = 0;
  int count = 0;
  for (std::size_t i = 0; i < tau_ladder.size(); ++i) {
    if (tau_ladder[i] < mid) continue;
    const double v = std::pow(tau_ladder[i], n) * abs_volume[i];
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    mean += v;
    ++count;
  }
  mean /= std::max(1, count);
  rep.tau_n_upper_spread = (mx - mn) / mean;

  rep.ok = rep.failures.empty();
  return rep;
}

}  // namespace mfglab
