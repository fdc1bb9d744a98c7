#pragma once

#include <random>

#include "basis.hpp"

namespace fraclap {

// Direct minimization of E(v) = int L(D_-v, D_+v, v, x) dx over a trial space.

enum class DensityKind { BuiltInPTheta, RieszP, CustomConvex };

/// User density with its partials in the first two arguments (L1, L2) and optionally in v.
struct CustomDensity {
  std::function<double(double, double, double, double)> L, L1, L2, Lv;
};

struct EnergySpec {
  FracParams params;
  DensityKind kind = DensityKind::BuiltInPTheta;
  CustomDensity custom;
  Load source;
  double c0 = 0.0, c1 = 0.0;  // 0, 0 selects 2/p, 0 for the built-in densities
  double eps = 1e-8;          // regularization of |t|^{p-2} t for p < 2
};

namespace detail {

// phi(t) = |t|^p / p, regularized as ((t^2+e^2)^{p/2} - e^p)/p when p < 2.
struct PowerTerm {
  double p, eps;
  double f(double t) const {
    if (p >= 2) return std::pow(std::abs(t), p) / p;
    return (std::pow(t * t + eps * eps, p / 2) - std::pow(eps, p)) / p;
  }
  double d1(double t) const {
    if (p >= 2) return p == 2 ? t : std::pow(std::abs(t), p - 2) * t;
    return std::pow(t * t + eps * eps, (p - 2) / 2) * t;
  }
  double d2(double t) const {
    if (p >= 2) return p == 2 ? 1.0 : (p - 1) * std::pow(std::abs(t), p - 2);
    return std::pow(t * t + eps * eps, (p - 4) / 2) * ((p - 1) * t * t + eps * eps);
  }
};

// Density without the source term, its gradient and Hessian in (dm, dp, v).
struct PointDensity {
  double L = 0;
  std::array<double, 3> g{0, 0, 0};
  std::array<double, 9> H{0, 0, 0, 0, 0, 0, 0, 0, 0};
};

inline PointDensity density_at(const EnergySpec& s, double dm, double dp, double v, double x, bool hess) {
  PointDensity out;
  const double th = s.params.theta, lam = s.params.lambda;
  const PowerTerm P{s.params.p, s.eps};
  switch (s.kind) {
    case DensityKind::BuiltInPTheta: {
      out.L = (1 - th) * P.f(dm) + th * P.f(dp) + lam * P.f(v);
      out.g = {(1 - th) * P.d1(dm), th * P.d1(dp), lam * P.d1(v)};
      if (hess) {
        out.H[0] = (1 - th) * P.d2(dm);
        out.H[4] = th * P.d2(dp);
        out.H[8] = lam * P.d2(v);
      }
      break;
    }
    case DensityKind::RieszP: {
      const double z = 0.5 * (dm + dp);
      out.L = P.f(z) + lam * P.f(v);
      out.g = {0.5 * P.d1(z), 0.5 * P.d1(z), lam * P.d1(v)};
      if (hess) {
        const double h = 0.25 * P.d2(z);
        out.H[0] = out.H[1] = out.H[3] = out.H[4] = h;
        out.H[8] = lam * P.d2(v);
      }
      break;
    }
    case DensityKind::CustomConvex: {
      const auto& c = s.custom;
      out.L = c.L(dm, dp, v, x);
      auto dv = [&](double a, double b, double w) {
        if (c.Lv) return c.Lv(a, b, w, x);
        const double h = 1e-6 * std::max(1.0, std::abs(w));
        return (c.L(a, b, w + h, x) - c.L(a, b, w - h, x)) / (2 * h);
      };
      auto grad = [&](double a, double b, double w) {
        return std::array<double, 3>{c.L1(a, b, w, x), c.L2(a, b, w, x), dv(a, b, w)};
      };
      out.g = grad(dm, dp, v);
      if (hess) {
        const double arg[3] = {dm, dp, v};
        for (int j = 0; j < 3; ++j) {
          double ap[3] = {arg[0], arg[1], arg[2]}, am[3] = {arg[0], arg[1], arg[2]};
          const double h = 1e-5 * std::max(1.0, std::abs(arg[j]));
          ap[j] += h;
          am[j] -= h;
          const auto gp = grad(ap[0], ap[1], ap[2]);
          const auto gm = grad(am[0], am[1], am[2]);
          for (int i = 0; i < 3; ++i) out.H[3 * i + j] = (gp[i] - gm[i]) / (2 * h);
        }
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < i; ++j) out.H[3 * i + j] = out.H[3 * j + i] = 0.5 * (out.H[3 * i + j] + out.H[3 * j + i]);
      }
      break;
    }
  }
  if (!std::isfinite(out.L)) throw error(errc::spec_error, "density is not finite at x = " + fmt17(x));
  return out;
}

inline double default_c0(const EnergySpec& s) { return s.c0 > 0 ? s.c0 : 2.0 / s.params.p; }
// Regularization lowers each power term by at most eps^p / p; the weights sum to <= 2.
inline double default_c1(const EnergySpec& s) {
  if (s.c1 > 0 || s.kind == DensityKind::CustomConvex || s.params.p >= 2) return s.c1;
  return 2.0 * std::pow(s.eps, s.params.p) / s.params.p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spot checks of the structural assumptions.

/// Largest violation of L(mid) <= (L(x)+L(y))/2 in the first two arguments over random pairs.
inline double convexity_defect(const EnergySpec& s, int samples = 500, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-5.0, 5.0), X(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double v = U(rng), x = X(rng);
    const double a0 = U(rng), a1 = U(rng), b0 = U(rng), b1 = U(rng);
    auto L = [&](double dm, double dp) { return detail::density_at(s, dm, dp, v, x, false).L; };
    const double mid = L(0.5 * (a0 + b0), 0.5 * (a1 + b1));
    const double avg = 0.5 * (L(a0, a1) + L(b0, b1));
    worst = std::max(worst, (mid - avg) / std::max(1.0, std::abs(avg)));
  }
  return worst;
}

/// Largest violation of L >= (c0/2)((1-th)|dm|^p + th|dp|^p + lam|v|^p) - c1 over random samples.
inline double coercivity_defect(const EnergySpec& s, int samples = 500, std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-5.0, 5.0), X(0.0, 1.0);
  const double p = s.params.p, th = s.params.theta, lam = s.params.lambda, c0 = detail::default_c0(s);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double dm = U(rng), dp = U(rng), v = U(rng), x = X(rng);
    const double L = detail::density_at(s, dm, dp, v, x, false).L;
    const double rhs = 0.5 * c0 * ((1 - th) * std::pow(std::abs(dm), p) + th * std::pow(std::abs(dp), p) +
                                   lam * std::pow(std::abs(v), p)) - detail::default_c1(s);
    worst = std::max(worst, (rhs - L) / std::max(1.0, std::abs(L)));
  }
  return worst;
}

/// Finite-difference check of the supplied partials and of the no-product-term structure
/// (d L1 / d dp = d L2 / d dm = 0).
inline double structure_defect(const EnergySpec& s, int samples = 200, std::uint64_t seed = 13) {
  if (s.kind != DensityKind::CustomConvex) return 0.0;
  const auto& c = s.custom;
  if (!c.L || !c.L1 || !c.L2) throw error(errc::spec_error, "custom density needs L, L1 and L2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-3.0, 3.0), X(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double dm = U(rng), dp = U(rng), v = U(rng), x = X(rng);
    const double h = 1e-6;
    const double fd1 = (c.L(dm + h, dp, v, x) - c.L(dm - h, dp, v, x)) / (2 * h);
    const double fd2 = (c.L(dm, dp + h, v, x) - c.L(dm, dp - h, v, x)) / (2 * h);
    const double m12 = (c.L1(dm, dp + h, v, x) - c.L1(dm, dp - h, v, x)) / (2 * h);
    const double m21 = (c.L2(dm + h, dp, v, x) - c.L2(dm - h, dp, v, x)) / (2 * h);
    const double sc = 1.0 + std::abs(fd1) + std::abs(fd2);
    worst = std::max({worst, std::abs(fd1 - c.L1(dm, dp, v, x)) / sc, std::abs(fd2 - c.L2(dm, dp, v, x)) / sc,
                      std::abs(m12) / sc, std::abs(m21) / sc});
  }
  return worst;
}

inline void validate_spec(const EnergySpec& s) {
  s.params.validate();
  if (s.kind == DensityKind::CustomConvex) {
    if (structure_defect(s) > 1e-5) throw error(errc::spec_error, "custom partials disagree with L or couple D_-v and D_+v");
    if (convexity_defect(s) > 1e-10) throw error(errc::spec_error, "custom density fails the midpoint convexity test");
    if (coercivity_defect(s) > 1e-10) throw error(errc::spec_error, "custom density fails the coercivity spot check");
  }
}

// ---------------------------------------------------------------------------
// Discrete energy on coefficient vectors.

struct EnergyEval {
  double E = 0.0;
  double E_nosource = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

struct Discretization {
  const Basis* basis = nullptr;
  BasisEval ev;
  LoadAtPoints load;
  Eigen::VectorXd F;  // source functional on each basis function
  double F_lift = 0.0;
};

inline Discretization discretize(const Basis& B, const Load& f, const Lifting& lift = {}) {
  Discretization d;
  d.basis = &B;
  d.ev = evaluate(B, lift);
  d.load = load_at(f, d.ev.q);
  const auto& e = d.ev;
  const Eigen::VectorXd wg0 = e.w.cwiseProduct(d.load.g0);
  const Eigen::VectorXd wgm = e.w.cwiseProduct(d.load.gm);
  const Eigen::VectorXd wgp = e.w.cwiseProduct(d.load.gp);
  d.F = e.V.transpose() * wg0 + e.Dm.transpose() * wgm + e.Dp.transpose() * wgp;
  d.F_lift = wg0.dot(e.lift_v) + wgm.dot(e.lift_dm) + wgp.dot(e.lift_dp);
  return d;
}

inline EnergyEval discrete_energy(const Eigen::VectorXd& c, const EnergySpec& s, const Discretization& d,
                                  bool grad = true, bool hess = false) {
  const auto& e = d.ev;
  const Eigen::VectorXd dm = e.Dm * c + e.lift_dm, dp = e.Dp * c + e.lift_dp, v = e.V * c + e.lift_v;
  const std::size_t P = e.q.size();
  Eigen::VectorXd g0(P), g1(P), g2(P);
  Eigen::MatrixXd h(P, 9);
  double E = 0.0;
  for (std::size_t k = 0; k < P; ++k) {
    const auto pd = detail::density_at(s, dm[k], dp[k], v[k], e.q.pts[k].x, hess);
    E += e.w[k] * pd.L;
    g0[k] = e.w[k] * pd.g[0];
    g1[k] = e.w[k] * pd.g[1];
    g2[k] = e.w[k] * pd.g[2];
    if (hess)
      for (int j = 0; j < 9; ++j) h(k, j) = e.w[k] * pd.H[j];
  }
  EnergyEval out;
  out.E_nosource = E;
  out.E = E - d.F.dot(c) - d.F_lift;
  if (grad) out.grad = e.Dm.transpose() * g0 + e.Dp.transpose() * g1 + e.V.transpose() * g2 - d.F;
  if (hess) {
    const Eigen::MatrixXd* J[3] = {&e.Dm, &e.Dp, &e.V};
    const std::size_t n = c.size();
    out.hess = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const Eigen::VectorXd col = h.col(3 * i + j);
        if (col.cwiseAbs().maxCoeff() == 0.0) continue;
        out.hess.noalias() += J[i]->transpose() * col.asDiagonal() * (*J[j]);
      }
  }
  return out;
}

/// Convenience overload matching the coefficient-vector form of the energy.
inline double discrete_energy(const Eigen::VectorXd& c, const EnergySpec& s, const Basis& B) {
  Discretization d = discretize(B, s.source);
  return discrete_energy(c, s, d, false).E;
}

/// p = 2 stiffness a_{theta,lambda} (or the Riesz form) used as preconditioner.
inline Eigen::MatrixXd p2_stiffness(const BasisEval& e, double theta, double lambda, bool riesz) {
  const auto W = e.w.asDiagonal();
  if (riesz) {
    const Eigen::MatrixXd Dz = 0.5 * (e.Dm + e.Dp);
    return Dz.transpose() * W * Dz + lambda * (e.V.transpose() * W * e.V);
  }
  Eigen::MatrixXd K = lambda * (e.V.transpose() * W * e.V);
  if (theta < 1) K += (1 - theta) * (e.Dm.transpose() * W * e.Dm);
  if (theta > 0) K += theta * (e.Dp.transpose() * W * e.Dp);
  return K;
}

/// L^2 norms of the basis functions (EL residual normalization).
inline Eigen::VectorXd basis_l2(const BasisEval& e) {
  Eigen::VectorXd n(e.V.cols());
  for (Eigen::Index j = 0; j < e.V.cols(); ++j) n[j] = std::sqrt(e.w.dot(e.V.col(j).cwiseAbs2()));
  return n;
}

// ---------------------------------------------------------------------------
// Minimization

struct MinimizeOptions {
  int max_iter = 10000;
  double abs_tol = 1e-12;  // energy decrease
  double el_tol = 1e-6;
  bool newton = true;      // Hessian direction, stiffness-preconditioned gradient as fallback
  Eigen::VectorXd initial;
};

struct MinimizeReport {
  GridFunction minimizer;
  Eigen::VectorXd coeffs;
  std::vector<double> energy_trace;
  double el_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double coercivity_margin = 0.0;  // min over iterates of E0(u) - (c0 ||u||^p_weighted - c1 |Omega|)
};

/// max_j |dE/dc_j| / ||phi_j||_{L^2}: the weak Euler-Lagrange residual on the basis.
inline double el_residual_coeffs(const Eigen::VectorXd& c, const EnergySpec& s, const Discretization& d) {
  const auto ev = discrete_energy(c, s, d, true, false);
  const Eigen::VectorXd nrm = basis_l2(d.ev);
  double r = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) r = std::max(r, std::abs(ev.grad[j]) / nrm[j]);
  return r;
}

inline MinimizeReport minimize(const EnergySpec& s, const Basis& B, const MinimizeOptions& opt = {},
                               const Lifting& lift = {}) {
  validate_spec(s);
  const bool riesz = s.kind == DensityKind::RieszP;
  Discretization d = discretize(B, s.source, lift);
  const std::size_t n = B.size();
  Eigen::MatrixXd K = p2_stiffness(d.ev, s.params.theta, s.params.lambda, riesz);
  K += 1e-14 * K.diagonal().maxCoeff() * Eigen::MatrixXd::Identity(n, n);
  Eigen::LDLT<Eigen::MatrixXd> Kf(K);
  const Eigen::VectorXd nrm = basis_l2(d.ev);
  const double p = s.params.p, th = s.params.theta, lam = s.params.lambda, c0 = detail::default_c0(s);
  const double c1 = detail::default_c1(s), area = B.iv.length();

  auto weighted_norm_p = [&](const Eigen::VectorXd& c) {
    const Eigen::VectorXd dm = d.ev.Dm * c + d.ev.lift_dm, dp = d.ev.Dp * c + d.ev.lift_dp, v = d.ev.V * c + d.ev.lift_v;
    double acc = 0.0;
    for (Eigen::Index k = 0; k < dm.size(); ++k)
      acc += d.ev.w[k] * (riesz ? std::pow(std::abs(0.5 * (dm[k] + dp[k])), p)
                                : (1 - th) * std::pow(std::abs(dm[k]), p) + th * std::pow(std::abs(dp[k]), p)) +
             d.ev.w[k] * lam * std::pow(std::abs(v[k]), p);
    return acc;
  };

  MinimizeReport rep;
  Eigen::VectorXd c = opt.initial.size() == static_cast<Eigen::Index>(n) ? opt.initial : Eigen::VectorXd::Zero(n);
  auto cur = discrete_energy(c, s, d, true, opt.newton);
  rep.energy_trace.push_back(cur.E);
  rep.coercivity_margin = cur.E_nosource - (0.5 * c0 * weighted_norm_p(c) - c1 * area);
  auto residual = [&](const Eigen::VectorXd& g) {
    double r = 0.0;
    for (Eigen::Index j = 0; j < g.size(); ++j) r = std::max(r, std::abs(g[j]) / nrm[j]);
    return r;
  };
  double res = residual(cur.grad);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    if (res < opt.el_tol * 1e-3) {
      rep.converged = true;
      break;
    }
    Eigen::VectorXd dir;
    bool have = false;
    if (opt.newton) {
      Eigen::MatrixXd H = cur.hess;
      H += 1e-12 * K;
      Eigen::LDLT<Eigen::MatrixXd> Hf(H);
      if (Hf.info() == Eigen::Success && Hf.isPositive()) {
        dir = -Hf.solve(cur.grad);
        have = dir.allFinite() && dir.dot(cur.grad) < 0;
      }
    }
    if (!have) dir = -Kf.solve(cur.grad);
    const double slope = dir.dot(cur.grad);
    if (!(slope < 0)) break;
    double t = 1.0;
    EnergyEval trial;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      trial = discrete_energy(c + t * dir, s, d, true, opt.newton);
      if (trial.E <= cur.E + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    if (trial.E > cur.E) throw error(errc::line_search, "accepted step increased the energy");
    c += t * dir;
    const double drop = cur.E - trial.E;
    cur = std::move(trial);
    rep.energy_trace.push_back(cur.E);
    rep.coercivity_margin =
        std::min(rep.coercivity_margin, cur.E_nosource - (0.5 * c0 * weighted_norm_p(c) - c1 * area));
    res = residual(cur.grad);
    if (drop < opt.abs_tol && res < opt.el_tol) {
      rep.converged = true;
      ++it;
      break;
    }
  }
  rep.iterations = it;
  rep.el_residual = res;
  if (!rep.converged && res < opt.el_tol) rep.converged = true;
  rep.coeffs = c;
  rep.minimizer = basis_function(B, c, lift);
  return rep;
}

/// Weak Euler-Lagrange residual of a grid function against smooth test functions:
/// max_phi |int (1-th)|D_-u|^{p-2}D_-u D_-phi + th|D_+u|^{p-2}D_+u D_+phi + lam|u|^{p-2}u phi - f phi| / ||phi||.
template <class Bank>
double el_residual(const GridFunction& u, const EnergySpec& s, const Bank& bank, QuadOptions qo = {8, 3, true}) {
  QuadRule q(u.x, qo);
  const double al = s.params.alpha;
  const auto dm = op_at_points(u, Side::left, -al, q);
  const auto dp = op_at_points(u, Side::right, -al, q);
  const auto uv = at_points(u, q);
  const auto ld = load_at(s.source, q);
  double worst = 0.0;
  for (const auto& phi : bank) {
    double acc = 0.0, nn = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const Pt p = q.pt(k);
      const auto pd = detail::density_at(s, dm[k], dp[k], uv[k], p.x, false);
      const double pv = phi.value(p);
      const double pm = phi.deriv(Side::left, al, p), pp = phi.deriv(Side::right, al, p);
      acc += q.pts[k].w * (pd.g[0] * pm + pd.g[1] * pp + pd.g[2] * pv - ld.g0[k] * pv - ld.gm[k] * pm - ld.gp[k] * pp);
      nn += q.pts[k].w * pv * pv;
    }
    worst = std::max(worst, std::abs(acc) / std::sqrt(nn));
  }
  return worst;
}

}  // namespace fraclap
