#pragma once

#include "basis.hpp"

namespace fraclap {

// Space bookkeeping for the (theta, lambda) family, norms, traces and Poincare constants.

enum class SpaceKind { LeftW, RightW, SymW, RieszW, LeftMathring, RightMathring, LeftW0, RightW0, SymW0 };

inline const char* space_name(SpaceKind k) {
  switch (k) {
    case SpaceKind::LeftW: return "LeftW";
    case SpaceKind::RightW: return "RightW";
    case SpaceKind::SymW: return "SymW";
    case SpaceKind::RieszW: return "RieszW";
    case SpaceKind::LeftMathring: return "LeftMathring";
    case SpaceKind::RightMathring: return "RightMathring";
    case SpaceKind::LeftW0: return "LeftW0";
    case SpaceKind::RightW0: return "RightW0";
    case SpaceKind::SymW0: return "SymW0";
  }
  return "?";
}

struct SpaceTag {
  SpaceKind kind = SpaceKind::LeftW;
  FracParams params;
};

inline bool is_zero_trace(SpaceKind k) { return k == SpaceKind::LeftW0 || k == SpaceKind::RightW0 || k == SpaceKind::SymW0; }

/// The six-row (theta, lambda) table; zero_trace promotes to the W0 variant of the same side.
inline SpaceTag select_space(const FracParams& params, bool zero_trace) {
  params.validate();
  const double th = params.theta;
  const bool lam = params.lambda == 1;
  if (zero_trace && !(params.alpha * params.p > 1.0))
    throw error(errc::trace_undefined, "zero-trace spaces need alpha*p > 1");
  SpaceTag t;
  t.params = params;
  if (th == 0.0) t.kind = zero_trace ? SpaceKind::LeftW0 : (lam ? SpaceKind::LeftW : SpaceKind::LeftMathring);
  else if (th == 1.0) t.kind = zero_trace ? SpaceKind::RightW0 : (lam ? SpaceKind::RightW : SpaceKind::RightMathring);
  else t.kind = zero_trace ? SpaceKind::SymW0 : SpaceKind::SymW;
  return t;
}

inline SpaceTag riesz_space(const FracParams& params) {
  params.validate();
  return {SpaceKind::RieszW, params};
}

/// (2 - alpha) p > 2: the Riesz seminorm is a norm.
inline bool riesz_norm_check(double alpha, double p) { return (2.0 - alpha) * p > 2.0; }

// ---------------------------------------------------------------------------
// Norms

struct NormReport {
  double lp_part = 0.0;
  double left_seminorm = 0.0;
  double right_seminorm = 0.0;
  double riesz_seminorm = 0.0;
  double total = 0.0;
};

namespace detail {
// L^p norm honouring a non-integrable endpoint singularity (returns +inf).
inline double lp_tagged(const GridFunction& g, double p) {
  const bool inf_a = !std::isfinite(g.v.front()) && is_symbolic_exponent(g.ea()) && g.ea() * p <= -1.0;
  const bool inf_b = !std::isfinite(g.v.back()) && is_symbolic_exponent(g.eb()) && g.eb() * p <= -1.0;
  if (inf_a || inf_b) return std::numeric_limits<double>::infinity();
  return lp_norm(g, p, {8, 3, true});
}
inline double psum(std::initializer_list<double> parts, double p) {
  double s = 0.0;
  for (double v : parts) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    s += std::pow(v, p);
  }
  return std::pow(s, 1.0 / p);
}
}  // namespace detail

/// Full norms for W and mathring spaces, seminorm norms for the zero-trace spaces,
/// and the p-sum of both one-sided norms for the symmetric space.
inline NormReport compute_norm(const GridFunction& u, const SpaceTag& tag) {
  u.validate();
  const double al = tag.params.alpha, p = tag.params.p;
  NormReport r;
  r.lp_part = detail::lp_tagged(u, p);
  const auto k = tag.kind;
  const bool need_l = k == SpaceKind::LeftW || k == SpaceKind::LeftMathring || k == SpaceKind::LeftW0 ||
                      k == SpaceKind::SymW || k == SpaceKind::SymW0;
  const bool need_r = k == SpaceKind::RightW || k == SpaceKind::RightMathring || k == SpaceKind::RightW0 ||
                      k == SpaceKind::SymW || k == SpaceKind::SymW0;
  if (need_l) r.left_seminorm = detail::lp_tagged(rl_derivative(u, al, Side::left), p);
  if (need_r) r.right_seminorm = detail::lp_tagged(rl_derivative(u, al, Side::right), p);
  if (k == SpaceKind::RieszW) r.riesz_seminorm = detail::lp_tagged(riesz_weak_derivative(u, al), p);
  switch (k) {
    case SpaceKind::LeftW:
    case SpaceKind::LeftMathring: r.total = detail::psum({r.lp_part, r.left_seminorm}, p); break;
    case SpaceKind::RightW:
    case SpaceKind::RightMathring: r.total = detail::psum({r.lp_part, r.right_seminorm}, p); break;
    case SpaceKind::LeftW0: r.total = r.left_seminorm; break;
    case SpaceKind::RightW0: r.total = r.right_seminorm; break;
    case SpaceKind::SymW: r.total = detail::psum({r.lp_part, r.left_seminorm, r.lp_part, r.right_seminorm}, p); break;
    case SpaceKind::SymW0: r.total = detail::psum({r.left_seminorm, r.right_seminorm}, p); break;
    case SpaceKind::RieszW: r.total = detail::psum({r.lp_part, r.riesz_seminorm}, p); break;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Traces. The left trace reads the value at b, the right trace the value at a.

inline double trace(const GridFunction& u, Side side, double alpha, double p, double rel_tol = 1e-4) {
  check_alpha(alpha);
  if (!(alpha * p > 1.0)) throw error(errc::trace_undefined, "traces need alpha*p > 1");
  u.validate();
  const Side end = side == Side::left ? Side::right : Side::left;
  const double e = end == Side::left ? u.ea() : u.eb();
  const double vend = end == Side::left ? u.v.front() : u.v.back();
  if ((is_symbolic_exponent(e) && e < 0) || !std::isfinite(vend))
    throw error(errc::trace_singular, std::string("function is singular at ") + (end == Side::left ? "a" : "b"));
  // A tagged exponent in (0, 1) is the leading correction v ~ T + c s^e.
  const double mu = is_symbolic_exponent(e) && e > 0 && e < 1 ? e : 1.0;
  const EndpointLimit lim = richardson_limit(u, end, rel_tol, mu);
  if (!lim.converged) throw error(errc::trace_nonconvergent, "endpoint extrapolants disagree (spread " + fmt17(lim.spread) + ")");
  return lim.value;
}

/// Mathring membership: the kernel coefficient of the decomposition is negligible.
/// An infinite L^p norm would accept anything, so the scale falls back to L^1.
inline bool is_mathring(const GridFunction& u, double alpha, Side side, double p = 2.0) {
  const auto d = ftwfc_decompose(u, alpha, side);
  double scale = detail::lp_tagged(u, p);
  if (!std::isfinite(scale)) scale = lp_norm(u, 1.0, {8, 3, true});
  return std::abs(d.c_sing) <= 1e-3 * scale;
}

// ---------------------------------------------------------------------------
// Poincare constants: sup ||u||_p / seminorm(u) over a finite trial space.

enum class Seminorm { automatic, left, right, sum };

namespace detail {

inline double lp_vec(const Eigen::VectorXd& w, const Eigen::VectorXd& y, double p) {
  return std::pow(w.dot(y.cwiseAbs().array().pow(p).matrix()), 1.0 / p);
}

// Gradient of ||y||_p with y = J c.
inline Eigen::VectorXd lp_grad(const Eigen::VectorXd& w, const Eigen::MatrixXd& J, const Eigen::VectorXd& y, double p,
                               double nrm) {
  Eigen::VectorXd t(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) t[k] = w[k] * std::pow(std::abs(y[k]), p - 2) * y[k];
  return J.transpose() * t / std::pow(nrm, p - 1);
}

}  // namespace detail

struct PoincareEstimate {
  double C = 0.0;
  int iterations = 0;  // ascent steps; 0 for the eigen solve
  Eigen::VectorXd maximizer;
};

/// p = 2 with a single seminorm is a generalized eigenproblem S c = mu M c, C = mu_min^{-1/2}.
/// Otherwise gradient ascent on log ||u||_p - log seminorm, started from the p = 2 maximizer.
inline PoincareEstimate poincare_estimate(const SpaceTag& tag, std::size_t n_basis, Seminorm which = Seminorm::automatic,
                                          Interval iv = {0.0, 1.0}) {
  const auto k = tag.kind;
  if (k == SpaceKind::LeftW || k == SpaceKind::RightW || k == SpaceKind::RieszW)
    throw error(errc::domain, std::string("no Poincare inequality on ") + space_name(k));
  FracParams pr = tag.params;
  pr.lambda = 0;
  const bool left = k == SpaceKind::LeftMathring || k == SpaceKind::LeftW0;
  const bool right = k == SpaceKind::RightMathring || k == SpaceKind::RightW0;
  pr.theta = left ? 0.0 : right ? 1.0 : 0.5;
  if (which == Seminorm::automatic) which = left ? Seminorm::left : right ? Seminorm::right : Seminorm::sum;
  BasisOptions bo;
  bo.n_dof = n_basis;
  bo.zero_trace = is_zero_trace(k);
  const Basis B = make_basis(pr, iv, bo);
  const BasisEval e = evaluate(B);
  const auto W = e.w.asDiagonal();
  const Eigen::MatrixXd M = e.V.transpose() * W * e.V;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(M.rows(), M.cols());
  if (which != Seminorm::right) S += e.Dm.transpose() * W * e.Dm;
  if (which != Seminorm::left) S += e.Dp.transpose() * W * e.Dp;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(0.5 * (S + S.transpose()), 0.5 * (M + M.transpose()));
  if (ges.info() != Eigen::Success) throw error(errc::assembly, "mass matrix is not positive definite");
  if (ges.eigenvalues().minCoeff() <= 0.0) throw error(errc::assembly, "seminorm matrix is indefinite on the trial space");
  PoincareEstimate out;
  out.maximizer = ges.eigenvectors().col(0);
  out.C = 1.0 / std::sqrt(ges.eigenvalues()[0]);
  const double p = pr.p;
  if (p == 2.0 && which != Seminorm::sum) return out;

  auto quotient = [&](const Eigen::VectorXd& c, Eigen::VectorXd* grad) {
    const Eigen::VectorXd y = e.V * c, ym = e.Dm * c, yp = e.Dp * c;
    const double nu = detail::lp_vec(e.w, y, p);
    const double nm = which == Seminorm::right ? 0.0 : detail::lp_vec(e.w, ym, p);
    const double np = which == Seminorm::left ? 0.0 : detail::lp_vec(e.w, yp, p);
    const double den = nm + np;
    if (grad) {
      Eigen::VectorXd gd = Eigen::VectorXd::Zero(c.size());
      if (nm > 0) gd += detail::lp_grad(e.w, e.Dm, ym, p, nm);
      if (np > 0) gd += detail::lp_grad(e.w, e.Dp, yp, p, np);
      *grad = detail::lp_grad(e.w, e.V, y, p, nu) / nu - gd / den;
    }
    return std::log(nu) - std::log(den);
  };
  Eigen::VectorXd c = out.maximizer / out.maximizer.norm(), g;
  double f = quotient(c, &g), step = 0.1;
  int it = 0, stall = 0;
  for (; it < 5000 && stall < 5; ++it) {
    const double gn = g.norm();
    if (gn < 1e-13) break;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd cn = c + step * g / gn;
      cn /= cn.norm();
      Eigen::VectorXd gn2;
      const double fn = quotient(cn, &gn2);
      if (fn > f) {
        stall = (fn - f < 1e-13) ? stall + 1 : 0;
        c = cn;
        f = fn;
        g = gn2;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  out.C = std::exp(f);
  out.iterations = it;
  out.maximizer = c;
  return out;
}

inline double poincare_constant(const SpaceTag& tag, std::size_t n_basis, Seminorm which = Seminorm::automatic,
                                Interval iv = {0.0, 1.0}) {
  return poincare_estimate(tag, n_basis, which, iv).C;
}

}  // namespace fraclap
