#pragma once

#include <gsl/gsl_integration.h>

#include "bank.hpp"
#include "specfun.hpp"

namespace fraclap {

// alpha-harmonic functions: constructors for the one-sided and Riesz families and a
// weak verifier against a smooth test bank.

/// c1 kappa_side + c2 I^alpha_side kappa_opposite on a mesh graded at both ends.
inline GridFunction onesided_harmonic(double c1, double c2, double alpha, Side side, Interval iv,
                                      std::size_t n_cells = 1024) {
  check_alpha(alpha);
  const auto mesh = default_mesh(iv, n_cells, alpha, Grading::both);
  // I^alpha_- (b-x)^{alpha-1} in closed form; mirrored for the right side.
  auto term2 = [&](const Pt& p) {
    return side == Side::left ? powprod_op(0.0, alpha - 1.0, alpha, Side::left, p)
                              : powprod_op(alpha - 1.0, 0.0, alpha, Side::right, p);
  };
  const double start_e = c1 != 0.0 ? alpha - 1.0 : (c2 != 0.0 ? alpha : 0.0);
  const double far_e = c2 != 0.0 ? 2.0 * alpha - 1.0 : 0.0;  // log-singular at alpha = 1/2
  GridFunction g = sample(mesh, PointFn([&](const Pt& p) {
    const double ds = side == Side::left ? p.da : p.db, df = side == Side::left ? p.db : p.da;
    double v = 0.0;
    if (c1 != 0.0) v += ds == 0.0 ? std::copysign(INFINITY, c1) : c1 * std::pow(ds, alpha - 1.0);
    if (c2 != 0.0 && !(ds == 0.0 && c1 != 0.0)) {
      if (df > 0.0) v += c2 * term2(p);
      else if (far_e > 1e-12) v += c2 * std::pow(iv.length(), far_e) / (far_e * std::tgamma(alpha));
      else if (far_e < -1e-12) v += std::copysign(INFINITY, c2);
      else {
        // alpha = 1/2: logarithmic end; store the end-cell average, the value at h/e.
        const double h = side == Side::left ? mesh.back() - mesh[mesh.size() - 2] : mesh[1] - mesh[0];
        Pt q = p;
        (side == Side::left ? q.db : q.da) = h / M_E;
        (side == Side::left ? q.da : q.db) = iv.length() - h / M_E;
        v += c2 * term2(q);
      }
    }
    return v;
  }));
  if (start_e != 0.0 || far_e != 0.0)
    g.singular_exponents = side == Side::left ? Exponents{start_e, far_e} : Exponents{far_e, start_e};
  return g;
}

enum class HarmonicKind { left, right, symmetric, riesz };

inline const char* harmonic_kind_name(HarmonicKind k) {
  switch (k) {
    case HarmonicKind::left: return "left";
    case HarmonicKind::right: return "right";
    case HarmonicKind::symmetric: return "symmetric";
    case HarmonicKind::riesz: return "riesz";
  }
  return "?";
}

struct HarmonicReport {
  double residual = 0.0;  // max over the bank
  std::vector<std::pair<std::string, double>> per_function;
  double tolerance = 1e-3;
  bool harmonic = false;
};

/// max_phi |int (D u)(D phi)| / (||u|| ||phi||), derivative directions per kind:
/// left D_-, right D_+, symmetric the mean of both products, riesz D_z on both factors.
/// ||u|| is the L^2 norm, or L^1 when u is not square integrable.
template <class Bank>
HarmonicReport verify_harmonic(const GridFunction& u, HarmonicKind kind, double alpha, const Bank& bank,
                               double tol = 1e-3, QuadOptions qo = {8, 3, true}) {
  check_alpha(alpha);
  u.validate();
  QuadRule q(u.x, qo);
  const bool need_m = kind != HarmonicKind::right, need_p = kind != HarmonicKind::left;
  const std::size_t P = q.size();
  std::vector<double> dm(P, 0.0), dp(P, 0.0);
  // Operators are evaluated at the quadrature points directly; interpolating nodal
  // derivatives loses the endpoint structure of D u.
  if (need_m) {
    check_integrable_start(u, Side::left);
    dm = op_at_points(u, Side::left, -alpha, q);
  }
  if (need_p) {
    check_integrable_start(u, Side::right);
    dp = op_at_points(u, Side::right, -alpha, q);
  }
  const auto uv = at_points(u, q);
  const bool l2 = !(is_symbolic_exponent(u.ea()) && u.ea() <= -0.5) && !(is_symbolic_exponent(u.eb()) && u.eb() <= -0.5);
  double un = 0.0;
  for (std::size_t k = 0; k < P; ++k) un += q.pts[k].w * (l2 ? uv[k] * uv[k] : std::abs(uv[k]));
  un = l2 ? std::sqrt(un) : un;
  HarmonicReport rep;
  rep.tolerance = tol;
  for (const auto& phi : bank) {
    double acc = 0.0, pn = 0.0;
    for (std::size_t k = 0; k < P; ++k) {
      const Pt p = q.pt(k);
      const double pv = phi.value(p);
      pn += q.pts[k].w * pv * pv;
      const double fm = need_m ? phi.deriv(Side::left, alpha, p) : 0.0;
      const double fp = need_p ? phi.deriv(Side::right, alpha, p) : 0.0;
      double prod = 0.0;
      switch (kind) {
        case HarmonicKind::left: prod = dm[k] * fm; break;
        case HarmonicKind::right: prod = dp[k] * fp; break;
        case HarmonicKind::symmetric: prod = 0.5 * (dm[k] * fm + dp[k] * fp); break;
        case HarmonicKind::riesz: prod = 0.25 * (dm[k] + dp[k]) * (fm + fp); break;
      }
      acc += q.pts[k].w * prod;
    }
    const double den = un * std::sqrt(pn);
    const double r = den > 0 ? std::abs(acc) / den : 0.0;
    rep.per_function.emplace_back(phi.name(), r);
    rep.residual = std::max(rep.residual, r);
  }
  rep.harmonic = rep.residual <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Riesz series on (0,1): u = rho sum u_n G_n + kappa_z, rho = x^{a/2}(1-x)^{a/2},
// G_n the Jacobi polynomials with parameters (a/2, a/2) in the variable 2x-1.
// D_z(rho G_n) = cos(pi a/2) G(n+1+a)/G(n+1) G_n, so D_z u = kappa_z fixes u_n.

enum class RieszNormalization {
  consistent,  // u_n = G(n+1) / (cos(pi a/2) G(n+1+a)) <kappa_z, G_n>_rho / ||G_n||^2_rho
  literal      // u_n = -G(n+1) / G(n+1+a) <kappa_z, G_n>_rho / ||G_n||^2_rho
};

struct RieszHarmonicSeries {
  double alpha = 0.8;
  double c1 = 0.0, c2 = 0.0;
  std::vector<double> u_n;
  std::vector<double> g_norm2;  // ||G_n||^2_rho
  JacobiBasis basis;
  int N = 24;
  double tail_estimate = 0.0;   // |u_N| ||G_N||_rho
  RieszNormalization normalization = RieszNormalization::consistent;

  double eigenvalue(int n) const {
    const double g = std::exp(std::lgamma(n + 1.0 + alpha) - std::lgamma(n + 1.0));
    return normalization == RieszNormalization::consistent ? std::cos(M_PI * alpha / 2) * g : -g;
  }
  double kappa(double x) const {
    const double h = alpha / 2;
    double v = 0.0;
    if (c1 != 0.0) v += c1 * std::pow(x, h) * std::pow(1.0 - x, h - 1.0);
    if (c2 != 0.0) v += c2 * std::pow(x, h - 1.0) * std::pow(1.0 - x, h);
    return v;
  }
  double rho(double x) const { return std::pow(x * (1.0 - x), alpha / 2); }
  /// sum u_n G_n(x) by the three-term recurrence (the monomial form loses digits for large n).
  double poly(double x) const {
    double s = 0.0;
    for (int n = 0; n < static_cast<int>(u_n.size()); ++n)
      if (u_n[n] != 0.0) s += u_n[n] * jacobi_recurrence(n, alpha, x);
    return s;
  }
  double operator()(double x) const {
    if (x <= 0.0 || x >= 1.0) {
      const bool sing = (x <= 0.0) ? c2 != 0.0 : c1 != 0.0;
      if (sing) return std::copysign(INFINITY, x <= 0.0 ? c2 : c1);
      return 0.0;
    }
    return rho(x) * poly(x) + kappa(x);
  }
  /// D_z u - kappa_z = sum u_n lambda_n G_n, the truncation defect of D_z u = kappa_z.
  double dz_series(double x) const {
    double s = 0.0;
    for (int n = 0; n < static_cast<int>(u_n.size()); ++n) s += u_n[n] * eigenvalue(n) * jacobi_recurrence(n, alpha, x);
    return s;
  }
  GridFunction sample_on(const std::vector<double>& mesh) const {
    GridFunction g = sample(mesh, [this](double x) { return (*this)(x); });
    const double h = alpha / 2;
    const bool any = c1 != 0.0 || c2 != 0.0;
    if (any) g.singular_exponents = Exponents{c2 != 0.0 ? h - 1.0 : h, c1 != 0.0 ? h - 1.0 : h};
    return g;
  }
};

namespace detail {
// Gauss-Jacobi rule for the weight x^ea (1-x)^eb on (0,1).
struct GaussJacobi {
  std::vector<double> x, w;
};
inline GaussJacobi gauss_jacobi(std::size_t n, double ea, double eb) {
  gsl_integration_fixed_workspace* ws =
      gsl_integration_fixed_alloc(gsl_integration_fixed_jacobi, n, 0.0, 1.0, eb, ea);
  if (!ws) throw error(errc::assembly, "Gauss-Jacobi rule allocation failed");
  GaussJacobi r;
  r.x.assign(gsl_integration_fixed_nodes(ws), gsl_integration_fixed_nodes(ws) + n);
  r.w.assign(gsl_integration_fixed_weights(ws), gsl_integration_fixed_weights(ws) + n);
  gsl_integration_fixed_free(ws);
  return r;
}
}  // namespace detail

/// ||G_n||^2_rho = G(n+h+1)^2 / ((2n+a+1) n! G(n+a+1)), h = a/2.
inline double jacobi_norm2(int n, double alpha) {
  const double h = alpha / 2;
  return std::exp(2 * std::lgamma(n + h + 1) - std::lgamma(n + 1.0) - std::lgamma(n + alpha + 1)) / (2 * n + alpha + 1);
}

inline RieszHarmonicSeries riesz_harmonic(double alpha, double c1, double c2, int N = 24, int quad_nodes = 64,
                                          RieszNormalization norm = RieszNormalization::consistent) {
  check_alpha(alpha);
  if (!(alpha > 2.0 / 3.0)) throw error(errc::out_of_validity, "the series representation needs alpha > 2/3");
  if (N < 1) throw error(errc::domain, "N must be >= 1");
  if (quad_nodes < N + 1) throw error(errc::domain, "quad_nodes must exceed N");
  RieszHarmonicSeries s;
  s.alpha = alpha;
  s.c1 = c1;
  s.c2 = c2;
  s.N = N;
  s.normalization = norm;
  s.basis = make_jacobi_basis(alpha, N);
  s.u_n.assign(N + 1, 0.0);
  s.g_norm2.resize(N + 1);
  for (int n = 0; n <= N; ++n) s.g_norm2[n] = jacobi_norm2(n, alpha);
  // rho kappa_z = c1 x^a (1-x)^{a-1} + c2 x^{a-1} (1-x)^a: one Gauss-Jacobi rule per term.
  const auto r1 = detail::gauss_jacobi(quad_nodes, alpha, alpha - 1.0);
  const auto r2 = detail::gauss_jacobi(quad_nodes, alpha - 1.0, alpha);
  for (int n = 0; n <= N; ++n) {
    double num = 0.0;
    if (c1 != 0.0)
      for (std::size_t i = 0; i < r1.x.size(); ++i) num += c1 * r1.w[i] * jacobi_recurrence(n, alpha, r1.x[i]);
    if (c2 != 0.0)
      for (std::size_t i = 0; i < r2.x.size(); ++i) num += c2 * r2.w[i] * jacobi_recurrence(n, alpha, r2.x[i]);
    s.u_n[n] = num / (s.eigenvalue(n) * s.g_norm2[n]);
  }
  s.tail_estimate = std::abs(s.u_n[N]) * std::sqrt(s.g_norm2[N]);
  return s;
}

/// Recovers u_n from samples of u at Gauss-Jacobi nodes: <(u - kappa_z)/rho, G_n>_rho / ||G_n||^2_rho.
inline std::vector<double> riesz_coefficients_from_samples(const RieszHarmonicSeries& s, int nodes = 64) {
  const double h = s.alpha / 2;
  const auto r = detail::gauss_jacobi(nodes, h, h);
  std::vector<double> out(s.u_n.size(), 0.0);
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    const double x = r.x[i];
    const double w = (s(x) - s.kappa(x)) / s.rho(x);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += r.w[i] * w * jacobi_recurrence(static_cast<int>(n), s.alpha, x);
  }
  for (std::size_t n = 0; n < out.size(); ++n) out[n] /= s.g_norm2[n];
  return out;
}

/// max_n |recovered - stored| / max_n |stored|.
inline double riesz_round_trip(const RieszHarmonicSeries& s, int nodes = 64) {
  const auto rec = riesz_coefficients_from_samples(s, nodes);
  double d = 0.0, m = 0.0;
  for (std::size_t n = 0; n < rec.size(); ++n) {
    d = std::max(d, std::abs(rec[n] - s.u_n[n]));
    m = std::max(m, std::abs(s.u_n[n]));
  }
  return m > 0 ? d / m : d;
}

/// CSV with header `n,u_n` followed by a blank line and `x,value` samples.
inline void write_series_csv(const RieszHarmonicSeries& s, const std::string& path, std::size_t samples = 257) {
  std::ofstream out(path);
  if (!out) throw error(errc::io, "cannot open " + path + " for writing");
  out << "n,u_n\n";
  for (std::size_t n = 0; n < s.u_n.size(); ++n) out << n << ',' << fmt17(s.u_n[n]) << '\n';
  out << "\nx,value\n";
  const auto mesh = graded_mesh(Interval(0.0, 1.0), samples - 1, default_grading(s.alpha), Grading::both);
  for (double x : mesh) out << fmt17(x) << ',' << fmt17(s(x)) << '\n';
}

}  // namespace fraclap
