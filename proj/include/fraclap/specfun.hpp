#pragma once

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "grid.hpp"

namespace fraclap {

// ---------------------------------------------------------------------------
// Gamma

inline double gamma_fn(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw error(errc::domain, "gamma_fn needs a positive argument");
  return std::tgamma(z);
}

namespace detail {
// Poles are matched to within rounding so that, e.g., (alpha-1) + 1 - alpha hits zero.
template <class T>
bool at_pole(T x) {
  return x <= T(1e-13) && std::abs(x - std::nearbyint(x)) <= T(1e-13) * std::max(T(1), std::abs(x));
}
}  // namespace detail

/// 1/Gamma(x) on the whole real line; zero at the poles.
template <class T = double>
T rgamma(T x) {
  if (detail::at_pole(x)) return T(0);
  return T(1) / std::tgamma(x);
}

/// Gamma(p)/Gamma(q) through log-Gamma with sign tracking; zero when q is a pole.
template <class T = double>
T gamma_ratio(T p, T q) {
  if (detail::at_pole(q)) return T(0);
  if (detail::at_pole(p)) throw error(errc::domain, "gamma_ratio: pole in the numerator");
  int sp = 1, sq = 1;
  const T lp = ::lgamma_r(p, &sp);
  const T lq = ::lgamma_r(q, &sq);
  return T(sp * sq) * std::exp(lp - lq);
}

// ---------------------------------------------------------------------------
// Gauss hypergeometric 2F1 on real arguments z < 1.

namespace detail {

inline bool near_int(double v, double tol = 1e-12) { return std::abs(v - std::nearbyint(v)) <= tol * std::max(1.0, std::abs(v)); }
inline bool nonpos_int(double v) { return v <= 0 && near_int(v); }

template <class T>
T hyp2f1_series(T a, T b, T c, T z) {
  T term = 1, sum = 1;
  for (int k = 0; k < 20000; ++k) {
    term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z;
    sum += term;
    if (term == T(0)) break;
    if (std::abs(term) <= std::numeric_limits<T>::epsilon() * 0.25 * std::abs(sum) && k > 2) break;
  }
  return sum;
}

inline void gsl_quiet() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

/// Gamma(c)/(Gamma(b)Gamma(c-b)) * int_0^1 t^(b-1) (1-t)^(c-b-1) (1-zt)^(-a) dt, 0 < b < c.
/// omz = 1 - z is passed separately to keep resolution near z = 1.
inline double hyp2f1_integral(double a, double b, double c, double z, double omz) {
  gsl_quiet();
  struct P {
    double a, z, omz;
  } prm{a, z, omz};
  gsl_function F;
  F.function = [](double t, void* vp) {
    auto* q = static_cast<P*>(vp);
    // 1 - z t = omz + z (1 - t)
    const double base = (q->z > 0.5) ? q->omz + q->z * (1.0 - t) : 1.0 - q->z * t;
    return std::pow(base, -q->a);
  };
  F.params = &prm;
  gsl_integration_qaws_table* tab = gsl_integration_qaws_table_alloc(b - 1.0, c - b - 1.0, 0, 0);
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
  double result = 0.0, abserr = 0.0;
  gsl_integration_qaws(&F, 0.0, 1.0, tab, 0.0, 1e-13, 2000, ws, &result, &abserr);
  gsl_integration_workspace_free(ws);
  gsl_integration_qaws_table_free(tab);
  return result * std::exp(std::lgamma(c) - std::lgamma(b) - std::lgamma(c - b));
}

}  // namespace detail

/// General real-parameter 2F1 for z < 1. Power series for |z| <= 1/2; above that the
/// 1-z connection formula, the Euler integral, or an Euler transformation, whichever applies.
inline double hyp2f1(double a, double b, double c, double z, double omz) {
  using namespace detail;
  if (nonpos_int(c) && !(nonpos_int(a) && a > c) && !(nonpos_int(b) && b > c))
    throw error(errc::domain, "hyp2f1: c is a non-positive integer");
  if (!(z < 1.0) && omz > 0.0) z = std::min(1.0 - omz, std::nextafter(1.0, 0.0));  // z rounded to 1; omz is exact
  if (!(z < 1.0)) throw error(errc::domain, "hyp2f1 needs z < 1");
  if (z == 0.0) return 1.0;
  if (a == c) return std::pow(omz, -b);
  if (b == c) return std::pow(omz, -a);
  if (nonpos_int(a) || nonpos_int(b) || std::abs(z) <= 0.5) return hyp2f1_series(a, b, c, z);
  if (z < -0.5) {
    // Pfaff: (1-z)^(-a) F(a, c-b; c; z/(z-1)), argument in (1/3, 1)
    const double w = z / (z - 1.0);
    return std::pow(omz, -a) * hyp2f1(a, c - b, c, w, 1.0 / omz);
  }
  const double d = c - a - b;
  // 1-z connection formula at a perturbed c (dd the perturbed c-a-b).
  auto connect = [&](double cc) {
    const double dd = cc - a - b;
    const double lc = std::tgamma(cc);
    const double t1 = lc * std::tgamma(dd) * rgamma(cc - a) * rgamma(cc - b) * hyp2f1_series(a, b, 1.0 - dd, omz);
    const double t2 = lc * std::tgamma(-dd) * rgamma(a) * rgamma(b) * std::pow(omz, dd) *
                      hyp2f1_series(cc - a, cc - b, 1.0 + dd, omz);
    return t1 + t2;
  };
  if (!near_int(d, 1e-6)) return connect(c);
  if (b > 0 && b < c) return hyp2f1_integral(a, b, c, z, omz);
  if (a > 0 && a < c) return hyp2f1_integral(b, a, c, z, omz);
  // Euler: (1-z)^(c-a-b) F(c-a, c-b; c; z)
  const double ea = c - a, eb = c - b;
  if (eb > 0 && eb < c) return std::pow(omz, d) * hyp2f1_integral(ea, eb, c, z, omz);
  if (ea > 0 && ea < c) return std::pow(omz, d) * hyp2f1_integral(eb, ea, c, z, omz);
  // Integer c-a-b with no integral form: symmetric perturbations of c at dc and 2dc combined to
  // O(dc^4); the cancellation between the two connection terms costs about five digits.
  const double dc = 1e-4 * std::max(1.0, std::abs(c));
  const double m1 = 0.5 * (connect(c + dc) + connect(c - dc));
  const double m2 = 0.5 * (connect(c + 2 * dc) + connect(c - 2 * dc));
  return (4.0 * m1 - m2) / 3.0;
}

inline double hyp2f1(double a, double b, double c, double z) { return hyp2f1(a, b, c, z, 1.0 - z); }

/// 2F1(a,b;c;z)/Gamma(c), finite at c = 0, -1, -2, ...
inline double hyp2f1_regularized(double a, double b, double c, double z, double omz) {
  if (!detail::at_pole(c)) {
    const double g = rgamma(c);
    return g == 0.0 ? 0.0 : g * hyp2f1(a, b, c, z, omz);
  }
  const int m = static_cast<int>(-std::nearbyint(c));
  double pre = 1.0;
  for (int k = 0; k <= m; ++k) pre *= (a + k) * (b + k) / (k + 1);
  if (pre == 0.0 || z == 0.0) return 0.0;
  return pre * std::pow(z, m + 1) * hyp2f1(a + m + 1, b + m + 1, m + 2.0, z, omz);
}

/// 2F1(a,b;c;z) on the integral-representation domain 0 < b < c, z < 1.
/// Series for |z| <= 0.5, adaptive endpoint-weighted quadrature of the Euler integral otherwise.
/// Accuracy degrades as z -> 1 when c - a - b <= 0 (the function itself diverges there).
inline double gauss_2f1(double a, double b, double c, double z) {
  if (!(b > 0.0 && b < c)) throw error(errc::domain, "gauss_2f1 needs 0 < b < c");
  if (!(z < 1.0)) throw error(errc::domain, "gauss_2f1 needs z < 1");
  if (std::abs(z) <= 0.5) return detail::hyp2f1_series(a, b, c, z);
  return detail::hyp2f1_integral(a, b, c, z, 1.0 - z);
}

// ---------------------------------------------------------------------------
// Jacobi polynomials G_n = P_n^(alpha/2, alpha/2)(2x-1) in monomial form on [0,1].

/// (-1)^{n+k} G(n+a/2+1) G(n+k+a+1) / [G(k+1) G(n-k+1) G(n+a+1) G(k+a/2+1)], in log space.
template <class T = double>
T jacobi_coeff(int n, int k, T alpha) {
  if (n < 0 || k < 0 || k > n) throw error(errc::domain, "jacobi_coeff index out of range");
  if (!(alpha > 0 && alpha < 1)) throw error(errc::domain, "jacobi_coeff needs alpha in (0,1)");
  const T h = alpha / 2;
  const T lg = std::lgamma(n + h + 1) + std::lgamma(n + k + alpha + 1) - std::lgamma(T(k + 1)) -
               std::lgamma(T(n - k + 1)) - std::lgamma(n + alpha + 1) - std::lgamma(k + h + 1);
  return ((n + k) % 2 ? T(-1) : T(1)) * std::exp(lg);
}

/// Direct Gamma evaluation of the same coefficient; overflows for large n.
template <class T = double>
T jacobi_coeff_naive(int n, int k, T alpha) {
  const T h = alpha / 2;
  return ((n + k) % 2 ? T(-1) : T(1)) * std::tgamma(n + h + 1) * std::tgamma(n + k + alpha + 1) /
         (std::tgamma(T(k + 1)) * std::tgamma(T(n - k + 1)) * std::tgamma(n + alpha + 1) * std::tgamma(k + h + 1));
}

struct JacobiBasis {
  double alpha = 0.5;
  int max_degree = 0;
  std::vector<std::vector<double>> coeffs;  // coeffs[n][k], k <= n
};

inline JacobiBasis make_jacobi_basis(double alpha, int max_degree) {
  check_alpha(alpha);
  if (max_degree < 0) throw error(errc::domain, "max_degree must be >= 0");
  JacobiBasis jb;
  jb.alpha = alpha;
  jb.max_degree = max_degree;
  jb.coeffs.resize(max_degree + 1);
  for (int n = 0; n <= max_degree; ++n) {
    jb.coeffs[n].resize(n + 1);
    for (int k = 0; k <= n; ++k) jb.coeffs[n][k] = jacobi_coeff(n, k, alpha);
  }
  return jb;
}

/// Horner evaluation of G_n at x.
inline double jacobi_eval(const JacobiBasis& jb, int n, double x) {
  if (n < 0 || n > jb.max_degree) throw error(errc::domain, "jacobi_eval degree out of range");
  const auto& c = jb.coeffs[n];
  double s = 0.0;
  for (int k = n; k >= 0; --k) s = s * x + c[k];
  return s;
}

/// Three-term recurrence value of P_n^(h,h)(2x-1); used to cross-check the monomial form.
inline double jacobi_recurrence(int n, double alpha, double x) {
  const double h = alpha / 2, t = 2 * x - 1;
  double p0 = 1.0;
  if (n == 0) return p0;
  double p1 = (h + 1) * t;
  for (int m = 2; m <= n; ++m) {
    const double s = 2 * m + 2 * h;
    const double a1 = 2 * m * (m + 2 * h) * (s - 2);
    const double a3 = (s - 1) * s * (s - 2);
    const double a4 = 2 * (m + h - 1) * (m + h - 1) * s;
    const double p2 = (a3 * t * p1 - a4 * p0) / a1;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

/// rho(x) = x^{alpha/2} (1-x)^{alpha/2} on (0,1), integrated on a mesh graded toward both ends.
struct WeightedMeasure {
  double alpha = 0.5;
  std::size_t nodes = 2048;
  double grading = 0.0;  // 0 selects 2/alpha

  double weight(const Pt& p) const { return std::pow(p.da, alpha / 2) * std::pow(p.db, alpha / 2); }
  std::vector<double> mesh() const {
    return graded_mesh(Interval(0.0, 1.0), nodes, grading > 0 ? grading : 2.0 / alpha, Grading::both);
  }
};

/// int_0^1 f g rho dx through the evaluation models of f and g.
inline double weighted_inner(const GridFunction& f, const GridFunction& g, const WeightedMeasure& w,
                             QuadOptions opt = {}) {
  if (!same_mesh(f, g)) throw error(errc::shape, "weighted_inner needs a shared mesh");
  if (f.x.front() != 0.0 || f.x.back() != 1.0) throw error(errc::shape, "weighted_inner lives on (0,1)");
  QuadRule q(f.x, opt);
  const auto fv = at_points(f, q), gv = at_points(g, q);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q.pts[i].w * fv[i] * gv[i] * w.weight(q.pt(i));
  return s;
}

/// G_n sampled on a mesh.
inline GridFunction jacobi_grid(const JacobiBasis& jb, int n, const std::vector<double>& mesh) {
  return sample(mesh, [&](double x) { return jacobi_eval(jb, n, x); });
}

}  // namespace fraclap
