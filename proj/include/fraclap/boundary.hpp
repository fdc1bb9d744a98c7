#pragma once

#include <Eigen/Dense>

#include "fracops.hpp"

namespace fraclap {

// ---------------------------------------------------------------------------
// Fractional Neumann operator. For the left side
//   N u = T_b I^{1-alpha}_+ ( |D_- u|^{p-2} D_- u ),
// the trace read at b where the right integral starts; the right side mirrors this at a.
// Only a (b-x)^{alpha-1} component of the flux survives the limit, so N u is
// Gamma(alpha) times that coefficient.

struct NeumannValue {
  Side side = Side::left;
  double p = 2.0;
  double value = 0.0;
  double extrapolation_spread = 0.0;
};

namespace detail {
inline double pflux(double t, double p) {
  if (p == 2.0) return t;
  if (t == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(t), p - 1.0), t);
}

// |D u|^{p-2} D u at the nodes; endpoint exponents scale by p-1.
inline GridFunction flux(const GridFunction& u, double alpha, double p, Side side) {
  if (!(p > 1.0)) throw error(errc::domain, "p must exceed 1");
  GridFunction w = rl_derivative(u, alpha, side);
  if (p == 2.0) return w;
  for (double& t : w.v) t = pflux(t, p);
  if (w.singular_exponents) {
    auto& e = *w.singular_exponents;
    if (is_symbolic_exponent(e.first)) e.first *= p - 1.0;
    if (is_symbolic_exponent(e.second)) e.second *= p - 1.0;
  }
  return w;
}

// End read by the side's trace: b for left, a for right.
inline Side trace_end(Side side) { return opposite(side); }

inline EndpointLimit end_value(const GridFunction& g, Side end, double rel_tol) {
  const double e = end == Side::left ? g.ea() : g.eb();
  const double v = end == Side::left ? g.v.front() : g.v.back();
  if ((is_symbolic_exponent(e) && e < 0) || !std::isfinite(v))
    throw error(errc::trace_singular, std::string("unbounded at ") + (end == Side::left ? "a" : "b"));
  return richardson_limit(g, end, rel_tol);
}
// Near the trace end I^{1-alpha} w = N + A d^mu + B d + ..., mu = 1-alpha: the remainder of w
// contributes d^mu, a subleading kernel power contributes d. The three-term fit through nodes
// 1..3 is compared with the one through nodes 2..4.
inline EndpointLimit neumann_limit(const GridFunction& g, Side end, double mu, double rel_tol) {
  const std::size_t n = g.size();
  if (n < 6) throw error(errc::shape, "Neumann limit needs at least 6 nodes");
  auto d = [&](std::size_t k) { return end == Side::left ? g.x[k] - g.x.front() : g.x.back() - g.x[n - 1 - k]; };
  auto v = [&](std::size_t k) { return end == Side::left ? g.v[k] : g.v[n - 1 - k]; };
  auto fit = [&](std::size_t k0) {
    Eigen::Matrix3d A;
    Eigen::Vector3d r;
    for (int i = 0; i < 3; ++i) {
      const double dk = d(k0 + i);
      A(i, 0) = 1.0;
      A(i, 1) = std::pow(dk, mu);
      A(i, 2) = dk;
      r(i) = v(k0 + i);
    }
    return A.colPivHouseholderQr().solve(r)(0);
  };
  const double e1 = fit(1), e2 = fit(2);
  double scale = std::abs(e1);
  for (std::size_t i = 1; i + 1 < n; ++i) scale = std::max(scale, std::abs(g.v[i]));
  EndpointLimit out;
  out.value = e1;
  out.spread = scale > 0 ? std::abs(e1 - e2) / scale : 0.0;
  out.converged = out.spread <= rel_tol;
  return out;
}
}  // namespace detail

inline NeumannValue neumann_value(const GridFunction& u, double alpha, double p, Side side, double rel_tol = 1e-2) {
  check_alpha(alpha);
  u.validate();
  const GridFunction w = detail::flux(u, alpha, p, side);
  const GridFunction v = rl_integral(w, 1.0 - alpha, opposite(side));
  const Side end = detail::trace_end(side);
  const double e = end == Side::left ? v.ea() : v.eb();
  if (is_symbolic_exponent(e) && e < 0)
    throw error(errc::untrusted_value, "I^{1-alpha} of the flux is unbounded at the trace endpoint");
  const EndpointLimit lim = detail::neumann_limit(v, end, 1.0 - alpha, rel_tol);
  if (!lim.converged)
    throw error(errc::untrusted_value, "Neumann limit does not stabilise (spread " + fmt17(lim.spread) + ")");
  return {side, p, lim.value, lim.spread};
}

/// The rival boundary quantity: the opposite-side trace of D u (for the left side, D_- u read at a).
/// It differs from the Neumann value whenever D u has a nonzero limit there.
inline double derivative_trace(const GridFunction& u, double alpha, Side side, double rel_tol = 1e-4) {
  check_alpha(alpha);
  const GridFunction d = rl_derivative(u, alpha, side);
  const EndpointLimit lim = detail::end_value(d, side, rel_tol);
  if (!lim.converged) throw error(errc::untrusted_value, "derivative trace does not stabilise");
  return lim.value;
}

// ---------------------------------------------------------------------------
// Green's identity
//   int |D u|^{p-2} D u D v = int (Lap u) v + (N u)(T v),
// Lap u the opposite-side derivative of the flux. All D-terms are evaluated at quadrature points
// from the nodal models; the flux is formed at the nodes before its derivative is taken.

struct GreensTerms {
  double flux_form = 0.0;       // int flux * D v
  double laplacian_form = 0.0;  // int (Lap u) v
  double boundary_term = 0.0;   // (N u)(T v)
  double residual = 0.0;        // |lhs - rhs| / max of the three magnitudes
};

namespace detail {
// The u-dependent parts: flux and Laplacian at the quadrature points and the Neumann value.
struct GreensU {
  std::vector<double> flux, lap;
  double neumann = 0.0;
};
// The v-dependent parts: D v and v at the quadrature points and the trace.
struct GreensV {
  std::vector<double> dv, v;
  double trace = 0.0;
};

inline GreensU greens_u(const GridFunction& u, double alpha, double p, Side side, const QuadRule& q) {
  const GridFunction w = flux(u, alpha, p, side);
  check_integrable_start(w, opposite(side));
  return {at_points(w, q), op_at_points(w, opposite(side), -alpha, q), neumann_value(u, alpha, p, side).value};
}

inline GreensV greens_v(const GridFunction& v, double alpha, Side side, const QuadRule& q) {
  v.validate();
  const Side end = trace_end(side);
  const double tv = end == Side::left ? v.v.front() : v.v.back();
  const double ev = end == Side::left ? v.ea() : v.eb();
  if (!std::isfinite(tv) || (is_symbolic_exponent(ev) && ev < 0))
    throw error(errc::trace_singular, "v has no trace at the boundary endpoint");
  return {op_at_points(v, side, -alpha, q), at_points(v, q), tv};
}

inline GreensTerms greens_combine(const GreensU& a, const GreensV& b, const QuadRule& q) {
  GreensTerms t;
  for (std::size_t k = 0; k < q.size(); ++k) {
    t.flux_form += q.pts[k].w * a.flux[k] * b.dv[k];
    t.laplacian_form += q.pts[k].w * a.lap[k] * b.v[k];
  }
  t.boundary_term = a.neumann * b.trace;
  const double scale = std::max({std::abs(t.flux_form), std::abs(t.laplacian_form), std::abs(t.boundary_term)});
  const double diff = std::abs(t.flux_form - t.laplacian_form - t.boundary_term);
  t.residual = scale > 0 ? diff / scale : 0.0;
  return t;
}
}  // namespace detail

inline GreensTerms greens_identity_terms(const GridFunction& u, const GridFunction& v, double alpha, double p, Side side,
                                         QuadOptions qo = {8, 3, true}) {
  check_alpha(alpha);
  u.validate();
  if (!same_mesh(u, v)) throw error(errc::shape, "u and v must share a mesh");
  QuadRule q(u.x, qo);
  return detail::greens_combine(detail::greens_u(u, alpha, p, side, q), detail::greens_v(v, alpha, side, q), q);
}

inline double greens_identity_residual(const GridFunction& u, const GridFunction& v, double alpha, double p, Side side,
                                       QuadOptions qo = {8, 3, true}) {
  return greens_identity_terms(u, v, alpha, p, side, qo).residual;
}

/// Residuals for every pair of a bank, entry [i][j] for (us[i], vs[j]); each operator is applied once per function.
inline std::vector<std::vector<double>> greens_identity_table(const std::vector<GridFunction>& us,
                                                              const std::vector<GridFunction>& vs, double alpha,
                                                              double p, Side side, QuadOptions qo = {8, 3, true}) {
  check_alpha(alpha);
  if (us.empty() || vs.empty()) return {};
  for (const auto& f : us)
    if (!same_mesh(f, us.front())) throw error(errc::shape, "bank functions must share a mesh");
  for (const auto& f : vs)
    if (!same_mesh(f, us.front())) throw error(errc::shape, "bank functions must share a mesh");
  QuadRule q(us.front().x, qo);
  std::vector<detail::GreensV> gv;
  for (const auto& v : vs) gv.push_back(detail::greens_v(v, alpha, side, q));
  std::vector<std::vector<double>> out;
  for (const auto& u : us) {
    u.validate();
    const auto gu = detail::greens_u(u, alpha, p, side, q);
    auto& row = out.emplace_back();
    for (const auto& g : gv) row.push_back(detail::greens_combine(gu, g, q).residual);
  }
  return out;
}

}  // namespace fraclap
