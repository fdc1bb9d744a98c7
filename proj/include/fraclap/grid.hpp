#pragma once

#include <array>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <utility>

#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_gamma.h>
#include <Eigen/Dense>

#include "core.hpp"

namespace fraclap {

/// A location carrying its distances to both endpoints. Distances are kept separately
/// because points packed against b are not representable as absolute coordinates.
struct Pt {
  double x = 0.0;
  double da = 0.0;  // x - a
  double db = 0.0;  // b - x
};

using PointFn = std::function<double(const Pt&)>;

enum class Grading { none, left, right, both };

inline double default_grading(double alpha) { return std::max(2.0, 2.0 / alpha); }

/// Strictly increasing nodes on [a,b] with n_cells cells, clustered as x ~ a + L (i/n)^r.
/// The exponent is lowered when the smallest cell would fall below 256 ulp of max(|a|,|b|).
inline std::vector<double> graded_mesh(Interval iv, std::size_t n_cells, double r, Grading g) {
  if (n_cells < 2) throw error(errc::shape, "mesh needs at least two cells");
  const double L = iv.length();
  const double floor_h =
      256.0 * std::numeric_limits<double>::epsilon() * std::max({std::abs(iv.a), std::abs(iv.b), L});
  if (g == Grading::none) r = 1.0;
  if (g == Grading::both && n_cells % 2) ++n_cells;
  const double n = static_cast<double>(n_cells);
  const double first = (g == Grading::both) ? 0.5 * L * std::pow(2.0 / n, r) : L * std::pow(1.0 / n, r);
  if (r > 1.0 && first < floor_h) {
    const double half = (g == Grading::both) ? 0.5 * L : L;
    const double base = (g == Grading::both) ? 2.0 / n : 1.0 / n;
    r = std::max(1.0, std::log(floor_h / half) / std::log(base));
  }
  std::vector<double> x(n_cells + 1);
  for (std::size_t i = 0; i <= n_cells; ++i) {
    const double t = static_cast<double>(i) / n;
    switch (g) {
      case Grading::none: x[i] = iv.a + L * t; break;
      case Grading::left: x[i] = iv.a + L * std::pow(t, r); break;
      case Grading::right: x[i] = iv.b - L * std::pow(1.0 - t, r); break;
      case Grading::both:
        x[i] = (2 * i <= n_cells) ? iv.a + 0.5 * L * std::pow(2.0 * t, r)
                                  : iv.b - 0.5 * L * std::pow(2.0 * (1.0 - t), r);
        break;
    }
  }
  x.front() = iv.a;
  x.back() = iv.b;
  return x;
}

/// Exponent pair (e_a, e_b) of known endpoint behaviours (x-a)^e_a, (b-x)^e_b.
/// Zero (or any integer) marks a regular end.
using Exponents = std::pair<double, double>;

inline bool is_symbolic_exponent(double e) {
  return std::isfinite(e) && std::abs(e - std::round(e)) > 1e-12;
}

/// Samples on a strictly increasing mesh. Endpoint values may be +-inf when the matching
/// exponent is negative. `order` selects the remainder interpolant between nodes: 2 is
/// cellwise quadratic through the cell and its shorter neighbour, 1 is piecewise linear.
struct GridFunction {
  std::vector<double> x;
  std::vector<double> v;
  std::optional<Exponents> singular_exponents;
  int order = 2;

  std::size_t size() const { return x.size(); }
  Interval interval() const { return {x.front(), x.back()}; }
  double ea() const { return singular_exponents ? singular_exponents->first : 0.0; }
  double eb() const { return singular_exponents ? singular_exponents->second : 0.0; }

  void validate() const {
    if (x.size() < 5 || x.size() != v.size()) throw error(errc::shape, "grid function needs >= 5 matching nodes");
    for (std::size_t i = 1; i < x.size(); ++i)
      if (!(x[i] > x[i - 1])) throw error(errc::shape, "mesh must be strictly increasing");
    for (std::size_t i = 1; i + 1 < x.size(); ++i)
      if (!std::isfinite(v[i])) throw error(errc::shape, "non-finite interior value");
    if (!std::isfinite(v.front()) && !(ea() < 0)) throw error(errc::shape, "non-finite value at a without negative exponent");
    if (!std::isfinite(v.back()) && !(eb() < 0)) throw error(errc::shape, "non-finite value at b without negative exponent");
  }

  Pt node(std::size_t i) const { return {x[i], x[i] - x.front(), x.back() - x[i]}; }
};

inline bool same_mesh(const GridFunction& f, const GridFunction& g) {
  return f.x == g.x;
}

inline GridFunction sample(const std::vector<double>& mesh, const PointFn& fn,
                           std::optional<Exponents> tags = std::nullopt) {
  GridFunction g;
  g.x = mesh;
  g.v.resize(mesh.size());
  g.singular_exponents = tags;
  const double a = mesh.front(), b = mesh.back();
  for (std::size_t i = 0; i < mesh.size(); ++i) g.v[i] = fn({mesh[i], mesh[i] - a, b - mesh[i]});
  return g;
}

inline GridFunction sample(const std::vector<double>& mesh, const std::function<double(double)>& fn,
                           std::optional<Exponents> tags = std::nullopt) {
  return sample(mesh, PointFn([&](const Pt& p) { return fn(p.x); }), tags);
}

// ---------------------------------------------------------------------------
// Evaluation model: f = ca (x-a)^ea + cb (b-x)^eb + r, r continuous and cellwise
// r_m + lam (r_{m+1} - r_m) + c2_m lam (lam - 1), lam the local coordinate.

struct EndFit {
  double c = 0.0;
  double e = 0.0;
  double c1 = 0.0;     // coefficient of the subleading power s^{e+1}
  double r_end = 0.0;  // value of the remainder at the endpoint
  bool active() const { return (c != 0.0 || c1 != 0.0) && is_symbolic_exponent(e); }
  double value(double s) const { return active() ? std::pow(s, e) * (c + c1 * s) : 0.0; }
};

namespace detail {
// Fits c s^e + c1 s^{e+1} + beta near one end from the endpoint sample v0 and the nodes
// s1 < s2 < s3. The subleading power keeps the remainder twice differentiable when the
// sampled function mixes s^e with a smooth factor, which a quadratic remainder cannot absorb.
// The terms are global, so a fit to round-off noise on a strongly graded mesh would swamp the
// data far away: a term exceeding 1e3 * scale on [0, L] is dropped (c1 first, then c).
inline EndFit fit_end(double e, double v0, const double (&s)[3], const double (&v)[3], double scale = HUGE_VAL,
                      double L = 1.0) {
  EndFit f;
  f.e = e;
  if (!is_symbolic_exponent(e)) {
    f.r_end = v0;
    return f;
  }
  const double limit = 1e3 * scale;
  auto too_big = [&](double coef, double ex) { return std::abs(coef) * std::pow(L, ex) > limit; };
  if (e > 0 && std::isfinite(v0)) {
    const double a11 = std::pow(s[0], e), a12 = a11 * s[0];
    const double a21 = std::pow(s[1], e), a22 = a21 * s[1];
    const double det = a11 * a22 - a12 * a21;
    f.c = ((v[0] - v0) * a22 - (v[1] - v0) * a12) / det;
    f.c1 = (a11 * (v[1] - v0) - a21 * (v[0] - v0)) / det;
    f.r_end = v0;
    if (too_big(f.c1, e + 1.0) || too_big(f.c, e)) {
      f.c1 = 0.0;
      f.c = (v[0] - v0) / a11;
      if (too_big(f.c, e)) f.c = 0.0;
    }
  } else {
    Eigen::Matrix3d A;
    Eigen::Vector3d rhs;
    for (int i = 0; i < 3; ++i) {
      const double p = std::pow(s[i], e);
      A(i, 0) = p;
      A(i, 1) = p * s[i];
      A(i, 2) = 1.0;
      rhs(i) = v[i];
    }
    const Eigen::Vector3d sol = A.colPivHouseholderQr().solve(rhs);
    f.c = sol(0);
    f.c1 = sol(1);
    f.r_end = sol(2);
    if (too_big(f.c1, e + 1.0)) {
      Eigen::Matrix2d B;
      Eigen::Vector2d r2;
      for (int i = 0; i < 2; ++i) {
        B(i, 0) = std::pow(s[i], e);
        B(i, 1) = 1.0;
        r2(i) = v[i];
      }
      const Eigen::Vector2d s2 = B.colPivHouseholderQr().solve(r2);
      f.c = s2(0);
      f.c1 = 0.0;
      f.r_end = s2(1);
    }
  }
  return f;
}
}  // namespace detail

struct Model {
  std::vector<double> x, da, db;  // nodes and their endpoint distances
  std::vector<double> r;          // remainder samples
  std::vector<double> c2;         // per-cell quadratic coefficient, zero for order 1
  EndFit fa, fb;
  double a = 0, b = 1;

  explicit Model(const GridFunction& g) {
    g.validate();
    x = g.x;
    a = x.front();
    b = x.back();
    const std::size_t n = x.size();
    da.resize(n);
    db.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      da[i] = x[i] - a;
      db[i] = b - x[i];
    }
    std::vector<double> w = g.v;
    double scale = 0.0;
    for (double v : w)
      if (std::isfinite(v)) scale = std::max(scale, std::abs(v));
    const double L = b - a;
    fa = detail::fit_end(g.ea(), w[0], {da[1], da[2], da[3]}, {w[1], w[2], w[3]}, scale, L);
    if (fa.active())
      for (std::size_t i = 1; i < n; ++i) w[i] -= fa.value(da[i]);
    w[0] = fa.r_end;
    fb = detail::fit_end(g.eb(), w[n - 1], {db[n - 2], db[n - 3], db[n - 4]}, {w[n - 2], w[n - 3], w[n - 4]}, scale, L);
    if (fb.active())
      for (std::size_t i = 0; i + 1 < n; ++i) w[i] -= fb.value(db[i]);
    w[n - 1] = fb.r_end;
    r = std::move(w);
    c2.assign(n - 1, 0.0);
    if (g.order >= 2) {
      for (std::size_t m = 0; m + 1 < n; ++m) {
        const double h = x[m + 1] - x[m];
        const double hl = m > 0 ? x[m] - x[m - 1] : HUGE_VAL;
        const double hr = m + 2 < n ? x[m + 2] - x[m + 1] : HUGE_VAL;
        if (hl == HUGE_VAL && hr == HUGE_VAL) continue;
        const bool use_left = hl <= hr;
        const double l3 = use_left ? -hl / h : 1.0 + hr / h;
        const double r3 = use_left ? r[m - 1] : r[m + 2];
        c2[m] = (r3 - r[m] - l3 * (r[m + 1] - r[m])) / (l3 * (l3 - 1.0));
      }
    }
  }

  std::size_t cell_of(double xx) const {
    auto it = std::upper_bound(x.begin(), x.end(), xx);
    std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - x.begin()));
    return std::min(k, x.size() - 1) - 1;
  }

  double symbolic(double pa, double pb) const {
    return fa.value(pa) + fb.value(pb);
  }

  /// Value at a point inside cell m with local coordinate lam in [0,1].
  double eval_local(std::size_t m, double lam, double pa, double pb) const {
    return symbolic(pa, pb) + (1.0 - lam) * r[m] + lam * r[m + 1] + c2[m] * lam * (lam - 1.0);
  }

  double eval(const Pt& p) const {
    const std::size_t m = cell_of(p.x);
    const double h = x[m + 1] - x[m];
    double lam = (p.da <= p.db) ? (p.da - da[m]) / h : 1.0 - (p.db - db[m + 1]) / h;
    lam = std::clamp(lam, 0.0, 1.0);
    return eval_local(m, lam, p.da, p.db);
  }

  double eval(double xx) const { return eval(Pt{xx, xx - a, b - xx}); }
};

// ---------------------------------------------------------------------------
// Composite quadrature on mesh cells. End cells (and optionally every cell) use a
// polynomial change of variables s -> I_s(k, k) (regularized incomplete beta, Jacobian
// s^{k-1}(1-s)^{k-1}/B(k,k)) that flattens algebraic endpoint behaviour before Gauss-Legendre
// and keeps low-degree polynomials exact.

struct QuadPoint {
  double x, da, db, w;
  std::size_t cell;
  double lam;  // local coordinate in the cell
};

struct QuadOptions {
  int order = 8;
  int sidi_power = 3;
  bool transform_all_cells = false;
};

namespace detail {
inline const gsl_integration_fixed_workspace* gl_rule(int n) {
  struct Cache {
    std::vector<gsl_integration_fixed_workspace*> ws;
    ~Cache() {
      for (auto* w : ws)
        if (w) gsl_integration_fixed_free(w);
    }
  };
  static Cache cache;
  if (cache.ws.size() <= static_cast<std::size_t>(n)) cache.ws.resize(n + 1, nullptr);
  if (!cache.ws[n]) cache.ws[n] = gsl_integration_fixed_alloc(gsl_integration_fixed_legendre, n, 0.0, 1.0, 0.0, 0.0);
  return cache.ws[n];
}
}  // namespace detail

struct QuadRule {
  std::vector<QuadPoint> pts;
  std::vector<double> mesh;
  double a = 0, b = 1;

  QuadRule() = default;
  QuadRule(const std::vector<double>& nodes, QuadOptions opt = {})
      : mesh(nodes), a(nodes.front()), b(nodes.back()) {
    static std::mutex mu;
    std::vector<double> s, ws;
    {
      std::lock_guard<std::mutex> lock(mu);
      const auto* rule = detail::gl_rule(opt.order);
      const double* nodes = gsl_integration_fixed_nodes(rule);
      const double* wts = gsl_integration_fixed_weights(rule);
      s.assign(nodes, nodes + opt.order);
      ws.assign(wts, wts + opt.order);
    }
    const std::size_t nc = mesh.size() - 1;
    pts.reserve(nc * opt.order);
    const int k = opt.sidi_power;
    for (std::size_t m = 0; m < nc; ++m) {
      const double h = mesh[m + 1] - mesh[m];
      const double dam = mesh[m] - a, dbm = b - mesh[m + 1];
      const bool tr = opt.transform_all_cells || m == 0 || m + 1 == nc;
      for (int q = 0; q < opt.order; ++q) {
        double lam = s[q], oml = 1.0 - s[q], jac = 1.0;
        if (tr) {
          lam = gsl_sf_beta_inc(k, k, s[q]);
          oml = gsl_sf_beta_inc(k, k, 1.0 - s[q]);
          jac = std::pow(s[q] * (1.0 - s[q]), k - 1) / gsl_sf_beta(k, k);
        }
        QuadPoint p;
        p.da = dam + h * lam;
        p.db = dbm + h * oml;
        p.x = (p.da <= p.db) ? a + p.da : b - p.db;
        p.w = h * jac * ws[q];
        p.cell = m;
        p.lam = lam;
        pts.push_back(p);
      }
    }
  }

  std::size_t size() const { return pts.size(); }
  Pt pt(std::size_t i) const { return {pts[i].x, pts[i].da, pts[i].db}; }
};

/// Values of a grid function at the quadrature points.
inline std::vector<double> at_points(const GridFunction& g, const QuadRule& q) {
  Model m(g);
  std::vector<double> out(q.size());
  const bool aligned = (q.mesh == m.x);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto& p = q.pts[i];
    out[i] = aligned ? m.eval_local(p.cell, p.lam, p.da, p.db) : m.eval(Pt{p.x, p.da, p.db});
  }
  return out;
}

inline std::vector<double> at_points(const PointFn& f, const QuadRule& q) {
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = f(q.pt(i));
  return out;
}

inline double quad_sum(const QuadRule& q, const std::vector<double>& vals) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q.pts[i].w * vals[i];
  return s;
}

inline double quad_dot(const QuadRule& q, const std::vector<double>& f, const std::vector<double>& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q.pts[i].w * f[i] * g[i];
  return s;
}

inline double quad_lp(const QuadRule& q, const std::vector<double>& f, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q.pts[i].w * std::pow(std::abs(f[i]), p);
  return std::pow(s, 1.0 / p);
}

/// L^p norm of a grid function via its evaluation model.
inline double lp_norm(const GridFunction& g, double p = 2.0, QuadOptions opt = {}) {
  QuadRule q(g.x, opt);
  return quad_lp(q, at_points(g, q), p);
}

inline double integrate(const GridFunction& g, QuadOptions opt = {}) {
  QuadRule q(g.x, opt);
  return quad_sum(q, at_points(g, q));
}

inline double inner(const GridFunction& f, const GridFunction& g, QuadOptions opt = {}) {
  if (!same_mesh(f, g)) throw error(errc::shape, "inner product needs a shared mesh");
  QuadRule q(f.x, opt);
  return quad_dot(q, at_points(f, q), at_points(g, q));
}

// ---------------------------------------------------------------------------
// Pointwise algebra. Exponent tags follow the most singular operand.

inline std::optional<Exponents> merge_tags(const GridFunction& f, const GridFunction& g) {
  if (!f.singular_exponents && !g.singular_exponents) return std::nullopt;
  auto pick = [](double e1, double e2) {
    if (!is_symbolic_exponent(e1)) return e2;
    if (!is_symbolic_exponent(e2)) return e1;
    return std::min(e1, e2);
  };
  return Exponents{pick(f.ea(), g.ea()), pick(f.eb(), g.eb())};
}

inline GridFunction axpy(double alpha, const GridFunction& f, double beta, const GridFunction& g) {
  if (!same_mesh(f, g)) throw error(errc::shape, "linear combination needs a shared mesh");
  GridFunction h;
  h.x = f.x;
  h.v.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double u = (alpha == 0.0) ? 0.0 : alpha * f.v[i];
    const double w = (beta == 0.0) ? 0.0 : beta * g.v[i];
    h.v[i] = u + w;
  }
  h.singular_exponents = merge_tags(alpha == 0.0 ? g : f, beta == 0.0 ? f : g);
  h.order = std::min(f.order, g.order);
  return h;
}

inline GridFunction scaled(const GridFunction& f, double c) {
  GridFunction h = f;
  for (auto& y : h.v) y = (c == 0.0) ? 0.0 : c * y;
  if (c == 0.0) h.singular_exponents.reset();
  return h;
}

inline GridFunction zeros_like(const std::vector<double>& mesh) {
  GridFunction g;
  g.x = mesh;
  g.v.assign(mesh.size(), 0.0);
  return g;
}

inline GridFunction reflect(const GridFunction& f) {
  GridFunction g;
  const std::size_t n = f.size();
  const double a = f.x.front(), b = f.x.back();
  g.x.resize(n);
  g.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.x[i] = a + (b - f.x[n - 1 - i]);
    g.v[i] = f.v[n - 1 - i];
  }
  g.x.front() = a;
  g.x.back() = b;
  if (f.singular_exponents) g.singular_exponents = Exponents{f.eb(), f.ea()};
  g.order = f.order;
  return g;
}

/// Relative L2 distance over nodes with x - a >= cut_a and b - x >= cut_b (trapezoid weights).
inline double rel_l2_nodes(const GridFunction& f, const GridFunction& ref, double cut_a, double cut_b) {
  if (!same_mesh(f, ref)) throw error(errc::shape, "comparison needs a shared mesh");
  const double a = f.x.front(), b = f.x.back();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double xl = f.x[i], xr = f.x[i + 1];
    if (xl - a < cut_a || b - xr < cut_b) continue;
    const double h = xr - xl;
    const double e0 = f.v[i] - ref.v[i], e1 = f.v[i + 1] - ref.v[i + 1];
    num += 0.5 * h * (e0 * e0 + e1 * e1);
    den += 0.5 * h * (ref.v[i] * ref.v[i] + ref.v[i + 1] * ref.v[i + 1]);
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

// ---------------------------------------------------------------------------
// CSV: header `x,value`, one row per node, 17 significant digits.

inline std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_csv(const GridFunction& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error(errc::io, "cannot open " + path + " for writing");
  out << "x,value\n";
  for (std::size_t i = 0; i < g.size(); ++i) out << fmt17(g.x[i]) << ',' << fmt17(g.v[i]) << '\n';
}

inline GridFunction read_csv(const std::string& path, std::optional<Exponents> tags = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw error(errc::io, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw error(errc::io, path + " is empty");
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
  };
  if (trim(line) != "x,value") throw error(errc::io, path + ": expected header x,value");
  GridFunction g;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw error(errc::io, path + ":" + std::to_string(lineno) + ": missing comma");
    try {
      g.x.push_back(std::stod(line.substr(0, comma)));
      g.v.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw error(errc::io, path + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  g.singular_exponents = tags;
  if (g.v.size() >= 2 && ((!std::isfinite(g.v.front()) && !(g.ea() < 0)) || (!std::isfinite(g.v.back()) && !(g.eb() < 0))))
    throw error(errc::io, path + ": non-finite endpoint value needs a negative exponent tag");
  g.validate();
  return g;
}

}  // namespace fraclap
