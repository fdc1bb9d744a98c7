#pragma once

#include "specfun.hpp"

namespace fraclap {

// ---------------------------------------------------------------------------
// One-sided Riemann-Liouville operators of order tau on the evaluation model of a grid
// function. tau > 0 is the integral I^tau, tau = -alpha is the derivative d/dx I^{1-alpha}.
// Everything is written in the distance s from the start endpoint (a for left, b for right),
// which makes the right operators exact mirrors of the left ones.
//
//   start term  c s^e      -> c G(e+1)/G(e+1+tau) s^{e+tau}
//   far term    c (L-s)^e  -> c L^e s^tau / G(1+tau) 2F1(1, -e; 1+tau; s/L)
// with each end carrying the powers e and e+1.
//   remainder   I^tau r, or r(0) s^tau / G(1+tau) + I^{1+tau} r' for tau < 0
// Remainder cells within two cell widths of s are integrated exactly against the kernel,
// farther cells by Gauss-Legendre (the kernel is smooth there).

class SideOp {
 public:
  SideOp(const GridFunction& f, Side side) : side_(side) {
    Model m(f);
    const std::size_t n = m.x.size();
    L_ = m.b - m.a;
    s_.resize(n);
    sf_.resize(n);
    r_.resize(n);
    c2_.resize(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (side == Side::left) ? i : n - 1 - i;
      s_[i] = (side == Side::left) ? m.da[j] : m.db[j];
      sf_[i] = (side == Side::left) ? m.db[j] : m.da[j];
      r_[i] = m.r[j];
    }
    for (std::size_t k = 0; k + 1 < n; ++k) c2_[k] = m.c2[(side == Side::left) ? k : n - 2 - k];
    start_ = (side == Side::left) ? m.fa : m.fb;
    far_ = (side == Side::left) ? m.fb : m.fa;
    x_ = m.x;
    double rmax = 0.0;
    for (double v : r_) rmax = std::max(rmax, std::abs(v));
    rscale_ = rmax;
    load_rule(8, g8x_, g8w_);
    load_rule(5, g5x_, g5w_);
    load_rule(3, g3x_, g3w_);
    load_rule(2, g2x_, g2w_);
  }

  Side side() const { return side_; }

  /// Operator of order tau at distance s from the start endpoint (sf from the far one).
  double eval(double tau, double s, double sf) const {
    double val = 0.0;
    if (start_.active())
      for (const auto& [c, e] : terms(start_)) {
        const double g = gamma_ratio(e + 1.0, e + 1.0 + tau);
        if (g != 0.0) val += c * g * std::pow(s, e + tau);
      }
    if (far_.active()) {
      const double z = s / L_, omz = sf / L_;
      for (const auto& [c, e] : terms(far_))
        val += c * std::pow(L_, e) * std::pow(s, tau) * rgamma(1.0 + tau) * far_hyp(-e, 1.0 + tau, z, omz);
    }
    if (s <= 0.0) return val;
    const bool deriv = tau < 0;
    const double mu = deriv ? 1.0 + tau : tau;
    if (deriv && r_[0] != 0.0) val += r_[0] * std::pow(s, tau) * rgamma(1.0 + tau);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < s_.size() && s_[k] < s; ++k) acc += cell_integral(k, s, mu, deriv);
    return val + acc * rgamma(mu);
  }

  double eval(double tau, const Pt& p) const {
    return side_ == Side::left ? eval(tau, p.da, p.db) : eval(tau, p.db, p.da);
  }

  /// Operator values at the mesh nodes, tagged with the endpoint exponents of the result.
  GridFunction nodal(double tau) const {
    const std::size_t n = s_.size();
    std::vector<double> out(n);
    parallel_for(n - 2, [&](std::size_t i) { out[i + 1] = eval(tau, s_[i + 1], sf_[i + 1]); }, 16);
    const double e_start = start_exponent(tau);
    const double e_far = far_exponent(tau);
    out[0] = start_limit(tau);
    out[n - 1] = far_limit(tau, e_far);
    GridFunction g;
    g.x = x_;
    g.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.v[(side_ == Side::left) ? i : n - 1 - i] = out[i];
    const double ea = (side_ == Side::left) ? e_start : e_far;
    const double eb = (side_ == Side::left) ? e_far : e_start;
    if (is_symbolic_exponent(ea) || is_symbolic_exponent(eb)) g.singular_exponents = Exponents{ea, eb};
    return g;
  }

  /// Most singular exponent at the start endpoint of the result.
  double start_exponent(double tau) const {
    double e = 0.0;
    auto take = [&](double c) {
      if (!is_symbolic_exponent(c)) return;
      e = is_symbolic_exponent(e) ? std::min(e, c) : c;
    };
    if (r0_nonzero()) take(tau);
    if (start_.active())
      for (const auto& [c, e] : terms(start_))
        if (gamma_ratio(e + 1.0, e + 1.0 + tau) != 0.0) take(e + tau);
    if (std::abs(r_[1] - r_[0]) > 1e-14 * rscale_) take(tau + 1.0);
    return e;
  }

  double far_exponent(double tau) const {
    if (!far_.active()) return 0.0;
    return far_.c != 0.0 ? far_.e + tau : far_.e + 1.0 + tau;
  }

 private:
  // Nonzero (coefficient, exponent) pairs of an end fit.
  static std::vector<std::pair<double, double>> terms(const EndFit& f) {
    std::vector<std::pair<double, double>> t;
    if (f.c != 0.0) t.emplace_back(f.c, f.e);
    if (f.c1 != 0.0) t.emplace_back(f.c1, f.e + 1.0);
    return t;
  }

  static void load_rule(int n, std::vector<double>& xs, std::vector<double>& ws) {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    const auto* rule = detail::gl_rule(n);
    xs.assign(gsl_integration_fixed_nodes(rule), gsl_integration_fixed_nodes(rule) + n);
    ws.assign(gsl_integration_fixed_weights(rule), gsl_integration_fixed_weights(rule) + n);
  }

  // int over cell k (clipped at s) of (s-t)^{mu-1} q(t) dt, q the remainder or its derivative.
  double cell_integral(std::size_t k, double s, double mu, bool deriv) const {
    const double h = s_[k + 1] - s_[k];
    const double dr = r_[k + 1] - r_[k], c2 = c2_[k];
    if (c2 == 0.0 && dr == 0.0 && (deriv || r_[k] == 0.0)) return 0.0;
    const double u1 = s - s_[k];
    const double u0 = std::max(0.0, s - s_[k + 1]);
    if (u0 >= 2.0 * h) {
      // n-point Gauss on a cell at distance u0 errs by about (h / 2u0)^{2n}: below 1e-10 on every tier.
      const bool t2 = u0 >= 256.0 * h, t3 = u0 >= 32.0 * h, t5 = u0 >= 8.0 * h;
      const auto& xs = t2 ? g2x_ : t3 ? g3x_ : t5 ? g5x_ : g8x_;
      const auto& ws = t2 ? g2w_ : t3 ? g3w_ : t5 ? g5w_ : g8w_;
      double sum = 0.0;
      for (std::size_t q = 0; q < xs.size(); ++q) {
        const double lam = xs[q];
        const double qv = deriv ? (dr + c2 * (2 * lam - 1)) / h : r_[k] + lam * dr + c2 * lam * (lam - 1);
        sum += ws[q] * std::pow(u1 - lam * h, mu - 1.0) * qv;
      }
      return sum * h;
    }
    // q(s - u) as a polynomial in u, then exact moments of u^{mu-1}.
    const double L0 = u1 / h;
    double a[3];
    int deg;
    if (deriv) {
      a[0] = (dr + c2 * (2 * L0 - 1)) / h;
      a[1] = -2 * c2 / (h * h);
      deg = 1;
    } else {
      a[0] = r_[k] + dr * L0 + c2 * L0 * (L0 - 1);
      a[1] = -(dr + c2 * (2 * L0 - 1)) / h;
      a[2] = c2 / (h * h);
      deg = 2;
    }
    double sum = 0.0;
    for (int j = 0; j <= deg; ++j) {
      const double p = mu + j;
      sum += a[j] * (std::pow(u1, p) - (u0 > 0 ? std::pow(u0, p) : 0.0)) / p;
    }
    return sum;
  }

  bool r0_nonzero() const { return std::abs(r_[0]) > 1e-14 * rscale_; }

  static double far_hyp(double b, double c, double z, double omz) {
    if (omz <= 0.0) {
      const double d = c - 1.0 - b;
      if (d <= 0.0) return std::numeric_limits<double>::infinity();
      return std::tgamma(c) * std::tgamma(d) * rgamma(c - 1.0) * rgamma(c - b);
    }
    return hyp2f1(1.0, b, c, z, omz);
  }

  double start_limit(double tau) const {
    double finite = 0.0;
    double sing = 0.0;
    if (start_.active())
      for (const auto& [c, e] : terms(start_)) {
        const double g = gamma_ratio(e + 1.0, e + 1.0 + tau);
        const double ex = e + tau;
        if (g == 0.0) continue;
        if (std::abs(ex) < 1e-12) finite += c * g;
        else if (ex < 0) sing += c * g;
      }
    if (tau < 0 && r0_nonzero()) sing += r_[0];
    if (sing != 0.0) return std::copysign(std::numeric_limits<double>::infinity(), sing);
    return finite;
  }

  double far_limit(double tau, double e_far) const {
    if (far_.active() && e_far < 0) {
      const double d = 1e-9 * L_;
      const double v = eval(tau, L_ - d, d);
      return std::copysign(std::numeric_limits<double>::infinity(), v);
    }
    return eval(tau, s_.back(), 0.0);
  }

  Side side_;
  double L_ = 1.0;
  std::vector<double> s_, sf_, r_, c2_, x_;
  std::vector<double> g8x_, g8w_, g5x_, g5w_, g3x_, g3w_, g2x_, g2w_;
  EndFit start_, far_;
  double rscale_ = 0.0;
};

// ---------------------------------------------------------------------------
// Kernels

inline std::vector<double> default_mesh(Interval iv, std::size_t n_cells, double alpha, Grading g) {
  return graded_mesh(iv, n_cells, default_grading(alpha), g);
}

/// kappa_-(x) = (x-a)^{alpha-1}.
inline GridFunction kernel_left(double alpha, const std::vector<double>& mesh) {
  check_alpha(alpha);
  return sample(mesh, PointFn([&](const Pt& p) { return std::pow(p.da, alpha - 1.0); }), Exponents{alpha - 1.0, 0.0});
}

/// kappa_+(x) = (b-x)^{alpha-1}.
inline GridFunction kernel_right(double alpha, const std::vector<double>& mesh) {
  check_alpha(alpha);
  return sample(mesh, PointFn([&](const Pt& p) { return std::pow(p.db, alpha - 1.0); }), Exponents{0.0, alpha - 1.0});
}

inline GridFunction kernel(double alpha, Side side, const std::vector<double>& mesh) {
  return side == Side::left ? kernel_left(alpha, mesh) : kernel_right(alpha, mesh);
}

inline GridFunction kernel_left(double alpha, Interval iv, std::size_t n_cells = 1024) {
  return kernel_left(alpha, default_mesh(iv, n_cells, alpha, Grading::left));
}
inline GridFunction kernel_right(double alpha, Interval iv, std::size_t n_cells = 1024) {
  return kernel_right(alpha, default_mesh(iv, n_cells, alpha, Grading::right));
}

/// (kappa_z1, kappa_z2) = ((x-a)^{a/2}(b-x)^{a/2-1}, (x-a)^{a/2-1}(b-x)^{a/2}).
inline std::pair<GridFunction, GridFunction> riesz_kernels(double alpha, const std::vector<double>& mesh) {
  check_alpha(alpha);
  const double h = alpha / 2;
  auto z1 = sample(mesh, PointFn([&](const Pt& p) { return std::pow(p.da, h) * std::pow(p.db, h - 1.0); }),
                   Exponents{h, h - 1.0});
  auto z2 = sample(mesh, PointFn([&](const Pt& p) { return std::pow(p.da, h - 1.0) * std::pow(p.db, h); }),
                   Exponents{h - 1.0, h});
  return {z1, z2};
}

inline std::pair<GridFunction, GridFunction> riesz_kernels(double alpha, Interval iv, std::size_t n_cells = 1024) {
  return riesz_kernels(alpha, default_mesh(iv, n_cells, alpha, Grading::both));
}

// ---------------------------------------------------------------------------
// Operators on grid functions

inline void check_integrable_start(const GridFunction& f, Side side) {
  const double e = side == Side::left ? f.ea() : f.eb();
  if (is_symbolic_exponent(e) && e <= -1.0) throw error(errc::non_integrable, "endpoint exponent <= -1");
  const double v = side == Side::left ? f.v.front() : f.v.back();
  if (!std::isfinite(v) && !(e < 0 && e > -1.0)) throw error(errc::non_integrable, "singular start value without exponent in (-1,0)");
}

inline GridFunction rl_integral(const GridFunction& f, double alpha, Side side) {
  if (!(alpha > 0.0)) throw error(errc::domain, "integral order must be positive");
  check_integrable_start(f, side);
  return SideOp(f, side).nodal(alpha);
}

/// D^alpha = d/dx I^{1-alpha} on the left, -d/dx I^{1-alpha} on the right.
inline GridFunction rl_derivative(const GridFunction& f, double alpha, Side side) {
  check_alpha(alpha);
  check_integrable_start(f, side);
  return SideOp(f, side).nodal(-alpha);
}

inline GridFunction riesz_weak_derivative(const GridFunction& f, double alpha) {
  auto l = rl_derivative(f, alpha, Side::left);
  auto r = rl_derivative(f, alpha, Side::right);
  GridFunction z = axpy(0.5, l, 0.5, r);
  // Opposite-end singularities cancel only in the exact operator; endpoints keep the milder tag.
  return z;
}

/// Exact operator values of a grid function's model at quadrature points.
inline std::vector<double> op_at_points(const GridFunction& f, Side side, double tau, const QuadRule& q) {
  SideOp op(f, side);
  std::vector<double> out(q.size());
  parallel_for(q.size(), [&](std::size_t i) { out[i] = op.eval(tau, q.pt(i)); }, 64);
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form power rules used as oracles.

/// R^tau_side [(x-a)^mu (b-x)^nu] at p, tau > 0 an integral and tau = -alpha a derivative:
/// left: G(mu+1) s^{mu+tau} L^nu 2F1(mu+1, -nu; mu+1+tau; s/L) / G(mu+1+tau), s = x-a;
/// right is the mirror image with mu and nu exchanged.
inline double powprod_op(double mu, double nu, double tau, Side side, const Pt& p) {
  if (!(mu > -1.0)) throw error(errc::non_integrable, "powprod_op needs mu > -1 at the start endpoint");
  const double s = side == Side::left ? p.da : p.db;
  const double sf = side == Side::left ? p.db : p.da;
  const double e0 = side == Side::left ? mu : nu;
  const double e1 = side == Side::left ? nu : mu;
  const double L = p.da + p.db;
  if (s <= 0.0) return 0.0;
  const double f = hyp2f1_regularized(e0 + 1.0, -e1, e0 + 1.0 + tau, s / L, sf / L);
  return std::tgamma(e0 + 1.0) * std::pow(s, e0 + tau) * std::pow(L, e1) * f;
}

/// D^alpha of (x-a)^beta (left) or (b-x)^beta (right): G(b+1)/G(b+1-alpha) s^{b-alpha}.
inline GridFunction power_rule_derivative(double beta, double alpha, Side side, const std::vector<double>& mesh) {
  if (!(beta > -1.0)) throw error(errc::domain, "power rule needs beta > -1");
  check_alpha(alpha);
  const double c = gamma_ratio(beta + 1.0, beta + 1.0 - alpha);
  auto g = sample(mesh, PointFn([&](const Pt& p) {
                    const double s = side == Side::left ? p.da : p.db;
                    return c == 0.0 ? 0.0 : c * std::pow(s, beta - alpha);
                  }));
  const double e = c == 0.0 ? 0.0 : beta - alpha;
  if (is_symbolic_exponent(e)) g.singular_exponents = side == Side::left ? Exponents{e, 0.0} : Exponents{0.0, e};
  return g;
}

inline GridFunction power_rule_integral(double beta, double alpha, Side side, const std::vector<double>& mesh) {
  if (!(beta > -1.0)) throw error(errc::domain, "power rule needs beta > -1");
  const double c = gamma_ratio(beta + 1.0, beta + 1.0 + alpha);
  auto g = sample(mesh, PointFn([&](const Pt& p) { return c * std::pow(side == Side::left ? p.da : p.db, beta + alpha); }));
  const double e = beta + alpha;
  if (is_symbolic_exponent(e)) g.singular_exponents = side == Side::left ? Exponents{e, 0.0} : Exponents{0.0, e};
  return g;
}

/// (x-a)^beta or (b-x)^beta sampled with its exponent tag.
inline GridFunction power_function(double beta, Side side, const std::vector<double>& mesh) {
  auto g = sample(mesh, PointFn([&](const Pt& p) { return std::pow(side == Side::left ? p.da : p.db, beta); }));
  if (is_symbolic_exponent(beta)) g.singular_exponents = side == Side::left ? Exponents{beta, 0.0} : Exponents{0.0, beta};
  return g;
}

// ---------------------------------------------------------------------------
// Endpoint limits by Richardson extrapolation over the three cells next to an endpoint.

struct EndpointLimit {
  double value = 0.0;
  double spread = 0.0;  // |E12 - E23| relative to scale
  bool converged = false;
};

/// Extrapolates samples at nodes 1..3 away from the endpoint (distances d1<d2<d3) to distance 0,
/// assuming g = limit + c d^mu near the end.
inline EndpointLimit richardson_limit(const GridFunction& g, Side end, double rel_tol = 1e-4, double mu = 1.0) {
  const std::size_t n = g.size();
  auto d = [&](std::size_t k) { return end == Side::left ? g.x[k] - g.x.front() : g.x.back() - g.x[n - 1 - k]; };
  auto v = [&](std::size_t k) { return end == Side::left ? g.v[k] : g.v[n - 1 - k]; };
  const double d1 = d(1), d2 = d(2), d3 = d(3);
  const double v1 = v(1), v2 = v(2), v3 = v(3);
  const double p1 = std::pow(d1, mu), p2 = std::pow(d2, mu), p3 = std::pow(d3, mu);
  const double e12 = v1 - p1 * (v2 - v1) / (p2 - p1);
  const double e23 = v2 - p2 * (v3 - v2) / (p3 - p2);
  double scale = std::abs(e12);
  for (std::size_t i = 1; i + 1 < n; ++i) scale = std::max(scale, std::abs(g.v[i]));
  EndpointLimit out;
  out.value = e12;
  out.spread = scale > 0 ? std::abs(e12 - e23) / scale : 0.0;
  out.converged = out.spread <= rel_tol;
  return out;
}

// ---------------------------------------------------------------------------
// Fundamental theorem: u = c kappa + I^alpha D^alpha u, c = lim I^{1-alpha} u / Gamma(alpha).

struct FtwfcDecomposition {
  double c_sing = 0.0;
  GridFunction regular;
  Side side = Side::left;
  double limit_spread = 0.0;
};

inline FtwfcDecomposition ftwfc_decompose(const GridFunction& f, double alpha, Side side) {
  check_alpha(alpha);
  check_integrable_start(f, side);
  SideOp op(f, side);
  const double e0 = op.start_exponent(1.0 - alpha);
  if (is_symbolic_exponent(e0) && e0 < 0) throw error(errc::decomposition_failure, "I^{1-alpha} u is unbounded at the endpoint");
  GridFunction j = op.nodal(1.0 - alpha);
  EndpointLimit lim = richardson_limit(j, side, 1e-4);
  if (!lim.converged) throw error(errc::decomposition_failure, "endpoint limit of I^{1-alpha} u does not stabilise");
  FtwfcDecomposition d;
  d.side = side;
  d.c_sing = lim.value / std::tgamma(alpha);
  d.limit_spread = lim.spread;
  d.regular = rl_integral(rl_derivative(f, alpha, side), alpha, side);
  return d;
}

inline GridFunction reconstruct(const FtwfcDecomposition& d, double alpha) {
  return axpy(d.c_sing, kernel(alpha, d.side, d.regular.x), 1.0, d.regular);
}

// ---------------------------------------------------------------------------
// Weak-derivative check: int w phi = int u D_opp phi for test functions phi.

/// |int w phi - int u (D_opp phi)| / (||w phi||_1 + ||u D_opp phi||_1) for one test function.
inline double weak_identity_defect(const GridFunction& u, const GridFunction& w, const GridFunction& phi, double alpha,
                                   Side side, QuadOptions opt = {}) {
  QuadRule q(u.x, opt);
  const auto uv = at_points(u, q), wv = at_points(w, q), pv = at_points(phi, q);
  const auto dphi = op_at_points(phi, opposite(side), -alpha, q);
  double lhs = 0.0, rhs = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    lhs += q.pts[i].w * wv[i] * pv[i];
    rhs += q.pts[i].w * uv[i] * dphi[i];
    s1 += q.pts[i].w * std::abs(wv[i] * pv[i]);
    s2 += q.pts[i].w * std::abs(uv[i] * dphi[i]);
  }
  const double den = s1 + s2;
  return den > 0 ? std::abs(lhs - rhs) / den : 0.0;
}

}  // namespace fraclap
