#pragma once

#include <Eigen/Dense>
#include <memory>

#include "fracops.hpp"

namespace fraclap {

// Trial spaces for the variational solvers. A basis is a finite list of functions with
// closed-form values and one-sided alpha-derivatives, evaluated once on a quadrature rule.

enum class BasisKind { PiecewiseLinear, SpectralPoly };

struct BasisOptions {
  BasisKind kind = BasisKind::PiecewiseLinear;
  std::size_t n_dof = 64;      // target count; hats take n_dof + 1 cells
  double grading = 0.0;        // 0 selects 2/alpha (at least 1)
  bool zero_trace = true;      // Dirichlet constraints from the (theta, lambda) space
  bool riesz = false;          // Riesz energy space (constrained at both ends)
  bool kernel_enrichment = false;
  QuadOptions quad{16, 5, true};  // hat derivatives kink as (x - t)^{1-alpha} at every node
};

struct Basis {
  BasisKind kind = BasisKind::PiecewiseLinear;
  Interval iv;
  FracParams params;
  std::vector<double> mesh;    // hat nodes, or the quadrature mesh for polynomials
  std::vector<std::size_t> hat_node;
  std::vector<std::pair<double, double>> poly_exp;  // (mu, nu) of t^mu (1-t)^nu
  bool constrain_a = false, constrain_b = false;    // Dirichlet mask
  bool free_a = false, free_b = false;              // boundary hats present
  bool kernel = false;
  Side kernel_side = Side::left;
  double kernel_fix = 0.0;  // psi = kappa - kernel_fix * hat at the opposite end
  QuadOptions quad;

  std::size_t size() const {
    return (kind == BasisKind::PiecewiseLinear ? hat_node.size() : poly_exp.size()) + (kernel ? 1 : 0);
  }
};

namespace detail {
// [u^mu - (u-h)_+^mu] / h for u > 0, without cancellation when u >> h.
inline double hinge(double u, double h, double mu) {
  if (u <= 0.0) return 0.0;
  if (u <= h) return std::pow(u, mu) / h;
  return -std::pow(u, mu) * std::expm1(mu * std::log1p(-h / u)) / h;
}
}  // namespace detail

/// Whether the constant-near-an-end behaviour of a boundary hat has a one-sided
/// alpha-derivative in L^p: requires alpha p < 1.
inline bool end_hat_admissible(double alpha, double p) { return alpha * p < 1.0; }

/// Energy-space basis for params. The a-end hat exists only if unconstrained and either
/// the left derivative is unweighted (theta = 1) or alpha p < 1; symmetrically at b.
inline Basis make_basis(const FracParams& params, Interval iv, const BasisOptions& opt) {
  params.validate();
  Basis B;
  B.kind = opt.kind;
  B.iv = iv;
  B.params = params;
  B.quad = opt.quad;
  const double al = params.alpha, p = params.p;
  const bool traces = al * p > 1.0;
  if (opt.riesz) {
    B.constrain_a = B.constrain_b = true;
  } else if (opt.zero_trace) {
    if (!traces) throw error(errc::trace_undefined, "zero-trace constraints need alpha*p > 1");
    B.constrain_a = params.theta > 0.0;
    B.constrain_b = params.theta < 1.0;
  }
  const bool left_used = opt.riesz || params.theta < 1.0;
  const bool right_used = opt.riesz || params.theta > 0.0;
  B.free_a = !B.constrain_a && (!left_used || end_hat_admissible(al, p));
  B.free_b = !B.constrain_b && (!right_used || end_hat_admissible(al, p));
  if (opt.kernel_enrichment) {
    if (opt.riesz || (params.theta > 0.0 && params.theta < 1.0))
      throw error(errc::domain, "kernel enrichment applies to one-sided spaces only");
    if (!((al - 1.0) * p > -1.0)) throw error(errc::domain, "kernel function is not in L^p for this alpha, p");
    B.kernel = true;
    B.kernel_side = params.theta == 0.0 ? Side::left : Side::right;
  }
  const double r = opt.grading > 0 ? opt.grading : std::max(1.0, 2.0 / al);
  if (opt.kind == BasisKind::PiecewiseLinear) {
    std::size_t n_int = std::max<std::size_t>(opt.n_dof, 1);
    std::size_t cells = n_int + 1;
    if (cells % 2) ++cells;
    B.mesh = graded_mesh(iv, cells, r, Grading::both);
    const std::size_t n = B.mesh.size() - 1;
    if (B.free_a) B.hat_node.push_back(0);
    for (std::size_t i = 1; i < n; ++i) B.hat_node.push_back(i);
    if (B.free_b) B.hat_node.push_back(n);
  } else {
    if (opt.n_dof > 20) throw error(errc::domain, "spectral basis limited to 20 functions (monomial conditioning)");
    const double ea = B.free_a ? 0.0 : 1.0, eb = B.free_b ? 0.0 : 1.0;
    for (std::size_t k = 0; k < opt.n_dof; ++k) B.poly_exp.emplace_back(ea + k, eb);
    B.mesh = graded_mesh(iv, 64, r, Grading::both);
  }
  if (B.kernel) {
    const bool opp_constrained = B.kernel_side == Side::left ? B.constrain_b : B.constrain_a;
    B.kernel_fix = opp_constrained ? std::pow(iv.length(), al - 1.0) : 0.0;
    if (opp_constrained && B.kind != BasisKind::PiecewiseLinear)
      throw error(errc::domain, "kernel enrichment with a constrained opposite end needs the hat basis");
  }
  return B;
}

// Values and derivatives of a single hat at a point.
struct HatEval {
  double v, dm, dp;
};

inline HatEval eval_hat(const Basis& B, std::size_t i, const Pt& p, std::size_t cell, double lam) {
  const auto& x = B.mesh;
  const std::size_t n = x.size() - 1;
  const double al = B.params.alpha;
  const double g1 = rgamma(1.0 - al), g2 = rgamma(2.0 - al);
  const double a = x.front(), b = x.back();
  auto dist = [&](std::size_t k) { return p.da <= p.db ? p.da - (x[k] - a) : (b - x[k]) - p.db; };  // x - x_k
  HatEval e{0.0, 0.0, 0.0};
  if (cell + 1 == i) e.v = lam;
  else if (cell == i) e.v = 1.0 - lam;
  const double mu = 1.0 - al;
  double dm = 0.0, dp = 0.0;
  if (i > 0) dm += detail::hinge(dist(i - 1), x[i] - x[i - 1], mu);
  if (i < n) dm -= detail::hinge(dist(i), x[i + 1] - x[i], mu);
  if (i < n) dp += detail::hinge(-dist(i + 1), x[i + 1] - x[i], mu);
  if (i > 0) dp -= detail::hinge(-dist(i), x[i] - x[i - 1], mu);
  dm *= g2;
  dp *= g2;
  if (i == 0) dm += std::pow(p.da, -al) * g1;
  if (i == n) dp += std::pow(p.db, -al) * g1;
  e.dm = dm;
  e.dp = dp;
  return e;
}

/// Affine boundary lifting with its derivatives. Linear in x: ga (b-x)/L + gb (x-a)/L.
struct Lifting {
  double ga = 0.0, gb = 0.0;
  bool active() const { return ga != 0.0 || gb != 0.0; }
  HatEval eval(const Pt& p, double alpha) const {
    const double L = p.da + p.db;
    const double g1 = rgamma(1.0 - alpha), g2 = rgamma(2.0 - alpha);
    HatEval e;
    e.v = (ga * p.db + gb * p.da) / L;
    // D_- (x-a) = s^{1-a}/G(2-a);  D_- (b-x) = L s^{-a}/G(1-a) - s^{1-a}/G(2-a)
    const double dm_a = L * std::pow(p.da, -alpha) * g1 - std::pow(p.da, 1 - alpha) * g2;
    const double dm_b = std::pow(p.da, 1 - alpha) * g2;
    const double dp_b = L * std::pow(p.db, -alpha) * g1 - std::pow(p.db, 1 - alpha) * g2;
    const double dp_a = std::pow(p.db, 1 - alpha) * g2;
    e.dm = (ga == 0.0 ? 0.0 : ga * dm_a / L) + (gb == 0.0 ? 0.0 : gb * dm_b / L);
    e.dp = (ga == 0.0 ? 0.0 : ga * dp_a / L) + (gb == 0.0 ? 0.0 : gb * dp_b / L);
    return e;
  }
};

/// Basis functions tabulated at quadrature points (rows) for each dof (columns).
struct BasisEval {
  QuadRule q;
  Eigen::VectorXd w;
  Eigen::MatrixXd V, Dm, Dp;
  Eigen::VectorXd lift_v, lift_dm, lift_dp;  // zero when no lifting
};

namespace detail {
inline void eval_nonhat(const Basis& B, std::size_t j, const Pt& p, double& v, double& dm, double& dp) {
  const double al = B.params.alpha;
  const double L = B.iv.length();
  if (B.kind == BasisKind::SpectralPoly && j < B.poly_exp.size()) {
    const auto [mu, nu] = B.poly_exp[j];
    const double sc = std::pow(L, -(mu + nu));
    v = sc * std::pow(p.da, mu) * std::pow(p.db, nu);
    dm = sc * powprod_op(mu, nu, -al, Side::left, p);
    dp = sc * powprod_op(mu, nu, -al, Side::right, p);
    return;
  }
  // kernel function (x-a)^{alpha-1} or (b-x)^{alpha-1}
  if (B.kernel_side == Side::left) {
    v = std::pow(p.da, al - 1.0);
    dm = 0.0;
    dp = powprod_op(al - 1.0, 0.0, -al, Side::right, p);
  } else {
    v = std::pow(p.db, al - 1.0);
    dp = 0.0;
    dm = powprod_op(0.0, al - 1.0, -al, Side::left, p);
  }
}
}  // namespace detail

inline BasisEval evaluate(const Basis& B, const Lifting& lift = {}) {
  BasisEval E;
  E.q = QuadRule(B.mesh, B.quad);
  const std::size_t P = E.q.size(), n = B.size();
  E.w.resize(P);
  for (std::size_t k = 0; k < P; ++k) E.w[k] = E.q.pts[k].w;
  E.V = Eigen::MatrixXd::Zero(P, n);
  E.Dm = Eigen::MatrixXd::Zero(P, n);
  E.Dp = Eigen::MatrixXd::Zero(P, n);
  const std::size_t nh = B.kind == BasisKind::PiecewiseLinear ? B.hat_node.size() : 0;
  const std::size_t last = B.mesh.size() - 1;
  parallel_for(P, [&](std::size_t k) {
    const auto& qp = E.q.pts[k];
    const Pt p{qp.x, qp.da, qp.db};
    for (std::size_t j = 0; j < nh; ++j) {
      const HatEval h = eval_hat(B, B.hat_node[j], p, qp.cell, qp.lam);
      E.V(k, j) = h.v;
      E.Dm(k, j) = h.dm;
      E.Dp(k, j) = h.dp;
    }
    for (std::size_t j = nh; j < n; ++j) {
      double v, dm, dp;
      detail::eval_nonhat(B, j - nh, p, v, dm, dp);
      if (B.kernel && j + 1 == n && B.kernel_fix != 0.0) {
        const std::size_t end = B.kernel_side == Side::left ? last : 0;
        const HatEval h = eval_hat(B, end, p, qp.cell, qp.lam);
        v -= B.kernel_fix * h.v;
        dm -= B.kernel_fix * h.dm;
        dp -= B.kernel_fix * h.dp;
      }
      E.V(k, j) = v;
      E.Dm(k, j) = dm;
      E.Dp(k, j) = dp;
    }
  }, 16);
  E.lift_v = Eigen::VectorXd::Zero(P);
  E.lift_dm = Eigen::VectorXd::Zero(P);
  E.lift_dp = Eigen::VectorXd::Zero(P);
  if (lift.active()) {
    for (std::size_t k = 0; k < P; ++k) {
      const HatEval h = lift.eval(E.q.pt(k), B.params.alpha);
      E.lift_v[k] = h.v;
      E.lift_dm[k] = h.dm;
      E.lift_dp[k] = h.dp;
    }
  }
  return E;
}

/// Right-hand side functional F(v) = int g0 v + gm D_-v + gp D_+v dx. Plain L^2 data
/// sets g0 only; weak-form (dual) data may use the derivative weights.
struct Load {
  PointFn g0, gm, gp;

  static Load zero() { return {}; }
  static Load function(PointFn f) { return Load{std::move(f), nullptr, nullptr}; }
  static Load grid(const GridFunction& f) {
    auto m = std::make_shared<Model>(f);
    return Load{PointFn([m](const Pt& p) { return m->eval(p); }), nullptr, nullptr};
  }
  bool empty() const { return !g0 && !gm && !gp; }
};

struct LoadAtPoints {
  Eigen::VectorXd g0, gm, gp;
};

inline LoadAtPoints load_at(const Load& f, const QuadRule& q) {
  LoadAtPoints l;
  const std::size_t P = q.size();
  l.g0 = Eigen::VectorXd::Zero(P);
  l.gm = Eigen::VectorXd::Zero(P);
  l.gp = Eigen::VectorXd::Zero(P);
  for (std::size_t k = 0; k < P; ++k) {
    const Pt p = q.pt(k);
    if (f.g0) l.g0[k] = f.g0(p);
    if (f.gm) l.gm[k] = f.gm(p);
    if (f.gp) l.gp[k] = f.gp(p);
  }
  return l;
}

/// Value of sum c_j phi_j (+ lifting) at a point; used to sample solutions on nodes.
inline double basis_value(const Basis& B, const Eigen::VectorXd& c, const Lifting& lift, const Pt& p) {
  double s = lift.active() ? lift.eval(p, B.params.alpha).v : 0.0;
  const auto& x = B.mesh;
  const std::size_t nh = B.kind == BasisKind::PiecewiseLinear ? B.hat_node.size() : 0;
  std::size_t cell = 0;
  double lam = 0.0;
  if (nh > 0) {
    auto it = std::upper_bound(x.begin(), x.end(), p.x);
    cell = std::min<std::size_t>(std::max<std::ptrdiff_t>(1, it - x.begin()), x.size() - 1) - 1;
    const double h = x[cell + 1] - x[cell];
    lam = std::clamp((p.da <= p.db) ? (p.da - (x[cell] - x.front())) / h : 1.0 - (p.db - (x.back() - x[cell + 1])) / h,
                     0.0, 1.0);
  }
  for (std::size_t j = 0; j < nh; ++j) {
    const std::size_t i = B.hat_node[j];
    if (i + 1 < cell || i > cell + 1) continue;
    s += c[j] * eval_hat(B, i, p, cell, lam).v;
  }
  for (std::size_t j = nh; j < B.size(); ++j) {
    double v, dm, dp;
    detail::eval_nonhat(B, j - nh, p, v, dm, dp);
    if (B.kernel && j + 1 == B.size() && B.kernel_fix != 0.0) {
      const std::size_t end = B.kernel_side == Side::left ? x.size() - 1 : 0;
      if (end == cell || end == cell + 1) v -= B.kernel_fix * eval_hat(B, end, p, cell, lam).v;
    }
    s += c[j] * v;
  }
  return s;
}

/// The discrete function on the hat mesh (or a graded output mesh for polynomials).
inline GridFunction basis_function(const Basis& B, const Eigen::VectorXd& c, const Lifting& lift = {},
                                   std::size_t out_cells = 512) {
  std::vector<double> mesh = B.kind == BasisKind::PiecewiseLinear
                                 ? B.mesh
                                 : graded_mesh(B.iv, out_cells, std::max(1.0, 2.0 / B.params.alpha), Grading::both);
  GridFunction g = sample(mesh, PointFn([&](const Pt& p) {
    if (B.kernel && ((B.kernel_side == Side::left && p.da == 0.0) || (B.kernel_side == Side::right && p.db == 0.0)))
      return std::copysign(std::numeric_limits<double>::infinity(), c[B.size() - 1]);
    return basis_value(B, c, lift, p);
  }));
  if (B.kind == BasisKind::PiecewiseLinear) g.order = 1;
  if (B.kernel && c[B.size() - 1] != 0.0) {
    const double e = B.params.alpha - 1.0;
    g.singular_exponents = B.kernel_side == Side::left ? Exponents{e, 0.0} : Exponents{0.0, e};
  }
  return g;
}

}  // namespace fraclap
