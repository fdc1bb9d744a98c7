#pragma once

#include <fstream>

#include "varmin.hpp"

namespace fraclap {

// p = 2 weak-form solver. The form is
//   a(u,v) = int (1-th) D_-u D_-v + th D_+u D_+v + lam u v      (one-sided / symmetric)
//   a(u,v) = int D_z u D_z v + lam u v,  D_z = (D_- + D_+)/2     (Riesz)
// and the load is F(v) = int g0 v + gm D_-v + gp D_+v.

struct GalerkinSystem {
  Basis basis;
  FracParams params;
  bool riesz = false;
  BasisEval ev;
  Eigen::MatrixXd S_left, S_right, M;  // Gram matrices of D_-, D_+ and values
  Eigen::MatrixXd stiffness;
  Eigen::VectorXd load;
  LoadAtPoints load_pts;
};

struct SolveReport {
  GridFunction solution;
  Eigen::VectorXd coeffs;
  Lifting lifting;
  double energy = 0.0;
  double weak_residual = 0.0;       // max_j |a(u_h, phi_j) - F(phi_j)|
  double condition_estimate = 0.0;  // lambda_max / lambda_min of the stiffness
  double min_eigenvalue = 0.0;
  std::size_t n_dof = 0;
  int iterations = 0;               // > 0 only when delegated to the minimizer
};

inline constexpr double galerkin_tol = 1e-8;

inline GalerkinSystem assemble(const FracParams& params, const Basis& basis, const Load& f, bool riesz = false) {
  params.validate();
  if (params.p != 2.0) throw error(errc::domain, "the Galerkin path is p = 2; use the minimizer for general p");
  if ((basis.constrain_a || basis.constrain_b) && !riesz && params.alpha * params.p <= 1.0)
    throw error(errc::trace_undefined, "Dirichlet mask needs alpha*p > 1");
  GalerkinSystem S;
  S.basis = basis;
  S.basis.params = params;
  S.params = params;
  S.riesz = riesz;
  S.ev = evaluate(S.basis);
  const auto& e = S.ev;
  const auto W = e.w.asDiagonal();
  S.S_left = e.Dm.transpose() * W * e.Dm;
  S.S_right = e.Dp.transpose() * W * e.Dp;
  S.M = e.V.transpose() * W * e.V;
  const double th = params.theta, lam = params.lambda;
  if (riesz) {
    const Eigen::MatrixXd Sx = e.Dm.transpose() * W * e.Dp;
    S.stiffness = 0.25 * (S.S_left + S.S_right + Sx + Sx.transpose()) + lam * S.M;
  } else {
    S.stiffness = (1 - th) * S.S_left + th * S.S_right + lam * S.M;
  }
  S.stiffness = 0.5 * (S.stiffness + S.stiffness.transpose());
  S.load_pts = load_at(f, e.q);
  const auto& l = S.load_pts;
  S.load = e.V.transpose() * e.w.cwiseProduct(l.g0) + e.Dm.transpose() * e.w.cwiseProduct(l.gm) +
           e.Dp.transpose() * e.w.cwiseProduct(l.gp);
  return S;
}

namespace detail {

struct LiftTerms {
  Eigen::VectorXd v, dm, dp;
};

inline LiftTerms lift_terms(const GalerkinSystem& S, const Lifting& lift) {
  const std::size_t P = S.ev.q.size();
  LiftTerms t{Eigen::VectorXd::Zero(P), Eigen::VectorXd::Zero(P), Eigen::VectorXd::Zero(P)};
  if (!lift.active()) return t;
  for (std::size_t k = 0; k < P; ++k) {
    const HatEval h = lift.eval(S.ev.q.pt(k), S.params.alpha);
    t.v[k] = h.v;
    t.dm[k] = h.dm;
    t.dp[k] = h.dp;
  }
  return t;
}

// a(phi_j, w) for every basis function, with w given through its tabulated derivatives.
inline Eigen::VectorXd form_against(const GalerkinSystem& S, const Eigen::VectorXd& v, const Eigen::VectorXd& dm,
                                    const Eigen::VectorXd& dp) {
  const auto& e = S.ev;
  const double th = S.params.theta, lam = S.params.lambda;
  if (S.riesz) {
    const Eigen::VectorXd z = e.w.cwiseProduct(0.5 * (dm + dp));
    return 0.5 * (e.Dm.transpose() * z + e.Dp.transpose() * z) + lam * (e.V.transpose() * e.w.cwiseProduct(v));
  }
  return (1 - th) * (e.Dm.transpose() * e.w.cwiseProduct(dm)) + th * (e.Dp.transpose() * e.w.cwiseProduct(dp)) +
         lam * (e.V.transpose() * e.w.cwiseProduct(v));
}

inline double form_value(const GalerkinSystem& S, const Eigen::VectorXd& v, const Eigen::VectorXd& dm,
                         const Eigen::VectorXd& dp) {
  const auto& w = S.ev.w;
  const double th = S.params.theta, lam = S.params.lambda;
  double acc = lam * w.dot(v.cwiseAbs2());
  if (S.riesz) return acc + w.dot((0.5 * (dm + dp)).cwiseAbs2());
  if (th < 1) acc += (1 - th) * w.dot(dm.cwiseAbs2());
  if (th > 0) acc += th * w.dot(dp.cwiseAbs2());
  return acc;
}

inline double functional_value(const GalerkinSystem& S, const Eigen::VectorXd& v, const Eigen::VectorXd& dm,
                               const Eigen::VectorXd& dp) {
  const auto& w = S.ev.w;
  const auto& l = S.load_pts;
  return w.dot(l.g0.cwiseProduct(v)) + w.dot(l.gm.cwiseProduct(dm)) + w.dot(l.gp.cwiseProduct(dp));
}

// Spectrum check; the kernel code distinguishes the Neumann and Dirichlet failure modes.
inline void spectrum(const Eigen::MatrixXd& K, SolveReport& r, errc failure, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  r.min_eigenvalue = lo;
  r.condition_estimate = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(lo > 1e-12 * hi)) throw error(failure, what);
}

inline SolveReport linear_solve(const GalerkinSystem& S, const Lifting& lift, errc failure, const char* what) {
  SolveReport r;
  r.lifting = lift;
  r.n_dof = S.basis.size();
  spectrum(S.stiffness, r, failure, what);
  const LiftTerms lt = lift_terms(S, lift);
  const Eigen::VectorXd rhs = S.load - form_against(S, lt.v, lt.dm, lt.dp);
  Eigen::LDLT<Eigen::MatrixXd> f(S.stiffness);
  Eigen::VectorXd c = f.solve(rhs);
  c += f.solve(rhs - S.stiffness * c);  // one refinement step
  r.coeffs = c;
  r.weak_residual = (S.stiffness * c - rhs).cwiseAbs().maxCoeff();
  const auto& e = S.ev;
  const Eigen::VectorXd v = e.V * c + lt.v, dm = e.Dm * c + lt.dm, dp = e.Dp * c + lt.dp;
  r.energy = 0.5 * form_value(S, v, dm, dp) - functional_value(S, v, dm, dp);
  r.solution = basis_function(S.basis, c, lift);
  return r;
}

}  // namespace detail

/// Energy 1/2 a(u,u) - F(u) of u = sum c_j phi_j + lifting.
inline double energy_of(const GalerkinSystem& S, const Eigen::VectorXd& c, const Lifting& lift = {}) {
  const auto lt = detail::lift_terms(S, lift);
  const auto& e = S.ev;
  const Eigen::VectorXd v = e.V * c + lt.v, dm = e.Dm * c + lt.dm, dp = e.Dp * c + lt.dp;
  return 0.5 * detail::form_value(S, v, dm, dp) - detail::functional_value(S, v, dm, dp);
}

/// Energy of a grid function; derivatives by product integration on its own mesh.
/// Only the derivative directions carrying weight are computed.
inline double energy_of(const GridFunction& u, const FracParams& params, const Load& f, QuadOptions qo = {8, 3, true}) {
  params.validate();
  const double th = params.theta, lam = params.lambda;
  QuadRule q(u.x, qo);
  const auto uv = at_points(u, q);
  const bool need_m = th < 1 || (f.gm != nullptr), need_p = th > 0 || (f.gp != nullptr);
  // Operators at the quadrature points; interpolated nodal derivatives miss the kinks.
  const auto dm = need_m ? op_at_points(u, Side::left, -params.alpha, q) : std::vector<double>(q.size(), 0.0);
  const auto dp = need_p ? op_at_points(u, Side::right, -params.alpha, q) : std::vector<double>(q.size(), 0.0);
  const auto l = load_at(f, q);
  double E = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    double dens = lam * uv[k] * uv[k];
    if (th < 1) dens += (1 - th) * dm[k] * dm[k];
    if (th > 0) dens += th * dp[k] * dp[k];
    E += q.pts[k].w * (0.5 * dens - l.g0[k] * uv[k] - l.gm[k] * dm[k] - l.gp[k] * dp[k]);
  }
  return E;
}

/// Dirichlet problem. Data is admissible only at an end where the singular part of the
/// affine lifting's derivative carries zero weight: g_left needs theta = 1, g_right theta = 0.
inline SolveReport solve_dirichlet(const GalerkinSystem& S, double g_left = 0.0, double g_right = 0.0) {
  if (!S.basis.constrain_a && !S.basis.constrain_b && (g_left != 0.0 || g_right != 0.0))
    throw error(errc::domain, "basis carries no Dirichlet mask");
  if (g_left != 0.0 && (S.riesz || !S.basis.constrain_a || S.params.theta != 1.0))
    throw error(errc::domain, "nonzero left data has infinite energy unless theta = 1");
  if (g_right != 0.0 && (S.riesz || !S.basis.constrain_b || S.params.theta != 0.0))
    throw error(errc::domain, "nonzero right data has infinite energy unless theta = 0");
  return detail::linear_solve(S, Lifting{g_left, g_right}, errc::coercivity_violation,
                              "constrained stiffness is not positive definite");
}

/// Neumann problem: unconstrained trial space, natural boundary conditions emerge.
inline SolveReport solve_neumann(const GalerkinSystem& S) {
  if (S.basis.constrain_a || S.basis.constrain_b) throw error(errc::domain, "Neumann solve needs an unconstrained basis");
  return detail::linear_solve(S, {}, S.params.lambda == 0 ? errc::expected_kernel : errc::coercivity_violation,
                              "Neumann stiffness is singular; use the hat basis without kernel enrichment");
}

/// Riesz problem. p = 2 solves the linear system; other p minimize the Riesz p-energy.
inline SolveReport solve_riesz(double alpha, int lambda, const Load& f, const Basis& basis) {
  FracParams pr = basis.params;
  pr.alpha = alpha;
  pr.lambda = lambda;
  pr.theta = 0.5;
  pr.validate();
  if (lambda == 0 && !((2.0 - alpha) * pr.p > 2.0))
    throw error(errc::norm_gate, "Riesz seminorm is not a norm for (2-alpha) p <= 2; use lambda = 1");
  if (pr.p != 2.0) {
    Basis b = basis;
    b.params = pr;
    EnergySpec s;
    s.params = pr;
    s.kind = DensityKind::RieszP;
    s.source = f;
    const auto m = minimize(s, b);
    if (!m.converged) throw error(errc::nonconvergence, "Riesz p-energy minimization did not converge");
    SolveReport r;
    r.solution = m.minimizer;
    r.coeffs = m.coeffs;
    r.energy = m.energy_trace.back();
    r.weak_residual = m.el_residual;
    r.n_dof = b.size();
    r.iterations = m.iterations;
    return r;
  }
  const GalerkinSystem S = assemble(pr, basis, f, true);
  return detail::linear_solve(S, {}, errc::coercivity_violation, "Riesz stiffness is not positive definite");
}

/// Coordinate-format export: one "row col value" line per entry, zero-based.
inline void write_matrix_coo(const std::string& path, const Eigen::MatrixXd& K) {
  std::ofstream out(path);
  if (!out) throw error(errc::io, "cannot write " + path);
  out << "# row col value\n";
  for (Eigen::Index i = 0; i < K.rows(); ++i)
    for (Eigen::Index j = 0; j < K.cols(); ++j)
      if (K(i, j) != 0.0) out << i << ' ' << j << ' ' << fmt17(K(i, j)) << '\n';
}

}  // namespace fraclap
