#include <filesystem>
#include <fstream>
#include <optional>
#include <random>

#include <gsl/gsl_integration.h>

#include "catch_amalgamated.hpp"
#include <fraclap/galerkin.hpp>

using namespace fraclap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const Interval unit{0.0, 1.0};

Basis hats(const FracParams& pr, std::size_t n, bool zero_trace = true) {
  BasisOptions bo;
  bo.n_dof = n;
  bo.zero_trace = zero_trace;
  return make_basis(pr, unit, bo);
}

double rel_sym_defect(const Eigen::MatrixXd& K) { return (K - K.transpose()).norm() / K.norm(); }

double l2_err(const GridFunction& u, const std::function<double(double)>& ref) {
  QuadRule q(u.x, {8, 3, true});
  const auto uv = at_points(u, q);
  double s = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) s += q.pts[k].w * std::pow(uv[k] - ref(q.pt(k).x), 2);
  return std::sqrt(s);
}

// Brute-force oracle: D_- phi(x) = [phi(0) x^{-a} + int_0^x phi'(t) (x-t)^{-a} dt] / G(1-a).
// phi' is constant per cell, so the inner integral splits at the nodes; the outer one is
// adaptive (QAGP) with the nodes as breakpoints.
struct HatOracle {
  std::vector<double> mesh;
  double alpha;
  gsl_integration_workspace* w = gsl_integration_workspace_alloc(4000);

  HatOracle(std::vector<double> m, double a) : mesh(std::move(m)), alpha(a) { gsl_set_error_handler_off(); }
  ~HatOracle() { gsl_integration_workspace_free(w); }
  double slope(std::size_t node, std::size_t cell) const {
    if (node > 0 && cell == node - 1) return 1.0 / (mesh[node] - mesh[node - 1]);
    if (cell == node && node + 1 < mesh.size()) return -1.0 / (mesh[node + 1] - mesh[node]);
    return 0.0;
  }
  double deriv(std::size_t node, double x) const {
    // int_{t0}^{t1} (x-t)^{-a} dt = [(x-t0)^{1-a} - (x-t1)^{1-a}] / (1-a)
    double s = 0.0;
    for (std::size_t c = 0; c + 1 < mesh.size() && mesh[c] < x; ++c) {
      const double t1 = std::min(mesh[c + 1], x);
      s += slope(node, c) * (std::pow(x - mesh[c], 1 - alpha) - std::pow(x - t1, 1 - alpha)) / (1 - alpha);
    }
    if (node == 0) s += std::pow(x, -alpha);  // phi(a) = 1
    return s / std::tgamma(1.0 - alpha);
  }
  double entry(std::size_t i, std::size_t j) {
    struct Ctx {
      HatOracle* o;
      std::size_t i, j;
    } ctx{this, i, j};
    gsl_function f{[](double x, void* p) {
                     auto* c = static_cast<Ctx*>(p);
                     return c->o->deriv(c->i, x) * c->o->deriv(c->j, x);
                   },
                   &ctx};
    std::vector<double> pts = mesh;
    double res = 0.0, err = 0.0;
    const int status = gsl_integration_qagp(&f, pts.data(), pts.size(), 1e-12, 1e-10, 4000, w, &res, &err);
    REQUIRE(status == 0);
    return res;
  }
};
}  // namespace

TEST_CASE("assembled forms combine the Gram matrices", "[galerkin]") {
  const FracParams pr{0.6, 2.0, 0.5, 1};
  const auto S = assemble(pr, hats(pr, 16), Load::function([](const Pt& p) { return p.x; }));
  const Eigen::MatrixXd K = 0.5 * (S.S_left + S.S_right) + S.M;
  CHECK((S.stiffness - K).norm() <= 1e-14 * K.norm());
  const auto Z = assemble(pr, hats(pr, 16), Load::zero());
  CHECK(Z.load.norm() == 0.0);
  const auto Zf = assemble(pr, hats(pr, 16), Load::function([](const Pt&) { return 0.0; }));
  CHECK(Zf.load.norm() == 0.0);
}

TEST_CASE("stiffness is symmetric positive definite on every table row", "[galerkin][property]") {
  for (double th : {0.0, 0.5, 1.0})
    for (int lam : {0, 1}) {
      const FracParams pr{0.6, 2.0, th, lam};
      const auto S = assemble(pr, hats(pr, 32), Load::zero());
      INFO("theta=" << th << " lambda=" << lam);
      CHECK(rel_sym_defect(S.S_left + S.S_right + S.M) <= 1e-10);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S.stiffness);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("hat stiffness entries match a brute-force quadrature oracle", "[galerkin]") {
  for (double al : {0.3, 0.5, 0.8}) {
    const FracParams pr{al, 2.0, 0.0, 0};
    BasisOptions bo;
    bo.n_dof = 3;
    bo.grading = 1.0;
    bo.zero_trace = false;
    const Basis B = make_basis(pr, unit, bo);
    REQUIRE(B.mesh.size() == 5);
    const auto S = assemble(pr, B, Load::zero());
    HatOracle o(B.mesh, al);
    for (std::size_t i = 0; i < B.size(); ++i)
      for (std::size_t j = i; j < B.size(); ++j) {
        INFO("alpha=" << al << " i=" << i << " j=" << j);
        CHECK_THAT(S.S_left(i, j), WithinAbs(o.entry(B.hat_node[i], B.hat_node[j]), 1e-8));
      }
  }
}

TEST_CASE("masks and data admissibility", "[galerkin]") {
  auto code_of = [](auto&& f) -> std::optional<errc> {
    try {
      f();
    } catch (const error& e) {
      return e.code();
    }
    return std::nullopt;
  };
  CHECK(code_of([] { hats({0.4, 2.0, 0.0, 1}, 8); }) == errc::trace_undefined);
  CHECK(code_of([] {
          const FracParams hi{0.7, 2.0, 0.0, 1};
          Basis B = hats(hi, 8);
          assemble({0.4, 2.0, 0.0, 1}, B, Load::zero());
        }) == errc::trace_undefined);
  CHECK(code_of([] { assemble({0.6, 3.0, 0.0, 1}, hats({0.6, 3.0, 0.0, 1}, 8), Load::zero()); }) == errc::domain);

  // Affine data is admissible only where the weighted derivative stays finite.
  const FracParams mid{0.6, 2.0, 0.5, 1};
  const auto S = assemble(mid, hats(mid, 8), Load::zero());
  CHECK(code_of([&] { solve_dirichlet(S, 1.0, 2.0); }) == errc::domain);
  const FracParams left{0.6, 2.0, 0.0, 1};
  CHECK(code_of([&] { solve_dirichlet(assemble(left, hats(left, 8), Load::zero()), 1.0, 0.0); }) == errc::domain);
  CHECK(code_of([&] { solve_neumann(S); }) == errc::domain);
}

TEST_CASE("zero data gives the zero solution", "[galerkin]") {
  for (double th : {0.0, 0.5, 1.0})
    for (int lam : {0, 1}) {
      const FracParams pr{0.7, 2.0, th, lam};
      const auto r = solve_dirichlet(assemble(pr, hats(pr, 16), Load::zero()));
      CHECK(r.coeffs.cwiseAbs().maxCoeff() == 0.0);
      CHECK(r.energy == 0.0);
    }
  const FracParams pn{0.7, 2.0, 0.0, 1};
  CHECK(solve_neumann(assemble(pn, hats(pn, 16, false), Load::zero())).coeffs.cwiseAbs().maxCoeff() == 0.0);
  const FracParams pz{0.8, 2.0, 0.5, 1};
  BasisOptions bo;
  bo.n_dof = 16;
  bo.riesz = true;
  CHECK(solve_riesz(0.8, 1, Load::zero(), make_basis(pz, unit, bo)).coeffs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("manufactured u = x^1.75 with right-end data", "[galerkin]") {
  // theta = 0, lambda = 0: F(v) = int D_- u* D_- v with D_- x^1.75 = G(2.75)/G(2) x.
  const double al = 0.75;
  const FracParams pr{al, 2.0, 0.0, 0};
  Load f;
  f.gm = [](const Pt& p) { return 1.6083594219855456592 * p.x; };
  std::vector<double> err;
  for (std::size_t n : {8, 16, 32, 64}) {
    const auto r = solve_dirichlet(assemble(pr, hats(pr, n), f), 0.0, 1.0);
    CHECK(r.weak_residual <= galerkin_tol);
    CHECK_THAT(r.solution.v.back(), WithinAbs(1.0, 1e-14));
    err.push_back(l2_err(r.solution, [](double x) { return std::pow(x, 1.75); }));
  }
  INFO("errors " << err[0] << " " << err[1] << " " << err[2] << " " << err[3]);
  for (std::size_t k = 1; k < err.size(); ++k) CHECK(err[k] < err[k - 1]);
  CHECK(err.back() < 1e-3);
  CHECK(std::log2(err[2] / err[3]) > 1.0);
}

TEST_CASE("the affine lifting solves its own problem", "[galerkin]") {
  // theta = 1, lambda = 1, u = 1 - x: F(v) = int (1-x) v + D_+(1-x) D_+ v.
  const double al = 0.6;
  const FracParams pr{al, 2.0, 1.0, 1};
  Load f;
  f.g0 = [](const Pt& p) { return p.db; };
  f.gp = [al](const Pt& p) { return std::pow(p.db, 1 - al) / std::tgamma(2 - al); };
  const auto r = solve_dirichlet(assemble(pr, hats(pr, 16), f), 1.0, 0.0);
  CHECK(r.coeffs.cwiseAbs().maxCoeff() <= 1e-8);
  for (std::size_t i = 0; i < r.solution.size(); ++i) CHECK_THAT(r.solution.v[i], WithinAbs(1.0 - r.solution.x[i], 1e-8));
}

TEST_CASE("the discrete solution minimizes the energy", "[galerkin][property]") {
  const FracParams pr{0.7, 2.0, 0.5, 1};
  const auto S = assemble(pr, hats(pr, 24), Load::function([](const Pt& p) { return std::cos(3 * p.x); }));
  const auto r = solve_dirichlet(S);
  const double E0 = energy_of(S, r.coeffs);
  CHECK_THAT(E0, WithinRel(r.energy, 1e-12));
  const Eigen::Index n = r.coeffs.size();
  for (Eigen::Index j = 0; j < n; ++j)
    for (double t : {0.1, -0.1, 0.01, -0.01}) {
      Eigen::VectorXd c = r.coeffs;
      c[j] += t;
      CHECK(energy_of(S, c) >= E0);
    }
  // E(u + v) - E(u) = a(v, v)/2 for the solution u.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> N01;
  for (int t = 0; t < 200; ++t) {
    Eigen::VectorXd v(n);
    for (Eigen::Index j = 0; j < n; ++j) v[j] = 0.05 * N01(rng);
    const double dE = energy_of(S, r.coeffs + v) - E0;
    CHECK(dE >= 0.0);
    CHECK_THAT(dE, WithinRel(0.5 * v.dot(S.stiffness * v), 1e-7));
  }
  // Energy of the grid solution by product integration agrees with the discrete value.
  CHECK_THAT(energy_of(r.solution, pr, Load::function([](const Pt& p) { return std::cos(3 * p.x); })),
             WithinRel(E0, 1e-4));
  CHECK(energy_of(zeros_like(r.solution.x), pr, Load::zero()) == 0.0);
}

TEST_CASE("Galerkin orthogonality against a nested finer solve", "[galerkin][property]") {
  const FracParams pr{0.7, 2.0, 0.0, 1};
  const Load f = Load::function([](const Pt& p) { return 1.0 + p.x * p.x; });
  const Basis Bc = hats(pr, 15), Bf = hats(pr, 63);  // 16 and 64 cells: nested graded meshes
  const auto Sc = assemble(pr, Bc, f), Sf = assemble(pr, Bf, f);
  const auto rc = solve_dirichlet(Sc), rf = solve_dirichlet(Sf);
  // Coarse hats written in the fine basis.
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(Bf.size(), Bc.size());
  for (std::size_t i = 0; i < Bf.size(); ++i) {
    const double x = Bf.mesh[Bf.hat_node[i]];
    for (std::size_t j = 0; j < Bc.size(); ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(Bc.size());
      e[j] = 1.0;
      P(i, j) = basis_value(Bc, e, {}, Pt{x, x, 1.0 - x});
    }
  }
  const Eigen::VectorXd orth = P.transpose() * Sf.stiffness * (P * rc.coeffs - rf.coeffs);
  CHECK(orth.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(l2_err(rc.solution, [&](double x) { return basis_value(Bf, rf.coeffs, {}, Pt{x, x, 1.0 - x}); }) > 0.0);
}

TEST_CASE("theta mirror symmetry", "[galerkin][property]") {
  for (int lam : {0, 1}) {
    const FracParams p0{0.65, 2.0, 0.2, lam}, p1{0.65, 2.0, 0.8, lam};
    const auto r0 = solve_dirichlet(assemble(p0, hats(p0, 20), Load::function([](const Pt& p) { return std::exp(p.x); })));
    const auto r1 = solve_dirichlet(assemble(p1, hats(p1, 20), Load::function([](const Pt& p) { return std::exp(1 - p.x); })));
    const auto& u0 = r0.solution.v;
    const auto& u1 = r1.solution.v;
    REQUIRE(u0.size() == u1.size());
    double m = 0.0;
    for (double v : u0) m = std::max(m, std::abs(v));
    for (std::size_t i = 0; i < u0.size(); ++i) CHECK_THAT(u0[i], WithinAbs(u1[u1.size() - 1 - i], 1e-10 * m));
  }
}

TEST_CASE("Neumann problems need no compatibility condition", "[galerkin]") {
  for (int lam : {0, 1}) {
    const FracParams pr{0.6, 2.0, 0.0, lam};
    const auto r = solve_neumann(assemble(pr, hats(pr, 32, false), Load::function([](const Pt&) { return 1.0; })));
    CHECK(r.weak_residual <= galerkin_tol);
    CHECK(r.coeffs.cwiseAbs().maxCoeff() > 0.0);
    CHECK(std::isfinite(r.condition_estimate));
  }
  // The kappa direction spans the kernel of the lambda = 0 form.
  const FracParams pr{0.6, 2.0, 0.0, 0};
  BasisOptions bo;
  bo.n_dof = 16;
  bo.zero_trace = false;
  bo.kernel_enrichment = true;
  try {
    solve_neumann(assemble(pr, make_basis(pr, unit, bo), Load::function([](const Pt&) { return 1.0; })));
    FAIL("expected expected_kernel");
  } catch (const error& e) {
    CHECK(e.code() == errc::expected_kernel);
  }
}

TEST_CASE("Riesz solutions for lambda = 0 and 1 differ by more than a kernel term", "[galerkin]") {
  const double al = 0.8;
  const FracParams pr{al, 2.0, 0.5, 0};
  BasisOptions bo;
  bo.n_dof = 48;
  bo.riesz = true;
  const Basis B = make_basis(pr, unit, bo);
  const Load f = Load::function([](const Pt& p) { return 1.0 + std::sin(2 * p.x); });
  const auto r0 = solve_riesz(al, 0, f, B), r1 = solve_riesz(al, 1, f, B);
  CHECK(r0.weak_residual <= galerkin_tol);
  CHECK(r1.weak_residual <= galerkin_tol);
  // Least-squares fit of the difference by kappa_z1, kappa_z2 on the interior nodes.
  const auto& x = r0.solution.x;
  const std::size_t m = x.size() - 2;
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd d(m);
  const double h = al / 2;
  for (std::size_t i = 0; i < m; ++i) {
    const double t = x[i + 1];
    A(i, 0) = std::pow(t, h) * std::pow(1 - t, h - 1);
    A(i, 1) = std::pow(t, h - 1) * std::pow(1 - t, h);
    d[i] = r0.solution.v[i + 1] - r1.solution.v[i + 1];
  }
  CHECK(d.norm() > 1e-3);
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(d);
  CHECK((A * c - d).norm() > 0.5 * d.norm());
}

TEST_CASE("write_matrix_coo lists the nonzero entries", "[galerkin]") {
  Eigen::MatrixXd K(2, 2);
  K << 1.5, 0.0, -0.25, 3.0;
  const auto path = std::filesystem::temp_directory_path() / "fraclap_coo_test.txt";
  write_matrix_coo(path.string(), K);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header[0] == '#');
  int i, j, count = 0;
  double v;
  while (in >> i >> j >> v) {
    CHECK(K(i, j) == v);
    ++count;
  }
  CHECK(count == 3);
  std::filesystem::remove(path);
}
