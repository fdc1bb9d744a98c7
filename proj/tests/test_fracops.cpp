#include <cstdio>
#include <filesystem>

#include "catch_amalgamated.hpp"
#include <fraclap/bank.hpp>
#include <fraclap/fracops.hpp>

using namespace fraclap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const Interval unit{0.0, 1.0};

double max_abs_interior(const GridFunction& g, double cut_a = 0.0, double cut_b = 0.0) {
  double m = 0.0;
  for (std::size_t i = 1; i + 1 < g.size(); ++i)
    if (g.x[i] - g.x.front() >= cut_a && g.x.back() - g.x[i] >= cut_b) m = std::max(m, std::abs(g.v[i]));
  return m;
}

std::size_t index_of(const GridFunction& g, double x) {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(g.x[i] - x) < 1e-15) return i;
  FAIL("node not found");
  return 0;
}
}  // namespace

TEST_CASE("kernel functions", "[fracops]") {
  const auto mesh = graded_mesh(unit, 8, 1.0, Grading::none);
  const auto k = kernel_left(0.5, mesh);
  CHECK_THAT(k.v[index_of(k, 0.25)], WithinRel(2.0, 1e-15));
  CHECK(std::isinf(k.v.front()));
  for (std::size_t i = 1; i + 1 < k.size(); ++i) CHECK(k.v[i] > 0.0);
  // alpha -> 1: kappa -> 1.
  const auto k1 = kernel_left(1.0 - 1e-9, mesh);
  CHECK_THAT(k1.v[index_of(k1, 0.5)], WithinAbs(1.0, 1e-8));

  const auto [z1, z2] = riesz_kernels(0.8, mesh);
  CHECK_THAT(z1.v[index_of(z1, 0.5)], WithinRel(1.1486983549970350068, 1e-14));
  for (std::size_t i = 1; i + 1 < z1.size(); ++i) CHECK_THAT(z1.v[i], WithinRel(z2.v[z2.size() - 1 - i], 1e-14));
  CHECK_THROWS_AS(kernel_left(1.2, mesh), error);
}

TEST_CASE("rl_integral reference values", "[fracops]") {
  const auto mesh = default_mesh(unit, 128, 0.5, Grading::both);
  const auto one = sample(mesh, [](double) { return 1.0; });
  CHECK_THAT(rl_integral(one, 0.5, Side::left).v.back(), WithinRel(1.1283791670955125739, 1e-10));
  CHECK_THAT(rl_integral(one, 0.5, Side::right).v.front(), WithinRel(1.1283791670955125739, 1e-10));
  CHECK(max_abs_interior(rl_integral(zeros_like(mesh), 0.5, Side::left)) == 0.0);
  for (double al : {0.3, 0.6, 0.9}) {
    const auto m = default_mesh(unit, 256, al, Grading::both);
    const auto j = rl_integral(kernel_left(al, m), 1.0 - al, Side::left);
    for (std::size_t i = 0; i < j.size(); ++i) CHECK_THAT(j.v[i], WithinRel(std::tgamma(al), 1e-10));
  }
}

TEST_CASE("rl_derivative reference values", "[fracops]") {
  const auto mesh = default_mesh(unit, 256, 0.5, Grading::both);
  const auto d = rl_derivative(sample(mesh, [](double x) { return x; }), 0.5, Side::left);
  const double c = 1.1283791670955125739;  // Gamma(2)/Gamma(1.5)
  for (std::size_t i = 1; i < d.size(); ++i) CHECK_THAT(d.v[i], WithinRel(c * std::sqrt(mesh[i]), 1e-9));
  const auto dc = rl_derivative(sample(mesh, [](double) { return 3.0; }), 0.5, Side::left);
  for (std::size_t i = 1; i < dc.size(); ++i)
    CHECK_THAT(dc.v[i], WithinRel(3.0 * std::pow(mesh[i], -0.5) / std::tgamma(0.5), 1e-9));
  CHECK(std::isinf(dc.v.front()));
  CHECK(max_abs_interior(rl_derivative(kernel_left(0.5, mesh), 0.5, Side::left), 0.01) < 1e-9);
}

TEST_CASE("power-rule oracles", "[fracops]") {
  const auto mesh = graded_mesh(unit, 16, 1.0, Grading::none);
  CHECK(max_abs_interior(power_rule_derivative(-0.5, 0.5, Side::left, mesh)) == 0.0);
  const auto d0 = power_rule_derivative(0.0, 0.5, Side::left, mesh);
  const auto d1 = power_rule_derivative(1.0, 0.5, Side::left, mesh);
  for (std::size_t i = 1; i < mesh.size(); ++i) {
    CHECK_THAT(d0.v[i], WithinRel(std::pow(mesh[i], -0.5) / 1.7724538509055160273, 1e-14));
    CHECK_THAT(d1.v[i], WithinRel(1.1283791670955125739 * std::sqrt(mesh[i]), 1e-14));
  }
  CHECK_THROWS_AS(power_rule_derivative(-1.5, 0.5, Side::left, mesh), error);
}

TEST_CASE("rl_derivative converges to the power rule on untagged samples", "[fracops][property]") {
  for (double al : {0.25, 0.5, 0.75})
    for (double beta : {0.3, 1.0, 2.0}) {
      std::vector<double> err;
      for (std::size_t n : {128, 256, 512}) {
        const auto mesh = default_mesh(unit, n, al, Grading::both);
        GridFunction f = power_function(beta, Side::left, mesh);
        f.singular_exponents.reset();
        err.push_back(rel_l2_nodes(rl_derivative(f, al, Side::left), power_rule_derivative(beta, al, Side::left, mesh), 1e-3, 1e-3));
      }
      INFO("alpha=" << al << " beta=" << beta << " errors " << err[0] << " " << err[1] << " " << err[2]);
      for (std::size_t i = 0; i + 1 < err.size(); ++i)
        if (err[i + 1] > 1e-12) CHECK(std::log2(err[i] / err[i + 1]) >= 1.0);
    }
}

TEST_CASE("semigroup of fractional integrals on cubics", "[fracops][property]") {
  auto f = [](double x) { return 1 - 2 * x + 3 * x * x * x; };
  for (auto [a, b] : {std::pair{0.3, 0.4}, std::pair{0.2, 0.7}, std::pair{0.45, 0.45}}) {
    std::vector<double> err;
    for (std::size_t n : {64, 128, 256}) {
      const auto mesh = default_mesh(unit, n, std::min(a, b), Grading::both);
      const auto g = sample(mesh, f);
      const auto lhs = rl_integral(rl_integral(g, b, Side::left), a, Side::left);
      const auto rhs = rl_integral(g, a + b, Side::left);
      err.push_back(rel_l2_nodes(lhs, rhs, 0.0, 0.0));
    }
    INFO("alpha=" << a << " beta=" << b << " errors " << err[0] << " " << err[1] << " " << err[2]);
    CHECK(err.back() < 1e-5);
    for (std::size_t i = 0; i + 1 < err.size(); ++i)
      if (err[i + 1] > 1e-12) CHECK(err[i + 1] <= err[i] / 3.0);
  }
}

TEST_CASE("D^alpha inverts I^alpha on smooth inputs", "[fracops][property]") {
  for (double al : {0.3, 0.7}) {
    std::vector<double> err;
    for (std::size_t n : {64, 128, 256}) {
      const auto mesh = default_mesh(unit, n, al, Grading::both);
      const auto f = sample(mesh, [](double x) { return std::cos(2 * x) + x; });
      err.push_back(rel_l2_nodes(rl_derivative(rl_integral(f, al, Side::left), al, Side::left), f, 0.01, 0.0));
    }
    INFO("alpha=" << al << " errors " << err[0] << " " << err[1] << " " << err[2]);
    CHECK(err.back() < 1e-4);
    CHECK(err[2] <= err[0]);
  }
}

TEST_CASE("kernel annihilation away from the singular end", "[fracops][property]") {
  for (double al : {0.3, 0.8}) {
    const std::size_t n = 1024;
    const auto mesh = default_mesh(unit, n, al, Grading::both);
    const auto k = kernel_right(al, mesh);
    const auto dk = rl_derivative(k, al, Side::right);
    const auto z = zeros_like(mesh);
    const double cut = 10.0 / n;
    CHECK(rel_l2_nodes(dk, z, 0.0, cut) <= 1e-3 * rel_l2_nodes(k, z, 0.0, cut));
  }
}

TEST_CASE("mirror symmetry of left and right operators", "[fracops][property]") {
  const auto mesh = default_mesh(unit, 200, 0.6, Grading::both);
  const auto f = sample(mesh, [](double x) { return std::exp(x) * (1 + x * x); });
  for (double al : {0.35, 0.6}) {
    const auto right = rl_derivative(f, al, Side::right);
    const auto left = reflect(rl_derivative(reflect(f), al, Side::left));
    const auto ri = rl_integral(f, al, Side::right);
    const auto li = reflect(rl_integral(reflect(f), al, Side::left));
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i) CHECK_THAT(right.v[i], WithinRel(left.v[i], 1e-12));
    for (std::size_t i = 0; i < mesh.size(); ++i) CHECK_THAT(ri.v[i], WithinRel(li.v[i], 1e-12));
  }
}

TEST_CASE("riesz_weak_derivative mirror relations", "[fracops]") {
  // D_z is the mean of D_- and D_+, and reflection swaps the two: D_z commutes with reflection.
  // Symmetric inputs give symmetric outputs, antisymmetric inputs antisymmetric ones.
  const auto mesh = graded_mesh(unit, 256, 2.5, Grading::both);
  const std::size_t n = mesh.size();
  const auto even = riesz_weak_derivative(sample(mesh, [](double x) { return x * (1 - x) + 0.3; }), 0.6);
  const auto odd = riesz_weak_derivative(sample(mesh, [](double x) { return std::sin(2 * x - 1); }), 0.6);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    CHECK_THAT(even.v[i], WithinAbs(even.v[n - 1 - i], 1e-9 * (1 + std::abs(even.v[i]))));
    CHECK_THAT(odd.v[i], WithinAbs(-odd.v[n - 1 - i], 1e-9 * (1 + std::abs(odd.v[i]))));
  }
  CHECK(max_abs_interior(riesz_weak_derivative(zeros_like(mesh), 0.6)) == 0.0);
}

TEST_CASE("weak derivative identity against the test bank", "[fracops][property]") {
  const double al = 0.6;
  const auto mesh = default_mesh(unit, 512, al, Grading::both);
  const auto u = sample(mesh, [](double x) { return std::sin(3 * x) + 1; });
  for (Side sd : {Side::left, Side::right}) {
    const auto w = rl_derivative(u, al, sd);
    for (const auto& phi : test_bank(unit)) {
      INFO(phi.name() << " " << side_name(sd));
      CHECK(weak_identity_defect(u, w, phi.sample_on(mesh), al, sd) < 1e-4);
    }
  }
}

TEST_CASE("FTwFC decomposition", "[fracops]") {
  for (double al : {0.3, 0.5, 0.8}) {
    const auto mesh = default_mesh(unit, 512, al, Grading::both);
    // I^{1-alpha} kappa = Gamma(alpha): the coefficient divides by Gamma(alpha).
    const auto dk = ftwfc_decompose(kernel_left(al, mesh), al, Side::left);
    CHECK_THAT(dk.c_sing, WithinRel(1.0, 1e-6));
    const auto z = zeros_like(mesh);
    CHECK(rel_l2_nodes(dk.regular, z, 1e-4, 0.0) < 1e-8 * rel_l2_nodes(kernel_left(al, mesh), z, 1e-4, 0.0));

    const auto g = rl_integral(sample(mesh, [](double x) { return 1 + x * x; }), al, Side::left);
    const auto dg = ftwfc_decompose(g, al, Side::left);
    CHECK_THAT(dg.c_sing, WithinAbs(0.0, 1e-8));
    CHECK(rel_l2_nodes(dg.regular, g, 1e-4, 0.0) < 1e-4);

    const auto mix = axpy(3.0, kernel_left(al, mesh), 1.0, power_rule_integral(0.0, al, Side::left, mesh));
    const auto dm = ftwfc_decompose(mix, al, Side::left);
    CHECK_THAT(dm.c_sing, WithinRel(3.0, 1e-6));
    CHECK(rel_l2_nodes(reconstruct(dm, al), mix, 1e-4, 0.0) < 1e-3);

    const auto dr = ftwfc_decompose(scaled(kernel_right(al, mesh), -2.0), al, Side::right);
    CHECK_THAT(dr.c_sing, WithinRel(-2.0, 1e-6));
  }
}

TEST_CASE("grid validation and operator errors", "[fracops]") {
  GridFunction g;
  g.x = {0.0, 0.5, 1.0};
  g.v = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(g.validate(), error);
  const auto mesh = default_mesh(unit, 32, 0.5, Grading::both);
  CHECK_THROWS_AS(rl_derivative(sample(mesh, [](double x) { return x; }), 0.0, Side::left), error);
  CHECK_THROWS_AS(rl_derivative(sample(mesh, [](double x) { return x; }), 1.0, Side::left), error);
  // x^{-1.2} is not integrable from a.
  GridFunction bad = power_function(-1.2, Side::left, mesh);
  CHECK_THROWS_AS(rl_integral(bad, 0.5, Side::left), error);
}

TEST_CASE("CSV round trip keeps every bit", "[fracops]") {
  const auto mesh = default_mesh(unit, 40, 0.5, Grading::both);
  const auto f = sample(mesh, [](double x) { return std::sin(x) / 3.0; });
  const auto path = std::filesystem::temp_directory_path() / "fraclap_csv_roundtrip.csv";
  write_csv(f, path.string());
  const auto g = read_csv(path.string());
  std::filesystem::remove(path);
  REQUIRE(g.size() == f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(g.x[i] == f.x[i]);
    CHECK(g.v[i] == f.v[i]);
  }
}
