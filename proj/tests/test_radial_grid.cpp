#include "slhf/errors.hpp"
#include "slhf/radial_grid.hpp"
#include "slhf/scf.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace slhf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::VectorXd sample(const Eigen::VectorXd& r, double (*f)(double)) {
  return r.unaryExpr([f](double x) { return f(x); });
}

} // namespace

TEST_CASE("grid endpoints are the images of -1 and 1", "[radial-grid]") {
  const auto g = build_grid(32, 50.0, 5.0);
  REQUIRE(g->nodes().size() == 33);
  CHECK(g->nodes()[0] == 0.0);
  CHECK_THAT(g->nodes()[32], WithinRel(50.0, 1e-14));
  for (int i = 1; i <= 32; ++i) CHECK(g->nodes()[i] > g->nodes()[i - 1]);
  CHECK(g->size() == 31);
  CHECK(g->r().size() == 31);
}

TEST_CASE("quadrature integrates exponential decay", "[radial-grid]") {
  const auto g = build_grid(64, 100.0, 10.0);
  const auto f = sample(g->nodes(), [](double r) { return std::exp(-r); });
  CHECK_THAT(integrate(*g, f), WithinAbs(1.0 - std::exp(-100.0), 1e-10));
}

TEST_CASE("quadrature is exact for polynomials in the mapped variable", "[radial-grid]") {
  const int n = 32;
  const auto g = build_grid(n, 50.0, 5.0);
  const auto& x = g->mapped_nodes();
  for (int k = 0; k <= 2 * n - 1; ++k) {
    Eigen::VectorXd f(n + 1);
    for (int j = 0; j <= n; ++j) f[j] = std::pow(x[j], k) / g->map_derivative(x[j]);
    const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
    INFO("degree " << k);
    if (k % 2 == 0)
      CHECK_THAT(integrate(*g, f), WithinRel(exact, 1e-12));
    else
      CHECK_THAT(integrate(*g, f), WithinAbs(0.0, 1e-13));
  }
}

TEST_CASE("first derivative of r^3", "[radial-grid]") {
  const auto g = build_grid(48, 50.0, 5.0);
  const Eigen::VectorXd f = g->nodes().array().cube();
  const Eigen::VectorXd d = g->d1() * f;
  for (int i = 1; i < 48; ++i) {
    const double r = g->nodes()[i];
    CHECK_THAT(d[i], WithinRel(3.0 * r * r, 1e-9));
  }
}

TEST_CASE("second derivative of r^2 is 2", "[radial-grid]") {
  const auto g = build_grid(48, 50.0, 5.0);
  const Eigen::VectorXd f = g->nodes().array().square();
  const Eigen::VectorXd d = g->d2() * f;
  for (int i = 1; i < 48; ++i) CHECK_THAT(d[i], WithinRel(2.0, 1e-10));
}

TEST_CASE("integrate: analytic integrals", "[radial-grid]") {
  const auto g = build_grid(200, 50.0, 5.0);
  CHECK(integrate(*g, Eigen::VectorXd::Zero(201)) == 0.0);
  const auto gauss = sample(g->nodes(), [](double r) { return 2.0 * r * std::exp(-r * r); });
  CHECK_THAT(integrate(*g, gauss), WithinAbs(1.0, 1e-10));
  const auto h1s = sample(g->nodes(), [](double r) { return 4.0 * r * r * std::exp(-2.0 * r); });
  CHECK_THAT(integrate(*g, h1s), WithinAbs(1.0, 1e-10));
}

TEST_CASE("Coulomb eigenvalues converge spectrally", "[radial-grid]") {
  auto error = [](int n) {
    const auto g = build_grid(n, 50.0, 5.0);
    const Eigen::VectorXd v = -g->r().cwiseInverse();
    const auto pairs = solve_radial_eigen(*g, v, 0, 2);
    return std::abs(pairs[1].energy + 0.125);
  };
  const double e32 = error(32), e64 = error(64);
  INFO("error N=32: " << e32 << ", N=64: " << e64);
  CHECK((e64 < e32 / 100.0 || e64 < 1e-11));
}

TEST_CASE("invalid grid parameters name the field", "[radial-grid]") {
  try {
    build_grid(8, 50.0, 5.0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field().find("points") != std::string::npos);
  }
  CHECK_THROWS_AS(build_grid(64, 50.0, 80.0), ConfigError);
}
