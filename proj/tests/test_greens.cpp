#include "slhf/greens.hpp"
#include "slhf/potentials.hpp"
#include "slhf/scf.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace slhf;
using Catch::Matchers::WithinAbs;

namespace {

const SpinOrbitalSet& neon() {
  static const SpinOrbitalSet set = run_scf(parse_configuration(10, "1s2 2s2 2p6"), build_grid(200, 50.0, 5.0));
  return set;
}

double coulomb(double r) { return -1.0 / r; }

} // namespace

TEST_CASE("Green function is complex symmetric", "[greens]") {
  const auto& ne = neon();
  const Eigen::VectorXd u = build_absorber(AbsorberParams{0.1, 20.0}, *ne.grid);
  const auto g = build_green(*ne.grid, ne.potential[0].v_total, &u, 1, cplx(0.4, 0.0));
  const Eigen::MatrixXcd v = g.values(*ne.grid);
  const double scale = v.cwiseAbs().maxCoeff();
  CHECK((v - v.transpose()).cwiseAbs().maxCoeff() < 1e-10 * scale);
  CHECK(g.absorbing);
}

TEST_CASE("Green function satisfies its defining equation", "[greens]") {
  const auto& ne = neon();
  const auto& grid = *ne.grid;
  const Eigen::VectorXd u = build_absorber(AbsorberParams{0.1, 20.0}, grid);
  const cplx e(1.3, 0.0);
  const auto g = build_green(grid, ne.potential[0].v_total, &u, 2, e);
  const Eigen::MatrixXd h = radial_hamiltonian(grid, ne.potential[0].v_total, 2);
  Eigen::MatrixXcd op = -h.cast<cplx>();
  op.diagonal().array() += e;
  op.diagonal() -= cplx(0.0, 1.0) * u.cast<cplx>();
  // Random columns of the discrete delta.
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> pick(0, grid.size() - 1);
  for (int t = 0; t < 8; ++t) {
    const int j = pick(rng);
    const Eigen::VectorXcd col = op * g.scaled.col(j);
    Eigen::VectorXcd delta = Eigen::VectorXcd::Zero(grid.size());
    delta[j] = 1.0;
    CHECK((col - delta).norm() < 1e-8);
  }
}

TEST_CASE("deep below the spectrum: real and equal to the spectral sum", "[greens]") {
  const auto& ne = neon();
  const auto& grid = *ne.grid;
  const auto g = build_green(grid, ne.potential[0].v_total, nullptr, 0, cplx(-10.0, 0.0));
  CHECK(g.scaled.imag().cwiseAbs().maxCoeff() < 1e-12 * g.scaled.real().cwiseAbs().maxCoeff());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(radial_hamiltonian(grid, ne.potential[0].v_total, 0));
  const Eigen::VectorXd inv = (-10.0 - es.eigenvalues().array()).inverse();
  const Eigen::MatrixXd sum = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  CHECK((g.scaled.real() - sum).norm() < 1e-6 * sum.norm());
}

TEST_CASE("matrix and Wronskian backends agree on smooth sources", "[greens]") {
  const auto grid = build_grid(200, 50.0, 5.0);
  auto source = [](double r) { return r * std::exp(-r); };
  Eigen::VectorXd f(grid->size());
  for (int i = 0; i < grid->size(); ++i) f[i] = source(grid->r()[i]);
  const Eigen::VectorXd q = grid->weights().cwiseProduct(grid->r().cwiseAbs2()).cwiseProduct(f);
  const Eigen::VectorXd v = -grid->r().cwiseInverse();
  struct Case {
    int L;
    cplx e;
  };
  for (const auto& c : {Case{1, cplx(0.3, 0.1)}, Case{0, cplx(-0.8, 0.0)}, Case{2, cplx(-0.3, 0.05)}}) {
    const auto gm = build_green(*grid, v, nullptr, c.L, c.e);
    const Eigen::VectorXcd a = gm.values(*grid) * q.cast<cplx>();
    const Eigen::VectorXcd b = wronskian_green_action(*grid, coulomb, c.L, c.e, source, OuterBoundary::dirichlet);
    INFO("L=" << c.L << " E=" << c.e);
    CHECK((a - b).norm() < 1e-8 * b.norm());
  }
}

TEST_CASE("Wronskian is constant across nodes", "[greens]") {
  const auto grid = build_grid(200, 50.0, 5.0);
  WronskianInfo info;
  build_green_wronskian(*grid, std::function<double(double)>(coulomb), 1, cplx(0.3, 0.1), OuterBoundary::outgoing,
                        &info);
  CHECK(info.spread < 1e-6);
  build_green_wronskian(*grid, std::function<double(double)>(coulomb), 0, cplx(-0.8, 0.0), OuterBoundary::dirichlet,
                        &info);
  CHECK(info.spread < 1e-6);
}

TEST_CASE("free particle Green function", "[greens]") {
  const auto grid = build_grid(120, 30.0, 5.0);
  const double k = 1.2;
  const auto g = build_green_wronskian(*grid, std::function<double(double)>([](double) { return 0.0; }), 0,
                                       cplx(0.5 * k * k, 0.0), OuterBoundary::outgoing);
  const Eigen::MatrixXcd v = g.values(*grid);
  const cplx i(0.0, 1.0);
  double worst = 0.0;
  for (int a = 0; a < grid->size(); a += 7)
    for (int b = 0; b < grid->size(); b += 5) {
      const double r = grid->r()[a], s = grid->r()[b];
      const double lo = std::min(r, s), hi = std::max(r, s);
      const cplx exact = -2.0 * std::sin(k * lo) * std::exp(i * k * hi) / (k * r * s);
      worst = std::max(worst, std::abs(v(a, b) - exact) / std::max(std::abs(exact), 1e-3));
    }
  CHECK(worst < 1e-7);
}

TEST_CASE("trace of G has a pole at the bound eigenvalue", "[greens]") {
  const auto grid = build_grid(200, 50.0, 5.0);
  const Eigen::VectorXd v = -grid->r().cwiseInverse();
  double best = -1.0, where = 0.0;
  for (int t = -20; t <= 20; ++t) {
    const double e = -0.125 + 1e-4 * t;
    const double tr = std::abs(build_green(*grid, v, nullptr, 1, cplx(e, 1e-6)).scaled.trace());
    if (tr > best) {
      best = tr;
      where = e;
    }
  }
  CHECK_THAT(where, WithinAbs(-0.125, 1e-4));
}

TEST_CASE("factory solve matches the explicit inverse", "[greens]") {
  const auto& ne = neon();
  GreenFactory f(ne.grid);
  f.set_potential(0, ne.potential[0].v_total);
  const Eigen::VectorXd u = build_absorber(AbsorberParams{0.1, 20.0}, *ne.grid);
  const Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Random(ne.grid->size(), 3);
  const Eigen::MatrixXcd x = f.scaled(0, 1, cplx(0.7, 0.0), &u);
  const Eigen::MatrixXcd y = f.solve(0, 1, cplx(0.7, 0.0), &u, rhs);
  CHECK((x * rhs - y).norm() < 1e-10 * y.norm());
}
