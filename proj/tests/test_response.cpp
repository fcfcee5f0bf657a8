#include "oracles.hpp"
#include "slhf/angular.hpp"
#include "slhf/errors.hpp"
#include "slhf/response.hpp"
#include "slhf/scf.hpp"
#include "slhf/units.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

using namespace slhf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using oracle::chi_spectral_sum;

namespace {

constexpr double pi = std::numbers::pi;

std::shared_ptr<const SpinOrbitalSet> state(int z, const char* label, int n, double r_max, double map) {
  return std::make_shared<const SpinOrbitalSet>(run_scf(parse_configuration(z, label), build_grid(n, r_max, map)));
}

std::shared_ptr<const SpinOrbitalSet> small_box(int z, const char* label) {
  static std::map<std::string, std::shared_ptr<const SpinOrbitalSet>> cache;
  auto& slot = cache[label];
  if (!slot) slot = state(z, label, 100, 30.0, 5.0);
  return slot;
}

std::shared_ptr<const SpinOrbitalSet> response_grid(int z, const char* label) {
  static std::map<std::string, std::shared_ptr<const SpinOrbitalSet>> cache;
  auto& slot = cache[label];
  if (!slot) slot = state(z, label, 400, 150.0, 50.0);
  return slot;
}

std::array<PartialWaveSusceptibility, 2> both_spins(const SpinOrbitalSet& set, const GreensProvider& gp,
                                                    double omega) {
  return {build_chi_l(set, gp, 1, omega, Spin::up), build_chi_l(set, gp, 1, omega, Spin::down)};
}

GreenOptions no_absorber() {
  GreenOptions o;
  o.use_absorber = false;
  return o;
}

} // namespace

TEST_CASE("dipole angular factors", "[response]") {
  CHECK_THAT(clebsch_gordan_zero_sq(0, 1, 1), WithinAbs(1.0, 1e-14));
  CHECK_THAT(clebsch_gordan_zero_sq(1, 1, 1), WithinAbs(0.0, 1e-14));
  CHECK_THAT(clebsch_gordan_zero_sq(1, 1, 0), WithinAbs(1.0 / 3.0, 1e-14));
  CHECK_THAT(clebsch_gordan_zero_sq(1, 1, 2), WithinAbs(2.0 / 3.0, 1e-14));
  CHECK_THAT(clebsch_gordan_zero_sq(2, 1, 3), WithinAbs(3.0 / 5.0, 1e-14));
}

TEST_CASE("Hartree kernel partial waves", "[response]") {
  const auto g = build_grid(200, 50.0, 5.0);
  const Eigen::MatrixXd k0 = hartree_kernel_partialwave(*g, 0);
  for (int i = 1; i < g->size(); ++i) CHECK_THAT(k0(i, 0), WithinRel(4.0 * pi / g->r()[i], 1e-14));
  const Eigen::MatrixXd k3 = hartree_kernel_partialwave(*g, 3);
  CHECK((k3 - k3.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // 1/|r - r'| for r along z and r' along x from the partial-wave sum up to L = 20.
  int i2 = 0, i1 = 0;
  for (int i = 0; i < g->size(); ++i) {
    if (std::abs(g->r()[i] - 2.0) < std::abs(g->r()[i2] - 2.0)) i2 = i;
    if (std::abs(g->r()[i] - 1.0) < std::abs(g->r()[i1] - 1.0)) i1 = i;
  }
  double sum = 0.0;
  for (int L = 0; L <= 20; ++L) {
    const double p0 = std::legendre(L, 0.0);
    sum += (2 * L + 1) / (4.0 * pi) * hartree_kernel_partialwave(*g, L)(i2, i1) * p0;
  }
  const double a = g->r()[i2], b = g->r()[i1];
  CHECK_THAT(sum, WithinAbs(1.0 / std::sqrt(a * a + b * b), 1e-6));
  // At exactly r = 2, r' = 1 the same series gives 1/sqrt(5).
  double exact = 0.0;
  for (int L = 0; L <= 20; ++L) exact += std::pow(0.5, L + 1) * std::legendre(L, 0.0);
  CHECK_THAT(exact, WithinAbs(1.0 / std::sqrt(5.0), 1e-6));
}

TEST_CASE("local exchange kernel", "[response]") {
  CHECK_THAT(alda_x_kernel(1.0), WithinAbs(-std::cbrt(6.0 / pi) / 3.0, 1e-14));
  CHECK_THAT(alda_x_kernel(1.0), WithinAbs(-0.413567, 5e-6));
  CHECK(alda_x_kernel(0.0) == 0.0);

  const auto g = build_grid(100, 30.0, 5.0);
  const Eigen::VectorXd q = g->r().unaryExpr([](double r) { return 4.0 * r * r * std::exp(-2.0 * r); });
  const auto none = xc_kernel(*g, q, q, KernelOption{KernelVariant::none});
  for (const auto& v : none.values) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
  const auto x = xc_kernel(*g, q, q, KernelOption{KernelVariant::hartree_alda_x});
  CHECK(x(Spin::up, Spin::down).cwiseAbs().maxCoeff() == 0.0);
  CHECK(x(Spin::down, Spin::up).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < g->size(); ++i) {
    const double rho = q[i] / (4.0 * pi * g->r()[i] * g->r()[i]);
    CHECK_THAT(x(Spin::up, Spin::up)[i], WithinRel(alda_x_kernel(rho), 1e-12));
  }
}

TEST_CASE("kernel variant names", "[response]") {
  for (auto v : {KernelVariant::none, KernelVariant::hartree, KernelVariant::hartree_alda_x,
                 KernelVariant::hartree_alda_x_numeric_c, KernelVariant::hartree_slater_x,
                 KernelVariant::hartree_slater_x_numeric_c})
    CHECK(parse_kernel_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_kernel_variant("rpa"), ConfigError);
}

TEST_CASE("chi from Green functions equals the spectral double sum", "[response]") {
  const struct {
    int z;
    const char* label;
    std::array<double, 3> omegas;
  } cases[] = {
      {1, "1s1", {0.21, 0.43, 0.91}},
      {2, "1s2", {0.3, 0.77, 1.6}},
      {10, "1s2 2s2 2p6", {0.37, 1.1, 2.3}},
  };
  for (const auto& c : cases) {
    const auto set = small_box(c.z, c.label);
    const GreensProvider gp(*set, no_absorber());
    for (double w : c.omegas)
      for (Spin s : {Spin::up, Spin::down}) {
        if (set->channel(s).empty()) continue;
        const auto chi = build_chi_l(*set, gp, 1, w, s);
        const Eigen::MatrixXcd oracle = chi_spectral_sum(*set, s, w, gp.options().epsilon);
        INFO(c.label << " omega=" << w << " spin " << to_string(s));
        CHECK((chi.scaled - oracle).norm() < 1e-6 * oracle.norm());
      }
  }
}

TEST_CASE("parity selects the dipole channels", "[response]") {
  // A p shell feeds only L = 0 and 2: dropping the L = 1 term from the oracle
  // changes nothing, so chi agrees with the two-channel sum.
  const auto set = small_box(10, "1s2 2s2 2p6");
  const GreensProvider gp(*set, no_absorber());
  const auto chi = build_chi_l(*set, gp, 1, 0.5, Spin::up);
  CHECK((chi.scaled - chi_spectral_sum(*set, Spin::up, 0.5, gp.options().epsilon)).norm() <
        1e-6 * chi.scaled.norm());
  CHECK(clebsch_gordan_zero_sq(1, 1, 1) == 0.0);
}

TEST_CASE("kernel none returns the independent-particle density", "[response]") {
  const auto set = small_box(10, "1s2 2s2 2p6");
  const GreensProvider gp(*set, no_absorber());
  const auto chi = both_spins(*set, gp, 0.6);
  const MultipoleSolver mp(set->grid);
  const auto k = build_response_kernel(mp, *set, KernelOption{KernelVariant::none});
  CHECK_FALSE(k.active);
  const auto rho = solve_induced_density(chi, k, *set->grid, 1.0);
  const Eigen::VectorXd phi = external_potential(*set->grid, 1.0);
  for (int s = 0; s < 2; ++s) {
    const Eigen::VectorXcd rhs = chi[s].scaled * phi.cast<cplx>();
    CHECK((rho.scaled[s] - rhs).norm() <= 1e-15 * rhs.norm());
  }
}

TEST_CASE("linearity in the field amplitude", "[response]") {
  const auto set = small_box(10, "1s2 2s2 2p6");
  const GreensProvider gp(*set, no_absorber());
  const auto chi = both_spins(*set, gp, 0.6);
  const MultipoleSolver mp(set->grid);
  const auto k = build_response_kernel(mp, *set, KernelOption{KernelVariant::hartree_alda_x});
  const auto one = solve_induced_density(chi, k, *set->grid, 1.0);
  const auto two = solve_induced_density(chi, k, *set->grid, 2.0);
  for (int s = 0; s < 2; ++s) CHECK((two.scaled[s] - 2.0 * one.scaled[s]).norm() < 1e-12 * two.scaled[s].norm());
  const auto a1 = polarizability_and_cross_section(one, *set->grid, 0.6, 1.0);
  const auto a2 = polarizability_and_cross_section(two, *set->grid, 0.6, 2.0);
  CHECK(std::abs(a1.alpha - a2.alpha) < 1e-10 * std::abs(a1.alpha));
}

TEST_CASE("direct and iterative solves agree", "[response]") {
  const auto set = small_box(2, "1s2");
  const GreensProvider gp(*set, no_absorber());
  const auto chi = both_spins(*set, gp, 0.25);
  const MultipoleSolver mp(set->grid);
  const auto k = build_response_kernel(mp, *set, KernelOption{KernelVariant::hartree_alda_x});
  const auto direct = solve_induced_density(chi, k, *set->grid, 1.0);
  const auto iter = solve_induced_density_iterative(chi, k, *set->grid, 1.0);
  for (int s = 0; s < 2; ++s) CHECK((direct.scaled[s] - iter.scaled[s]).norm() < 1e-8 * direct.scaled[s].norm());
}

TEST_CASE("coupled spin solve reproduces the singlet solve", "[response]") {
  const auto set = small_box(10, "1s2 2s2 2p6");
  const GreensProvider gp(*set, no_absorber());
  const auto chi = both_spins(*set, gp, 0.8);
  const MultipoleSolver mp(set->grid);
  for (auto v : {KernelVariant::hartree, KernelVariant::hartree_alda_x, KernelVariant::hartree_slater_x}) {
    const auto k = build_response_kernel(mp, *set, KernelOption{v});
    const auto coupled = solve_induced_density(chi, k, *set->grid, 1.0);
    const auto singlet = solve_induced_density_singlet(chi[0], k, *set->grid, 1.0);
    INFO(to_string(v));
    for (int s = 0; s < 2; ++s)
      CHECK((coupled.scaled[s] - singlet.scaled[s]).norm() < 1e-10 * coupled.scaled[s].norm());
  }
}

TEST_CASE("TD with kernel none is the TI result", "[response]") {
  const auto set = small_box(10, "1s2 2s2 2p6");
  ResponseOptions td;
  td.kernel.variant = KernelVariant::none;
  ResponseOptions ti;
  ti.mode = ResponseMode::ti;
  ti.kernel.variant = KernelVariant::hartree_alda_x; // ignored in TI mode
  const ResponseEngine a(set, td), b(set, ti);
  for (double w : {0.4, 1.7, 3.2}) {
    const auto pa = a.evaluate(w), pb = b.evaluate(w);
    CHECK(std::abs(pa.alpha - pb.alpha) <= 1e-14 * std::abs(pa.alpha));
    CHECK(pb.mode == ResponseMode::ti);
  }
}

TEST_CASE("no absorption below threshold without an absorber", "[response]") {
  const auto set = small_box(10, "1s2 2s2 2p6");
  ResponseOptions o;
  o.green = no_absorber();
  const ResponseEngine e(set, o);
  const auto p = e.evaluate(0.3);
  CHECK(std::abs(p.sigma_mb) < 1e-4);
  CHECK(p.alpha.real() > 0.0);
}

TEST_CASE("hydrogen static polarizability", "[response]") {
  const auto set = response_grid(1, "1s1");
  for (auto mode : {ResponseMode::td, ResponseMode::ti}) {
    ResponseOptions o;
    o.mode = mode;
    o.kernel.variant = KernelVariant::hartree_slater_x;
    const auto p = ResponseEngine(set, o).evaluate(1e-4);
    CHECK_THAT(p.alpha.real(), WithinRel(4.5, 0.005));
  }
}

TEST_CASE("hydrogen cross section at threshold", "[response]") {
  const auto set = response_grid(1, "1s1");
  ResponseOptions o;
  o.kernel.variant = KernelVariant::hartree_slater_x;
  o.green.absorber.base = {0.1, 30.0};
  const double w = 0.5005;
  const auto p = ResponseEngine(set, o).evaluate(w);
  const double exact = oracle::hydrogen_sigma_mb(w);
  CHECK_THAT(exact, WithinRel(6.30, 0.01));
  CHECK_THAT(p.sigma_mb, WithinRel(6.30, 0.03));
  CHECK_THAT(p.sigma_mb, WithinRel(exact, 0.03));
}

TEST_CASE("neon TI: the bare 2s to 3p line is a reported pole", "[response]") {
  // Without coupling the bound-bound line has no width; hitting it exactly
  // is an error, while the 2p continuum around it stays finite.
  const auto set = response_grid(10, "1s2 2s2 2p6");
  ResponseOptions o;
  o.mode = ResponseMode::ti;
  const ResponseEngine e(set, o);
  const double line = orbital_on_demand(*set, 3, 1, Spin::up).energy - set->orbital(2, 0, Spin::up).energy;
  CHECK_THROWS_AS(e.evaluate(line), NumericalError);
  for (double off : {-0.5, 0.5}) {
    const double s = e.evaluate(line + units::to_hartree(off)).sigma_mb;
    CHECK(std::isfinite(s));
    CHECK(s > 1.0);
  }
}

TEST_CASE("absorber strength follows the outgoing energy", "[response]") {
  const auto set = small_box(1, "1s1");
  GreenOptions o;
  o.absorber.base = {0.1, 20.0};
  const GreensProvider gp(*set, o);
  const auto& orb = set->orbital(1, 0, Spin::up);
  CHECK(gp.absorber_for(orb, -0.3).strength == 0.1);
  CHECK(gp.absorber_for(orb, 0.5).strength == 0.1);
  CHECK_THAT(gp.absorber_for(orb, 2.0).strength, WithinRel(0.4, 1e-14));
  CHECK(gp.absorber_for(orb, 2.0).start == 20.0);
  o.reference_energy = 0.0;
  CHECK(GreensProvider(*set, o).absorber_for(orb, 2.0).strength == 0.1);
}

TEST_CASE("energy shift lookup", "[response]") {
  EnergyShifts sh;
  sh.overrides.push_back({parse_subshell_ref("2s"), -1.7});
  sh.overrides.push_back({parse_subshell_ref("2s↑"), -1.782});
  RadialOrbital up{2, 0, Spin::up, 1.0, -1.707, {}};
  RadialOrbital down{2, 0, Spin::down, 1.0, -1.707, {}};
  RadialOrbital p{2, 1, Spin::up, 3.0, -0.8, {}};
  CHECK(sh.energy_for(up) == -1.782);
  CHECK(sh.energy_for(down) == -1.7);
  CHECK(sh.energy_for(p) == -0.8);
  CHECK_FALSE(sh.spin_symmetric());
}

TEST_CASE("shifted orbital energy moves the Green-function argument only", "[response]") {
  const auto set = small_box(2, "1s2");
  const GreensProvider gp(*set, no_absorber());
  EnergyShifts sh;
  sh.overrides.push_back({parse_subshell_ref("1s"), set->orbital(1, 0, Spin::up).energy - 0.1});
  const auto shifted = build_chi_l(*set, gp, 1, 0.5, Spin::up, sh);
  const auto moved = build_chi_l(*set, gp, 1, 0.4, Spin::up);
  // chi(eps - 0.1, omega) has the eps + omega term of chi(eps, omega - 0.1)
  // but not its eps - omega term, so the two differ while staying finite.
  CHECK(shifted.scaled.allFinite());
  CHECK((shifted.scaled - moved.scaled).norm() > 1e-6 * moved.scaled.norm());
}

TEST_CASE("scan edge cases and curve files", "[response]") {
  const auto set = small_box(1, "1s1");
  ResponseOptions o;
  o.kernel.variant = KernelVariant::hartree_slater_x;
  const ResponseEngine e(set, o);
  ScanOptions so;
  so.start_ev = 20.0;
  so.stop_ev = 10.0;
  CHECK(scan_spectrum(e, so).points.empty());
  so.start_ev = 14.0;
  so.stop_ev = 16.0;
  so.step_ev = 0.5;
  so.refine = false;
  so.threads = 2;
  auto curve = scan_spectrum(e, so);
  REQUIRE(curve.points.size() == 5);
  curve.provenance = {{"code_version", "test"}};
  std::stringstream buf;
  write_curve(curve, buf);
  const auto back = read_curve(buf);
  REQUIRE(back.points.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK_THAT(back.points[i].omega_ev, WithinAbs(curve.points[i].omega_ev, 1e-9));
    CHECK_THAT(back.points[i].sigma_mb, WithinRel(curve.points[i].sigma_mb, 1e-9));
  }
  CHECK(back.configuration == curve.configuration);
  CHECK_THROWS_AS(e.evaluate(-1.0), ContractError);
}
