#include "slhf/errors.hpp"
#include "slhf/fano.hpp"
#include "slhf/scf.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace slhf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

FanoFit profile(double sigma0, double gamma_mev, double er, double q, double eta2) {
  FanoFit f;
  f.sigma0_mb = sigma0;
  f.gamma_mev = gamma_mev;
  f.energy_ev = er;
  f.q = q;
  f.eta2 = eta2;
  return f;
}

// Direct transcription of the profile, independent of FanoFit::operator().
double fano_value(const FanoFit& p, double w) {
  const double k = 2.0 * (w - p.energy_ev) / (1e-3 * p.gamma_mev);
  return p.sigma0_mb * (p.eta2 * (p.q + k) * (p.q + k) / (1.0 + k * k) - p.eta2 + 1.0);
}

std::vector<CurveSample> synthesize(const FanoFit& p, double half_width, int count) {
  std::vector<CurveSample> s;
  for (int i = 0; i < count; ++i) {
    const double w = p.energy_ev - half_width + 2.0 * half_width * i / (count - 1);
    s.push_back({w, fano_value(p, w)});
  }
  return s;
}

CrossSectionCurve as_curve(const std::vector<CurveSample>& samples) {
  CrossSectionCurve c;
  for (const auto& s : samples) {
    ResponsePoint p;
    p.omega_ev = s.omega_ev;
    p.sigma_mb = s.sigma_mb;
    c.points.push_back(p);
  }
  return c;
}

void check_recovered(const FanoFit& fit, const FanoFit& truth, double tol) {
  CHECK_THAT(fit.sigma0_mb, WithinRel(truth.sigma0_mb, tol));
  CHECK_THAT(fit.gamma_mev, WithinRel(truth.gamma_mev, tol));
  CHECK_THAT(fit.energy_ev, WithinRel(truth.energy_ev, tol));
  // q is compared relative to max(|q|, 1): near q = 0 a relative error is meaningless.
  CHECK_THAT(fit.q, WithinAbs(truth.q, tol * std::max(1.0, std::abs(truth.q))));
  CHECK_THAT(fit.eta2, WithinRel(truth.eta2, tol));
}

} // namespace

TEST_CASE("profile formula", "[fano]") {
  const auto p = profile(8.34, 12.8, 43.358, -4.03, 0.551);
  for (double w : {43.30, 43.35, 43.358, 43.36, 43.40}) CHECK_THAT(p(w), WithinRel(fano_value(p, w), 1e-14));
  // Far wings return to the background.
  const double g = 12.8e-3;
  CHECK_THAT(p(43.358 + 1e3 * g / 2), WithinRel(8.34, 0.005));
  CHECK_THAT(p(43.358 - 1e3 * g / 2), WithinRel(8.34, 0.005));
}

TEST_CASE("analytic gradient", "[fano]") {
  const auto p = profile(8.34, 12.8, 43.358, -4.03, 0.551);
  for (double w : {43.33, 43.355, 43.37}) {
    const auto grad = p.gradient(w);
    const std::array<double, 5> steps = {1e-6, 1e-6, 1e-9, 1e-6, 1e-7};
    for (int k = 0; k < 5; ++k) {
      auto hi = p, lo = p;
      double* fields_hi[] = {&hi.sigma0_mb, &hi.gamma_mev, &hi.energy_ev, &hi.q, &hi.eta2};
      double* fields_lo[] = {&lo.sigma0_mb, &lo.gamma_mev, &lo.energy_ev, &lo.q, &lo.eta2};
      *fields_hi[k] += steps[k];
      *fields_lo[k] -= steps[k];
      const double fd = (fano_value(hi, w) - fano_value(lo, w)) / (2 * steps[k]);
      CHECK_THAT(grad[k], WithinRel(fd, 1e-5));
    }
  }
}

TEST_CASE("fit round trip with the neon 2s-3p parameters", "[fano]") {
  const auto truth = profile(8.34, 12.80, 43.358, -4.03, 0.551);
  const auto fit = fit_fano(synthesize(truth, 0.064, 257));
  CHECK(fit.converged);
  check_recovered(fit, truth, 1e-6);
  CHECK(fit.residual < 1e-8);
}

TEST_CASE("eta2 = 0 gives a flat line", "[fano]") {
  const auto truth = profile(5.0, 10.0, 30.0, 3.0, 0.0);
  const auto samples = synthesize(truth, 0.05, 101);
  for (const auto& s : samples) CHECK(s.sigma_mb == 5.0);
  const auto fit = fit_fano(samples);
  CHECK_THAT(fit.eta2, WithinAbs(0.0, 1e-6));
  CHECK_THAT(fit.sigma0_mb, WithinRel(5.0, 1e-9));
}

TEST_CASE("random round trips", "[fano]") {
  std::mt19937 rng(20261018);
  std::uniform_real_distribution<double> q(-8.0, 8.0), lg(std::log(0.3), std::log(50.0)), eta(0.2, 1.0),
      s0(1.0, 20.0), er(20.0, 60.0);
  int failures = 0;
  for (int t = 0; t < 100; ++t) {
    const auto truth = profile(s0(rng), std::exp(lg(rng)), er(rng), q(rng), eta(rng));
    const auto fit = fit_fano(synthesize(truth, 5e-3 * truth.gamma_mev, 201));
    const bool ok = std::abs(fit.sigma0_mb / truth.sigma0_mb - 1) < 1e-4 &&
                    std::abs(fit.gamma_mev / truth.gamma_mev - 1) < 1e-4 &&
                    std::abs(fit.energy_ev / truth.energy_ev - 1) < 1e-4 &&
                    std::abs(fit.q - truth.q) < 1e-4 * std::max(1.0, std::abs(truth.q)) &&
                    std::abs(fit.eta2 / truth.eta2 - 1) < 1e-4;
    if (!ok) {
      ++failures;
      UNSCOPED_INFO("draw " << t << ": truth (" << truth.sigma0_mb << ", " << truth.gamma_mev << ", "
                            << truth.energy_ev << ", " << truth.q << ", " << truth.eta2 << ") fit ("
                            << fit.sigma0_mb << ", " << fit.gamma_mev << ", " << fit.energy_ev << ", " << fit.q
                            << ", " << fit.eta2 << ")");
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("stable under 1% noise", "[fano]") {
  std::mt19937 rng(42);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (double q : {-6.0, -4.03, -1.5, 2.0, 5.0}) {
    const auto truth = profile(8.34, 12.8, 43.358, q, 0.551);
    auto samples = synthesize(truth, 0.064, 257);
    for (auto& s : samples) s.sigma_mb *= 1.0 + noise(rng);
    const auto fit = fit_fano(samples);
    INFO("q = " << q);
    CHECK(std::abs(fit.energy_ev - truth.energy_ev) < 0.25e-3 * truth.gamma_mev);
  }
}

TEST_CASE("fit needs enough samples", "[fano]") {
  const auto truth = profile(8.34, 12.8, 43.358, -4.03, 0.551);
  CHECK_THROWS_AS(fit_fano(synthesize(truth, 0.05, 20)), ContractError);
}

TEST_CASE("initial guess finds the sign of q", "[fano]") {
  for (double q : {-4.0, 4.0}) {
    const auto g = initial_fano_guess(synthesize(profile(8.0, 10.0, 40.0, q, 0.6), 0.05, 101));
    CHECK(g.q * q > 0.0);
    CHECK_THAT(g.sigma0_mb, WithinRel(8.0, 0.2));
  }
}

TEST_CASE("peak search", "[fano]") {
  std::vector<CurveSample> flat;
  for (int i = 0; i <= 600; ++i) flat.push_back({40.0 + 1e-3 * i, 7.5});
  CHECK(find_peaks(as_curve(flat), 0.1).peaks.empty());

  const auto p = profile(7.5, 10.0, 40.3, -4.0, 0.8);
  std::vector<CurveSample> s;
  for (int i = 0; i <= 600; ++i) {
    const double w = 40.0 + 1e-3 * i;
    s.push_back({w, fano_value(p, w)});
  }
  const auto found = find_peaks(as_curve(s), 0.1);
  REQUIRE(found.peaks.size() == 1);
  // Maximum of (q + k)^2 / (1 + k^2) sits at k = 1/q.
  const double extremum = 40.3 + 0.5e-3 * 10.0 / -4.0;
  CHECK_THAT(found.peaks[0].position_ev, WithinAbs(extremum, 1e-3));
  CHECK(found.peaks[0].deviation_mb > 0.0);

  // A profile sampled too coarsely for the background window is flagged.
  const auto narrow = profile(7.5, 5.0, 40.3, -4.0, 0.8);
  std::vector<CurveSample> sparse;
  for (int i = 0; i <= 60; ++i) sparse.push_back({40.0 + 0.01 * i, fano_value(narrow, 40.0 + 0.01 * i)});
  const auto coarse = find_peaks(as_curve(sparse), 0.04);
  CHECK_FALSE(coarse.peaks.empty());
  CHECK_FALSE(coarse.warnings.empty());
}

TEST_CASE("unperturbed difference of a subshell with itself", "[fano]") {
  const auto set = run_scf(parse_configuration(2, "1s2"), build_grid(100, 30.0, 5.0));
  CHECK(unperturbed_difference(set, parse_subshell_ref("1s"), parse_subshell_ref("1s")) == 0.0);
  const double d = unperturbed_difference(set, parse_subshell_ref("1s"), parse_subshell_ref("2p"));
  CHECK(d > 0.0);
  CHECK(d < -27.211386 * set.orbital(1, 0, Spin::up).energy);
}

TEST_CASE("resonance table layout", "[fano]") {
  FanoTableRow row{"2s→3p", profile(8.34, 12.8, 43.358, -4.03, 0.551)};
  std::ostringstream out;
  write_fano_table({row}, {{"configuration", "Ne"}}, out);
  const std::string text = out.str();
  CHECK(text.rfind("# configuration: Ne\n", 0) == 0);
  CHECK(text.find("transition\tE_r_eV\tsigma0_Mb\tGamma_meV\tq\teta2\tresidual\n") != std::string::npos);
  CHECK(text.find("2s→3p\t43.35800\t") != std::string::npos);
}
