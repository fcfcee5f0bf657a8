#pragma once

#include "slhf/configuration.hpp"
#include "slhf/orbitals.hpp"
#include "slhf/response.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace slhf {

struct CurveSample {
  double omega_ev = 0.0;
  double sigma_mb = 0.0;
};

/// Successful points of a curve with lo <= omega_eV <= hi.
std::vector<CurveSample> curve_segment(const CrossSectionCurve& curve, double lo_ev, double hi_ev);

/// sigma(w) = sigma0 [eta2 (q + k)^2 / (1 + k^2) - eta2 + 1],  k = 2 (w - E_r) / Gamma.
struct FanoFit {
  double sigma0_mb = 0.0;
  double gamma_mev = 0.0;
  double energy_ev = 0.0; // E_r
  double q = 0.0;
  double eta2 = 0.0;
  std::pair<double, double> window{0.0, 0.0}; // eV
  double residual = 0.0;                      // rms misfit, Mb
  bool converged = false;
  int iterations = 0;

  double operator()(double omega_ev) const;
  /// d sigma / d (sigma0, Gamma[meV], E_r, q, eta2).
  std::array<double, 5> gradient(double omega_ev) const;
};

/// Starting point from the samples: sigma0 from the window-edge median, q
/// sign from which extremum comes first, |q| from the extremum heights,
/// Gamma from their spacing (or the width at half extremum), eta2 from the
/// dip depth (0.5 when no dip is visible).
FanoFit initial_fano_guess(const std::vector<CurveSample>& samples);

struct FanoFitOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-10; // relative to the initial gradient norm
  bool multistart = true;            // also try a fixed set of q seeds
};

/// Damped least squares with the analytic Jacobian. Needs at least 30
/// samples (ContractError otherwise); on non-convergence returns the best
/// parameters with converged == false.
FanoFit fit_fano(const std::vector<CurveSample>& samples, const FanoFit& initial,
                 const FanoFitOptions& options = {});
FanoFit fit_fano(const std::vector<CurveSample>& samples, const FanoFitOptions& options = {});

struct ResonancePeak {
  double position_ev = 0.0;
  double height_mb = 0.0;    // sigma at the extremum
  double deviation_mb = 0.0; // signed departure from the local background
  std::string assignment;
  std::pair<double, double> window{0.0, 0.0};
};

struct PeakSearch {
  std::vector<ResonancePeak> peaks; // by position
  std::vector<std::string> warnings;
};

/// Local extrema departing from the local background (median over
/// +-baseline_window eV) by more than 3 robust standard deviations of that
/// neighbourhood. Extrema closer than half the baseline window to a stronger
/// one belong to the same profile and are dropped.
PeakSearch find_peaks(const CrossSectionCurve& curve, double baseline_window_ev);

/// eps_to - eps_from in eV. `from` must be occupied; `to` may be an
/// unoccupied level of the same potential. A spinless reference means spin up.
double unperturbed_difference(const SpinOrbitalSet& set, const SubshellRef& from, const SubshellRef& to);

struct FanoTableRow {
  std::string transition;
  FanoFit fit;
};

/// Columns: transition, E_r_eV, sigma0_Mb, Gamma_meV, q, eta2, residual.
void write_fano_table(const std::vector<FanoTableRow>& rows,
                      const std::vector<std::pair<std::string, std::string>>& header, std::ostream& out);

/// Fits each window concurrently; results in window order.
std::vector<FanoFit> fit_windows(const CrossSectionCurve& curve,
                                 const std::vector<std::pair<double, double>>& windows, int threads,
                                 const FanoFitOptions& options = {});

} // namespace slhf
