#pragma once

#include "slhf/greens.hpp"
#include "slhf/kernels.hpp"
#include "slhf/orbitals.hpp"
#include "slhf/potentials.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace slhf {

enum class ResponseMode { td, ti };

std::string to_string(ResponseMode m);
ResponseMode parse_response_mode(std::string_view text);

/// Orbital energies replaced in the Green-function arguments eps +- omega
/// (hartree). A spinless reference applies to both spins; a spin-resolved
/// one wins over a spinless one.
struct EnergyShifts {
  std::vector<std::pair<SubshellRef, double>> overrides;

  double energy_for(const RadialOrbital& orbital) const;
  bool empty() const { return overrides.empty(); }
  bool spin_symmetric() const;
  std::string describe() const; // "2s=-1.782" or "none"
};

struct GreenOptions {
  bool use_absorber = true;
  AbsorberSpec absorber;
  /// Above this outgoing energy E (hartree) the absorber strength grows as
  /// U0 E / reference_energy, so fast electrons are absorbed as well as
  /// slow ones. Zero or negative keeps U0 fixed.
  double reference_energy = 0.5;
  double epsilon = 1e-6; // imaginary energy part, used only without absorber
};

/// Supplies scaled Green functions X = (E - H_sigma - iU)^{-1} for the
/// converged potentials of a configuration; the absorber follows the source
/// orbital. Thread-safe.
class GreensProvider {
public:
  GreensProvider(const SpinOrbitalSet& set, GreenOptions options);

  Eigen::MatrixXcd scaled(const RadialOrbital& source, int L, double energy) const;
  /// X rhs without forming X.
  Eigen::MatrixXcd apply(const RadialOrbital& source, int L, double energy,
                         const Eigen::MatrixXcd& rhs) const;
  /// Energy argument actually used (adds i epsilon without absorber).
  cplx complex_energy(double energy) const;
  const GreenOptions& options() const { return options_; }
  const RadialGrid& grid() const { return factory_.grid(); }
  /// Absorber for waves leaving `source` with energy E.
  AbsorberParams absorber_for(const RadialOrbital& source, double energy) const;

private:
  GreenFactory factory_;
  GreenOptions options_;
};

/// chi_l(r, r') of one spin in the scaled form
///   scaled_ij = r_i sqrt(w_i) chi(r_i, r_j) r_j sqrt(w_j),
/// so that scaled drho = scaled * scaled phi with x_i = r_i sqrt(w_i) x(r_i).
struct PartialWaveSusceptibility {
  Spin spin = Spin::up;
  int l = 1;
  double omega = 0.0;
  Eigen::MatrixXcd scaled;

  Eigen::MatrixXcd values(const RadialGrid& grid) const;
};

PartialWaveSusceptibility build_chi_l(const SpinOrbitalSet& set, const GreensProvider& greens, int l,
                                      double omega, Spin spin, const EnergyShifts& shifts = {});

/// chi_l applied to a real scaled vector, without forming chi (independent
/// particle mode).
Eigen::VectorXcd apply_chi_l(const SpinOrbitalSet& set, const GreensProvider& greens, int l,
                             double omega, Spin spin, const Eigen::VectorXd& scaled_phi,
                             const EnergyShifts& shifts = {});

/// Induced density drho_{l0 sigma} in the scaled form, per spin.
struct InducedDensity {
  std::array<Eigen::VectorXcd, 2> scaled;

  /// drho(r_i) on interior nodes.
  Eigen::VectorXcd values(const RadialGrid& grid, Spin s) const;
};

/// Scaled external dipole potential E0 sqrt(4 pi / 3) r.
Eigen::VectorXd external_potential(const RadialGrid& grid, double field);

/// Coupled two-spin dense solve of [I - chi K] drho = chi phi_ext. Throws
/// NumericalError (naming omega) when the system is numerically singular.
InducedDensity solve_induced_density(const std::array<PartialWaveSusceptibility, 2>& chi,
                                     const ResponseKernel& kernel, const RadialGrid& grid,
                                     double field);

/// Same equations by fixed-point iteration drho <- chi (phi + K drho).
/// Throws NumericalError when it does not converge.
InducedDensity solve_induced_density_iterative(const std::array<PartialWaveSusceptibility, 2>& chi,
                                               const ResponseKernel& kernel, const RadialGrid& grid,
                                               double field, double tolerance = 1e-12,
                                               int max_iterations = 500);

/// Spin-unpolarized shortcut: one block with K_upup + K_updown.
InducedDensity solve_induced_density_singlet(const PartialWaveSusceptibility& chi,
                                             const ResponseKernel& kernel, const RadialGrid& grid,
                                             double field);

struct Polarizability {
  cplx alpha;          // bohr^3
  double sigma_mb = 0; // cross section, Mb
};

Polarizability polarizability_and_cross_section(const InducedDensity& rho, const RadialGrid& grid,
                                                double omega, double field);

struct ResponseOptions {
  ResponseMode mode = ResponseMode::td; // TI forces the kernel to none
  KernelOption kernel;
  GreenOptions green;
  EnergyShifts shifts;
  double field = 1.0; // E0; results are linear in it
  bool keep_density = false;
};

struct ResponsePoint {
  double omega = 0.0; // hartree
  double omega_ev = 0.0;
  ResponseMode mode = ResponseMode::td;
  bool ok = true;
  std::string error; // set when !ok
  cplx alpha;
  double sigma_mb = 0.0;
  InducedDensity density; // empty unless requested
};

/// Immutable per-configuration state for evaluating many frequencies;
/// evaluate() may be called concurrently.
class ResponseEngine {
public:
  ResponseEngine(std::shared_ptr<const SpinOrbitalSet> set, ResponseOptions options);

  ResponsePoint evaluate(double omega) const;
  const ResponseOptions& options() const { return options_; }
  const SpinOrbitalSet& orbitals() const { return *set_; }
  const ResponseKernel& kernel() const { return kernel_; }

private:
  std::shared_ptr<const SpinOrbitalSet> set_;
  ResponseOptions options_;
  GreensProvider greens_;
  ResponseKernel kernel_;
  bool mirror_spin_ = false;
};

struct ScanOptions {
  double start_ev = 0.0;
  double stop_ev = 0.0;
  double step_ev = 0.05;
  int threads = 0; // 0: hardware concurrency
  bool refine = true;
  double refine_step_ev = 2e-4;
  double refine_threshold = 0.02; // relative second difference that marks a window
  double predicted_half_width_ev = 0.05;
  /// Extra windows [lo, hi] in eV sampled at refine_step_ev.
  std::vector<std::pair<double, double>> windows;
};

struct CrossSectionCurve {
  std::string configuration;
  ResponseMode mode = ResponseMode::td;
  std::vector<std::pair<std::string, std::string>> provenance;
  std::vector<ResponsePoint> points; // strictly increasing omega; gaps have ok == false

  std::size_t gap_count() const;
};

/// Photon energies (eV) of dipole-allowed transitions from occupied to
/// unoccupied bound levels of the converged potentials, within [lo, hi].
std::vector<double> predicted_resonances(const SpinOrbitalSet& set, const EnergyShifts& shifts,
                                         double lo_ev, double hi_ev, int max_n = 9);

using ScanProgress = std::function<void(std::size_t done, std::size_t total)>;

/// Evaluates the base grid, then refines windows around predicted
/// resonances, explicit windows and points with large relative curvature.
/// Per-point failures become flagged gaps.
CrossSectionCurve scan_spectrum(const ResponseEngine& engine, const ScanOptions& options,
                                const ScanProgress& progress = {});

/// Evaluates the given frequencies (hartree) in parallel, in input order.
std::vector<ResponsePoint> evaluate_points(const ResponseEngine& engine,
                                           const std::vector<double>& omegas, int threads,
                                           const ScanProgress& progress = {});

/// "# key: value" header lines, a column line, then rows of
/// omega_eV sigma_Mb re_alpha_au im_alpha_au. Gaps are written as comments.
void write_curve(const CrossSectionCurve& curve, std::ostream& out);
CrossSectionCurve read_curve(std::istream& in);

} // namespace slhf
