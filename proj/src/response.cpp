#include "slhf/response.hpp"

#include "slhf/angular.hpp"
#include "slhf/errors.hpp"
#include "slhf/scf.hpp"
#include "slhf/units.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace slhf {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;

Eigen::VectorXd scale_factors(const RadialGrid& grid) {
  return grid.r().cwiseProduct(grid.sqrt_weights());
}

// Partial waves L of the Green function reached from an orbital of angular
// momentum lp by a perturbation of multipole l, with |<l 0 lp 0|L 0>|^2.
std::vector<std::pair<int, double>> coupled_waves(int l, int lp) {
  std::vector<std::pair<int, double>> out;
  for (int L = std::abs(l - lp); L <= l + lp; ++L) {
    if ((l + lp + L) % 2 != 0) continue;
    const double cg = clebsch_gordan_zero_sq(l, lp, L);
    if (cg > 1e-14) out.emplace_back(L, cg);
  }
  return out;
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

bool has_electrons(const SpinOrbitalSet& set, Spin s) { return !set.channel(s).empty(); }

} // namespace

std::string to_string(ResponseMode m) { return m == ResponseMode::td ? "TD" : "TI"; }

ResponseMode parse_response_mode(std::string_view text) {
  if (text == "TD" || text == "td") return ResponseMode::td;
  if (text == "TI" || text == "ti") return ResponseMode::ti;
  throw ConfigError("response.mode", "expected TD or TI, got \"" + std::string(text) + "\"");
}

double EnergyShifts::energy_for(const RadialOrbital& orbital) const {
  const double* spinless = nullptr;
  for (const auto& [ref, e] : overrides) {
    if (!ref.matches(orbital.n, orbital.l, orbital.spin)) continue;
    if (ref.spin) return e;
    spinless = &e;
  }
  return spinless ? *spinless : orbital.energy;
}

bool EnergyShifts::spin_symmetric() const {
  return std::none_of(overrides.begin(), overrides.end(), [](const auto& o) { return o.first.spin.has_value(); });
}

std::string EnergyShifts::describe() const {
  if (overrides.empty()) return "none";
  std::string out;
  for (const auto& [ref, e] : overrides) {
    if (!out.empty()) out += ", ";
    out += ref.label() + "=" + format_number(e);
  }
  return out;
}

GreensProvider::GreensProvider(const SpinOrbitalSet& set, GreenOptions options)
    : factory_(set.grid), options_(std::move(options)) {
  for (Spin s : {Spin::up, Spin::down}) factory_.set_potential(index(s), set.effective(s).v_total);
  if (!options_.use_absorber && !(options_.epsilon > 0.0))
    throw ConfigError("response.epsilon", "must be positive without an absorber");
}

cplx GreensProvider::complex_energy(double energy) const {
  return options_.use_absorber ? cplx(energy, 0.0) : cplx(energy, options_.epsilon);
}

AbsorberParams GreensProvider::absorber_for(const RadialOrbital& source, double energy) const {
  AbsorberParams p = options_.absorber.for_orbital(source.n, source.l, source.spin);
  const double ref = options_.reference_energy;
  if (ref > 0.0 && energy > ref) p.strength *= energy / ref;
  return p;
}

Eigen::MatrixXcd GreensProvider::scaled(const RadialOrbital& source, int L, double energy) const {
  if (!options_.use_absorber) return factory_.scaled(index(source.spin), L, complex_energy(energy), nullptr);
  const Eigen::VectorXd u = build_absorber(absorber_for(source, energy), grid());
  return factory_.scaled(index(source.spin), L, complex_energy(energy), &u);
}

Eigen::MatrixXcd GreensProvider::apply(const RadialOrbital& source, int L, double energy,
                                       const Eigen::MatrixXcd& rhs) const {
  if (!options_.use_absorber)
    return factory_.solve(index(source.spin), L, complex_energy(energy), nullptr, rhs);
  const Eigen::VectorXd u = build_absorber(absorber_for(source, energy), grid());
  return factory_.solve(index(source.spin), L, complex_energy(energy), &u, rhs);
}

Eigen::MatrixXcd PartialWaveSusceptibility::values(const RadialGrid& grid) const {
  const Eigen::VectorXd inv = scale_factors(grid).cwiseInverse();
  return inv.asDiagonal() * scaled * inv.asDiagonal();
}

PartialWaveSusceptibility build_chi_l(const SpinOrbitalSet& set, const GreensProvider& greens, int l,
                                      double omega, Spin spin, const EnergyShifts& shifts) {
  if (l < 0) throw ContractError("build_chi_l: l must be non-negative");
  const RadialGrid& grid = *set.grid;
  const int m = grid.size();
  PartialWaveSusceptibility chi{spin, l, omega, Eigen::MatrixXcd::Zero(m, m)};
  for (const auto& orb : set.channel(spin)) {
    const double eps = shifts.energy_for(orb);
    // R(r) = u(r) / r carries the angular factors of the scaled form.
    const Eigen::VectorXd R = orb.R.cwiseQuotient(grid.r());
    for (const auto& [L, cg] : coupled_waves(l, orb.l)) {
      Eigen::MatrixXcd g = greens.scaled(orb, L, eps + omega);
      g += greens.scaled(orb, L, eps - omega).conjugate();
      chi.scaled.noalias() += (orb.occupancy * cg / four_pi) * (R.asDiagonal() * g * R.asDiagonal());
    }
  }
  return chi;
}

Eigen::VectorXcd apply_chi_l(const SpinOrbitalSet& set, const GreensProvider& greens, int l,
                             double omega, Spin spin, const Eigen::VectorXd& scaled_phi,
                             const EnergyShifts& shifts) {
  const RadialGrid& grid = *set.grid;
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(grid.size());
  for (const auto& orb : set.channel(spin)) {
    const double eps = shifts.energy_for(orb);
    const Eigen::VectorXd R = orb.R.cwiseQuotient(grid.r());
    const Eigen::MatrixXcd v = R.cwiseProduct(scaled_phi).cast<cplx>();
    for (const auto& [L, cg] : coupled_waves(l, orb.l)) {
      // conj(X) v = conj(X v) for real v.
      Eigen::VectorXcd y = greens.apply(orb, L, eps + omega, v);
      y += greens.apply(orb, L, eps - omega, v).conjugate();
      out += (orb.occupancy * cg / four_pi) * R.cast<cplx>().cwiseProduct(y);
    }
  }
  return out;
}

Eigen::VectorXcd InducedDensity::values(const RadialGrid& grid, Spin s) const {
  return scaled[index(s)].cwiseQuotient(scale_factors(grid).cast<cplx>());
}

Eigen::VectorXd external_potential(const RadialGrid& grid, double field) {
  return (field * std::sqrt(four_pi / 3.0)) * scale_factors(grid).cwiseProduct(grid.r());
}

InducedDensity solve_induced_density(const std::array<PartialWaveSusceptibility, 2>& chi,
                                     const ResponseKernel& kernel, const RadialGrid& grid,
                                     double field) {
  const int m = grid.size();
  const Eigen::VectorXcd phi = external_potential(grid, field).cast<cplx>();
  InducedDensity out;
  for (int s = 0; s < 2; ++s) {
    if (chi[s].scaled.rows() != m || chi[s].scaled.cols() != m)
      throw ContractError("solve_induced_density: susceptibility size mismatch");
    out.scaled[s] = chi[s].scaled * phi;
  }
  if (!kernel.active) return out;

  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(2 * m, 2 * m);
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t)
      a.block(s * m, t * m, m, m).noalias() -= chi[s].scaled * kernel.blocks[2 * s + t].cast<cplx>();
  Eigen::VectorXcd rhs(2 * m);
  rhs << out.scaled[0], out.scaled[1];
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-13))
    throw NumericalError("induced-density system is singular at omega = " + format_number(chi[0].omega) +
                         " hartree (rcond " + format_number(rcond) + ")");
  const Eigen::VectorXcd x = lu.solve(rhs);
  out.scaled[0] = x.head(m);
  out.scaled[1] = x.tail(m);
  return out;
}

InducedDensity solve_induced_density_iterative(const std::array<PartialWaveSusceptibility, 2>& chi,
                                               const ResponseKernel& kernel, const RadialGrid& grid,
                                               double field, double tolerance, int max_iterations) {
  const Eigen::VectorXcd phi = external_potential(grid, field).cast<cplx>();
  InducedDensity rhs;
  for (int s = 0; s < 2; ++s) rhs.scaled[s] = chi[s].scaled * phi;
  if (!kernel.active) return rhs;
  InducedDensity x = rhs;
  std::vector<double> history;
  for (int it = 0; it < max_iterations; ++it) {
    InducedDensity next;
    double change = 0.0, size = 0.0;
    for (int s = 0; s < 2; ++s) {
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(phi.size());
      for (int t = 0; t < 2; ++t) v += kernel.blocks[2 * s + t].cast<cplx>() * x.scaled[t];
      next.scaled[s] = rhs.scaled[s] + chi[s].scaled * v;
      change = std::max(change, (next.scaled[s] - x.scaled[s]).cwiseAbs().maxCoeff());
      size = std::max(size, next.scaled[s].cwiseAbs().maxCoeff());
    }
    x = std::move(next);
    history.push_back(change / std::max(size, 1e-300));
    if (history.back() < tolerance) return x;
    if (!std::isfinite(history.back())) break;
  }
  throw NumericalError("fixed-point induced-density iteration did not converge", history);
}

InducedDensity solve_induced_density_singlet(const PartialWaveSusceptibility& chi,
                                             const ResponseKernel& kernel, const RadialGrid& grid,
                                             double field) {
  const int m = grid.size();
  const Eigen::VectorXcd rhs = chi.scaled * external_potential(grid, field).cast<cplx>();
  InducedDensity out;
  if (!kernel.active) {
    out.scaled = {rhs, rhs};
    return out;
  }
  const Eigen::MatrixXd k = kernel.blocks[0] + kernel.blocks[1];
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(m, m);
  a.noalias() -= chi.scaled * k.cast<cplx>();
  const Eigen::VectorXcd x = a.partialPivLu().solve(rhs);
  out.scaled = {x, x};
  return out;
}

Polarizability polarizability_and_cross_section(const InducedDensity& rho, const RadialGrid& grid,
                                                double omega, double field) {
  // sum_i w_i r_i^3 drho_i = sum_i sqrt(w_i) r_i^2 (scaled drho)_i
  const Eigen::VectorXd moment = grid.sqrt_weights().cwiseProduct(grid.r().cwiseAbs2());
  cplx dipole = 0.0;
  for (const auto& x : rho.scaled)
    if (x.size() == moment.size()) dipole += moment.cast<cplx>().dot(x);
  Polarizability p;
  p.alpha = -std::sqrt(four_pi / 3.0) * dipole / field;
  p.sigma_mb = four_pi * omega / units::speed_of_light * p.alpha.imag() * units::bohr2_mb;
  return p;
}

ResponseEngine::ResponseEngine(std::shared_ptr<const SpinOrbitalSet> set, ResponseOptions options)
    : set_(std::move(set)), options_(std::move(options)), greens_(*set_, options_.green) {
  if (!(options_.field != 0.0) || !std::isfinite(options_.field))
    throw ConfigError("response.field", "must be finite and nonzero");
  if (options_.mode == ResponseMode::ti) options_.kernel.variant = KernelVariant::none;
  MultipoleSolver multipole(set_->grid);
  kernel_ = build_response_kernel(multipole, *set_, options_.kernel, 1);
  bool spinless_absorber = true;
  for (const auto& [label, params] : options_.green.absorber.overrides)
    if (parse_subshell_ref(label).spin) spinless_absorber = false;
  mirror_spin_ = set_->config.spin_symmetric() && options_.shifts.spin_symmetric() && spinless_absorber;
}

ResponsePoint ResponseEngine::evaluate(double omega) const {
  if (!(omega > 0.0)) throw ContractError("photon energy must be positive");
  const RadialGrid& grid = *set_->grid;
  const int m = grid.size();
  ResponsePoint p;
  p.omega = omega;
  p.omega_ev = units::to_ev(omega);
  p.mode = options_.mode;

  // TI is the same pipeline with an inactive kernel.
  std::array<PartialWaveSusceptibility, 2> chi;
  for (Spin s : {Spin::up, Spin::down}) {
    if (mirror_spin_ && s == Spin::down) {
      chi[1] = chi[0];
      chi[1].spin = Spin::down;
      continue;
    }
    chi[index(s)] = has_electrons(*set_, s)
                        ? build_chi_l(*set_, greens_, 1, omega, s, options_.shifts)
                        : PartialWaveSusceptibility{s, 1, omega, Eigen::MatrixXcd::Zero(m, m)};
  }
  const InducedDensity rho = solve_induced_density(chi, kernel_, grid, options_.field);
  const auto pol = polarizability_and_cross_section(rho, grid, omega, options_.field);
  p.alpha = pol.alpha;
  p.sigma_mb = pol.sigma_mb;
  if (options_.keep_density) p.density = rho;
  return p;
}

std::size_t CrossSectionCurve::gap_count() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return !p.ok; }));
}

std::vector<double> predicted_resonances(const SpinOrbitalSet& set, const EnergyShifts& shifts,
                                         double lo_ev, double hi_ev, int max_n) {
  std::vector<double> out;
  for (Spin s : {Spin::up, Spin::down}) {
    const Channel& occ = set.channel(s);
    if (occ.empty()) continue;
    // Lowest ionization threshold of this spin; resonances lie above it.
    double threshold = std::numeric_limits<double>::infinity();
    for (const auto& o : occ) threshold = std::min(threshold, -shifts.energy_for(o));
    for (const auto& o : occ) {
      const double eps = shifts.energy_for(o);
      for (int lp : {o.l - 1, o.l + 1}) {
        if (lp < 0 || max_n <= lp) continue;
        const auto levels = solve_radial_eigen(*set.grid, set.effective(s).v_total, lp, max_n - lp);
        for (int k = 0; k < static_cast<int>(levels.size()); ++k) {
          const int n = lp + 1 + k;
          if (levels[k].energy >= 0.0) break;
          const RadialOrbital* target = set.find(n, lp, s);
          if (target && target->occupancy >= 2 * lp + 1 - 1e-12) continue;
          const double w = levels[k].energy - eps;
          if (w <= threshold) continue;
          const double ev = units::to_ev(w);
          if (ev >= lo_ev && ev <= hi_ev) out.push_back(ev);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
            out.end());
  return out;
}

std::vector<ResponsePoint> evaluate_points(const ResponseEngine& engine, const std::vector<double>& omegas,
                                           int threads, const ScanProgress& progress) {
  std::vector<ResponsePoint> out(omegas.size());
  if (omegas.empty()) return out;
  int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(omegas.size()));

  std::atomic<std::size_t> next{0}, done{0};
  std::mutex progress_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < omegas.size();) {
      try {
        out[i] = engine.evaluate(omegas[i]);
      } catch (const NumericalError& e) {
        out[i].omega = omegas[i];
        out[i].omega_ev = units::to_ev(omegas[i]);
        out[i].mode = engine.options().mode;
        out[i].ok = false;
        out[i].error = e.what();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = omegas.size();
      }
      const std::size_t d = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(d, omegas.size());
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

CrossSectionCurve scan_spectrum(const ResponseEngine& engine, const ScanOptions& options,
                                const ScanProgress& progress) {
  if (!(options.step_ev > 0.0)) throw ConfigError("scan.step_ev", "must be positive");
  if (options.refine && !(options.refine_step_ev > 0.0))
    throw ConfigError("scan.refine_step_ev", "must be positive");

  const SpinOrbitalSet& set = engine.orbitals();
  CrossSectionCurve curve;
  curve.configuration = set.config.label();
  curve.mode = engine.options().mode;
  if (!(options.stop_ev >= options.start_ev) || options.stop_ev <= 0.0) return curve;

  const double lo = std::max(options.start_ev, 1e-6);
  const double hi = options.stop_ev;
  std::vector<double> base;
  const auto count = static_cast<long>(std::floor((hi - lo) / options.step_ev + 1e-9)) + 1;
  for (long i = 0; i < count; ++i) base.push_back(lo + i * options.step_ev);

  auto to_hartree = [](const std::vector<double>& ev) {
    std::vector<double> h;
    h.reserve(ev.size());
    for (double e : ev) h.push_back(units::to_hartree(e));
    return h;
  };
  std::vector<ResponsePoint> points = evaluate_points(engine, to_hartree(base), options.threads, progress);

  if (options.refine) {
    std::vector<std::pair<double, double>> windows = options.windows;
    for (double e : predicted_resonances(set, engine.options().shifts, lo, hi))
      windows.emplace_back(e - options.predicted_half_width_ev, e + options.predicted_half_width_ev);
    double peak = 0.0;
    for (const auto& p : points)
      if (p.ok) peak = std::max(peak, std::abs(p.sigma_mb));
    for (std::size_t i = 1; i + 1 < points.size(); ++i) {
      const auto &a = points[i - 1], &b = points[i], &c = points[i + 1];
      if (!(a.ok && b.ok && c.ok)) continue;
      const double curvature = std::abs(b.sigma_mb - 0.5 * (a.sigma_mb + c.sigma_mb));
      const double scale = std::max(std::abs(b.sigma_mb), 1e-3 * peak);
      if (scale > 0.0 && curvature > options.refine_threshold * scale)
        windows.emplace_back(a.omega_ev, c.omega_ev);
    }
    for (auto& w : windows) {
      w.first = std::max(w.first, lo);
      w.second = std::min(w.second, hi);
    }
    std::sort(windows.begin(), windows.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& w : windows) {
      if (w.second <= w.first) continue;
      if (!merged.empty() && w.first <= merged.back().second)
        merged.back().second = std::max(merged.back().second, w.second);
      else
        merged.push_back(w);
    }
    std::vector<double> fine;
    const double tol = 1e-3 * options.refine_step_ev;
    for (const auto& [a, b] : merged) {
      // Align fine points to a global lattice so adjacent windows agree.
      const double first = std::ceil(a / options.refine_step_ev - 1e-9) * options.refine_step_ev;
      for (double e = first; e <= b + tol; e += options.refine_step_ev) {
        const auto it = std::lower_bound(base.begin(), base.end(), e - tol);
        if (it != base.end() && std::abs(*it - e) <= tol) continue;
        fine.push_back(e);
      }
    }
    std::sort(fine.begin(), fine.end());
    fine.erase(std::unique(fine.begin(), fine.end(), [&](double x, double y) { return std::abs(x - y) <= tol; }),
               fine.end());
    auto extra = evaluate_points(engine, to_hartree(fine), options.threads, progress);
    points.insert(points.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
    std::sort(points.begin(), points.end(), [](const auto& x, const auto& y) { return x.omega < y.omega; });
  }
  curve.points = std::move(points);
  return curve;
}

void write_curve(const CrossSectionCurve& curve, std::ostream& out) {
  out << "# configuration: " << curve.configuration << "\n";
  out << "# mode: " << to_string(curve.mode) << "\n";
  for (const auto& [k, v] : curve.provenance) out << "# " << k << ": " << v << "\n";
  out << "# gaps: " << curve.gap_count() << "\n";
  out << "omega_eV\tsigma_Mb\tre_alpha_au\tim_alpha_au\n";
  char buf[160];
  for (const auto& p : curve.points) {
    if (!p.ok) {
      out << "# gap omega_eV=" << format_number(p.omega_ev) << ": " << p.error << "\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "%.10f\t%.10e\t%.10e\t%.10e\n", p.omega_ev, p.sigma_mb, p.alpha.real(),
                  p.alpha.imag());
    out << buf;
  }
}

CrossSectionCurve read_curve(std::istream& in) {
  CrossSectionCurve curve;
  std::string line;
  bool columns = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# gap omega_eV=", 0) == 0) {
        ResponsePoint p;
        p.ok = false;
        p.mode = curve.mode;
        const auto colon = line.find(':', 15);
        p.omega_ev = std::stod(line.substr(15, colon - 15));
        p.omega = units::to_hartree(p.omega_ev);
        if (colon != std::string::npos) p.error = line.substr(std::min(colon + 2, line.size()));
        curve.points.push_back(std::move(p));
        continue;
      }
      const auto colon = line.find(": ");
      if (colon == std::string::npos) continue;
      const std::string key = line.substr(2, colon - 2), value = line.substr(colon + 2);
      if (key == "configuration")
        curve.configuration = value;
      else if (key == "mode")
        curve.mode = parse_response_mode(value);
      else if (key != "gaps")
        curve.provenance.emplace_back(key, value);
      continue;
    }
    if (!columns) {
      if (line.rfind("omega_eV", 0) != 0) throw ConfigError("curve", "missing column line");
      columns = true;
      continue;
    }
    std::istringstream row(line);
    ResponsePoint p;
    double re = 0, im = 0;
    if (!(row >> p.omega_ev >> p.sigma_mb >> re >> im)) throw ConfigError("curve", "malformed row: " + line);
    p.omega = units::to_hartree(p.omega_ev);
    p.alpha = {re, im};
    p.mode = curve.mode;
    curve.points.push_back(std::move(p));
  }
  return curve;
}

} // namespace slhf
