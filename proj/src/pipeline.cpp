#include "slhf/pipeline.hpp"

#include "slhf/cache.hpp"
#include "slhf/errors.hpp"
#include "slhf/units.hpp"
#include "slhf/version.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

namespace slhf {

namespace {

std::string num(double x, const char* fmt = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int resolve_threads(const RunConfig& config, const RunContext& context) {
  const int requested = context.threads >= 0 ? context.threads : config.output.threads;
  return requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::string describe_absorber(const RunConfig& c) {
  if (!c.absorber.enabled) return "off (epsilon " + num(c.epsilon) + " hartree)";
  auto start = [](double ra) { return ra < 0.0 ? std::string("0.2 r_max") : num(ra); };
  std::string s = "U0=" + num(c.absorber.strength) + " r_a=" + start(c.absorber.start);
  if (c.absorber.reference_energy > 0.0) s += " (U0 E/" + num(c.absorber.reference_energy) + " above that energy)";
  for (const auto& [label, p] : c.absorber.overrides)
    s += "; " + label + ": U0=" + num(p.first) + " r_a=" + start(p.second);
  return s;
}

std::string output_path(const RunConfig& c, const std::string& suffix) {
  return (std::filesystem::path(c.output.directory) / (c.output.prefix + suffix)).string();
}

void log_line(const RunContext& ctx, const std::string& s) {
  if (ctx.log) *ctx.log << s << "\n" << std::flush;
}

ScanProgress progress_logger(const RunContext& ctx, std::string what) {
  if (!ctx.log) return {};
  return [&ctx, what](std::size_t done, std::size_t total) {
    const std::size_t stride = std::max<std::size_t>(1, total / 20);
    if (done == total || done % stride == 0) *ctx.log << what << ": " << done << "/" << total << "\n" << std::flush;
  };
}

void merge_points(CrossSectionCurve& curve, std::vector<ResponsePoint> extra) {
  auto& pts = curve.points;
  pts.insert(pts.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.omega_ev < b.omega_ev; });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& a, const auto& b) { return std::abs(a.omega_ev - b.omega_ev) < 1e-9; }),
            pts.end());
}

struct ScfStage {
  std::shared_ptr<const SpinOrbitalSet> set;
  bool cache_hit = false;
};

ScfStage scf_stage(const RunConfig& config, const RunContext& ctx) {
  const auto electrons = config.electron_configuration();
  const auto grid = build_grid(config.grid.points, config.grid.r_max, config.grid.map_param);
  ScfStage stage;
  const std::string dir = ctx.use_cache ? config.output.cache : std::string();
  stage.set = std::make_shared<const SpinOrbitalSet>(
      cached_scf(electrons, grid, config.scf_options(), dir, &stage.cache_hit));
  log_line(ctx, std::string("scf: ") + electrons.label() + (stage.cache_hit ? " (cache hit)" : " (computed)"));
  return stage;
}

void write_file(const std::string& path, const std::string& text, RunResult& result) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path().empty()
                                          ? std::filesystem::path(".")
                                          : std::filesystem::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("output.directory", "cannot write " + path);
  out << text;
  result.files.push_back(path);
}

std::string curve_text(const CrossSectionCurve& curve) {
  std::ostringstream s;
  write_curve(curve, s);
  return s.str();
}

} // namespace

RunMode parse_run_mode(std::string_view text) {
  if (text == "scf") return RunMode::scf;
  if (text == "scan-ti") return RunMode::scan_ti;
  if (text == "scan-td") return RunMode::scan_td;
  if (text == "fit") return RunMode::fit;
  if (text == "tables") return RunMode::tables;
  throw ConfigError("mode", "unknown mode \"" + std::string(text) + "\" (scf, scan-ti, scan-td, fit, tables)");
}

std::string to_string(RunMode mode) {
  switch (mode) {
  case RunMode::scf: return "scf";
  case RunMode::scan_ti: return "scan-ti";
  case RunMode::scan_td: return "scan-td";
  case RunMode::fit: return "fit";
  case RunMode::tables: return "tables";
  }
  return "?";
}

std::vector<std::pair<std::string, std::string>> provenance(const RunConfig& c, RunMode mode, int threads,
                                                            bool timestamp) {
  std::string shifts;
  for (const auto& [label, e] : c.shifts) shifts += (shifts.empty() ? "" : ", ") + label + "=" + num(e) + " eV";
  return {
      {"code_version", code_version},
      {"timestamp", timestamp ? utc_now() : "-"},
      {"run_mode", to_string(mode)},
      {"Z", std::to_string(c.nuclear_charge)},
      {"grid", "N=" + std::to_string(c.grid.points) + " r_max=" + num(c.grid.r_max) + " map=" + num(c.grid.map_param)},
      {"scf", std::string("use_lyp=") + (c.scf.use_lyp ? "true" : "false") + " mixing=" + num(c.scf.mixing) +
                  " tolerance=" + num(c.scf.tolerance)},
      {"kernel", mode == RunMode::scan_ti ? std::string("none") : to_string(c.kernel)},
      {"absorber", describe_absorber(c)},
      {"shifts", shifts.empty() ? "none" : shifts},
      {"threads", std::to_string(threads)},
  };
}

void write_orbital_report(const SpinOrbitalSet& set,
                          const std::vector<std::pair<std::string, std::string>>& header, std::ostream& out) {
  for (const auto& [k, v] : header) out << "# " << k << ": " << v << "\n";
  out << "# configuration: " << set.config.label() << "\n";
  out << "# scf_iterations: " << set.diagnostics.iterations << "\n";
  out << "orbital\toccupancy\tenergy_hartree\tenergy_eV\tthreshold_eV\n";
  for (int s = 0; s < 2; ++s)
    for (const auto& o : set.orbitals[s])
      out << o.label() << "\t" << num(o.occupancy, "%.6f") << "\t" << num(o.energy, "%.8f") << "\t"
          << num(units::to_ev(o.energy), "%.6f") << "\t" << num(-units::to_ev(o.energy), "%.6f") << "\n";
}

void sample_window(const ResponseEngine& engine, CrossSectionCurve& curve, double lo_ev, double hi_ev,
                   double step_ev, int threads) {
  if (!(step_ev > 0.0)) throw ConfigError("fit.step", "must be positive");
  const long first = static_cast<long>(std::ceil(std::max(lo_ev, 1e-6) / step_ev - 1e-9));
  const long last = static_cast<long>(std::floor(hi_ev / step_ev + 1e-9));
  std::vector<double> omegas;
  for (long k = first; k <= last; ++k) {
    const double e = static_cast<double>(k) * step_ev;
    const bool have = std::any_of(curve.points.begin(), curve.points.end(),
                                  [&](const auto& p) { return std::abs(p.omega_ev - e) < 1e-9; });
    if (!have) omegas.push_back(units::to_hartree(e));
  }
  merge_points(curve, evaluate_points(engine, omegas, threads));
}

ResonanceResult locate_and_fit(const ResponseEngine& engine, double lo_ev, double hi_ev,
                               const ResonanceSearchOptions& o) {
  ResonanceResult r;
  r.curve.configuration = engine.orbitals().config.label();
  r.curve.mode = engine.options().mode;
  sample_window(engine, r.curve, lo_ev, hi_ev, o.coarse_step_ev, o.threads);

  auto search = find_peaks(r.curve, o.baseline_window_ev);
  r.warnings = search.warnings;
  if (search.peaks.empty()) {
    r.warnings.push_back("no resonance detected in [" + num(lo_ev) + ", " + num(hi_ev) + "] eV");
    return r;
  }
  r.peak = *std::max_element(search.peaks.begin(), search.peaks.end(), [](const auto& a, const auto& b) {
    return std::abs(a.deviation_mb) < std::abs(b.deviation_mb);
  });

  double lo = r.peak->position_ev - o.fine_half_width_ev, hi = r.peak->position_ev + o.fine_half_width_ev;
  sample_window(engine, r.curve, lo, hi, o.fine_step_ev, o.threads);
  auto fine_segment = [&](double a, double b) {
    std::vector<CurveSample> s;
    for (const auto& p : r.curve.points) {
      if (!p.ok || p.omega_ev < a - 1e-9 || p.omega_ev > b + 1e-9) continue;
      const double k = p.omega_ev / o.fine_step_ev;
      if (std::abs(k - std::round(k)) < 1e-6) s.push_back({p.omega_ev, p.sigma_mb});
    }
    return s;
  };
  auto samples = fine_segment(lo, hi);
  if (samples.size() < 30) {
    r.warnings.push_back("fewer than 30 fine samples around " + num(r.peak->position_ev) + " eV");
    return r;
  }
  FanoFit fit = fit_fano(samples);

  // Uniform weighting over E_r +- 2.5 Gamma, at least 30 samples wide.
  const double min_half = 15.0 * o.fine_step_ev;
  const double half = std::clamp(2.5e-3 * fit.gamma_mev, min_half, o.max_half_width_ev);
  const double a = fit.energy_ev - half, b = fit.energy_ev + half;
  if (a < lo || b > hi) sample_window(engine, r.curve, a, b, o.fine_step_ev, o.threads);
  samples = fine_segment(a, b);
  if (samples.size() >= 30) fit = fit_fano(samples, fit);
  fit.window = {a, b};
  r.fit = fit;
  return r;
}

RunResult run(const RunConfig& config, RunMode mode, const RunContext& ctx) {
  RunResult result;
  const int threads = resolve_threads(config, ctx);
  const auto header = provenance(config, mode, threads, ctx.timestamp);

  ScfStage scf;
  try {
    scf = scf_stage(config, ctx);
  } catch (const ConfigError& e) {
    return {exit_code::config, e.what(), {}};
  } catch (const NumericalError& e) {
    return {exit_code::scf, e.what(), {}};
  }

  try {
    if (mode == RunMode::scf) {
      std::ostringstream s;
      write_orbital_report(*scf.set, header, s);
      write_file(output_path(config, "_scf.txt"), s.str(), result);
      log_line(ctx, s.str());
      return result;
    }

    ResponseOptions ro = config.response_options();
    if (mode == RunMode::scan_ti) ro.mode = ResponseMode::ti;
    if (mode == RunMode::scan_td) ro.mode = ResponseMode::td;
    const ResponseEngine engine(scf.set, ro);

    if (mode == RunMode::scan_ti || mode == RunMode::scan_td) {
      CrossSectionCurve curve = scan_spectrum(engine, config.scan_options(threads), progress_logger(ctx, "scan"));
      curve.provenance = header;
      write_file(output_path(config, mode == RunMode::scan_ti ? "_ti.dat" : "_td.dat"), curve_text(curve), result);
      if (const auto gaps = curve.gap_count()) {
        result.exit_code = exit_code::response;
        result.message = std::to_string(gaps) + " frequency point(s) failed; see gap lines in the curve";
      }
      return result;
    }

    std::vector<FanoTableRow> rows;
    CrossSectionCurve curve;
    curve.configuration = scf.set->config.label();
    curve.mode = ro.mode;
    curve.provenance = header;
    auto table_header = header;
    table_header.emplace_back("configuration", scf.set->config.label());
    table_header.emplace_back("response_mode", to_string(ro.mode));

    if (mode == RunMode::fit) {
      for (std::size_t i = 0; i < config.fit.windows.size(); ++i) {
        const auto [lo, hi] = config.fit.windows[i];
        sample_window(engine, curve, lo, hi, config.fit.step, threads);
        log_line(ctx, "fit window " + num(lo) + ".." + num(hi) + " eV sampled");
      }
      const auto fits = fit_windows(curve, config.fit.windows, threads);
      for (std::size_t i = 0; i < fits.size(); ++i) {
        auto fit = fits[i];
        fit.window = config.fit.windows[i];
        rows.push_back({i < config.fit.transitions.size() ? config.fit.transitions[i]
                                                          : "window" + std::to_string(i + 1),
                        fit});
      }
    } else { // tables
      ResonanceSearchOptions so;
      so.coarse_step_ev = config.scan.step;
      so.fine_step_ev = config.fit.step;
      so.baseline_window_ev = config.fit.baseline_window;
      so.threads = threads;
      for (const auto& t : config.tables.transitions) {
        const auto [from, to] = parse_transition(t);
        const double de = unperturbed_difference(*scf.set, from, to);
        table_header.emplace_back("unperturbed " + t, num(de, "%.5f") + " eV");
        auto found = locate_and_fit(engine, de - config.tables.search, de + config.tables.search, so);
        for (const auto& w : found.warnings) log_line(ctx, t + ": " + w);
        merge_points(curve, std::move(found.curve.points));
        if (found.fit) {
          table_header.emplace_back("shift " + t, num(found.fit->energy_ev - de, "%.5f") + " eV");
          rows.push_back({t, *found.fit});
        } else {
          table_header.emplace_back("shift " + t, "no resonance found");
        }
      }
    }
    write_file(output_path(config, mode == RunMode::fit ? "_fit.dat" : "_tables.dat"), curve_text(curve), result);
    std::ostringstream table;
    write_fano_table(rows, table_header, table);
    write_file(output_path(config, mode == RunMode::fit ? "_fano.txt" : "_tables.txt"), table.str(), result);
    log_line(ctx, table.str());
    if (const auto gaps = curve.gap_count()) {
      result.exit_code = exit_code::response;
      result.message = std::to_string(gaps) + " frequency point(s) failed; see gap lines in the curve";
    }
    return result;
  } catch (const ConfigError& e) {
    result.exit_code = exit_code::config;
    result.message = e.what();
  } catch (const NumericalError& e) {
    result.exit_code = exit_code::response;
    result.message = e.what();
  }
  return result;
}

} // namespace slhf
