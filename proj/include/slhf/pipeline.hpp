#pragma once

#include "slhf/config.hpp"
#include "slhf/fano.hpp"
#include "slhf/response.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slhf {

enum class RunMode { scf, scan_ti, scan_td, fit, tables };

RunMode parse_run_mode(std::string_view text); // "scf", "scan-ti", ...
std::string to_string(RunMode mode);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int scf = 3;
inline constexpr int response = 4;
} // namespace exit_code

struct RunContext {
  int threads = -1;       // negative: take output.threads from the config
  bool use_cache = true;
  std::ostream* log = nullptr; // progress and summaries
  bool timestamp = true;       // false writes a fixed placeholder (tests)
};

struct RunResult {
  int exit_code = exit_code::ok;
  std::string message;
  std::vector<std::string> files;
};

/// Executes one mode and writes its artifacts. Configuration, SCF and
/// response failures become exit codes; curves are written before a
/// non-zero return.
RunResult run(const RunConfig& config, RunMode mode, const RunContext& context = {});

/// "# key: value" provenance fields shared by every output file.
std::vector<std::pair<std::string, std::string>> provenance(const RunConfig& config, RunMode mode, int threads,
                                                            bool timestamp = true);

/// Orbital energies in hartree and eV with the ionization threshold -eps.
void write_orbital_report(const SpinOrbitalSet& set,
                          const std::vector<std::pair<std::string, std::string>>& header, std::ostream& out);

struct ResonanceSearchOptions {
  double coarse_step_ev = 0.01;
  double fine_step_ev = 1e-3;
  double baseline_window_ev = 0.1; // peak detection background
  double fine_half_width_ev = 0.05;
  double max_half_width_ev = 0.5; // cap for the 5 Gamma refit window
  int threads = 0;
};

struct ResonanceResult {
  std::optional<FanoFit> fit;
  std::optional<ResonancePeak> peak;
  CrossSectionCurve curve; // coarse and fine points merged
  std::vector<std::string> warnings;
};

/// Coarse scan of [lo, hi], the strongest detected profile, a fine scan
/// around it and a Fano fit over a 5 Gamma window (one widening pass when
/// the first fit asks for more room).
ResonanceResult locate_and_fit(const ResponseEngine& engine, double lo_ev, double hi_ev,
                               const ResonanceSearchOptions& options = {});

/// Evaluates the missing points of a uniform lattice k * step in [lo, hi]
/// and merges them into the curve, keeping omega increasing.
void sample_window(const ResponseEngine& engine, CrossSectionCurve& curve, double lo_ev, double hi_ev,
                   double step_ev, int threads);

} // namespace slhf
