#pragma once

#include "slhf/fano.hpp"
#include "slhf/kernels.hpp"
#include "slhf/potentials.hpp"
#include "slhf/response.hpp"
#include "slhf/scf.hpp"

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace slhf {

struct GridConfig {
  int points = 400;
  double r_max = 150.0;
  double map_param = 50.0;

  bool operator==(const GridConfig&) const = default;
};

struct ScfConfig {
  bool use_lyp = false;
  double mixing = 0.4;
  double tolerance = 1e-8;
  int max_iterations = 400;

  bool operator==(const ScfConfig&) const = default;
};

struct AbsorberConfig {
  bool enabled = true;
  double strength = 0.1;
  double start = -1.0; // negative: 0.2 r_max
  double reference_energy = 0.5; // hartree; U0 grows as E / reference above it, 0: fixed
  std::map<std::string, std::pair<double, double>> overrides; // label -> (U0, r_a)

  bool operator==(const AbsorberConfig&) const = default;
};

struct ScanConfig {
  double start = 20.0; // eV
  double stop = 60.0;
  double step = 0.05;
  bool refine = true;
  double refine_step = 2e-4;
  double refine_threshold = 0.02;
  double predicted_half_width = 0.05;
  std::vector<std::pair<double, double>> windows;

  bool operator==(const ScanConfig&) const = default;
};

struct FitConfig {
  std::vector<std::pair<double, double>> windows; // eV
  std::vector<std::string> transitions;           // one label per window
  double step = 1e-3;                             // eV
  double baseline_window = 0.1;                   // eV, peak search

  bool operator==(const FitConfig&) const = default;
};

struct TablesConfig {
  std::vector<std::string> transitions; // "2s↑→2p↑" or "2s->3p"
  double search = 1.0;                  // eV around the unperturbed difference

  bool operator==(const TablesConfig&) const = default;
};

struct OutputConfig {
  std::string directory = ".";
  std::string prefix = "slhf";
  std::string cache = ".slhf-cache"; // empty disables caching
  int threads = 0;

  bool operator==(const OutputConfig&) const = default;
};

/// Everything a run needs. Energies are eV at this level.
struct RunConfig {
  int nuclear_charge = 1;
  std::string configuration = "1s1";
  GridConfig grid;
  ScfConfig scf;
  AbsorberConfig absorber;
  ResponseMode mode = ResponseMode::td;
  KernelVariant kernel = KernelVariant::hartree_alda_x;
  double numeric_c_step = 1e-3;
  double epsilon = 1e-6; // hartree
  ScanConfig scan;
  std::vector<std::pair<std::string, double>> shifts; // orbital label -> eV
  FitConfig fit;
  TablesConfig tables;
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;

  ElectronConfiguration electron_configuration() const;
  ScfOptions scf_options() const;
  ResponseOptions response_options() const;
  ScanOptions scan_options(int threads) const;
};

/// Parses "[section]" / "key = value" text. Unknown sections or keys, bad
/// values and range violations are all collected; throws one ConfigError
/// listing every problem (field() names the first).
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Canonical text; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& config);

/// "2s↑→2p↑", "2s->3p" into (from, to).
std::pair<SubshellRef, SubshellRef> parse_transition(std::string_view text);

} // namespace slhf
