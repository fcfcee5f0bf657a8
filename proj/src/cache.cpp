#include "slhf/cache.hpp"

#include "slhf/version.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace slhf {

namespace {

using json = nlohmann::json;

class Fnv1a {
public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void add(const std::string& s) {
    bytes(s.data(), s.size());
    bytes("\0", 1);
  }
  void add(double x) { bytes(&x, sizeof x); }
  void add(int x) { bytes(&x, sizeof x); }
  void add(bool x) { add(static_cast<int>(x)); }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec(const json& j, Eigen::Index expected) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != expected) throw std::runtime_error("cache vector size mismatch");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), expected);
}

} // namespace

std::string scf_cache_key(const ElectronConfiguration& config, int points, double r_max, double map_param,
                          const ScfOptions& options) {
  Fnv1a h;
  h.add(cache_format_version);
  h.add(config.nuclear_charge);
  h.add(config.label());
  h.add(points);
  h.add(r_max);
  h.add(map_param);
  h.add(options.use_lyp);
  h.add(options.mixing);
  h.add(options.tolerance);
  h.add(options.max_iterations);
  h.add(static_cast<int>(options.exchange.method));
  h.add(options.exchange.tolerance);
  h.add(options.exchange.max_iterations);
  h.add(options.exchange.density_floor);
  h.add(options.exchange.corrections);
  return h.hex();
}

std::string serialize_state(const SpinOrbitalSet& set, const ScfOptions& options) {
  const auto& g = *set.grid;
  json j;
  j["format"] = cache_format_version;
  j["code_version"] = code_version;
  j["key"] = scf_cache_key(set.config, g.point_count(), g.r_max(), g.map_param(), options);
  j["Z"] = set.config.nuclear_charge;
  j["configuration"] = set.config.label();
  j["grid"] = {{"points", g.point_count()}, {"r_max", g.r_max()}, {"map", g.map_param()}};
  for (int s = 0; s < 2; ++s) {
    json orbitals = json::array();
    for (const auto& o : set.orbitals[s])
      orbitals.push_back({{"n", o.n},
                          {"l", o.l},
                          {"occupancy", o.occupancy},
                          {"energy", o.energy},
                          {"R", vec(o.R)}});
    const auto& p = set.potential[s];
    j["spin"].push_back({{"orbitals", orbitals},
                         {"charge", vec(set.charge[s])},
                         {"v_nuclear", vec(p.v_nuclear)},
                         {"v_hartree", vec(p.v_hartree)},
                         {"v_exchange", vec(p.v_exchange)},
                         {"v_correlation", vec(p.v_correlation)},
                         {"v_total", vec(p.v_total)}});
  }
  j["diagnostics"] = {{"iterations", set.diagnostics.iterations},
                      {"residual", set.diagnostics.residual},
                      {"history", set.diagnostics.history},
                      {"correlation_energy", set.diagnostics.correlation_energy}};
  return j.dump(1);
}

std::optional<SpinOrbitalSet> deserialize_state(const std::string& text, const ElectronConfiguration& config,
                                                const GridPtr& grid, const ScfOptions& options) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<int>() != cache_format_version) return std::nullopt;
    const auto key = scf_cache_key(config, grid->point_count(), grid->r_max(), grid->map_param(), options);
    if (j.at("key").get<std::string>() != key || j.at("configuration").get<std::string>() != config.label())
      return std::nullopt;
    const Eigen::Index m = grid->size();
    SpinOrbitalSet set;
    set.grid = grid;
    set.config = config;
    for (int s = 0; s < 2; ++s) {
      const auto& js = j.at("spin").at(s);
      for (const auto& jo : js.at("orbitals")) {
        RadialOrbital o;
        o.n = jo.at("n").get<int>();
        o.l = jo.at("l").get<int>();
        o.spin = static_cast<Spin>(s);
        o.occupancy = jo.at("occupancy").get<double>();
        o.energy = jo.at("energy").get<double>();
        o.R = vec(jo.at("R"), m);
        set.orbitals[s].push_back(std::move(o));
      }
      set.charge[s] = vec(js.at("charge"), m);
      auto& p = set.potential[s];
      p.spin = static_cast<Spin>(s);
      p.nuclear_charge = config.nuclear_charge;
      p.v_nuclear = vec(js.at("v_nuclear"), m);
      p.v_hartree = vec(js.at("v_hartree"), m);
      p.v_exchange = vec(js.at("v_exchange"), m);
      p.v_correlation = vec(js.at("v_correlation"), m);
      p.v_total = vec(js.at("v_total"), m);
    }
    const auto& d = j.at("diagnostics");
    set.diagnostics.iterations = d.at("iterations").get<int>();
    set.diagnostics.residual = d.at("residual").get<double>();
    set.diagnostics.history = d.at("history").get<std::vector<double>>();
    set.diagnostics.correlation_energy = d.at("correlation_energy").get<double>();
    return set;
  } catch (const std::exception&) {
    return std::nullopt; // unreadable or foreign cache file: recompute
  }
}

SpinOrbitalSet cached_scf(const ElectronConfiguration& config, const GridPtr& grid, const ScfOptions& options,
                          const std::string& directory, bool* hit) {
  if (hit) *hit = false;
  if (directory.empty()) return run_scf(config, grid, options);
  namespace fs = std::filesystem;
  const auto key = scf_cache_key(config, grid->point_count(), grid->r_max(), grid->map_param(), options);
  const fs::path path = fs::path(directory) / ("scf-" + key + ".json");
  if (std::ifstream in{path}) {
    std::stringstream ss;
    ss << in.rdbuf();
    if (auto set = deserialize_state(ss.str(), config, grid, options)) {
      if (hit) *hit = true;
      return std::move(*set);
    }
  }
  auto set = run_scf(config, grid, options);
  std::error_code ec;
  fs::create_directories(directory, ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << serialize_state(set, options);
  }
  fs::rename(tmp, path, ec); // a failed write only costs a recompute next time
  return set;
}

} // namespace slhf
