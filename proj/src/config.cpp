#include "slhf/config.hpp"

#include "slhf/errors.hpp"
#include "slhf/units.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace slhf {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    out.push_back(trim(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

std::string number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::optional<double> to_double(std::string s) {
  if (s.rfind("\xE2\x88\x92", 0) == 0) s = "-" + s.substr(3); // U+2212 minus sign
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) return std::nullopt;
  return v;
}

std::optional<int> to_int(const std::string& s) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  return std::nullopt;
}

using Windows = std::vector<std::pair<double, double>>;

std::optional<Windows> to_windows(const std::string& s) {
  Windows out;
  if (s.empty()) return out;
  for (const auto& item : split(s, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) return std::nullopt;
    const auto a = to_double(parts[0]), b = to_double(parts[1]);
    if (!a || !b) return std::nullopt;
    out.emplace_back(*a, *b);
  }
  return out;
}

std::string emit_windows(const Windows& w) {
  std::string out;
  for (const auto& [a, b] : w) out += (out.empty() ? "" : ", ") + number(a) + ":" + number(b);
  return out;
}

std::string emit_list(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

struct Problems {
  std::vector<std::pair<std::string, std::string>> items;
  void add(std::string field, std::string what) { items.emplace_back(std::move(field), std::move(what)); }
};

bool label_present(const ElectronConfiguration& cfg, const SubshellRef& ref) {
  for (const auto& sh : cfg.subshells)
    if (ref.matches(sh.n, sh.l, sh.spin)) return true;
  return false;
}

} // namespace

std::pair<SubshellRef, SubshellRef> parse_transition(std::string_view text) {
  std::size_t p = text.find("\xE2\x86\x92"), len = 3; // U+2192
  if (p == std::string_view::npos) {
    p = text.find("->");
    len = 2;
  }
  if (p == std::string_view::npos)
    throw ConfigError("transition", "expected \"from->to\" in \"" + std::string(text) + "\"");
  return {parse_subshell_ref(trim(text.substr(0, p))), parse_subshell_ref(trim(text.substr(p + len)))};
}

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  Problems problems;
  using Setter = std::function<std::optional<std::string>(const std::string&)>;

  auto real = [](double& dst) -> Setter {
    return [&dst](const std::string& v) -> std::optional<std::string> {
      if (auto x = to_double(v)) {
        dst = *x;
        return std::nullopt;
      }
      return "expected a number, got \"" + v + "\"";
    };
  };
  auto integer = [](int& dst) -> Setter {
    return [&dst](const std::string& v) -> std::optional<std::string> {
      if (auto x = to_int(v)) {
        dst = *x;
        return std::nullopt;
      }
      return "expected an integer, got \"" + v + "\"";
    };
  };
  auto boolean = [](bool& dst) -> Setter {
    return [&dst](const std::string& v) -> std::optional<std::string> {
      if (auto x = to_bool(v)) {
        dst = *x;
        return std::nullopt;
      }
      return "expected true or false, got \"" + v + "\"";
    };
  };
  auto text_value = [](std::string& dst) -> Setter {
    return [&dst](const std::string& v) -> std::optional<std::string> {
      dst = v;
      return std::nullopt;
    };
  };
  auto windows = [](Windows& dst) -> Setter {
    return [&dst](const std::string& v) -> std::optional<std::string> {
      if (auto w = to_windows(v)) {
        dst = *w;
        return std::nullopt;
      }
      return "expected \"lo:hi, lo:hi, ...\", got \"" + v + "\"";
    };
  };
  auto list = [](std::vector<std::string>& dst) -> Setter {
    return [&dst](const std::string& v) -> std::optional<std::string> {
      dst.clear();
      if (!v.empty())
        for (auto& s : split(v, ',')) dst.push_back(s);
      return std::nullopt;
    };
  };

  const std::map<std::string, std::map<std::string, Setter>> table = {
      {"atom", {{"Z", integer(c.nuclear_charge)}, {"configuration", text_value(c.configuration)}}},
      {"grid", {{"points", integer(c.grid.points)}, {"r_max", real(c.grid.r_max)}, {"map", real(c.grid.map_param)}}},
      {"scf",
       {{"use_lyp", boolean(c.scf.use_lyp)},
        {"mixing", real(c.scf.mixing)},
        {"tolerance", real(c.scf.tolerance)},
        {"max_iterations", integer(c.scf.max_iterations)}}},
      {"absorber",
       {{"enabled", boolean(c.absorber.enabled)},
        {"strength", real(c.absorber.strength)},
        {"start", real(c.absorber.start)},
        {"reference_energy", real(c.absorber.reference_energy)}}},
      {"response",
       {{"mode",
         [&c](const std::string& v) -> std::optional<std::string> {
           try {
             c.mode = parse_response_mode(v);
           } catch (const ConfigError& e) {
             return e.what();
           }
           return std::nullopt;
         }},
        {"kernel",
         [&c](const std::string& v) -> std::optional<std::string> {
           try {
             c.kernel = parse_kernel_variant(v);
           } catch (const ConfigError& e) {
             return e.what();
           }
           return std::nullopt;
         }},
        {"numeric_c_step", real(c.numeric_c_step)},
        {"epsilon", real(c.epsilon)}}},
      {"scan",
       {{"start", real(c.scan.start)},
        {"stop", real(c.scan.stop)},
        {"step", real(c.scan.step)},
        {"refine", boolean(c.scan.refine)},
        {"refine_step", real(c.scan.refine_step)},
        {"refine_threshold", real(c.scan.refine_threshold)},
        {"predicted_half_width", real(c.scan.predicted_half_width)},
        {"windows", windows(c.scan.windows)}}},
      {"shifts", {}},
      {"fit",
       {{"windows", windows(c.fit.windows)},
        {"transitions", list(c.fit.transitions)},
        {"step", real(c.fit.step)},
        {"baseline_window", real(c.fit.baseline_window)}}},
      {"tables", {{"transitions", list(c.tables.transitions)}, {"search", real(c.tables.search)}}},
      {"output",
       {{"directory", text_value(c.output.directory)},
        {"prefix", text_value(c.output.prefix)},
        {"cache", text_value(c.output.cache)},
        {"threads", integer(c.output.threads)}}},
  };

  std::string section;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    for (const char* mark : {" ;", " #", "\t;", "\t#"})
      if (const auto p = line.find(mark); p != std::string::npos) line = trim(line.substr(0, p));
    const std::string where = "line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.add(where, "malformed section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!table.count(section)) problems.add(section, "unknown section [" + section + "] at " + where);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.add(where, "expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string field = section + "." + key;
    if (section.empty()) {
      problems.add(key, "key outside any section at " + where);
      continue;
    }
    const auto sec = table.find(section);
    if (sec == table.end()) continue; // already reported
    if (!seen.insert(field).second) {
      problems.add(field, "duplicate key");
      continue;
    }
    if (section == "shifts") {
      std::string energy = value;
      if (energy.size() > 2 && energy.compare(energy.size() - 2, 2, "eV") == 0)
        energy = trim(energy.substr(0, energy.size() - 2));
      if (auto v = to_double(energy))
        c.shifts.emplace_back(key, *v);
      else
        problems.add(field, "expected an energy in eV, got \"" + value + "\"");
      continue;
    }
    if (section == "absorber" && key.rfind("override.", 0) == 0) {
      const auto parts = split(value, ',');
      const auto u = parts.size() == 2 ? to_double(parts[0]) : std::nullopt;
      const auto r = parts.size() == 2 ? to_double(parts[1]) : std::nullopt;
      if (u && r)
        c.absorber.overrides[key.substr(9)] = {*u, *r};
      else
        problems.add(field, "expected \"U0, r_a\", got \"" + value + "\"");
      continue;
    }
    const auto it = sec->second.find(key);
    if (it == sec->second.end()) {
      problems.add(field, "unknown key");
      continue;
    }
    if (auto err = it->second(value)) problems.add(field, *err);
  }

  // Range and consistency checks.
  std::optional<ElectronConfiguration> electrons;
  if (c.nuclear_charge < 1 || c.nuclear_charge > 118) problems.add("atom.Z", "must lie in [1, 118]");
  try {
    electrons = parse_configuration(c.nuclear_charge, c.configuration);
  } catch (const ConfigError& e) {
    problems.add("atom.configuration", e.what());
  }
  if (c.grid.points < 16 || c.grid.points > 4000) problems.add("grid.points", "must lie in [16, 4000]");
  if (!(c.grid.r_max > 0.0)) problems.add("grid.r_max", "must be positive");
  if (!(c.grid.map_param > 0.0)) problems.add("grid.map", "must be positive");
  if (!(c.scf.mixing > 0.0 && c.scf.mixing <= 1.0)) problems.add("scf.mixing", "must lie in (0, 1]");
  if (!(c.scf.tolerance > 0.0)) problems.add("scf.tolerance", "must be positive");
  if (c.scf.max_iterations < 1) problems.add("scf.max_iterations", "must be at least 1");
  if (!(c.absorber.strength >= 0.0)) problems.add("absorber.strength", "must be non-negative");
  if (!(c.absorber.start < c.grid.r_max)) problems.add("absorber.start", "must lie below grid.r_max");
  if (!(c.absorber.reference_energy >= 0.0))
    problems.add("absorber.reference_energy", "must be non-negative");
  for (const auto& [label, params] : c.absorber.overrides) {
    const std::string field = "absorber.override." + label;
    if (!(params.first >= 0.0)) problems.add(field, "U0 must be non-negative");
    if (!(params.second < c.grid.r_max)) problems.add(field, "r_a must lie below grid.r_max");
    try {
      const auto ref = parse_subshell_ref(label);
      if (electrons && !label_present(*electrons, ref))
        problems.add(field, "orbital " + label + " is not in the configuration");
    } catch (const ConfigError& e) {
      problems.add(field, e.what());
    }
  }
  if (!(c.numeric_c_step > 0.0 && c.numeric_c_step < 0.5)) problems.add("response.numeric_c_step", "must lie in (0, 0.5)");
  if (!(c.epsilon > 0.0)) problems.add("response.epsilon", "must be positive");
  if (!(c.scan.step > 0.0)) problems.add("scan.step", "must be positive");
  if (!(c.scan.start >= 0.0)) problems.add("scan.start", "must be non-negative");
  if (!(c.scan.stop >= c.scan.start)) problems.add("scan.stop", "must not be below scan.start");
  if (!(c.scan.refine_step > 0.0)) problems.add("scan.refine_step", "must be positive");
  if (!(c.scan.refine_threshold > 0.0)) problems.add("scan.refine_threshold", "must be positive");
  if (!(c.scan.predicted_half_width >= 0.0)) problems.add("scan.predicted_half_width", "must be non-negative");
  for (const auto& [a, b] : c.scan.windows)
    if (!(b > a)) problems.add("scan.windows", "each window needs lo < hi");
  for (const auto& [label, e] : c.shifts) {
    try {
      const auto ref = parse_subshell_ref(label);
      if (electrons && !label_present(*electrons, ref))
        problems.add("shifts." + label, "orbital " + label + " is not in the configuration");
      if (!(e < 0.0)) problems.add("shifts." + label, "orbital energy must be negative (eV)");
    } catch (const ConfigError& err) {
      problems.add("shifts." + label, err.what());
    }
  }
  for (const auto& [a, b] : c.fit.windows)
    if (!(b > a)) problems.add("fit.windows", "each window needs lo < hi");
  if (!c.fit.transitions.empty() && c.fit.transitions.size() != c.fit.windows.size())
    problems.add("fit.transitions", "needs one label per fit window");
  if (!(c.fit.step > 0.0)) problems.add("fit.step", "must be positive");
  if (!(c.fit.baseline_window > 0.0)) problems.add("fit.baseline_window", "must be positive");
  for (const auto& t : c.tables.transitions) {
    try {
      const auto [from, to] = parse_transition(t);
      if (electrons && !label_present(*electrons, from))
        problems.add("tables.transitions", "initial orbital of " + t + " is not occupied");
      (void)to;
    } catch (const ConfigError& e) {
      problems.add("tables.transitions", e.what());
    }
  }
  if (!(c.tables.search > 0.0)) problems.add("tables.search", "must be positive");
  if (c.output.threads < 0) problems.add("output.threads", "must be non-negative");
  if (c.output.prefix.empty()) problems.add("output.prefix", "must not be empty");

  if (!problems.items.empty()) {
    std::string msg = std::to_string(problems.items.size()) + " configuration problem(s):";
    for (const auto& [f, w] : problems.items) msg += "\n  " + f + ": " + w;
    throw ConfigError(problems.items.front().first, msg);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const RunConfig& c) {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "[atom]\nZ = " << c.nuclear_charge << "\nconfiguration = " << c.configuration << "\n\n";
  out << "[grid]\npoints = " << c.grid.points << "\nr_max = " << number(c.grid.r_max)
      << "\nmap = " << number(c.grid.map_param) << "\n\n";
  out << "[scf]\nuse_lyp = " << b(c.scf.use_lyp) << "\nmixing = " << number(c.scf.mixing)
      << "\ntolerance = " << number(c.scf.tolerance) << "\nmax_iterations = " << c.scf.max_iterations << "\n\n";
  out << "[absorber]\nenabled = " << b(c.absorber.enabled) << "\nstrength = " << number(c.absorber.strength)
      << "\nstart = " << number(c.absorber.start) << "\nreference_energy = " << number(c.absorber.reference_energy)
      << "\n";
  for (const auto& [label, p] : c.absorber.overrides)
    out << "override." << label << " = " << number(p.first) << ", " << number(p.second) << "\n";
  out << "\n[response]\nmode = " << to_string(c.mode) << "\nkernel = " << to_string(c.kernel)
      << "\nnumeric_c_step = " << number(c.numeric_c_step) << "\nepsilon = " << number(c.epsilon) << "\n\n";
  out << "[scan]\nstart = " << number(c.scan.start) << "\nstop = " << number(c.scan.stop)
      << "\nstep = " << number(c.scan.step) << "\nrefine = " << b(c.scan.refine)
      << "\nrefine_step = " << number(c.scan.refine_step) << "\nrefine_threshold = " << number(c.scan.refine_threshold)
      << "\npredicted_half_width = " << number(c.scan.predicted_half_width)
      << "\nwindows = " << emit_windows(c.scan.windows) << "\n\n";
  out << "[shifts]\n";
  for (const auto& [label, e] : c.shifts) out << label << " = " << number(e) << "\n";
  out << "\n[fit]\nwindows = " << emit_windows(c.fit.windows) << "\ntransitions = " << emit_list(c.fit.transitions)
      << "\nstep = " << number(c.fit.step) << "\nbaseline_window = " << number(c.fit.baseline_window) << "\n\n";
  out << "[tables]\ntransitions = " << emit_list(c.tables.transitions) << "\nsearch = " << number(c.tables.search)
      << "\n\n";
  out << "[output]\ndirectory = " << c.output.directory << "\nprefix = " << c.output.prefix
      << "\ncache = " << c.output.cache << "\nthreads = " << c.output.threads << "\n";
  return out.str();
}

ElectronConfiguration RunConfig::electron_configuration() const {
  return parse_configuration(nuclear_charge, configuration);
}

ScfOptions RunConfig::scf_options() const {
  ScfOptions o;
  o.use_lyp = scf.use_lyp;
  o.mixing = scf.mixing;
  o.tolerance = scf.tolerance;
  o.max_iterations = scf.max_iterations;
  return o;
}

ResponseOptions RunConfig::response_options() const {
  ResponseOptions o;
  o.mode = mode;
  o.kernel.variant = kernel;
  o.kernel.numeric_c_step = numeric_c_step;
  o.green.use_absorber = absorber.enabled;
  o.green.epsilon = epsilon;
  o.green.absorber.base = {absorber.strength, absorber.start};
  o.green.reference_energy = absorber.reference_energy;
  for (const auto& [label, p] : absorber.overrides) o.green.absorber.overrides[label] = {p.first, p.second};
  for (const auto& [label, e] : shifts) o.shifts.overrides.emplace_back(parse_subshell_ref(label), units::to_hartree(e));
  return o;
}

ScanOptions RunConfig::scan_options(int threads) const {
  ScanOptions o;
  o.start_ev = scan.start;
  o.stop_ev = scan.stop;
  o.step_ev = scan.step;
  o.threads = threads;
  o.refine = scan.refine;
  o.refine_step_ev = scan.refine_step;
  o.refine_threshold = scan.refine_threshold;
  o.predicted_half_width_ev = scan.predicted_half_width;
  o.windows = scan.windows;
  return o;
}

} // namespace slhf
