#include "slhf/configuration.hpp"

#include "slhf/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

namespace slhf {

namespace {

constexpr std::string_view letters = "spdfghik";

constexpr std::string_view up_arrow = "\xE2\x86\x91";   // U+2191
constexpr std::string_view down_arrow = "\xE2\x86\x93"; // U+2193

// Superscript digits 0-9 in UTF-8.
constexpr std::array<std::string_view, 10> superscripts = {
    "\xE2\x81\xB0", "\xC2\xB9",     "\xC2\xB2",     "\xC2\xB3",     "\xE2\x81\xB4",
    "\xE2\x81\xB5", "\xE2\x81\xB6", "\xE2\x81\xB7", "\xE2\x81\xB8", "\xE2\x81\xB9"};

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;

  bool done() const { return pos >= text.size(); }
  char peek() const { return done() ? '\0' : text[pos]; }
  bool eat(std::string_view token) {
    if (text.substr(pos, token.size()) == token) {
      pos += token.size();
      return true;
    }
    return false;
  }
  void skip_space() {
    while (!done() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == ',')) ++pos;
  }
  int superscript_digit() {
    for (int d = 0; d < 10; ++d)
      if (eat(superscripts[d])) return d;
    return -1;
  }
};

[[noreturn]] void fail(std::string_view label, std::size_t pos, const std::string& why) {
  throw ConfigError("configuration", why + " at offset " + std::to_string(pos) + " in \"" +
                                         std::string(label) + "\"");
}

std::optional<Spin> read_spin(Cursor& c) {
  if (c.eat(up_arrow) || c.eat("+")) return Spin::up;
  if (c.eat(down_arrow) || c.eat("-")) return Spin::down;
  return std::nullopt;
}

std::string format_occupancy(double w) {
  if (std::abs(w - std::round(w)) < 1e-12) {
    std::string out;
    for (char ch : std::to_string(static_cast<long>(std::llround(w))))
      out += superscripts[ch - '0'];
    return out;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "^%g", w);
  return buf;
}

struct CoreShell {
  int n, l;
};

const std::map<std::string, std::vector<CoreShell>, std::less<>>& cores() {
  static const std::map<std::string, std::vector<CoreShell>, std::less<>> table = {
      {"He", {{1, 0}}},
      {"Ne", {{1, 0}, {2, 0}, {2, 1}}},
      {"Ar", {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}}},
  };
  return table;
}

} // namespace

const char* to_string(Spin s) { return s == Spin::up ? "up" : "down"; }
const char* arrow(Spin s) { return s == Spin::up ? "\xE2\x86\x91" : "\xE2\x86\x93"; }

char angular_letter(int l) {
  if (l < 0 || l >= static_cast<int>(letters.size()))
    throw ContractError("angular_letter: l out of range");
  return letters[l];
}

int angular_from_letter(char c) {
  const auto p = letters.find(c);
  return p == std::string_view::npos ? -1 : static_cast<int>(p);
}

std::string Subshell::label() const {
  return std::to_string(n) + angular_letter(l) + arrow(spin);
}

std::string SubshellRef::label() const {
  std::string out = std::to_string(n) + angular_letter(l);
  if (spin) out += arrow(*spin);
  return out;
}

SubshellRef parse_subshell_ref(std::string_view text) {
  Cursor c{text};
  c.skip_space();
  SubshellRef ref;
  int n = 0;
  while (!c.done() && c.peek() >= '0' && c.peek() <= '9') n = 10 * n + (text[c.pos++] - '0');
  const int l = angular_from_letter(c.peek());
  if (n <= 0 || l < 0) throw ConfigError("orbital", "malformed subshell \"" + std::string(text) + "\"");
  ++c.pos;
  ref.n = n;
  ref.l = l;
  ref.spin = read_spin(c);
  c.skip_space();
  if (!c.done()) throw ConfigError("orbital", "trailing text in \"" + std::string(text) + "\"");
  if (n <= l) throw ConfigError("orbital", "n must exceed l in \"" + std::string(text) + "\"");
  return ref;
}

double ElectronConfiguration::electrons(Spin s) const {
  double total = 0.0;
  for (const auto& sh : subshells)
    if (sh.spin == s) total += sh.occupancy;
  return total;
}

std::vector<Subshell> ElectronConfiguration::channel(Spin s) const {
  std::vector<Subshell> out;
  for (const auto& sh : subshells)
    if (sh.spin == s) out.push_back(sh);
  return out;
}

const Subshell* ElectronConfiguration::find(int n, int l, Spin s) const {
  for (const auto& sh : subshells)
    if (sh.n == n && sh.l == l && sh.spin == s) return &sh;
  return nullptr;
}

bool ElectronConfiguration::spin_symmetric() const {
  for (const auto& sh : subshells) {
    const Subshell* mirror = find(sh.n, sh.l, other(sh.spin));
    if (!mirror || std::abs(mirror->occupancy - sh.occupancy) > 1e-14) return false;
  }
  return true;
}

std::string ElectronConfiguration::label() const {
  auto sorted = subshells;
  std::sort(sorted.begin(), sorted.end(), [](const Subshell& a, const Subshell& b) {
    return std::make_tuple(a.n, a.l, -index(a.spin)) < std::make_tuple(b.n, b.l, -index(b.spin));
  });
  std::string out;
  for (const auto& sh : sorted) {
    out += sh.label();
    if (std::abs(sh.occupancy - 1.0) > 1e-12) out += format_occupancy(sh.occupancy);
  }
  return out;
}

void ElectronConfiguration::validate() const {
  if (nuclear_charge < 1) throw ConfigError("atom.Z", "nuclear charge must be at least 1");
  if (subshells.empty()) throw ConfigError("configuration", "no occupied subshells");
  for (std::size_t i = 0; i < subshells.size(); ++i) {
    const auto& sh = subshells[i];
    if (sh.l < 0 || sh.n <= sh.l)
      throw ConfigError("configuration", "subshell " + sh.label() + " violates n > l >= 0");
    if (!(sh.occupancy > 0.0) || sh.occupancy > 2 * sh.l + 1 + 1e-12)
      throw ConfigError("configuration", "occupancy of " + sh.label() + " outside (0, 2l+1]");
    for (std::size_t j = 0; j < i; ++j)
      if (subshells[j].n == sh.n && subshells[j].l == sh.l && subshells[j].spin == sh.spin)
        throw ConfigError("configuration", "duplicate subshell " + sh.label());
  }
  if (electrons() > nuclear_charge + 1e-12)
    throw ConfigError("configuration", "more electrons than Z (anions are not supported)");
}

ElectronConfiguration parse_configuration(int nuclear_charge, std::string_view label) {
  ElectronConfiguration cfg;
  cfg.nuclear_charge = nuclear_charge;
  // Accumulate per (n, l, spin) so that repeated mentions add up.
  std::map<std::tuple<int, int, int>, double> occ;
  auto add = [&](int n, int l, Spin s, double w) { occ[{n, l, index(s)}] += w; };
  auto add_unresolved = [&](int n, int l, double w) {
    const double cap = 2 * l + 1;
    const double up = std::min(w, cap);
    add(n, l, Spin::up, up);
    if (w - up > 0) add(n, l, Spin::down, w - up);
  };

  Cursor c{label};
  c.skip_space();
  while (!c.done()) {
    if (c.eat("[")) {
      const auto close = label.find(']', c.pos);
      if (close == std::string_view::npos) fail(label, c.pos, "unterminated core");
      const auto name = label.substr(c.pos, close - c.pos);
      const auto it = cores().find(name);
      if (it == cores().end()) fail(label, c.pos, "unknown core [" + std::string(name) + "]");
      for (const auto& cs : it->second) {
        add(cs.n, cs.l, Spin::up, 2 * cs.l + 1);
        add(cs.n, cs.l, Spin::down, 2 * cs.l + 1);
      }
      c.pos = close + 1;
      c.skip_space();
      continue;
    }
    int n = 0;
    const std::size_t start = c.pos;
    while (!c.done() && c.peek() >= '0' && c.peek() <= '9') n = 10 * n + (label[c.pos++] - '0');
    if (c.pos == start) fail(label, c.pos, "expected principal quantum number");
    const int l = angular_from_letter(c.peek());
    if (l < 0) fail(label, c.pos, "expected orbital letter");
    ++c.pos;
    const auto spin = read_spin(c);

    double w = 1.0;
    bool explicit_occ = false;
    if (int d = c.superscript_digit(); d >= 0) {
      int value = d;
      while ((d = c.superscript_digit()) >= 0) value = 10 * value + d;
      w = value;
      explicit_occ = true;
    } else {
      // "^3" always, or a bare digit run that ends at a separator ("2p6 3s1");
      // otherwise the digits start the next subshell ("1s↓1s↑").
      const bool caret = c.eat("^");
      std::size_t end = c.pos;
      while (end < label.size() && ((label[end] >= '0' && label[end] <= '9') || label[end] == '.')) ++end;
      const bool at_separator = end == label.size() || label[end] == ' ' || label[end] == '\t' ||
                                label[end] == ',' || label[end] == '[';
      if (caret && end == c.pos) fail(label, c.pos, "expected occupancy");
      if (end > c.pos && (caret || at_separator)) {
        w = std::stod(std::string(label.substr(c.pos, end - c.pos)));
        explicit_occ = true;
        c.pos = end;
      }
    }
    if (spin)
      add(n, l, *spin, w);
    else if (explicit_occ)
      add_unresolved(n, l, w);
    else
      add(n, l, Spin::up, 1.0);
    c.skip_space();
  }

  for (const auto& [key, w] : occ) {
    const auto [n, l, s] = key;
    cfg.subshells.push_back({n, l, static_cast<Spin>(s), w});
  }
  cfg.validate();
  return cfg;
}

} // namespace slhf
