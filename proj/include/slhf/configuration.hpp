#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slhf {

enum class Spin { up = 0, down = 1 };

inline constexpr int index(Spin s) { return static_cast<int>(s); }
inline constexpr Spin other(Spin s) { return s == Spin::up ? Spin::down : Spin::up; }
const char* to_string(Spin s);
const char* arrow(Spin s);

char angular_letter(int l);
int angular_from_letter(char c);

/// One spin-resolved subshell (n, l, spin) with an m-averaged occupancy.
struct Subshell {
  int n = 1;
  int l = 0;
  Spin spin = Spin::up;
  double occupancy = 1.0;

  std::string label() const; // e.g. "2p↑"
};

/// Identifies a subshell, optionally without a spin ("2s" means both spins).
struct SubshellRef {
  int n = 1;
  int l = 0;
  std::optional<Spin> spin;

  bool matches(int n_, int l_, Spin s) const {
    return n == n_ && l == l_ && (!spin || *spin == s);
  }
  std::string label() const;
};

/// Parses "2s", "2s↑", "2p-", "3d+" (ASCII '+' up, '-' down).
SubshellRef parse_subshell_ref(std::string_view text);

/// Spin-resolved electron configuration of a neutral or positive atom.
struct ElectronConfiguration {
  int nuclear_charge = 1;
  std::vector<Subshell> subshells;

  double electrons(Spin s) const;
  double electrons() const { return electrons(Spin::up) + electrons(Spin::down); }
  std::vector<Subshell> channel(Spin s) const;
  /// Occupied subshell with the largest n (ties: largest l) for a spin; used
  /// only as a fallback before orbital energies are known.
  const Subshell* find(int n, int l, Spin s) const;
  bool spin_symmetric() const;

  /// Canonical label such as "1s↓1s↑2s↓2s↑2p↓³2p↑²3s↑".
  std::string label() const;

  /// Throws ConfigError on n <= l, occupancy outside (0, 2l+1], duplicate
  /// subshells, or more than Z + 1 electrons.
  void validate() const;
};

/// Parses a configuration label. Accepted forms, freely mixed:
///   "1s2 2s2 2p6", "1s^2 2s^2 2p^6", "1s²2s²2p⁶"  (spin-unresolved: spin-up filled first)
///   "1s↓1s↑2s↓2s↑2p↓³2p↑²3s↑", "2p+^2 2p-^3"      (spin-resolved)
///   "[He]", "[Ne]", "[Ar]" closed-shell cores.
/// A bare digit occupancy must end at whitespace, a comma or the end;
/// otherwise the digits start the next subshell.
ElectronConfiguration parse_configuration(int nuclear_charge, std::string_view label);

} // namespace slhf
