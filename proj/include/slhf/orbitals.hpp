#pragma once

#include "slhf/configuration.hpp"
#include "slhf/radial_grid.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace slhf {

/// Radial spin-orbital on interior grid nodes. `R` holds the reduced function
/// u = r R_{nl sigma}(r), normalized as int u^2 dr = 1.
struct RadialOrbital {
  int n = 1;
  int l = 0;
  Spin spin = Spin::up;
  double occupancy = 0.0;
  double energy = 0.0;
  Eigen::VectorXd R;

  std::string label() const { return Subshell{n, l, spin, occupancy}.label(); }
};

using Channel = std::vector<RadialOrbital>;

/// Radial charge sum_a w_a R_a^2 (integrates to N_sigma over r).
Eigen::VectorXd radial_charge(const Channel& orbitals, int size);

/// Spin-dependent local potential and its parts, on interior nodes.
struct EffectivePotential {
  Spin spin = Spin::up;
  int nuclear_charge = 0;
  Eigen::VectorXd v_nuclear;
  Eigen::VectorXd v_hartree;
  Eigen::VectorXd v_exchange;
  Eigen::VectorXd v_correlation;
  Eigen::VectorXd v_total;

  void assemble() { v_total = v_nuclear + v_hartree + v_exchange + v_correlation; }
};

struct ScfDiagnostics {
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;
  double correlation_energy = 0.0;
};

/// Converged self-consistent state of one electron configuration.
struct SpinOrbitalSet {
  GridPtr grid;
  ElectronConfiguration config;
  std::array<Channel, 2> orbitals;
  std::array<Eigen::VectorXd, 2> charge; // radial charge per spin
  std::array<EffectivePotential, 2> potential;
  ScfDiagnostics diagnostics;

  const Channel& channel(Spin s) const { return orbitals[index(s)]; }
  const EffectivePotential& effective(Spin s) const { return potential[index(s)]; }
  /// Throws ContractError when the subshell is not occupied.
  const RadialOrbital& orbital(int n, int l, Spin s) const;
  const RadialOrbital* find(int n, int l, Spin s) const;
  /// Highest occupied orbital energy over both spins.
  double homo_energy() const;
};

} // namespace slhf
