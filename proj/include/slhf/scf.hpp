#pragma once

#include "slhf/multipole.hpp"
#include "slhf/orbitals.hpp"
#include "slhf/potentials.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace slhf {

struct Eigenpair {
  double energy = 0.0;
  Eigen::VectorXd R; // interior samples, sum_j w_j R_j^2 = 1
};

/// Lowest `count` eigenpairs of -1/2 d^2/dr^2 + l(l+1)/(2r^2) + v_eff with
/// Dirichlet conditions at 0 and r_max, ordered by energy. R is positive
/// at the first node.
std::vector<Eigenpair> solve_radial_eigen(const RadialGrid& grid, const Eigen::VectorXd& v_eff,
                                          int l, int count);

/// Number of sign changes of R, ignoring samples below 1e-8 of the maximum.
int count_nodes(const Eigen::VectorXd& R);

struct ScfOptions {
  bool use_lyp = false;
  double mixing = 0.4;
  double tolerance = 1e-8; // sup-norm change of the input potential (hartree)
  int max_iterations = 400;
  ExchangeOptions exchange;
};

/// Self-consistent SLHF (+ optional LYP) solution for one configuration.
/// Orbitals are selected by radial node count n - l - 1, so excited
/// configurations keep their holes and particles.
SpinOrbitalSet run_scf(const ElectronConfiguration& config, const GridPtr& grid,
                       const ScfOptions& options = {});

/// Potentials, charges and energies rebuilt from a fixed set of orbitals;
/// returns the output potentials for the given orbitals (one SCF map step).
std::array<EffectivePotential, 2> build_potentials(const MultipoleSolver& multipole,
                                                   int nuclear_charge,
                                                   const std::array<Channel, 2>& orbitals,
                                                   const ScfOptions& options,
                                                   double* correlation_energy = nullptr);

/// Eigenpair of the converged potential of spin s with quantum numbers
/// (n, l); occupied or not.
RadialOrbital orbital_on_demand(const SpinOrbitalSet& set, int n, int l, Spin s);

} // namespace slhf
