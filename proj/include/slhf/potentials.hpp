#pragma once

#include "slhf/multipole.hpp"
#include "slhf/orbitals.hpp"

#include <map>
#include <optional>
#include <string>

namespace slhf {

/// Hartree potential of a spherical charge. `radial_charge` is the charge per
/// unit r (4 pi r^2 rho) on interior nodes.
Eigen::VectorXd compute_hartree(const MultipoleSolver& multipole, const Eigen::VectorXd& radial_charge);

enum class ExchangeSolve { direct, fixed_point };

struct ExchangeOptions {
  ExchangeSolve method = ExchangeSolve::direct;
  double tolerance = 1e-8; // fixed point: max change in the constants D
  int max_iterations = 200;
  double density_floor = 1e-15; // below this rho_sigma the potential is -1/r
  bool corrections = true;      // false: Slater term only
};

struct ExchangeResult {
  Eigen::VectorXd potential;
  Eigen::VectorXd slater;
  /// D_ac = <a|V_x|c> + K_ac for same-l pairs, indexed by orbital position.
  Eigen::MatrixXd constants;
  int iterations = 0;
};

/// Spherically averaged SLHF exchange potential of one spin channel.
///
/// V_x = V_S + sum_{ac, l_a = l_c} n_ac R_a R_c D_ac / sum_a w_a R_a^2, where
/// V_S is the Slater potential, n_aa = w_a, n_ac = w_a w_c / (2l + 1), and the
/// constants D solve the self-consistency condition with D_hh = 0 for the
/// highest occupied orbital h. Same-subshell pair weights are ensemble
/// averages over the distributions of w electrons among 2l + 1 m states.
ExchangeResult compute_slhf_exchange(const MultipoleSolver& multipole, const Channel& orbitals,
                                     const ExchangeOptions& options = {});

/// Weight of the k-th multipole in the exchange interaction of subshells a, b
/// (w_a w_b (l_a k l_b; 0 0 0)^2 for distinct subshells).
double exchange_pair_weight(const RadialOrbital& a, const RadialOrbital& b, int k, bool same);

struct AbsorberParams {
  double strength = 0.1; // U0, hartree
  double start = -1.0;   // r_a, bohr; negative selects 0.2 r_max
};

/// Linear absorber; per-orbital overrides keyed by subshell label such as
/// "2s" (both spins) or "2s↑".
struct AbsorberSpec {
  AbsorberParams base;
  std::map<std::string, AbsorberParams> overrides;

  AbsorberParams for_orbital(int n, int l, Spin s) const;
};

/// U(r) on interior nodes: 0 below r_a, -U0 (r - r_a)/(r_max - r_a) above.
Eigen::VectorXd build_absorber(const AbsorberParams& params, const RadialGrid& grid);
Eigen::VectorXd build_absorber(const AbsorberSpec& spec, const RadialGrid& grid);

} // namespace slhf
