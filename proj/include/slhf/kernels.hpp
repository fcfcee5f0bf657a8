#pragma once

#include "slhf/multipole.hpp"
#include "slhf/orbitals.hpp"

#include <array>
#include <string>
#include <string_view>

namespace slhf {

/// Response kernel K_{sigma sigma'} = 1/|r - r'| + f_xc.
///   none                 independent particles (time-independent limit)
///   hartree              Hartree only
///   hartree+alda-x       + adiabatic local spin exchange
///   hartree+slater-x     + exchange kernel -|gamma_s(r,r')|^2 / (|r-r'| rho_s rho_s'),
///                        exact for one-electron spin channels
///   ...+numeric-c        + local finite-difference derivative of the LYP potential
enum class KernelVariant {
  none,
  hartree,
  hartree_alda_x,
  hartree_alda_x_numeric_c,
  hartree_slater_x,
  hartree_slater_x_numeric_c,
};

struct KernelOption {
  KernelVariant variant = KernelVariant::hartree_alda_x;
  double numeric_c_step = 1e-3; // relative density step
};

KernelVariant parse_kernel_variant(std::string_view name);
std::string to_string(KernelVariant v);

bool has_hartree(KernelVariant v);
bool has_alda_x(KernelVariant v);
bool has_slater_x(KernelVariant v);
bool has_numeric_c(KernelVariant v);

/// K_L(r_i, r_j) = 4 pi / (2L + 1) r_<^L / r_>^{L+1} on interior node pairs.
Eigen::MatrixXd hartree_kernel_partialwave(const RadialGrid& grid, int L);

/// Local kernel values f_{sigma sigma'}(r) on interior nodes; the kernel is
/// f(r) delta(r - r') / r^2 in each partial wave.
struct ContactKernel {
  std::array<Eigen::VectorXd, 4> values; // index 2 sigma + sigma'

  const Eigen::VectorXd& operator()(Spin a, Spin b) const { return values[2 * index(a) + index(b)]; }
};

/// Contact part of the kernel from radial charges 4 pi r^2 rho_sigma; zeros
/// for variants without one. Values vanish where rho_sigma is below 1e-15.
ContactKernel xc_kernel(const RadialGrid& grid, const Eigen::VectorXd& charge_up,
                        const Eigen::VectorXd& charge_down, const KernelOption& option);

/// Adiabatic local spin-exchange kernel -(1/3)(6/pi)^{1/3} rho_sigma^{-2/3}.
double alda_x_kernel(double rho_sigma);

/// Operator blocks acting on scaled induced densities
/// x_i = r_i sqrt(w_i) drho(r_i) (partial wave L):
///   phi_ind,sigma (scaled the same way) = sum_sigma' K[sigma][sigma'] x_sigma'.
struct ResponseKernel {
  int L = 1;
  bool active = false;
  std::array<Eigen::MatrixXd, 4> blocks; // index 2 sigma + sigma'

  const Eigen::MatrixXd& operator()(Spin a, Spin b) const { return blocks[2 * index(a) + index(b)]; }
};

ResponseKernel build_response_kernel(const MultipoleSolver& multipole, const SpinOrbitalSet& set,
                                     const KernelOption& option, int L = 1);

/// Scaled-basis Hartree block (4 pi / (2L+1)) D P_L diag(r^2) D^{-1}.
Eigen::MatrixXd hartree_block(const MultipoleSolver& multipole, int L);

/// Scaled-basis exchange block of one spin channel for partial wave L.
Eigen::MatrixXd slater_x_block(const MultipoleSolver& multipole, const Channel& orbitals, int L,
                               double density_floor = 1e-15);

} // namespace slhf
