#pragma once

#include "slhf/radial_grid.hpp"

#include <Eigen/Dense>

#include <array>

namespace slhf {

struct LypResult {
  std::array<Eigen::VectorXd, 2> potential; // per spin, interior nodes
  double energy = 0.0;
};

/// LYP correlation (second-order gradient form) for spherical spin densities.
/// Inputs are radial charges 4 pi r^2 rho_sigma on interior nodes.
LypResult compute_lyp_correlation(const RadialGrid& grid, const Eigen::VectorXd& charge_up,
                                  const Eigen::VectorXd& charge_down);

/// LYP energy density at a point, from spin densities and the gradient
/// invariants gamma_aa, gamma_ab, gamma_bb.
double lyp_energy_density(double rho_a, double rho_b, double g_aa, double g_ab, double g_bb);

} // namespace slhf
