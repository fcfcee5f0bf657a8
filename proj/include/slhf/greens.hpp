#pragma once

#include "slhf/radial_grid.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace slhf {

using cplx = std::complex<double>;

/// Radial Green function of
///   [E + (1/2r^2) d/dr r^2 d/dr - L(L+1)/2r^2 - v(r) - iU(r)] G = delta(r - r')/r^2
/// on interior node pairs. `scaled` holds X = (E - H - iU)^{-1} in the
/// symmetric sqrt(w) basis, so G_ij = X_ij / (sqrt(w_i w_j) r_i r_j).
struct RadialGreenFunction {
  int L = 0;
  cplx energy;
  bool absorbing = false;
  std::string source_orbital;
  Eigen::MatrixXcd scaled;

  /// G(r_i, r_j) on interior nodes.
  Eigen::MatrixXcd values(const RadialGrid& grid) const;
};

/// Symmetric radial Hamiltonian -1/2 d^2/dr^2 + L(L+1)/2r^2 + v in the
/// sqrt(w) basis (Dirichlet at 0 and r_max).
Eigen::MatrixXd radial_hamiltonian(const RadialGrid& grid, const Eigen::VectorXd& v_eff, int L);

/// Direct dense solve. `absorber` (may be null) is U(r) <= 0 on interior
/// nodes. Throws NumericalError when E - H is numerically singular.
RadialGreenFunction build_green(const RadialGrid& grid, const Eigen::VectorXd& v_eff,
                                const Eigen::VectorXd* absorber, int L, cplx energy);

enum class OuterBoundary { outgoing, dirichlet };

struct WronskianInfo {
  cplx wronskian;
  double spread = 0.0; // max relative deviation of W over interior nodes
};

/// Validation backend: G = (2/W) phi(r_<) psi(r_>) / (r r') from ODE
/// solutions regular at the origin (phi) and outgoing r h_L^(1)(kr) or
/// vanishing at r_max (psi). The potential is a callable of r; near the
/// origin it must behave as -Z/r + const.
RadialGreenFunction build_green_wronskian(const RadialGrid& grid,
                                          const std::function<double(double)>& v_eff, int L,
                                          cplx energy,
                                          OuterBoundary boundary = OuterBoundary::outgoing,
                                          WronskianInfo* info = nullptr);

/// Same, with v_eff sampled on interior nodes (interpolated as r v(r)).
RadialGreenFunction build_green_wronskian(const RadialGrid& grid, const Eigen::VectorXd& v_eff,
                                          int L, cplx energy,
                                          OuterBoundary boundary = OuterBoundary::outgoing,
                                          WronskianInfo* info = nullptr);

/// Action of the Wronskian Green function on a smooth source,
///   u(r_i) = int G(r_i, r') f(r') r'^2 dr',
/// with the two partial integrals carried along the ODE solutions so that the
/// kink of G at r = r' never enters a quadrature.
Eigen::VectorXcd wronskian_green_action(const RadialGrid& grid,
                                        const std::function<double(double)>& v_eff, int L,
                                        cplx energy, const std::function<double(double)>& source,
                                        OuterBoundary boundary = OuterBoundary::dirichlet);

/// Riccati-Hankel r h_L^(1)(k r) and its r-derivative.
std::pair<cplx, cplx> riccati_hankel(int L, cplx k, double r);

/// Caches the real Hamiltonians per (channel, L) for repeated solves at many
/// energies; thread-safe.
class GreenFactory {
public:
  explicit GreenFactory(GridPtr grid) : grid_(std::move(grid)) {}

  void set_potential(int channel, Eigen::VectorXd v_eff);

  /// X = (E - H - iU)^{-1} for the channel potential.
  Eigen::MatrixXcd scaled(int channel, int L, cplx energy, const Eigen::VectorXd* absorber) const;

  /// X rhs without forming X.
  Eigen::MatrixXcd solve(int channel, int L, cplx energy, const Eigen::VectorXd* absorber,
                         const Eigen::MatrixXcd& rhs) const;

  const RadialGrid& grid() const { return *grid_; }

private:
  const Eigen::MatrixXd& hamiltonian(int channel, int L) const;

  GridPtr grid_;
  std::map<int, Eigen::VectorXd> potentials_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, int>, std::unique_ptr<Eigen::MatrixXd>> cache_;
};

} // namespace slhf
