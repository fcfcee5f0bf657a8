#include "slhf/kernels.hpp"

#include "slhf/angular.hpp"
#include "slhf/errors.hpp"
#include "slhf/lyp.hpp"

#include <cmath>
#include <numbers>

namespace slhf {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;
constexpr double contact_floor = 1e-15;

struct VariantName {
  KernelVariant v;
  const char* name;
};

constexpr VariantName variant_names[] = {
    {KernelVariant::none, "none"},
    {KernelVariant::hartree, "hartree"},
    {KernelVariant::hartree, "hartree-only"},
    {KernelVariant::hartree_alda_x, "hartree+alda-x"},
    {KernelVariant::hartree_alda_x_numeric_c, "hartree+alda-x+numeric-c"},
    {KernelVariant::hartree_slater_x, "hartree+slater-x"},
    {KernelVariant::hartree_slater_x_numeric_c, "hartree+slater-x+numeric-c"},
};

double density3d(const RadialGrid& grid, const Eigen::VectorXd& charge, int i) {
  const double r = grid.r()(i);
  return charge(i) / (four_pi * r * r);
}

// Angular weight of a same-subshell pair with occupancy w of 2l+1 orbitals,
// averaged over the ensemble of m-configurations: <n_m n_m'> = c1 + d delta_mm'
// with c1 = w(w-1)/((2l+1)2l) and d = w/(2l+1) - c1. The c1 part is the
// m-averaged product w^2 P_l^2; the diagonal part, averaged over rotations,
// weights the K-th Legendre component of P_l^2 by 1/(2K+1).
double same_subshell_weight(int l, double w, int k, int L) {
  const double g = 2 * l + 1;
  const double c1 = l == 0 ? 0.0 : w * (w - 1.0) / (g * 2.0 * l);
  const double dd = w / g - c1;
  double out = c1 * g * g * legendre_quadruple_integral(l, l, k, L);
  for (int K = 0; K <= 2 * l; K += 2) {
    const double a = wigner3j_zero(l, l, K);
    const double b = wigner3j_zero(K, k, L);
    out += dd * g * g * a * a * 2.0 * b * b;
  }
  return out;
}

} // namespace

KernelVariant parse_kernel_variant(std::string_view name) {
  for (const auto& [v, n] : variant_names)
    if (name == n) return v;
  std::string known;
  for (const auto& [v, n] : variant_names) known += std::string(known.empty() ? "" : ", ") + n;
  throw ConfigError("response.kernel", "unknown kernel \"" + std::string(name) + "\" (known: " + known + ")");
}

std::string to_string(KernelVariant v) {
  for (const auto& [vv, n] : variant_names)
    if (vv == v) return n;
  return "?";
}

bool has_hartree(KernelVariant v) { return v != KernelVariant::none; }
bool has_alda_x(KernelVariant v) {
  return v == KernelVariant::hartree_alda_x || v == KernelVariant::hartree_alda_x_numeric_c;
}
bool has_slater_x(KernelVariant v) {
  return v == KernelVariant::hartree_slater_x || v == KernelVariant::hartree_slater_x_numeric_c;
}
bool has_numeric_c(KernelVariant v) {
  return v == KernelVariant::hartree_alda_x_numeric_c || v == KernelVariant::hartree_slater_x_numeric_c;
}

Eigen::MatrixXd hartree_kernel_partialwave(const RadialGrid& grid, int L) {
  const auto& r = grid.r();
  const int m = grid.size();
  Eigen::MatrixXd K(m, m);
  const double c = four_pi / (2 * L + 1);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const double lo = std::min(r(i), r(j)), hi = std::max(r(i), r(j));
      K(i, j) = c * std::pow(lo, L) / std::pow(hi, L + 1);
    }
  return K;
}

double alda_x_kernel(double rho_sigma) {
  if (!(rho_sigma >= contact_floor)) return 0.0;
  return -(1.0 / 3.0) * std::cbrt(6.0 / std::numbers::pi) * std::pow(rho_sigma, -2.0 / 3.0);
}

ContactKernel xc_kernel(const RadialGrid& grid, const Eigen::VectorXd& charge_up,
                        const Eigen::VectorXd& charge_down, const KernelOption& option) {
  const int m = grid.size();
  if (charge_up.size() != m || charge_down.size() != m)
    throw ContractError("xc_kernel: charge size does not match the grid");
  ContactKernel out;
  for (auto& v : out.values) v = Eigen::VectorXd::Zero(m);
  const std::array<const Eigen::VectorXd*, 2> q = {&charge_up, &charge_down};

  if (has_alda_x(option.variant))
    for (int s = 0; s < 2; ++s)
      for (int i = 0; i < m; ++i) out.values[3 * s](i) = alda_x_kernel(density3d(grid, *q[s], i));

  if (has_numeric_c(option.variant)) {
    const double h = option.numeric_c_step;
    if (!(h > 0.0 && h < 0.5)) throw ConfigError("response.numeric_c_step", "must lie in (0, 0.5)");
    for (int t = 0; t < 2; ++t) {
      if (q[t]->maxCoeff() <= 0.0) continue;
      Eigen::VectorXd plus[2] = {*q[0], *q[1]}, minus[2] = {*q[0], *q[1]};
      plus[t] *= 1.0 + h;
      minus[t] *= 1.0 - h;
      const auto vp = compute_lyp_correlation(grid, plus[0], plus[1]);
      const auto vm = compute_lyp_correlation(grid, minus[0], minus[1]);
      for (int s = 0; s < 2; ++s)
        for (int i = 0; i < m; ++i) {
          const double rho = density3d(grid, *q[t], i);
          if (rho < contact_floor) continue;
          out.values[2 * s + t](i) += (vp.potential[s](i) - vm.potential[s](i)) / (2.0 * h * rho);
        }
    }
  }
  return out;
}

Eigen::MatrixXd hartree_block(const MultipoleSolver& multipole, int L) {
  const auto& grid = multipole.grid();
  const Eigen::VectorXd d = grid.r().cwiseProduct(grid.sqrt_weights());
  const Eigen::VectorXd right = grid.r().cwiseProduct(grid.r()).cwiseQuotient(d);
  return (four_pi / (2 * L + 1)) * d.asDiagonal() * multipole.matrix(L) * right.asDiagonal();
}

Eigen::MatrixXd slater_x_block(const MultipoleSolver& multipole, const Channel& orbitals, int L,
                               double density_floor) {
  const auto& grid = multipole.grid();
  const int m = grid.size();
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(m, m);
  if (orbitals.empty()) return F;

  const Eigen::VectorXd& r = grid.r();
  const Eigen::VectorXd d = r.cwiseProduct(grid.sqrt_weights());
  const Eigen::VectorXd dens = radial_charge(orbitals, m);
  int homo = 0;
  for (int a = 1; a < static_cast<int>(orbitals.size()); ++a)
    if (orbitals[a].energy > orbitals[homo].energy) homo = a;

  const int count = static_cast<int>(orbitals.size());
  for (int a = 0; a < count; ++a)
    for (int b = a; b < count; ++b) {
      const auto& oa = orbitals[a];
      const auto& ob = orbitals[b];
      // t_ab = u_a u_b / sum_c w_c u_c^2; in the far tail only the HOMO survives.
      Eigen::VectorXd t(m);
      for (int i = 0; i < m; ++i) {
        if (dens(i) > 0.0 && density3d(grid, dens, i) >= density_floor)
          t(i) = oa.R(i) * ob.R(i) / dens(i);
        else
          t(i) = (a == homo && b == homo) ? 1.0 / oa.occupancy : 0.0;
      }
      const Eigen::VectorXd left = d.cwiseProduct(t);
      const Eigen::VectorXd right = t.cwiseProduct(r).cwiseProduct(r).cwiseQuotient(d);
      for (int k = 0; k <= oa.l + ob.l + L; ++k) {
        const double W = a == b ? same_subshell_weight(oa.l, oa.occupancy, k, L)
                                : 2.0 * oa.occupancy * ob.occupancy * legendre_quadruple_integral(oa.l, ob.l, k, L);
        if (std::abs(W) < 1e-14) continue;
        F.noalias() -= (2.0 * std::numbers::pi * W) *
                       (left.asDiagonal() * multipole.matrix(k) * right.asDiagonal());
      }
    }
  return F;
}

ResponseKernel build_response_kernel(const MultipoleSolver& multipole, const SpinOrbitalSet& set,
                                     const KernelOption& option, int L) {
  const auto& grid = multipole.grid();
  const int m = grid.size();
  ResponseKernel K;
  K.L = L;
  K.active = has_hartree(option.variant);
  for (auto& b : K.blocks) b = Eigen::MatrixXd::Zero(m, m);
  if (!K.active) return K;

  const Eigen::MatrixXd H = hartree_block(multipole, L);
  for (auto& b : K.blocks) b = H;

  if (has_slater_x(option.variant))
    for (Spin s : {Spin::up, Spin::down}) K.blocks[3 * index(s)] += slater_x_block(multipole, set.channel(s), L);

  if (has_alda_x(option.variant) || has_numeric_c(option.variant)) {
    const auto contact = xc_kernel(grid, set.charge[0], set.charge[1], option);
    for (int b = 0; b < 4; ++b) K.blocks[b].diagonal() += contact.values[b];
  }
  return K;
}

} // namespace slhf
