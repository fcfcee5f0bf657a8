#include "slhf/potentials.hpp"

#include "slhf/angular.hpp"
#include "slhf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

namespace slhf {

Eigen::VectorXd radial_charge(const Channel& orbitals, int size) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(size);
  for (const auto& o : orbitals) {
    if (o.R.size() != size) throw ContractError("radial_charge: orbital sample count mismatch");
    q += o.occupancy * o.R.cwiseAbs2();
  }
  return q;
}

Eigen::VectorXd compute_hartree(const MultipoleSolver& multipole, const Eigen::VectorXd& charge) {
  if (charge.size() != multipole.grid().size())
    throw ContractError("compute_hartree: charge sample count mismatch");
  if (charge.minCoeff() < -1e-12) throw ContractError("compute_hartree: negative density");
  return multipole.potential(0, charge);
}

namespace {

// Ensemble average <n_m n_m'> (m != m') for w electrons among 2l+1 states.
double pair_fraction(double w, int l) {
  if (l == 0) return 0.0;
  return w * (w - 1.0) / ((2.0 * l + 1.0) * 2.0 * l);
}

} // namespace

double exchange_pair_weight(const RadialOrbital& a, const RadialOrbital& b, int k, bool same) {
  const double three_j = wigner3j_zero(a.l, k, b.l);
  const double tj2 = three_j * three_j;
  if (!same) return a.occupancy * b.occupancy * tj2;
  const double deg = 2.0 * a.l + 1.0;
  const double w = a.occupancy;
  const double c1 = pair_fraction(w, a.l);
  return c1 * deg * deg * tj2 + (w - c1 * deg) * deg * tj2 / (2.0 * k + 1.0);
}

ExchangeResult compute_slhf_exchange(const MultipoleSolver& multipole, const Channel& orb,
                                     const ExchangeOptions& options) {
  const RadialGrid& grid = multipole.grid();
  const int m = grid.size();
  const int count = static_cast<int>(orb.size());
  ExchangeResult result;
  result.potential = Eigen::VectorXd::Zero(m);
  result.slater = Eigen::VectorXd::Zero(m);
  result.constants = Eigen::MatrixXd::Zero(count, count);
  if (count == 0) return result;

  const Eigen::VectorXd dens = radial_charge(orb, m);
  const Eigen::VectorXd& r = grid.r();
  const Eigen::VectorXd& w = grid.weights();
  const double four_pi = 4.0 * std::numbers::pi;

  // Nodes where rho_sigma is below the floor take the asymptotic form.
  std::vector<char> regular(m);
  Eigen::VectorXd inv_dens = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    regular[i] = dens(i) / (four_pi * r(i) * r(i)) >= options.density_floor && dens(i) > 0.0;
    if (regular[i]) inv_dens(i) = 1.0 / dens(i);
  }

  std::map<std::tuple<int, int, int>, Eigen::VectorXd> ycache;
  auto yk = [&](int k, int b, int c) -> const Eigen::VectorXd& {
    if (b > c) std::swap(b, c);
    auto key = std::make_tuple(k, b, c);
    auto it = ycache.find(key);
    if (it == ycache.end())
      it = ycache.emplace(key, multipole.potential(k, orb[b].R.cwiseProduct(orb[c].R))).first;
    return it->second;
  };

  // Slater term.
  Eigen::VectorXd num = Eigen::VectorXd::Zero(m);
  for (int a = 0; a < count; ++a)
    for (int b = a; b < count; ++b) {
      const double mult = a == b ? 1.0 : 2.0;
      const Eigen::VectorXd ab = orb[a].R.cwiseProduct(orb[b].R);
      for (int k = std::abs(orb[a].l - orb[b].l); k <= orb[a].l + orb[b].l; k += 2) {
        const double pw = exchange_pair_weight(orb[a], orb[b], k, a == b);
        if (pw == 0.0) continue;
        num += mult * pw * ab.cwiseProduct(yk(k, a, b));
      }
    }
  result.slater = -num.cwiseProduct(inv_dens);

  if (!options.corrections) {
    result.potential = result.slater;
  } else {
    // Same-l pairs (a <= c) and their coefficient functions t_p(r).
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < count; ++a)
      for (int c = a; c < count; ++c)
        if (orb[a].l == orb[c].l) pairs.emplace_back(a, c);
    const int np = static_cast<int>(pairs.size());

    std::vector<Eigen::VectorXd> t(np), prod(np);
    for (int p = 0; p < np; ++p) {
      const auto [a, c] = pairs[p];
      const double coef = a == c ? orb[a].occupancy
                                 : 2.0 * orb[a].occupancy * orb[c].occupancy / (2.0 * orb[a].l + 1.0);
      prod[p] = orb[a].R.cwiseProduct(orb[c].R);
      t[p] = coef * prod[p].cwiseProduct(inv_dens);
    }

    // K_ac = sum_b sum_k kappa_k(a,b,c) int R_a R_b Y_k[R_b R_c].
    Eigen::VectorXd rhs(np);
    for (int p = 0; p < np; ++p) {
      const auto [a, c] = pairs[p];
      double kac = 0.0;
      for (int b = 0; b < count; ++b) {
        const bool same = (b == a || b == c);
        const Eigen::VectorXd ab = orb[a].R.cwiseProduct(orb[b].R);
        for (int k = std::abs(orb[a].l - orb[b].l); k <= orb[a].l + orb[b].l; k += 2) {
          const double kappa = same ? exchange_pair_weight(orb[b], orb[b], k, true) / orb[b].occupancy
                                    : orb[b].occupancy * std::pow(wigner3j_zero(orb[a].l, k, orb[b].l), 2);
          if (kappa == 0.0) continue;
          kac += kappa * w.dot(ab.cwiseProduct(yk(k, b, c)));
        }
      }
      rhs(p) = w.dot(prod[p].cwiseProduct(result.slater)) + kac;
    }

    Eigen::MatrixXd coupling(np, np);
    for (int q = 0; q < np; ++q)
      for (int p = 0; p < np; ++p) coupling(q, p) = w.dot(prod[q].cwiseProduct(t[p]));

    int homo = 0;
    for (int a = 1; a < count; ++a)
      if (orb[a].energy > orb[homo].energy) homo = a;
    int gauge_row = 0;
    for (int p = 0; p < np; ++p)
      if (pairs[p].first == homo && pairs[p].second == homo) gauge_row = p;

    Eigen::VectorXd d = Eigen::VectorXd::Zero(np);
    if (options.method == ExchangeSolve::direct) {
      Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(np, np) - coupling;
      Eigen::VectorXd b = rhs;
      sys.row(gauge_row).setZero();
      sys(gauge_row, gauge_row) = 1.0;
      b(gauge_row) = 0.0;
      d = sys.fullPivLu().solve(b);
      if (!d.allFinite()) throw NumericalError("SLHF: singular constant system");
      result.iterations = 1;
    } else {
      std::vector<double> log;
      bool converged = false;
      for (int it = 1; it <= options.max_iterations; ++it) {
        Eigen::VectorXd next = rhs + coupling * d;
        next(gauge_row) = 0.0;
        const double change = (next - d).cwiseAbs().maxCoeff();
        d = next;
        log.push_back(change);
        result.iterations = it;
        if (change < options.tolerance) {
          converged = true;
          break;
        }
      }
      if (!converged)
        throw NumericalError("SLHF: fixed-point iteration did not converge", std::move(log));
    }

    result.potential = result.slater;
    for (int p = 0; p < np; ++p) {
      result.potential += d(p) * t[p];
      const auto [a, c] = pairs[p];
      result.constants(a, c) = result.constants(c, a) = d(p);
    }
  }

  for (int i = 0; i < m; ++i)
    if (!regular[i]) {
      result.potential(i) = -1.0 / r(i);
      result.slater(i) = -1.0 / r(i);
    }
  return result;
}

AbsorberParams AbsorberSpec::for_orbital(int n, int l, Spin s) const {
  const AbsorberParams* spinless = nullptr;
  for (const auto& [label, params] : overrides) {
    const SubshellRef ref = parse_subshell_ref(label);
    if (!ref.matches(n, l, s)) continue;
    if (ref.spin) return params;
    spinless = &params;
  }
  return spinless ? *spinless : base;
}

Eigen::VectorXd build_absorber(const AbsorberParams& params, const RadialGrid& grid) {
  const double rmax = grid.r_max();
  const double start = params.start < 0.0 ? 0.2 * rmax : params.start;
  if (!(start < rmax)) throw ConfigError("absorber.start", "must lie below r_max");
  if (!(params.strength >= 0.0)) throw ConfigError("absorber.strength", "must be non-negative");
  const Eigen::VectorXd& r = grid.r();
  Eigen::VectorXd u(r.size());
  for (int i = 0; i < r.size(); ++i)
    u(i) = r(i) < start ? 0.0 : -params.strength * (r(i) - start) / (rmax - start);
  return u;
}

Eigen::VectorXd build_absorber(const AbsorberSpec& spec, const RadialGrid& grid) {
  return build_absorber(spec.base, grid);
}

} // namespace slhf
