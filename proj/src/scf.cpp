#include "slhf/scf.hpp"

#include "slhf/errors.hpp"
#include "slhf/lyp.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace slhf {

const RadialOrbital* SpinOrbitalSet::find(int n, int l, Spin s) const {
  for (const auto& o : orbitals[index(s)])
    if (o.n == n && o.l == l) return &o;
  return nullptr;
}

const RadialOrbital& SpinOrbitalSet::orbital(int n, int l, Spin s) const {
  const RadialOrbital* o = find(n, l, s);
  if (!o)
    throw ContractError("orbital " + Subshell{n, l, s, 1.0}.label() + " is not occupied");
  return *o;
}

double SpinOrbitalSet::homo_energy() const {
  double e = -std::numeric_limits<double>::infinity();
  for (const auto& ch : orbitals)
    for (const auto& o : ch) e = std::max(e, o.energy);
  return e;
}

int count_nodes(const Eigen::VectorXd& R) {
  const double cut = 1e-8 * R.cwiseAbs().maxCoeff();
  int nodes = 0;
  int sign = 0;
  for (int i = 0; i < R.size(); ++i) {
    if (std::abs(R(i)) < cut) continue;
    const int s = R(i) > 0 ? 1 : -1;
    if (sign != 0 && s != sign) ++nodes;
    sign = s;
  }
  return nodes;
}

std::vector<Eigenpair> solve_radial_eigen(const RadialGrid& grid, const Eigen::VectorXd& v_eff,
                                          int l, int count) {
  const int m = grid.size();
  if (v_eff.size() != m) throw ContractError("solve_radial_eigen: potential sample count mismatch");
  if (count < 1 || count > m) throw ContractError("solve_radial_eigen: invalid eigenpair count");
  if (!v_eff.allFinite()) throw ContractError("solve_radial_eigen: non-finite potential");

  const Eigen::VectorXd& r = grid.r();
  Eigen::MatrixXd h = -0.5 * grid.laplacian();
  h.diagonal() += (0.5 * l * (l + 1.0) * r.cwiseAbs2().cwiseInverse() + v_eff);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("solve_radial_eigen: eigensolver failed");

  std::vector<Eigenpair> out(count);
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd R = es.eigenvectors().col(k).cwiseQuotient(grid.sqrt_weights());
    const double cut = 1e-8 * R.cwiseAbs().maxCoeff();
    for (int i = 0; i < m; ++i)
      if (std::abs(R(i)) > cut) {
        if (R(i) < 0) R = -R;
        break;
      }
    out[k] = {es.eigenvalues()(k), std::move(R)};
  }
  return out;
}

std::array<EffectivePotential, 2> build_potentials(const MultipoleSolver& multipole, int z,
                                                   const std::array<Channel, 2>& orbitals,
                                                   const ScfOptions& options, double* ecorr) {
  const RadialGrid& grid = multipole.grid();
  const int m = grid.size();
  const Eigen::VectorXd q_up = radial_charge(orbitals[0], m);
  const Eigen::VectorXd q_dn = radial_charge(orbitals[1], m);
  const Eigen::VectorXd vh = compute_hartree(multipole, q_up + q_dn);
  const Eigen::VectorXd vn = -z * grid.r().cwiseInverse();

  std::array<Eigen::VectorXd, 2> vc = {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)};
  if (options.use_lyp) {
    LypResult lyp = compute_lyp_correlation(grid, q_up, q_dn);
    vc = lyp.potential;
    if (ecorr) *ecorr = lyp.energy;
  } else if (ecorr) {
    *ecorr = 0.0;
  }

  std::array<EffectivePotential, 2> out;
  for (int s = 0; s < 2; ++s) {
    auto& p = out[s];
    p.spin = static_cast<Spin>(s);
    p.nuclear_charge = z;
    p.v_nuclear = vn;
    p.v_hartree = vh;
    p.v_exchange = compute_slhf_exchange(multipole, orbitals[s], options.exchange).potential;
    p.v_correlation = vc[s];
    p.assemble();
  }
  return out;
}

namespace {

// -(Z - N + 1)/r at large r, -Z/r near the nucleus.
Eigen::VectorXd initial_potential(const RadialGrid& grid, int z, double electrons) {
  const double tail = std::max(1.0, z - electrons + 1.0);
  const double screen = std::max(0.0, z - tail);
  const double scale = 0.885 * std::pow(static_cast<double>(z), -1.0 / 3.0);
  const Eigen::ArrayXd r = grid.r().array();
  return (-(tail + screen * (-r / scale).exp()) / r).matrix();
}

// Orbitals for one spin channel from its potential; occupied subshells only.
Channel solve_channel(const RadialGrid& grid, const Eigen::VectorXd& v,
                      const std::vector<Subshell>& shells) {
  std::map<int, int> need; // l -> highest node index + 1
  for (const auto& sh : shells) need[sh.l] = std::max(need[sh.l], sh.n - sh.l);
  std::map<int, std::vector<Eigenpair>> pairs;
  for (const auto& [l, count] : need) pairs[l] = solve_radial_eigen(grid, v, l, count);

  Channel out;
  for (const auto& sh : shells) {
    const Eigenpair& ep = pairs[sh.l][sh.n - sh.l - 1];
    out.push_back({sh.n, sh.l, sh.spin, sh.occupancy, ep.energy, ep.R});
  }
  return out;
}

} // namespace

SpinOrbitalSet run_scf(const ElectronConfiguration& config, const GridPtr& grid,
                       const ScfOptions& options) {
  config.validate();
  if (!(options.mixing > 0.0 && options.mixing <= 1.0))
    throw ConfigError("scf.mixing", "must lie in (0, 1]");
  if (!(options.tolerance > 0.0)) throw ConfigError("scf.tolerance", "must be positive");

  MultipoleSolver multipole(grid);
  const bool symmetric = config.spin_symmetric();
  const int z = config.nuclear_charge;
  const std::array<std::vector<Subshell>, 2> shells = {config.channel(Spin::up),
                                                        config.channel(Spin::down)};

  std::array<Eigen::VectorXd, 2> v_in;
  v_in[0] = v_in[1] = initial_potential(*grid, z, config.electrons());

  SpinOrbitalSet set;
  set.grid = grid;
  set.config = config;

  double alpha = options.mixing;
  double previous = std::numeric_limits<double>::infinity();
  std::vector<double> history;
  for (int it = 1; it <= options.max_iterations; ++it) {
    std::array<Channel, 2> orbs;
    orbs[0] = solve_channel(*grid, v_in[0], shells[0]);
    orbs[1] = symmetric ? Channel{} : solve_channel(*grid, v_in[1], shells[1]);
    if (symmetric) {
      orbs[1] = orbs[0];
      for (auto& o : orbs[1]) o.spin = Spin::down;
    }

    double ecorr = 0.0;
    auto out = build_potentials(multipole, z, orbs, options, &ecorr);
    double residual = 0.0;
    for (int s = 0; s < 2; ++s)
      residual = std::max(residual, (out[s].v_total - v_in[s]).cwiseAbs().maxCoeff());
    history.push_back(residual);

    if (residual < options.tolerance) {
      set.orbitals = std::move(orbs);
      for (int s = 0; s < 2; ++s) set.charge[s] = radial_charge(set.orbitals[s], grid->size());
      set.potential = std::move(out);
      set.diagnostics = {it, residual, std::move(history), ecorr};
      return set;
    }
    if (residual > previous) alpha = std::max(0.5 * alpha, 0.02);
    previous = residual;
    for (int s = 0; s < 2; ++s) v_in[s] += alpha * (out[s].v_total - v_in[s]);
  }
  const std::string message = "SCF did not converge within " + std::to_string(options.max_iterations) +
                              " iterations (last residual " + std::to_string(history.back()) + ")";
  throw NumericalError(message, std::move(history));
}

RadialOrbital orbital_on_demand(const SpinOrbitalSet& set, int n, int l, Spin s) {
  if (n <= l || l < 0) throw ContractError("orbital_on_demand: n must exceed l");
  if (const RadialOrbital* o = set.find(n, l, s)) return *o;
  const auto pairs = solve_radial_eigen(*set.grid, set.effective(s).v_total, l, n - l);
  const Eigenpair& ep = pairs.back();
  return {n, l, s, 0.0, ep.energy, ep.R};
}

} // namespace slhf
