#include "slhf/greens.hpp"

#include "slhf/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace slhf {

namespace odeint = boost::numeric::odeint;

Eigen::MatrixXcd RadialGreenFunction::values(const RadialGrid& grid) const {
  const Eigen::VectorXd s = grid.sqrt_weights().cwiseProduct(grid.r()).cwiseInverse();
  return s.asDiagonal() * scaled * s.asDiagonal();
}

Eigen::MatrixXd radial_hamiltonian(const RadialGrid& grid, const Eigen::VectorXd& v_eff, int L) {
  if (v_eff.size() != grid.size()) throw ContractError("radial_hamiltonian: potential sample count mismatch");
  if (L < 0) throw ContractError("radial_hamiltonian: L must be non-negative");
  Eigen::MatrixXd h = -0.5 * grid.laplacian();
  h.diagonal() += 0.5 * L * (L + 1.0) * grid.r().cwiseAbs2().cwiseInverse() + v_eff;
  return h;
}

namespace {

Eigen::PartialPivLU<Eigen::MatrixXcd> factor_shifted(const Eigen::MatrixXd& h, cplx energy,
                                                     const Eigen::VectorXd* absorber) {
  const int m = static_cast<int>(h.rows());
  Eigen::MatrixXcd a = -h.cast<cplx>();
  a.diagonal().array() += energy;
  if (absorber) {
    if (absorber->size() != m) throw ContractError("absorber sample count mismatch");
    a.diagonal() -= cplx(0.0, 1.0) * absorber->cast<cplx>();
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15))
    throw NumericalError("Green function: E - H is singular at E = (" + std::to_string(energy.real()) +
                         ", " + std::to_string(energy.imag()) +
                         "); add a small imaginary part or an absorber");
  return lu;
}

Eigen::MatrixXcd invert_shifted(const Eigen::MatrixXd& h, cplx energy, const Eigen::VectorXd* absorber) {
  return factor_shifted(h, energy, absorber).inverse();
}

} // namespace

RadialGreenFunction build_green(const RadialGrid& grid, const Eigen::VectorXd& v_eff,
                                const Eigen::VectorXd* absorber, int L, cplx energy) {
  RadialGreenFunction g;
  g.L = L;
  g.energy = energy;
  g.absorbing = absorber != nullptr && absorber->cwiseAbs().maxCoeff() > 0.0;
  g.scaled = invert_shifted(radial_hamiltonian(grid, v_eff, L), energy, absorber);
  return g;
}

std::pair<cplx, cplx> riccati_hankel(int L, cplx k, double r) {
  const cplx i(0.0, 1.0);
  const cplx z = k * r;
  const cplx e = std::exp(i * z);
  cplx sum = 0.0, dsum = 0.0;
  double fact = 1.0; // (L+m)! / (m! (L-m)!)
  cplx ipow = 1.0;   // (i/2)^m
  for (int m = 0; m <= L; ++m) {
    if (m > 0) {
      fact *= static_cast<double>((L + m) * (L - m + 1)) / m;
      ipow *= 0.5 * i;
    }
    const cplx c = fact * ipow;
    const cplx zm = std::pow(z, -m);
    sum += c * zm;
    dsum += c * (i * zm - static_cast<double>(m) * zm / z);
  }
  const cplx pre = std::pow(-i, L + 1);
  return {pre * e * sum, k * pre * e * dsum};
}

namespace {

using State = std::array<double, 4>; // Re u, Im u, Re u', Im u'

// u'' = (L(L+1)/r^2 + 2 v - k^2) u, written in t = sign * r.
struct Radial {
  const std::function<double(double)>& v;
  int L;
  cplx k2;
  double sign;

  void operator()(const State& y, State& dy, double t) const {
    const double r = sign * t;
    const cplx u(y[0], y[1]), up(y[2], y[3]);
    const cplx upp = (L * (L + 1.0) / (r * r) + 2.0 * v(r) - k2) * u;
    dy = {sign * up.real(), sign * up.imag(), sign * upp.real(), sign * upp.imag()};
  }
};

// Values (u, u') at the requested radii, integrating from (r0, y0).
std::vector<std::pair<cplx, cplx>> integrate(const Radial& sys, double r0, State y0,
                                             const std::vector<double>& radii) {
  std::vector<double> times;
  times.push_back(sys.sign * r0);
  for (double r : radii) times.push_back(sys.sign * r);
  std::vector<std::pair<cplx, cplx>> out;
  out.reserve(radii.size());
  bool first = true;
  auto observe = [&](const State& y, double) {
    if (first) {
      first = false;
      return;
    }
    out.emplace_back(cplx(y[0], y[1]), cplx(y[2], y[3]));
  };
  auto stepper = odeint::make_dense_output(1e-30, 1e-13, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_times(stepper, sys, y0, times.begin(), times.end(), 1e-4, observe);
  return out;
}

} // namespace

RadialGreenFunction build_green_wronskian(const RadialGrid& grid,
                                          const std::function<double(double)>& v_eff, int L,
                                          cplx energy, OuterBoundary boundary,
                                          WronskianInfo* info) {
  if (L < 0) throw ContractError("build_green_wronskian: L must be non-negative");
  const int m = grid.size();
  const Eigen::VectorXd& r = grid.r();
  const cplx k2 = 2.0 * energy;
  cplx k = std::sqrt(k2);
  if (k.imag() < 0) k = -k;

  std::vector<double> out_r(r.data(), r.data() + m);
  std::vector<double> in_r(out_r.rbegin(), out_r.rend());

  // Regular solution: r^{L+1} (1 - Z r / (L + 1)) near the origin.
  const double r0 = std::min(1e-6, 0.5 * r(0));
  const double z_eff = -r0 * v_eff(r0);
  const double a1 = -z_eff / (L + 1.0);
  const double u0 = std::pow(r0, L + 1) * (1.0 + a1 * r0);
  const double du0 = (L + 1.0) * std::pow(r0, L) + (L + 2.0) * a1 * std::pow(r0, L + 1);
  const auto phi = integrate(Radial{v_eff, L, k2, 1.0}, r0, {u0, 0.0, du0, 0.0}, out_r);

  State start{};
  if (boundary == OuterBoundary::outgoing) {
    const auto [h, dh] = riccati_hankel(L, k, grid.r_max());
    start = {h.real(), h.imag(), dh.real(), dh.imag()};
  } else {
    start = {0.0, 0.0, 1.0, 0.0};
  }
  auto psi = integrate(Radial{v_eff, L, k2, -1.0}, grid.r_max(), start, in_r);
  std::reverse(psi.begin(), psi.end());

  std::vector<cplx> w(m);
  for (int i = 0; i < m; ++i)
    w[i] = phi[i].first * psi[i].second - phi[i].second * psi[i].first;
  const cplx wref = w[m / 2];
  double spread = 0.0;
  for (int i = 0; i < m; ++i) spread = std::max(spread, std::abs(w[i] - wref) / std::abs(wref));
  const double scale = std::abs(phi[m / 2].first * psi[m / 2].second) +
                       std::abs(phi[m / 2].second * psi[m / 2].first);
  if (!(std::abs(wref) > 1e-12 * scale))
    throw NumericalError("build_green_wronskian: vanishing Wronskian (E at a bound eigenvalue)");
  if (info) *info = {wref, spread};

  RadialGreenFunction g;
  g.L = L;
  g.energy = energy;
  g.scaled.resize(m, m);
  const Eigen::VectorXd s = grid.sqrt_weights();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const int lo = std::min(i, j), hi = std::max(i, j);
      const cplx gij = 2.0 / wref * phi[lo].first * psi[hi].first / (r(i) * r(j));
      g.scaled(i, j) = gij * s(i) * s(j) * r(i) * r(j);
    }
  return g;
}

RadialGreenFunction build_green_wronskian(const RadialGrid& grid, const Eigen::VectorXd& v_eff,
                                          int L, cplx energy, OuterBoundary boundary,
                                          WronskianInfo* info) {
  const int m = grid.size();
  if (v_eff.size() != m) throw ContractError("build_green_wronskian: potential sample count mismatch");
  // Barycentric interpolation of r v(r) in the mapped coordinate over the
  // interior nodes.
  const Eigen::VectorXd x = grid.mapped_nodes().segment(1, m);
  Eigen::VectorXd bw(m);
  for (int j = 0; j < m; ++j) {
    double log_mag = 0.0;
    int sgn = 1;
    for (int k = 0; k < m; ++k) {
      if (k == j) continue;
      const double d = x(j) - x(k);
      log_mag -= std::log(std::abs(d));
      if (d < 0) sgn = -sgn;
    }
    bw(j) = sgn * std::exp(log_mag - 0.5 * m * std::log(2.0));
  }
  const Eigen::VectorXd rv = grid.r().cwiseProduct(v_eff);
  auto v = [&](double rr) {
    const double xx = grid.to_x(rr);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < m; ++j) {
      const double d = xx - x(j);
      if (d == 0.0) return v_eff(j);
      const double t = bw(j) / d;
      num += t * rv(j);
      den += t;
    }
    return num / den / rr;
  };
  return build_green_wronskian(grid, std::function<double(double)>(v), L, energy, boundary, info);
}

namespace {

using ActionState = std::array<double, 6>; // u, u', int f u r dr (complex parts)

struct RadialWithSource {
  const std::function<double(double)>& v;
  const std::function<double(double)>& f;
  int L;
  cplx k2;
  double sign;

  void operator()(const ActionState& y, ActionState& dy, double t) const {
    const double r = sign * t;
    const cplx u(y[0], y[1]), up(y[2], y[3]);
    const cplx upp = (L * (L + 1.0) / (r * r) + 2.0 * v(r) - k2) * u;
    const cplx src = f(r) * r * u;
    dy = {sign * up.real(), sign * up.imag(), sign * upp.real(),
          sign * upp.imag(), src.real(), src.imag()};
  }
};

struct ActionSample {
  cplx u, du, integral;
};

std::vector<ActionSample> integrate_action(const RadialWithSource& sys, double r0, ActionState y0,
                                           const std::vector<double>& radii) {
  std::vector<double> times;
  times.push_back(sys.sign * r0);
  for (double r : radii) times.push_back(sys.sign * r);
  std::vector<ActionSample> out;
  bool first = true;
  auto observe = [&](const ActionState& y, double) {
    if (first) {
      first = false;
      return;
    }
    out.push_back({cplx(y[0], y[1]), cplx(y[2], y[3]), cplx(y[4], y[5])});
  };
  auto stepper = odeint::make_dense_output(1e-30, 1e-13, odeint::runge_kutta_dopri5<ActionState>());
  odeint::integrate_times(stepper, sys, y0, times.begin(), times.end(), 1e-4, observe);
  return out;
}

} // namespace

Eigen::VectorXcd wronskian_green_action(const RadialGrid& grid,
                                        const std::function<double(double)>& v_eff, int L,
                                        cplx energy, const std::function<double(double)>& source,
                                        OuterBoundary boundary) {
  const int m = grid.size();
  const Eigen::VectorXd& r = grid.r();
  const cplx k2 = 2.0 * energy;
  cplx k = std::sqrt(k2);
  if (k.imag() < 0) k = -k;
  std::vector<double> out_r(r.data(), r.data() + m);
  std::vector<double> in_r(out_r.rbegin(), out_r.rend());

  const double r0 = std::min(1e-6, 0.5 * r(0));
  const double a1 = r0 * v_eff(r0) / (L + 1.0);
  const double u0 = std::pow(r0, L + 1) * (1.0 + a1 * r0);
  const double du0 = (L + 1.0) * std::pow(r0, L) + (L + 2.0) * a1 * std::pow(r0, L + 1);
  // The integral of f u r over [0, r0] is O(r0^{L+3}) and dropped.
  const auto phi = integrate_action(RadialWithSource{v_eff, source, L, k2, 1.0}, r0,
                                    {u0, 0.0, du0, 0.0, 0.0, 0.0}, out_r);
  ActionState start{};
  if (boundary == OuterBoundary::outgoing) {
    const auto [h, dh] = riccati_hankel(L, k, grid.r_max());
    start = {h.real(), h.imag(), dh.real(), dh.imag(), 0.0, 0.0};
  } else {
    start = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
  }
  // Inward in t = -r: the accumulated integral is -int_{r_max}^{r} = int_r^{r_max}.
  auto psi = integrate_action(RadialWithSource{v_eff, source, L, k2, -1.0}, grid.r_max(), start, in_r);
  std::reverse(psi.begin(), psi.end());

  const cplx w = phi[m / 2].u * psi[m / 2].du - phi[m / 2].du * psi[m / 2].u;
  if (!(std::abs(w) > 0.0)) throw NumericalError("wronskian_green_action: vanishing Wronskian");
  Eigen::VectorXcd out(m);
  for (int i = 0; i < m; ++i)
    out(i) = 2.0 / w * (psi[i].u * phi[i].integral + phi[i].u * psi[i].integral) / r(i);
  return out;
}

void GreenFactory::set_potential(int channel, Eigen::VectorXd v_eff) {
  if (v_eff.size() != grid_->size()) throw ContractError("GreenFactory: potential sample count mismatch");
  std::lock_guard lock(mutex_);
  potentials_[channel] = std::move(v_eff);
  for (auto it = cache_.begin(); it != cache_.end();)
    it = it->first.first == channel ? cache_.erase(it) : std::next(it);
}

const Eigen::MatrixXd& GreenFactory::hamiltonian(int channel, int L) const {
  std::lock_guard lock(mutex_);
  auto& slot = cache_[{channel, L}];
  if (!slot) {
    const auto it = potentials_.find(channel);
    if (it == potentials_.end()) throw ContractError("GreenFactory: no potential for channel");
    slot = std::make_unique<Eigen::MatrixXd>(radial_hamiltonian(*grid_, it->second, L));
  }
  return *slot;
}

Eigen::MatrixXcd GreenFactory::scaled(int channel, int L, cplx energy,
                                      const Eigen::VectorXd* absorber) const {
  return invert_shifted(hamiltonian(channel, L), energy, absorber);
}

Eigen::MatrixXcd GreenFactory::solve(int channel, int L, cplx energy, const Eigen::VectorXd* absorber,
                                     const Eigen::MatrixXcd& rhs) const {
  return factor_shifted(hamiltonian(channel, L), energy, absorber).solve(rhs);
}

} // namespace slhf
