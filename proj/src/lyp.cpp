#include "slhf/lyp.hpp"

#include "slhf/errors.hpp"

#include <cmath>
#include <numbers>

namespace slhf {

namespace {

// Forward-mode value with gradient in (rho_a, rho_b, g_aa, g_ab, g_bb).
struct Dual {
  double v = 0.0;
  std::array<double, 5> d{};

  Dual() = default;
  Dual(double value) : v(value) {}
  static Dual var(double value, int slot) {
    Dual x(value);
    x.d[slot] = 1.0;
    return x;
  }
};

Dual operator+(Dual a, const Dual& b) {
  a.v += b.v;
  for (int i = 0; i < 5; ++i) a.d[i] += b.d[i];
  return a;
}
Dual operator-(Dual a, const Dual& b) {
  a.v -= b.v;
  for (int i = 0; i < 5; ++i) a.d[i] -= b.d[i];
  return a;
}
Dual operator*(const Dual& a, const Dual& b) {
  Dual r(a.v * b.v);
  for (int i = 0; i < 5; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
Dual operator/(const Dual& a, const Dual& b) {
  Dual r(a.v / b.v);
  for (int i = 0; i < 5; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) / (b.v * b.v);
  return r;
}
Dual pow(const Dual& a, double p) {
  Dual r(std::pow(a.v, p));
  const double f = a.v == 0.0 ? 0.0 : p * std::pow(a.v, p - 1.0);
  for (int i = 0; i < 5; ++i) r.d[i] = f * a.d[i];
  return r;
}
Dual exp(const Dual& a) {
  Dual r(std::exp(a.v));
  for (int i = 0; i < 5; ++i) r.d[i] = r.v * a.d[i];
  return r;
}
double value(const Dual& x) { return x.v; }

template <class T>
T lyp(const T& ra, const T& rb, const T& gaa, const T& gab, const T& gbb) {
  constexpr double a = 0.04918, b = 0.132, c = 0.2533, d = 0.349;
  const double cf = 0.3 * std::pow(3.0 * std::numbers::pi * std::numbers::pi, 2.0 / 3.0);
  using std::exp;
  using std::pow;
  const T rho = ra + rb;
  const T rm13 = pow(rho, -1.0 / 3.0);
  const T den = T(1.0) + d * rm13;
  const T omega = exp(-c * rm13) / den * pow(rho, -11.0 / 3.0);
  const T delta = c * rm13 + d * rm13 / den;
  const T grad2 = gaa + 2.0 * gab + gbb;
  const T bracket = std::pow(2.0, 11.0 / 3.0) * cf * (pow(ra, 8.0 / 3.0) + pow(rb, 8.0 / 3.0)) +
                    (47.0 / 18.0 - 7.0 / 18.0 * delta) * grad2 -
                    (2.5 - delta / 18.0) * (gaa + gbb) -
                    (delta - 11.0) / 9.0 * (ra / rho * gaa + rb / rho * gbb);
  const T rho2 = rho * rho;
  const T tail = -2.0 / 3.0 * rho2 * grad2 + (2.0 / 3.0 * rho2 - ra * ra) * gbb +
                 (2.0 / 3.0 * rho2 - rb * rb) * gaa;
  return -4.0 * a / den * ra * rb / rho - a * b * omega * (ra * rb * bracket + tail);
}

constexpr double density_cutoff = 1e-14;

} // namespace

double lyp_energy_density(double rho_a, double rho_b, double g_aa, double g_ab, double g_bb) {
  if (rho_a + rho_b < density_cutoff) return 0.0;
  return lyp<double>(rho_a, rho_b, g_aa, g_ab, g_bb);
}

LypResult compute_lyp_correlation(const RadialGrid& grid, const Eigen::VectorXd& q_up,
                                  const Eigen::VectorXd& q_down) {
  const int m = grid.size();
  if (q_up.size() != m || q_down.size() != m)
    throw ContractError("compute_lyp_correlation: sample count mismatch");
  if (q_up.minCoeff() < -1e-12 || q_down.minCoeff() < -1e-12)
    throw ContractError("compute_lyp_correlation: negative density");

  const Eigen::VectorXd& r = grid.r();
  const double four_pi = 4.0 * std::numbers::pi;
  const Eigen::MatrixXd& d1 = grid.d1();

  // rho = q / (4 pi r^2); rho' = q' / (4 pi r^2) - 2 q / (4 pi r^3).
  std::array<Eigen::VectorXd, 2> rho, grad;
  const std::array<const Eigen::VectorXd*, 2> q = {&q_up, &q_down};
  for (int s = 0; s < 2; ++s) {
    const Eigen::VectorXd qc = q[s]->cwiseMax(0.0);
    const Eigen::VectorXd dq = grid.interior(d1 * grid.extend(qc));
    rho[s] = qc.array() / (four_pi * r.array().square());
    grad[s] = dq.array() / (four_pi * r.array().square()) - 2.0 * qc.array() / (four_pi * r.array().cube());
  }

  LypResult out;
  out.potential = {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)};
  std::array<Eigen::VectorXd, 2> flux = {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)};
  double energy = 0.0;
  for (int i = 0; i < m; ++i) {
    const double ra = rho[0](i), rb = rho[1](i);
    if (ra + rb < density_cutoff) continue;
    const double ga = grad[0](i), gb = grad[1](i);
    const Dual f = lyp<Dual>(Dual::var(ra, 0), Dual::var(rb, 1), Dual::var(ga * ga, 2),
                             Dual::var(ga * gb, 3), Dual::var(gb * gb, 4));
    energy += grid.weights()(i) * four_pi * r(i) * r(i) * value(f);
    out.potential[0](i) = f.d[0];
    out.potential[1](i) = f.d[1];
    flux[0](i) = 2.0 * f.d[2] * ga + f.d[3] * gb;
    flux[1](i) = 2.0 * f.d[4] * gb + f.d[3] * ga;
  }
  // v_sigma = df/drho_sigma - (1/r^2) d/dr (r^2 X_sigma).
  for (int s = 0; s < 2; ++s) {
    const Eigen::VectorXd r2x = r.cwiseAbs2().cwiseProduct(flux[s]);
    const Eigen::VectorXd div = grid.interior(d1 * grid.extend(r2x));
    out.potential[s] -= div.cwiseQuotient(r.cwiseAbs2());
  }
  out.energy = energy;
  return out;
}

} // namespace slhf
