#include "slhf/radial_grid.hpp"

#include "slhf/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace slhf {

namespace {

// Legendre-Gauss-Lobatto nodes (ascending) plus P_N at each node. Extended
// precision keeps the clustered nodes near x = -1 accurate for the
// derivative matrices built from their differences.
void lgl_nodes(int n, Eigen::Matrix<long double, Eigen::Dynamic, 1>& x,
               Eigen::Matrix<long double, Eigen::Dynamic, 1>& pn) {
  using real = long double;
  x.resize(n + 1);
  pn.resize(n + 1);
  auto legendre = [n](real xi, real& pm1) {
    real p0 = 1.0L, p1 = xi;
    for (int k = 2; k <= n; ++k) {
      const real p2 = ((2 * k - 1) * xi * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    pm1 = p0;
    return p1;
  };
  for (int j = 0; j <= n; ++j) {
    // Chebyshev-Gauss-Lobatto start, Newton on (x P_N - P_{N-1}).
    real xi = -std::cos(std::numbers::pi_v<real> * j / n);
    for (int it = 0; it < 100; ++it) {
      real p0;
      const real p1 = legendre(xi, p0);
      const real dx = (xi * p1 - p0) / ((n + 1) * p1);
      xi -= dx;
      if (std::abs(dx) < 1e-19L) break;
    }
    if (j == 0) xi = -1.0L;
    if (j == n) xi = 1.0L;
    x(j) = xi;
    real unused;
    pn(j) = legendre(xi, unused);
  }
}

} // namespace

RadialGrid::RadialGrid(int point_count, double r_max, double map_param)
    : n_(point_count), r_max_(r_max), map_param_(map_param),
      beta_(2.0 * map_param / r_max) {
  using real = long double;
  using VectorXl = Eigen::Matrix<real, Eigen::Dynamic, 1>;
  const int n = n_;
  VectorXl xl, pn;
  lgl_nodes(n, xl, pn);
  x_ = xl.cast<double>();
  lgl_weights_ = (2.0L / (n * (n + 1.0L) * pn.array().square())).cast<double>();

  Eigen::MatrixXd dx(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    real diag = 0.0L;
    for (int j = 0; j <= n; ++j) {
      if (i == j) continue;
      const real v = pn(i) / (pn(j) * (xl(i) - xl(j)));
      dx(i, j) = static_cast<double>(v);
      diag -= v;
    }
    dx(i, i) = static_cast<double>(diag);
  }

  nodes_.resize(n + 1);
  dr_dx_.resize(n + 1);
  const real L = map_param_, b = beta_;
  VectorXl map_d(n + 1);
  for (int j = 0; j <= n; ++j) {
    const real d = 1.0L - xl(j) + b;
    nodes_(j) = static_cast<double>(L * (1.0L + xl(j)) / d);
    map_d(j) = L * (2.0L + b) / (d * d);
    dr_dx_(j) = static_cast<double>(map_d(j));
  }
  nodes_(0) = 0.0;
  nodes_(n) = r_max_;
  full_weights_ = lgl_weights_.cwiseProduct(dr_dx_);

  // Collocation on f (1 - x + beta)^3 so that 1, r, r^2, r^3 are represented
  // exactly despite the rational map. Rows annihilate constants exactly, so
  // the diagonal is minus the off-diagonal row sum.
  {
    constexpr int weight_power = 3;
    d1_.resize(n + 1, n + 1);
    for (int i = 0; i <= n; ++i) {
      const real qi = std::pow(1.0L - xl(i) + b, weight_power);
      real diag = 0.0L;
      for (int j = 0; j <= n; ++j) {
        if (i == j) continue;
        const real qj = std::pow(1.0L - xl(j) + b, weight_power);
        const real v = qj / qi * pn(i) / (pn(j) * (xl(i) - xl(j))) / map_d(i);
        d1_(i, j) = static_cast<double>(v);
        diag -= v;
      }
      d1_(i, i) = static_cast<double>(diag);
    }
  }
  d2_ = d1_ * d1_;

  const int m = n - 1;
  r_ = nodes_.segment(1, m);
  w_ = full_weights_.segment(1, m);
  sqrt_w_ = w_.cwiseSqrt();

  const Eigen::MatrixXd d2x = (dx * dx).block(1, 1, m, m);
  const Eigen::VectorXd sw = lgl_weights_.segment(1, m).cwiseSqrt();
  Eigen::MatrixXd s = sw.asDiagonal() * d2x * sw.cwiseInverse().asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();
  const Eigen::VectorXd inv_map = dr_dx_.segment(1, m).cwiseInverse();
  laplacian_ = inv_map.asDiagonal() * s * inv_map.asDiagonal();

  // Barycentric weights in log space; products overflow for large N.
  bary_.resize(n + 1);
  for (int j = 0; j <= n; ++j) {
    double log_mag = 0.0;
    int sign = 1;
    for (int k = 0; k <= n; ++k) {
      if (k == j) continue;
      const double diff = x_(j) - x_(k);
      log_mag -= std::log(std::abs(diff));
      if (diff < 0) sign = -sign;
    }
    bary_(j) = sign * std::exp(log_mag - 0.5 * n * std::log(2.0));
  }
}

Eigen::MatrixXd RadialGrid::dirichlet_d2() const {
  return sqrt_w_.cwiseInverse().asDiagonal() * laplacian_ * sqrt_w_.asDiagonal();
}

Eigen::VectorXd RadialGrid::interior(const Eigen::VectorXd& full) const {
  if (full.size() != n_ + 1)
    throw ContractError("interior: expected " + std::to_string(n_ + 1) + " samples");
  return full.segment(1, n_ - 1);
}

Eigen::VectorXd RadialGrid::extend(const Eigen::VectorXd& in, double at_origin,
                                   double at_rmax) const {
  if (in.size() != n_ - 1)
    throw ContractError("extend: expected " + std::to_string(n_ - 1) + " samples");
  Eigen::VectorXd full(n_ + 1);
  full(0) = at_origin;
  full.segment(1, n_ - 1) = in;
  full(n_) = at_rmax;
  return full;
}

double RadialGrid::to_x(double r) const {
  return (r * (1.0 + beta_) - map_param_) / (r + map_param_);
}

double RadialGrid::map_derivative(double x) const {
  const double d = 1.0 - x + beta_;
  return map_param_ * (2.0 + beta_) / (d * d);
}

double RadialGrid::interpolate(const Eigen::VectorXd& samples, double r) const {
  if (samples.size() != n_ - 1) throw ContractError("interpolate: sample count mismatch");
  if (r <= 0.0 || r >= r_max_) return 0.0;
  const double x = to_x(r);
  double num = 0.0, den = 0.0;
  for (int j = 0; j <= n_; ++j) {
    const double diff = x - x_(j);
    if (diff == 0.0) {
      return (j == 0 || j == n_) ? 0.0 : samples(j - 1);
    }
    const double t = bary_(j) / diff;
    den += t;
    if (j > 0 && j < n_) num += t * samples(j - 1) / std::sqrt(dr_dx_(j));
  }
  return std::sqrt(map_derivative(x)) * num / den;
}

GridPtr build_grid(int point_count, double r_max, double map_param) {
  if (point_count < 16) throw ConfigError("grid.points", "must be at least 16");
  if (!(r_max > 0.0)) throw ConfigError("grid.r_max", "must be positive");
  if (!(map_param > 0.0) || !(map_param < r_max))
    throw ConfigError("grid.map", "must lie in (0, r_max)");
  return std::make_shared<const RadialGrid>(point_count, r_max, map_param);
}

double integrate(const RadialGrid& grid, const Eigen::VectorXd& samples) {
  if (samples.size() != grid.point_count() + 1)
    throw ContractError("integrate: expected " + std::to_string(grid.point_count() + 1) +
                        " samples, got " + std::to_string(samples.size()));
  return grid.full_weights().dot(samples);
}

double integrate_interior(const RadialGrid& grid, const Eigen::VectorXd& samples) {
  if (samples.size() != grid.size())
    throw ContractError("integrate_interior: expected " + std::to_string(grid.size()) +
                        " samples, got " + std::to_string(samples.size()));
  return grid.weights().dot(samples);
}

} // namespace slhf
