#pragma once

#include <Eigen/Dense>

#include <memory>

namespace slhf {

/// Generalized pseudospectral radial grid.
///
/// Legendre-Gauss-Lobatto points x_j in [-1, 1] are mapped onto [0, r_max]
/// with r(x) = L (1 + x) / (1 - x + 2L / r_max). Node 0 is the origin and
/// node N is r_max. Bound-state problems use the N - 1 interior nodes with
/// Dirichlet conditions at both ends; most radial arrays in this library are
/// stored on those interior nodes.
///
/// For this map the term produced by eliminating the first derivative
/// vanishes, so the Dirichlet second-derivative operator has the symmetric
/// form diag(1/r') W^{1/2} D2x W^{-1/2} diag(1/r') in the basis
/// h_j = sqrt(w_j) R(r_j), where w_j are the radial quadrature weights.
class RadialGrid {
public:
  RadialGrid(int point_count, double r_max, double map_param);

  int point_count() const noexcept { return n_; }
  double r_max() const noexcept { return r_max_; }
  double map_param() const noexcept { return map_param_; }

  // All N + 1 nodes.
  const Eigen::VectorXd& nodes() const noexcept { return nodes_; }
  /// LGL points x_j in [-1, 1] (mapped coordinate of nodes()).
  const Eigen::VectorXd& mapped_nodes() const noexcept { return x_; }
  const Eigen::VectorXd& full_weights() const noexcept { return full_weights_; }
  /// Collocation derivative matrices d/dr and d^2/dr^2 over all nodes.
  const Eigen::MatrixXd& d1() const noexcept { return d1_; }
  const Eigen::MatrixXd& d2() const noexcept { return d2_; }

  // Interior nodes (size N - 1).
  int size() const noexcept { return n_ - 1; }
  const Eigen::VectorXd& r() const noexcept { return r_; }
  const Eigen::VectorXd& weights() const noexcept { return w_; }
  const Eigen::VectorXd& sqrt_weights() const noexcept { return sqrt_w_; }
  /// Symmetric Dirichlet d^2/dr^2 acting on sqrt(w)-scaled samples.
  const Eigen::MatrixXd& laplacian() const noexcept { return laplacian_; }

  /// Collocation d^2/dr^2 on interior samples (Dirichlet), i.e. the
  /// similarity transform W^{-1/2} laplacian() W^{1/2}.
  Eigen::MatrixXd dirichlet_d2() const;

  Eigen::VectorXd interior(const Eigen::VectorXd& full) const;
  Eigen::VectorXd extend(const Eigen::VectorXd& interior, double at_origin = 0.0,
                         double at_rmax = 0.0) const;

  /// Mapped coordinate x(r) and the map derivative dr/dx.
  double to_x(double r) const;
  double map_derivative(double x) const;

  /// Barycentric interpolation of Dirichlet interior samples R(r_j) at an
  /// arbitrary radius, consistent with the GPS representation R / sqrt(r').
  double interpolate(const Eigen::VectorXd& interior_samples, double r) const;

private:
  int n_;
  double r_max_;
  double map_param_;
  double beta_;
  Eigen::VectorXd x_;
  Eigen::VectorXd lgl_weights_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd full_weights_;
  Eigen::VectorXd dr_dx_;
  Eigen::MatrixXd d1_;
  Eigen::MatrixXd d2_;
  Eigen::VectorXd r_;
  Eigen::VectorXd w_;
  Eigen::VectorXd sqrt_w_;
  Eigen::MatrixXd laplacian_;
  Eigen::VectorXd bary_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Builds a grid; throws ConfigError naming the offending field when
/// point_count < 16 or map_param is outside (0, r_max).
GridPtr build_grid(int point_count, double r_max, double map_param);

/// Quadrature sum_j w_j f(r_j) over all N + 1 nodes.
double integrate(const RadialGrid& grid, const Eigen::VectorXd& samples);

/// Quadrature over interior nodes; boundary samples are taken as zero.
double integrate_interior(const RadialGrid& grid, const Eigen::VectorXd& samples);

} // namespace slhf
