#pragma once

#include "slhf/radial_grid.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>

namespace slhf {

/// Radial multipole integrals
///
///   Y_k[f](r) = int_0^rmax  r_<^k / r_>^{k+1} f(r') dr'
///
/// obtained from the equivalent boundary-value problem
/// y'' - k(k+1)/r^2 y = -(2k+1) f / r with y = r Y_k, which keeps the
/// pseudospectral accuracy (the kernel itself has a kink at r = r').
/// Factorizations are cached per k; the solver is safe to share between
/// threads.
class MultipoleSolver {
public:
  explicit MultipoleSolver(GridPtr grid);

  const RadialGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }

  /// f and the result are sampled on interior nodes.
  Eigen::VectorXd potential(int k, const Eigen::VectorXd& f) const;

  /// Dense operator P with Y_k[f] = P f.
  const Eigen::MatrixXd& matrix(int k) const;

private:
  struct Entry {
    Eigen::LLT<Eigen::MatrixXd> neg_op;
    Eigen::VectorXd boundary;  // r_max^-k (r/r_max)^{k+1}
    Eigen::VectorXd moment;    // w_j r_j^k
    std::unique_ptr<Eigen::MatrixXd> dense;
  };
  Entry& entry(int k) const;

  GridPtr grid_;
  mutable std::mutex mutex_;
  mutable std::map<int, std::unique_ptr<Entry>> cache_;
};

} // namespace slhf
