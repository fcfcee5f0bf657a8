#include "slhf/multipole.hpp"

#include "slhf/errors.hpp"

#include <cmath>

namespace slhf {

MultipoleSolver::MultipoleSolver(GridPtr grid) : grid_(std::move(grid)) {}

MultipoleSolver::Entry& MultipoleSolver::entry(int k) const {
  if (k < 0) throw ContractError("multipole order must be nonnegative");
  std::lock_guard lock(mutex_);
  auto& slot = cache_[k];
  if (!slot) {
    const auto& g = *grid_;
    auto e = std::make_unique<Entry>();
    Eigen::MatrixXd op = -g.laplacian();
    op.diagonal().array() += k * (k + 1.0) / g.r().array().square();
    e->neg_op.compute(op);
    if (e->neg_op.info() != Eigen::Success)
      throw NumericalError("multipole operator factorization failed");
    const double rmax = g.r_max();
    e->boundary = (g.r().array() / rmax).pow(k + 1) * std::pow(rmax, -k);
    e->moment = g.weights().array() * g.r().array().pow(k);
    slot = std::move(e);
  }
  return *slot;
}

Eigen::VectorXd MultipoleSolver::potential(int k, const Eigen::VectorXd& f) const {
  const auto& g = *grid_;
  if (f.size() != g.size()) throw ContractError("multipole: sample count mismatch");
  const Entry& e = entry(k);
  const Eigen::VectorXd rhs =
      g.sqrt_weights().cwiseProduct((2.0 * k + 1.0) * f.cwiseQuotient(g.r()));
  Eigen::VectorXd y = e.neg_op.solve(rhs).cwiseQuotient(g.sqrt_weights());
  y += e.moment.dot(f) * e.boundary;
  return y.cwiseQuotient(g.r());
}

const Eigen::MatrixXd& MultipoleSolver::matrix(int k) const {
  Entry& e = entry(k);
  std::lock_guard lock(mutex_);
  if (!e.dense) {
    const auto& g = *grid_;
    const int m = g.size();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j)
      rhs(j, j) = g.sqrt_weights()(j) * (2.0 * k + 1.0) / g.r()(j);
    Eigen::MatrixXd p = e.neg_op.solve(rhs);
    p = g.sqrt_weights().cwiseInverse().asDiagonal() * p;
    p.noalias() += e.boundary * e.moment.transpose();
    p = g.r().cwiseInverse().asDiagonal() * p;
    e.dense = std::make_unique<Eigen::MatrixXd>(std::move(p));
  }
  return *e.dense;
}

} // namespace slhf
