#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace slhf {

/// Invalid user-supplied configuration (bad field value, unknown key, ...).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// A caller broke a documented precondition (size mismatch, missing input).
class ContractError : public std::logic_error {
public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

/// A numerical procedure failed (singular system, no convergence).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
  NumericalError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}

  /// Residual / iteration log, when the failing procedure is iterative.
  const std::vector<double>& history() const noexcept { return history_; }

private:
  std::vector<double> history_;
};

} // namespace slhf
