#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace probitlr {

/// Argument outside the mathematical domain of an operation (tau <= 0, zero vector, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operand shapes disagree (dataset dimension vs parameter length, ...).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An integrand produced a non-finite value at a quadrature node.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, double node)
      : std::runtime_error(what), node_(node) {}
  double node() const noexcept { return node_; }

 private:
  double node_;
};

/// Root bracketing for the link equation failed.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The optimizer hit a non-finite objective; carries the last finite iterate.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, Eigen::VectorXd iterate, int iteration)
      : std::runtime_error(what), iterate_(std::move(iterate)), iteration_(iteration) {}
  const Eigen::VectorXd& iterate() const noexcept { return iterate_; }
  int iteration() const noexcept { return iteration_; }

 private:
  Eigen::VectorXd iterate_;
  int iteration_;
};

/// A fit returned gamma_hat == 0, so no direction exists.
class DegenerateFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The minimum-norm-point iteration produced neither certificate.
class IndeterminateError : public std::runtime_error {
 public:
  IndeterminateError(const std::string& what, double witness_norm)
      : std::runtime_error(what), witness_norm_(witness_norm) {}
  double witness_norm() const noexcept { return witness_norm_; }

 private:
  double witness_norm_;
};

/// Malformed input file or configuration.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace probitlr
