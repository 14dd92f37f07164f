#pragma once

// Ball-constrained logistic regression:
//   gamma_hat in argmin_{||gamma|| <= M} (1/n) sum_i log(1 + exp(-y_i x_i^T gamma)).

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "probitlr/geometry.hpp"
#include "probitlr/model.hpp"

namespace probitlr {

enum class StepRule { fixed_inverse_lipschitz, backtracking };

struct FitConfig {
  double M = 1.0;
  double tol = 1e-8;
  int max_iter = 200000;
  StepRule step_rule = StepRule::backtracking;
  bool record_history = false;

  void validate() const;
};

struct FitResult {
  Eigen::VectorXd gamma_hat;
  double tau_hat = 0.0;
  std::optional<Direction> beta_hat;  // empty iff gamma_hat == 0
  double loss = 0.0;                  // mean logistic loss at gamma_hat
  double log_loss = 0.0;              // log of the mean loss (finite even when loss underflows)
  double proj_grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool boundary_active = false;
  std::vector<double> loss_history;   // mean loss after each iteration, if requested
};

/// Overflow-safe log(1 + exp(t)).
double softplus(double t);

double logistic_loss(const Eigen::VectorXd& gamma, const Dataset& data);
Eigen::VectorXd loss_gradient(const Eigen::VectorXd& gamma, const Dataset& data);

/// Pointwise split of the loss: b = log(1 + exp(-|x^T gamma|)), u = |x^T gamma| 1{y x^T gamma < 0}.
double bounded_term(const Eigen::VectorXd& gamma, const Eigen::VectorXd& x);
double unbounded_term(const Eigen::VectorXd& gamma, const Eigen::VectorXd& x, double y);

/// Projected gradient with Armijo backtracking (or the fixed 1/L step).
///
/// The iteration runs on log of the mean loss, whose gradient is a positive
/// multiple of the loss gradient, so minimizers and stationarity certificates
/// coincide while separable data at large M (mean loss far below the smallest
/// double) stay representable. proj_grad_norm = ||gamma_k - gamma_{k+1}|| / s_k
/// is measured on that scale.
FitResult fit(const Dataset& data, const FitConfig& cfg,
              const std::optional<Eigen::VectorXd>& init = std::nullopt);

/// (tau_hat, beta_hat); throws DegenerateFitError if gamma_hat == 0.
std::pair<double, Direction> decompose(const FitResult& result);

}  // namespace probitlr
