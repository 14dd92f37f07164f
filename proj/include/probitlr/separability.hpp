#pragma once

// Linear separability through the origin, decided with certificates, and
// Cover's separation probability for labels independent of the covariates.

#include <cstdint>
#include <optional>
#include <utility>

#include <Eigen/Core>

#include "probitlr/model.hpp"

namespace probitlr {

struct MinNormPoint {
  Eigen::VectorXd point;   // sum_i lambda_i P_i
  Eigen::VectorXd lambda;  // length n, on the simplex, sparse
  int iterations = 0;
  bool converged = false;  // optimality gap closed (or the point reached zero_tol)
};

/// Minimum-norm point of the convex hull of the rows of P, by Wolfe's
/// algorithm (a fully corrective Frank-Wolfe method that keeps an active set
/// of affinely independent rows and re-solves the affine subproblem exactly).
/// Stops early once the norm drops to zero_tol.
MinNormPoint min_norm_point(const Eigen::MatrixXd& P, double zero_tol = 0.0, int max_iter = 100000);

struct SeparabilityVerdict {
  bool separable = false;
  std::optional<Eigen::VectorXd> separator;  // min_i y_i x_i^T gamma >= 1
  std::optional<Eigen::VectorXd> lambda;     // simplex weights, ||sum lambda_i u_i|| <= tol
  double witness_norm = 0.0;  // distance of the normalized hull from the origin (best estimate)
  double tol = 0.0;
};

/// Decides whether some gamma has y_i x_i^T gamma > 0 for all i. Rows y_i x_i are
/// normalized to unit length first, so tol is absolute on that scale. Zero
/// rows are rejected with a DomainError; failure to produce either
/// certificate raises IndeterminateError.
SeparabilityVerdict is_separable(const Dataset& data, double tol = 1e-9, int max_iter = 100000);

/// Re-checks the certificate in verdict against the data.
bool verify_certificate(const Dataset& data, const SeparabilityVerdict& verdict);

/// 2^{1-n} sum_{k=0}^{p-1} C(n-1, k), evaluated in log space.
double cover_probability(long long n, long long p);

/// Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_interval(long long successes, long long trials, double z = 1.959963984540054);

/// Replicated separability experiment. Without sigma the labels are
/// independent Rademacher signs (the setting of cover_probability); with
/// sigma they follow the probit model with a uniformly drawn beta*.
/// Replicate r uses the stream derive_stream_seed(seed, 0, r).
struct SeparabilityExperiment {
  long long n = 0;
  int p = 0;
  long long reps = 0;
  std::uint64_t seed = 0;
  std::optional<double> sigma;
};

struct SeparabilityTally {
  long long separable = 0;
  long long indeterminate = 0;  // counted as not separable
  long long reps = 0;
  double frequency() const { return reps ? static_cast<double>(separable) / static_cast<double>(reps) : 0.0; }
};

SeparabilityTally run_separability(const SeparabilityExperiment& exp);

}  // namespace probitlr
