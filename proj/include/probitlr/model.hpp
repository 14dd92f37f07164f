#pragma once

// Probit data generation and exact population-level oracles.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "probitlr/bounds.hpp"
#include "probitlr/geometry.hpp"
#include "probitlr/rng.hpp"

namespace probitlr {

/// Data-generating triple: y = sign(x^T beta* + sigma eps), x ~ N(0, I_p).
struct ModelSpec {
  int p;
  double sigma;
  Direction beta_star;

  ModelSpec(int p, double sigma, Direction beta_star);
};

struct Dataset {
  Eigen::MatrixXd X;  // n x p
  Eigen::VectorXd y;  // entries exactly -1 or +1

  Eigen::Index n() const noexcept { return X.rows(); }
  Eigen::Index p() const noexcept { return X.cols(); }
  /// Throws DimensionError / FormatError if an invariant is broken.
  void validate() const;
};

/// sign with the convention sign(0) = +1.
inline double sign_label(double v) { return v >= 0.0 ? 1.0 : -1.0; }

/// Draws n rows. Each row consumes p normals for x followed by one for eps.
Dataset sample(const ModelSpec& spec, Eigen::Index n, RandomStream& stream);

/// Uniform direction on S^{p-1} (normalized Gaussian vector).
Direction random_direction(Eigen::Index p, RandomStream& stream);

/// CSV with header x1,...,xp,y and 17 significant digits.
void write_dataset_csv(std::ostream& os, const Dataset& data);
Dataset read_dataset_csv(std::istream& is);

/// E |x^T beta| 1{y x^T beta < 0} = (1 - beta^T beta* / sqrt(1 + sigma^2)) / sqrt(2 pi).
double population_unbounded_mean(const Direction& beta, const ModelSpec& spec);

/// E u(beta) - E u(beta*) = ||beta - beta*||^2 / sqrt(8 pi (1 + sigma^2)).
double population_excess_unbounded(const Direction& beta, const ModelSpec& spec);

/// E log(1 + exp(-tau |z|)), the bounded part of the population risk.
double population_bounded_mean(double tau);

/// R(tau, beta) = E log(1 + exp(-y x^T (tau beta))).
double population_risk(double tau, const Direction& beta, const ModelSpec& spec);

/// Same risk written in h-coordinates (beta^T beta* = sqrt(1 - ||h||^2)).
double population_risk_h(double tau, const Eigen::VectorXd& h, const ModelSpec& spec);

/// d/dtau R(tau, beta*) = link_target(sigma) - L(tau); vanishes at tau*.
double population_risk_dtau(double tau, const ModelSpec& spec);

/// R(tau, beta) - R(tau*, beta*), with the bounded part integrated as a
/// single difference so that small excesses do not cancel.
double population_excess_risk(double tau, const Direction& beta, const ModelSpec& spec,
                              double tau_star);

/// Hessian of R in (tau, h) coordinates, ordered (tau, h_1, ..., h_{p-1}).
Eigen::MatrixXd population_hessian(double tau, const Eigen::VectorXd& h, const ModelSpec& spec);

/// Scalar block E z^2 / (exp(tau|z|/2) + exp(-tau|z|/2))^2.
double population_hessian_tau_block(double tau);

/// Margin inequality at one (tau, beta): excess risk >= 1/sqrt(32 pi) *
/// min(1/(1+kappa)^3, (1-3 kappa)/sqrt(1+sigma^2)) * d_*(tau beta)^2.
/// Out-of-band points are returned skipped.
BoundReport margin_check_point(const ModelSpec& spec, double kappa, double tau,
                               const Direction& beta, double tau_star);

/// sample_count random in-band (tau, beta) pairs checked with margin_check_point.
std::vector<BoundReport> margin_check(const ModelSpec& spec, double kappa, int sample_count,
                                      RandomStream& stream);

}  // namespace probitlr
