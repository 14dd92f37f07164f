#pragma once

#include <Eigen/Core>

namespace probitlr {

/// A unit vector in R^p.
class Direction {
 public:
  /// Normalizes v; throws DomainError if v is zero or not finite.
  static Direction normalize(const Eigen::VectorXd& v);
  /// Wraps v, which must already have unit norm within 1e-12.
  static Direction from_unit(const Eigen::VectorXd& v);
  /// k-th coordinate vector of R^p.
  static Direction axis(Eigen::Index p, Eigen::Index k = 0);

  const Eigen::VectorXd& coords() const noexcept { return coords_; }
  Eigen::Index dim() const noexcept { return coords_.size(); }
  double dot(const Direction& other) const { return coords_.dot(other.coords_); }

 private:
  explicit Direction(Eigen::VectorXd v) : coords_(std::move(v)) {}
  Eigen::VectorXd coords_;
};

/// Holds tau* and evaluates the weighted norm
///   ||(t, v)||_* = sqrt(t^2 / tau*^3 + tau* ||v||^2).
class StarGeometry {
 public:
  explicit StarGeometry(double tau_star);
  double tau_star() const noexcept { return tau_star_; }

 private:
  double tau_star_;
};

/// Orthonormal completion V (p x (p-1)) of beta*, built from one Householder
/// reflection, plus the h-coordinates h(beta) = V^T beta.
class HFrame {
 public:
  explicit HFrame(const Direction& base);

  const Direction& base() const noexcept { return base_; }
  const Eigen::MatrixXd& completion() const noexcept { return completion_; }

  Eigen::VectorXd h_coordinates(const Eigen::VectorXd& beta) const;
  /// sign * sqrt(1 - ||h||^2) beta* + V h; requires ||h|| <= 1.
  Eigen::VectorXd reconstruct(const Eigen::VectorXd& h, double sign = 1.0) const;

 private:
  Direction base_;
  Eigen::MatrixXd completion_;
};

/// P[a^T x x^T b <= 0] for x ~ N(0, I) = arccos(cos-similarity) / pi.
double angle_disagreement(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// P[y != sign(x^T beta*)] = arccos(1 / sqrt(1 + sigma^2)) / pi, computed as atan(sigma) / pi.
double wrong_label_prob(double sigma);

double star_norm(const StarGeometry& geom, double t, const Eigen::VectorXd& v);

/// d_*(gamma) = ||(||gamma|| - tau*, gamma/||gamma|| - beta*)||_*; gamma != 0.
double d_star(const StarGeometry& geom, const Direction& beta_star, const Eigen::VectorXd& gamma);

/// Orthonormal pair (e1, e2) spanning {a, b} with e1 = a/||a||. When b is
/// parallel to a, e2 is any unit vector orthogonal to e1 (or zero if p = 1).
struct PlaneBasis {
  Eigen::VectorXd e1;
  Eigen::VectorXd e2;
};
PlaneBasis orthonormalize_pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace probitlr
