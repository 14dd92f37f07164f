#include "probitlr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "probitlr/errors.hpp"

namespace probitlr {

Direction Direction::normalize(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw DomainError("Direction: vector must be nonzero and finite");
  return Direction(v / norm);
}

Direction Direction::from_unit(const Eigen::VectorXd& v) {
  if (std::abs(v.norm() - 1.0) > 1e-12) throw DomainError("Direction: vector is not unit norm");
  return Direction(v);
}

Direction Direction::axis(Eigen::Index p, Eigen::Index k) {
  if (p < 1 || k < 0 || k >= p) throw DomainError("Direction::axis: index out of range");
  return Direction(Eigen::VectorXd::Unit(p, k));
}

StarGeometry::StarGeometry(double tau_star) : tau_star_(tau_star) {
  if (!(tau_star > 0.0) || !std::isfinite(tau_star))
    throw DomainError("StarGeometry: tau* must be finite and > 0");
}

HFrame::HFrame(const Direction& base) : base_(base) {
  const Eigen::Index p = base.dim();
  const Eigen::VectorXd& b = base.coords();
  // Reflection H with H e1 = +-beta*; the sign choice keeps ||u|| >= 1.
  Eigen::VectorXd u = Eigen::VectorXd::Unit(p, 0);
  if (b[0] > 0.0)
    u += b;
  else
    u -= b;
  const Eigen::MatrixXd H =
      Eigen::MatrixXd::Identity(p, p) - 2.0 * u * u.transpose() / u.squaredNorm();
  completion_ = H.rightCols(p - 1);
}

Eigen::VectorXd HFrame::h_coordinates(const Eigen::VectorXd& beta) const {
  if (beta.size() != base_.dim()) throw DimensionError("h_coordinates: dimension mismatch");
  return completion_.transpose() * beta;
}

Eigen::VectorXd HFrame::reconstruct(const Eigen::VectorXd& h, double sign) const {
  if (h.size() != base_.dim() - 1) throw DimensionError("reconstruct: dimension mismatch");
  const double sq = h.squaredNorm();
  if (sq > 1.0) throw DomainError("reconstruct: ||h|| must be <= 1");
  return (sign >= 0.0 ? 1.0 : -1.0) * std::sqrt(1.0 - sq) * base_.coords() + completion_ * h;
}

double angle_disagreement(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DimensionError("angle_disagreement: dimension mismatch");
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("angle_disagreement: zero vector");
  const double cosine = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return std::acos(cosine) / std::numbers::pi;
}

double wrong_label_prob(double sigma) {
  if (!(sigma >= 0.0)) throw DomainError("wrong_label_prob: sigma must be >= 0");
  return std::atan(sigma) / std::numbers::pi;
}

double star_norm(const StarGeometry& geom, double t, const Eigen::VectorXd& v) {
  const double ts = geom.tau_star();
  return std::sqrt(t * t / (ts * ts * ts) + ts * v.squaredNorm());
}

double d_star(const StarGeometry& geom, const Direction& beta_star, const Eigen::VectorXd& gamma) {
  if (gamma.size() != beta_star.dim()) throw DimensionError("d_star: dimension mismatch");
  const double tau = gamma.norm();
  if (!(tau > 0.0)) throw DomainError("d_star: not defined at gamma = 0");
  return star_norm(geom, tau - geom.tau_star(), gamma / tau - beta_star.coords());
}

PlaneBasis orthonormalize_pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DimensionError("orthonormalize_pair: dimension mismatch");
  const double na = a.norm();
  if (!(na > 0.0)) throw DomainError("orthonormalize_pair: first vector is zero");
  PlaneBasis basis;
  basis.e1 = a / na;
  Eigen::VectorXd rest = b - basis.e1.dot(b) * basis.e1;
  const double scale = std::max(1.0, b.norm());
  if (rest.norm() <= 1e-14 * scale) {
    // b is parallel to a: any orthogonal completion will do.
    rest = Eigen::VectorXd::Zero(a.size());
    if (a.size() > 1) {
      Eigen::Index k = 0;
      basis.e1.cwiseAbs().minCoeff(&k);
      rest[k] = 1.0;
      rest -= basis.e1.dot(rest) * basis.e1;
    }
  }
  const double nr = rest.norm();
  basis.e2 = nr > 0.0 ? Eigen::VectorXd(rest / nr) : rest;
  return basis;
}

}  // namespace probitlr
