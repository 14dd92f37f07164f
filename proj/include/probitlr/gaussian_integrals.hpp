#pragma once

// Gaussian expectations on the half line and in the plane, plus the link
// equation that ties the noise level sigma to the population-risk minimizer
// norm tau*.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace probitlr {

/// Nodes and weights on [-1, 1] for the n-point Gauss-Legendre rule.
struct LegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
LegendreRule gauss_legendre(int order);

/// Composite Gauss-Legendre rule for E[f(T)] where T has density w on [0, T_max].
///
/// Panels are graded geometrically towards zero (down to 2^-60) so integrands
/// that live on a scale 1/tau are resolved for tau up to ~1e15; uniform panels
/// cover [1, 12] and a few coarse panels reach T_max = 40, beyond which any
/// integrand of at most polynomial growth contributes below e^-790.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  /// Density of |z|, z ~ N(0, 1): 2 phi(t).
  static QuadratureRule half_normal(int order = 20);
  /// Density of the radius of a standard 2-D Gaussian: r exp(-r^2/2).
  static QuadratureRule rayleigh(int order = 10);

  std::size_t size() const noexcept { return nodes.size(); }
  /// Throws std::logic_error if an invariant (positive weights, increasing
  /// nonnegative nodes, unit mass) is broken.
  void validate() const;
};

inline constexpr double kHalfLineCutoff = 40.0;

/// Shared default rules (constructed once, immutable).
const QuadratureRule& default_half_normal_rule();
const QuadratureRule& default_rayleigh_rule();

using RealFunction = std::function<double(double)>;
using PlaneFunction = std::function<double(double, double)>;

/// E[f(|z|)] for z ~ N(0, 1). Throws EvaluationError naming the first node
/// where f is not finite.
double expect_abs(const RealFunction& f, const QuadratureRule& rule);
double expect_abs(const RealFunction& f);

/// Same expectation with per-panel error control: each panel of the graded
/// grid is bisected until orders 10 and 20 agree to abs_tol.
double expect_abs_adaptive(const RealFunction& f, double abs_tol = 1e-14);

/// E[f(u, v)] for (u, v) ~ N(0, I_2), in polar coordinates. The angular grid is
/// split at every angle in kink_angles (radians, any range) and graded towards
/// each split, so f may have kinks or sharp layers along rays from the origin.
double expect_plane(const PlaneFunction& f, std::span<const double> kink_angles);

/// Phi(x) via erfc.
double normal_cdf(double x);

/// Closed form of E[exp(-tau |z|)] = 2 exp(tau^2/2) Phi(-tau).
double expected_exp_neg_abs(double tau);

/// E|z|^m = 2^{m/2} Gamma((m+1)/2) / sqrt(pi).
double abs_normal_moment(double m);

/// L(tau) = E[|z| / (1 + exp(tau |z|))]; tau > 0.
double link_value(double tau);
double link_value(double tau, const QuadratureRule& rule);

/// Right-hand side of the link equation, (1 - 1/sqrt(1 + sigma^2)) / sqrt(2 pi),
/// evaluated without cancellation for small sigma.
double link_target(double sigma);

/// Unique tau* with L(tau*) = link_target(sigma), by bracketed bisection.
double sigma_to_tau_star(double sigma);

/// Closed-form inverse: sigma = sqrt(1 / (1 - sqrt(2 pi) L(tau*))^2 - 1).
double tau_star_to_sigma(double tau_star);

}  // namespace probitlr
