#include "probitlr/gaussian_integrals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "probitlr/errors.hpp"

namespace probitlr {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1 / sqrt(2 pi)

// 0, 2^-60, ..., 1/2, 1, then 1.25 ... 12, then coarse panels up to 40.
std::vector<double> graded_breakpoints() {
  std::vector<double> bp;
  bp.push_back(0.0);
  for (int k = 60; k >= 1; --k) bp.push_back(std::ldexp(1.0, -k));
  for (int j = 0; j <= 44; ++j) bp.push_back(1.0 + 0.25 * j);
  for (double t : {14.0, 16.0, 20.0, 25.0, 30.0, kHalfLineCutoff}) bp.push_back(t);
  return bp;
}

template <class Density>
QuadratureRule composite_rule(int order, Density density) {
  const LegendreRule base = gauss_legendre(order);
  const std::vector<double> bp = graded_breakpoints();
  QuadratureRule rule;
  rule.nodes.reserve((bp.size() - 1) * base.nodes.size());
  rule.weights.reserve(rule.nodes.capacity());
  for (std::size_t p = 0; p + 1 < bp.size(); ++p) {
    const double half = 0.5 * (bp[p + 1] - bp[p]);
    const double mid = 0.5 * (bp[p + 1] + bp[p]);
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      const double t = mid + half * base.nodes[i];
      const double w = half * base.weights[i] * density(t);
      if (w == 0.0) continue;  // far tail, density underflowed
      rule.nodes.push_back(t);
      rule.weights.push_back(w);
    }
  }
  return rule;
}

double half_normal_density(double t) { return 2.0 * kInvSqrt2Pi * std::exp(-0.5 * t * t); }

[[noreturn]] void throw_non_finite(double node, double value) {
  std::ostringstream os;
  os.precision(17);
  os << "integrand is not finite (" << value << ") at node " << node;
  throw EvaluationError(os.str(), node);
}

double panel_integral(const RealFunction& f, const LegendreRule& base, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  double sum = 0.0;
  for (std::size_t i = 0; i < base.nodes.size(); ++i) {
    const double t = mid + half * base.nodes[i];
    const double v = f(t);
    if (!std::isfinite(v)) throw_non_finite(t, v);
    sum += base.weights[i] * v * half_normal_density(t);
  }
  return half * sum;
}

double adaptive_panel(const RealFunction& f, const LegendreRule& lo, const LegendreRule& hi,
                      double a, double b, double tol, int depth) {
  const double coarse = panel_integral(f, lo, a, b);
  const double fine = panel_integral(f, hi, a, b);
  if (std::abs(fine - coarse) <= tol || depth >= 30) return fine;
  const double m = 0.5 * (a + b);
  return adaptive_panel(f, lo, hi, a, m, 0.5 * tol, depth + 1) +
         adaptive_panel(f, lo, hi, m, b, 0.5 * tol, depth + 1);
}

}  // namespace

LegendreRule gauss_legendre(int order) {
  if (order < 1) throw DomainError("gauss_legendre: order must be >= 1");
  LegendreRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int n = order;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule QuadratureRule::half_normal(int order) {
  return composite_rule(order, half_normal_density);
}

QuadratureRule QuadratureRule::rayleigh(int order) {
  return composite_rule(order, [](double r) { return r * std::exp(-0.5 * r * r); });
}

void QuadratureRule::validate() const {
  if (nodes.size() != weights.size() || nodes.empty())
    throw std::logic_error("quadrature rule: node/weight length mismatch");
  double mass = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!(weights[i] > 0.0)) throw std::logic_error("quadrature rule: non-positive weight");
    if (nodes[i] < 0.0) throw std::logic_error("quadrature rule: negative node");
    if (i > 0 && !(nodes[i] > nodes[i - 1]))
      throw std::logic_error("quadrature rule: nodes not strictly increasing");
    mass += weights[i];
  }
  if (std::abs(mass - 1.0) > 1e-12) throw std::logic_error("quadrature rule: mass is not one");
}

const QuadratureRule& default_half_normal_rule() {
  static const QuadratureRule rule = QuadratureRule::half_normal(20);
  return rule;
}

const QuadratureRule& default_rayleigh_rule() {
  static const QuadratureRule rule = QuadratureRule::rayleigh(10);
  return rule;
}

double expect_abs(const RealFunction& f, const QuadratureRule& rule) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(rule.nodes[i]);
    if (!std::isfinite(v)) throw_non_finite(rule.nodes[i], v);
    sum += rule.weights[i] * v;
  }
  return sum;
}

double expect_abs(const RealFunction& f) { return expect_abs(f, default_half_normal_rule()); }

double expect_abs_adaptive(const RealFunction& f, double abs_tol) {
  static const LegendreRule lo = gauss_legendre(10);
  static const LegendreRule hi = gauss_legendre(20);
  const std::vector<double> bp = graded_breakpoints();
  const double share = abs_tol / static_cast<double>(bp.size() - 1);
  double sum = 0.0;
  for (std::size_t p = 0; p + 1 < bp.size(); ++p)
    sum += adaptive_panel(f, lo, hi, bp[p], bp[p + 1], share, 0);
  return sum;
}

double expect_plane(const PlaneFunction& f, std::span<const double> kink_angles) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  constexpr int kLevels = 24;
  static const LegendreRule angular = gauss_legendre(8);
  const QuadratureRule& radial = default_rayleigh_rule();

  std::vector<double> cuts{0.0, 0.5 * std::numbers::pi, std::numbers::pi,
                           1.5 * std::numbers::pi};
  for (double a : kink_angles) {
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    cuts.push_back(r);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> wedges;
  for (double c : cuts)
    if (wedges.empty() || c - wedges.back() > 1e-14) wedges.push_back(c);
  if (two_pi - wedges.back() <= 1e-14) wedges.pop_back();
  wedges.push_back(two_pi);

  const auto angular_panel = [&](double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    double sum = 0.0;
    for (std::size_t i = 0; i < angular.nodes.size(); ++i) {
      const double theta = mid + half * angular.nodes[i];
      const double c = std::cos(theta), s = std::sin(theta);
      double inner = 0.0;
      for (std::size_t j = 0; j < radial.nodes.size(); ++j) {
        const double r = radial.nodes[j];
        const double v = f(r * c, r * s);
        if (!std::isfinite(v)) throw_non_finite(r, v);
        inner += radial.weights[j] * v;
      }
      sum += angular.weights[i] * inner;
    }
    return half * sum;
  };

  double total = 0.0;
  for (std::size_t w = 0; w + 1 < wedges.size(); ++w) {
    const double a = wedges[w], b = wedges[w + 1];
    const double mid = 0.5 * (a + b);
    // Graded towards both ends of the wedge.
    double prev_left = mid, prev_right = mid;
    for (int k = 1; k <= kLevels; ++k) {
      const double frac = std::ldexp(1.0, -k);
      const double left = a + (mid - a) * frac;
      const double right = b - (b - mid) * frac;
      total += angular_panel(left, prev_left) + angular_panel(prev_right, right);
      prev_left = left;
      prev_right = right;
    }
    total += angular_panel(a, prev_left) + angular_panel(prev_right, b);
  }
  return total / two_pi;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double expected_exp_neg_abs(double tau) {
  if (tau < 0.0) throw DomainError("expected_exp_neg_abs: tau must be >= 0");
  if (tau <= 30.0) return std::exp(0.5 * tau * tau) * std::erfc(tau / std::numbers::sqrt2);
  // Asymptotic series of the Mills ratio; terms decrease until k ~ tau^2 / 2.
  const double inv2 = 1.0 / (tau * tau);
  double term = 1.0, sum = 0.0;
  for (int k = 0; k < 40; ++k) {
    sum += term;
    term *= -(2.0 * k + 1.0) * inv2;
  }
  return 2.0 * kInvSqrt2Pi * sum / tau;
}

double abs_normal_moment(double m) {
  return std::pow(2.0, 0.5 * m) * std::tgamma(0.5 * (m + 1.0)) / std::sqrt(std::numbers::pi);
}

double link_value(double tau, const QuadratureRule& rule) {
  if (!(tau > 0.0)) throw DomainError("link_value: tau must be > 0");
  return expect_abs(
      [tau](double t) {
        const double e = std::exp(-tau * t);
        return t * e / (1.0 + e);
      },
      rule);
}

double link_value(double tau) { return link_value(tau, default_half_normal_rule()); }

double link_target(double sigma) {
  const double s2 = sigma * sigma;
  const double root = std::sqrt(1.0 + s2);
  return kInvSqrt2Pi * s2 / (root * (1.0 + root));
}

double sigma_to_tau_star(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw DomainError("sigma_to_tau_star: sigma must be finite and > 0");
  const double target = link_target(sigma);
  double lo = std::max(1e-300, 1.0 / sigma) / 4.0;
  double hi = 4.0 * std::sqrt(2.0 * std::numbers::pi) / sigma;
  // L is decreasing: need L(lo) > target > L(hi).
  int expansions = 0;
  while (link_value(lo) <= target) {
    lo *= 0.5;
    if (++expansions > 200 || lo < 1e-300)
      throw CalibrationError("sigma_to_tau_star: failed to bracket from below");
  }
  expansions = 0;
  while (link_value(hi) >= target) {
    hi *= 2.0;
    if (++expansions > 200 || !std::isfinite(hi))
      throw CalibrationError("sigma_to_tau_star: failed to bracket from above");
  }
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-10 || mid <= lo || mid >= hi) break;
    if (link_value(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double tau_star_to_sigma(double tau_star) {
  if (!(tau_star > 0.0)) throw DomainError("tau_star_to_sigma: tau* must be > 0");
  const double q = std::sqrt(2.0 * std::numbers::pi) * link_value(tau_star);
  return std::sqrt(q * (2.0 - q)) / (1.0 - q);
}

}  // namespace probitlr
