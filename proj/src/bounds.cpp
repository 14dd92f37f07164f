#include "probitlr/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "probitlr/errors.hpp"
#include "probitlr/gaussian_integrals.hpp"
#include "probitlr/geometry.hpp"
#include "probitlr/rng.hpp"

namespace probitlr {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2OverPi = std::sqrt(2.0 / kPi);
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * kPi);

struct LemmaName {
  LemmaId id;
  std::string_view name;
};

constexpr std::array<LemmaName, 20> kNames{{
    {LemmaId::moment_zero, "moment_zero"},
    {LemmaId::bound_noiseless, "bound_noiseless"},
    {LemmaId::bound_noiseless_2, "bound_noiseless_2"},
    {LemmaId::moment_distance, "moment_distance"},
    {LemmaId::moment_distance_unit, "moment_distance_unit"},
    {LemmaId::moment_distance_equal_norm, "moment_distance_equal_norm"},
    {LemmaId::f_dotdot, "f_dotdot"},
    {LemmaId::f_dotdot_kappa, "f_dotdot_kappa"},
    {LemmaId::moment_bounded_difference, "moment_bounded_difference"},
    {LemmaId::moment_bounded_difference_local, "moment_bounded_difference_local"},
    {LemmaId::moment_bounded_difference_variance, "moment_bounded_difference_variance"},
    {LemmaId::moment_bounded_difference_variance_lower, "moment_bounded_difference_variance_lower"},
    {LemmaId::moment_bounded_variance_distance, "moment_bounded_variance_distance"},
    {LemmaId::trig, "trig"},
    {LemmaId::trig_m1, "trig_m1"},
    {LemmaId::trig_moment, "trig_moment"},
    {LemmaId::trig_y, "trig_y"},
    {LemmaId::trig_y_excess, "trig_y_excess"},
    {LemmaId::unbounded_bernstein_moment, "unbounded_bernstein_moment"},
    {LemmaId::margin, "margin"},
}};

double param(const ParameterPoint& p, const char* key) {
  auto it = p.find(key);
  if (it == p.end()) throw FormatError(std::string("missing parameter '") + key + "'");
  return it->second;
}

double log1p_exp_neg(double a) { return std::log1p(std::exp(-a)); }

BoundReport skip(BoundReport r, std::string reason) {
  r.skipped = true;
  r.holds = false;
  r.skip_reason = std::move(reason);
  r.lower = std::numeric_limits<double>::quiet_NaN();
  r.value = std::numeric_limits<double>::quiet_NaN();
  r.upper = std::numeric_limits<double>::quiet_NaN();
  return r;
}

bool valid_rho(double rho) { return std::isfinite(rho) && rho >= -1.0 && rho <= 1.0; }

// (u, v) coordinates: u along the first vector, v along the orthogonal part
// of the second. The second unit vector is (rho, s).
double ortho(double rho) { return std::sqrt(std::max(0.0, 1.0 - rho * rho)); }

// Angles (both orientations) of the line {c u + a v = 0}.
std::array<double, 2> line_angles(double c, double a) {
  const double t = std::atan2(-c, a);
  return {t, t + kPi};
}

// Sine integral int_0^theta sin^m, smooth on [0, theta]: one Gauss-Legendre
// rule with enough nodes is exact to rounding.
double sine_power_integral(double m, double theta) {
  static const LegendreRule rule = gauss_legendre(64);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double a = 0.5 * theta * (rule.nodes[i] + 1.0);
    s += rule.weights[i] * std::pow(std::sin(a), m);
  }
  return 0.5 * theta * s;
}

double trig_value(double m, double rho) {
  const double s = ortho(rho);
  const auto k = line_angles(rho, s);
  const std::array<double, 2> kinks{k[0], k[1]};
  return expect_plane(
      [m, rho, s](double u, double v) {
        return u * (rho * u + s * v) < 0.0 ? std::pow(std::abs(u), m) : 0.0;
      },
      kinks);
}

double trig_identity(double m, double rho) {
  return std::pow(2.0, 1.0 + 0.5 * m) * std::tgamma(1.0 + 0.5 * m) *
         sine_power_integral(m, std::acos(rho)) / (2.0 * kPi);
}

// P[y x'b < 0] mass-weighted by |x'b| under labels from direction (rho, s).
double label_flip_prob(double u, double w, double sigma) {
  // P[sign(w + sigma eps) != sign(u)]
  if (sigma == 0.0) return ((w >= 0.0) != (u >= 0.0)) ? 1.0 : 0.0;
  return u >= 0.0 ? normal_cdf(-w / sigma) : normal_cdf(w / sigma);
}

BoundReport eval(const BoundRequest& req) {
  const ParameterPoint& P = req.params;
  BoundReport r;
  r.lemma = req.lemma;
  r.params = P;
  r.method = EvalMethod::quadrature;
  r.slack = 1e-9;

  switch (req.lemma) {
    case LemmaId::moment_zero: {
      const double tau = param(P, "tau");
      if (!(tau > 0.0)) return skip(r, "requires tau > 0");
      r.value = expect_abs([tau](double t) { return std::exp(-tau * t); });
      r.lower = kSqrt2OverPi * (1.0 / tau - 1.0 / (tau * tau * tau));
      r.upper = kSqrt2OverPi / tau;
      break;
    }
    case LemmaId::bound_noiseless: {
      const double tau = param(P, "tau");
      if (!(tau > 0.0)) return skip(r, "requires tau > 0");
      r.value = link_value(tau);
      r.lower = kInvSqrt2Pi / (tau * tau) * (1.0 - 3.0 / (tau * tau));
      r.upper = kSqrt2OverPi / (tau * tau);
      break;
    }
    case LemmaId::bound_noiseless_2: {
      const double tau = param(P, "tau");
      if (!(tau > 0.0)) return skip(r, "requires tau > 0");
      r.value = expect_abs([tau](double t) { return t * t * std::exp(-tau * t); });
      const double t3 = tau * tau * tau, t5 = t3 * tau * tau, t7 = t5 * tau * tau;
      r.lower = kSqrt2OverPi * (2.0 / t3 - 12.0 / t5 - 15.0 / t7);
      r.upper = kSqrt2OverPi * (2.0 / t3 + 3.0 / t5);
      break;
    }
    case LemmaId::moment_distance:
    case LemmaId::moment_distance_unit:
    case LemmaId::moment_distance_equal_norm: {
      double a, b, rho;
      if (req.lemma == LemmaId::moment_distance_equal_norm) {
        a = b = param(P, "tau");
        rho = param(P, "rho");
        if (!(a >= 1.0)) return skip(r, "requires tau >= 1");
      } else {
        a = param(P, "norm");
        b = param(P, "norm_prime");
        rho = param(P, "rho");
        if (!(a > 0.0) || !(b > 0.0)) return skip(r, "requires nonzero gamma and gamma'");
        if (req.lemma == LemmaId::moment_distance_unit && !(b >= 1.0))
          return skip(r, "requires ||gamma'|| >= 1");
      }
      if (!valid_rho(rho)) return skip(r, "requires rho in [-1, 1]");
      // gamma' = b e1, gamma = a (rho e1 + s e2).
      const double s = ortho(rho);
      const double cu = rho * a - b, cv = a * s;
      const auto k = line_angles(cu, cv);
      const std::array<double, 2> kinks{k[0], k[1]};
      const double second = expect_plane(
          [=](double u, double v) {
            const double d = cu * u + cv * v;
            return d * d * std::exp(-2.0 * b * std::abs(u));
          },
          kinks);
      r.value = std::sqrt(second);
      r.lower = -kInf;
      if (req.lemma == LemmaId::moment_distance) {
        r.upper = a * std::sqrt((1.0 - rho * rho) / (std::sqrt(2.0 * kPi) * b)) +
                  std::abs(rho * a - b) *
                      std::sqrt(kSqrt2OverPi * (1.0 / (4.0 * b * b * b) +
                                                3.0 / (32.0 * std::pow(b, 5))));
      } else if (req.lemma == LemmaId::moment_distance_unit) {
        r.upper = a * std::sqrt((1.0 - rho * rho) / (std::sqrt(2.0 * kPi) * b)) +
                  std::sqrt(11.0 / 32.0 * kSqrt2OverPi) * std::abs(rho * a - b) /
                      std::pow(b, 1.5);
      } else {
        const double d = std::sqrt(2.0 * (1.0 - rho));
        r.upper = std::sqrt(a / std::sqrt(2.0 * kPi)) * d +
                  std::sqrt(11.0 / 32.0 * kSqrt2OverPi) * d * d / std::sqrt(a);
      }
      break;
    }
    case LemmaId::f_dotdot:
    case LemmaId::f_dotdot_kappa: {
      const double tb = param(P, "tau_bar");
      double kappa = std::sqrt(6.0 + std::sqrt(51.0));
      if (req.lemma == LemmaId::f_dotdot_kappa) {
        kappa = param(P, "kappa");
        if (!(kappa > std::sqrt(3.0 + std::sqrt(33.0 / 2.0))))
          return skip(r, "requires kappa > sqrt(3 + sqrt(33/2))");
      }
      if (!(tb >= kappa)) return skip(r, "requires tau_bar >= kappa");
      r.value = expect_abs([tb](double t) {
        const double e = std::exp(-tb * t);
        return t * t * e / ((1.0 + e) * (1.0 + e));
      });
      const double k2 = kappa * kappa;
      const double bracket = req.lemma == LemmaId::f_dotdot ? 1.0 : 2.0 - 12.0 / k2 - 15.0 / (k2 * k2);
      r.lower = std::sqrt(1.0 / (8.0 * kPi)) * bracket / (tb * tb * tb);
      r.upper = kInf;
      break;
    }
    case LemmaId::moment_bounded_difference:
    case LemmaId::moment_bounded_difference_local: {
      const double tau = param(P, "tau"), k = param(P, "k");
      if (!(tau > 0.0)) return skip(r, "requires tau > 0");
      if (!(k > 1.0)) return skip(r, "requires k > 1");
      r.value = expect_abs(
          [=](double t) { return log1p_exp_neg(tau * t) - log1p_exp_neg(k * tau * t); });
      if (req.lemma == LemmaId::moment_bounded_difference) {
        r.lower = kInvSqrt2Pi * (k - 1.0) / (k * k * tau) * (1.0 - 3.0 / (tau * tau));
        r.upper = (k - 1.0) / tau * kSqrt2OverPi;
      } else {
        const double l = param(P, "l");
        if (!(tau <= l)) return skip(r, "requires tau <= l");
        const double kl2 = k * k * l * l;
        r.lower = kInvSqrt2Pi * tau * (k - 1.0) / kl2 * (1.0 - 3.0 / kl2);
        r.upper = tau * (k - 1.0) * kInvSqrt2Pi;
      }
      break;
    }
    case LemmaId::moment_bounded_difference_variance:
    case LemmaId::moment_bounded_difference_variance_lower: {
      const double tau = param(P, "tau"), k = param(P, "k");
      if (!(tau > 0.0)) return skip(r, "requires tau > 0");
      if (!(k > 1.0)) return skip(r, "requires k > 1");
      r.value = expect_abs([=](double t) {
        const double d = log1p_exp_neg(tau * t) - log1p_exp_neg(k * tau * t);
        return d * d;
      });
      const double k1 = (k - 1.0) * (k - 1.0);
      if (req.lemma == LemmaId::moment_bounded_difference_variance) {
        r.lower = -kInf;
        r.upper = k1 * std::min(std::sqrt(1.0 / (32.0 * kPi)) *
                                    (2.0 / tau + 3.0 / (4.0 * tau * tau * tau)),
                                0.25 * tau * tau);
      } else {
        const double l = param(P, "l");
        // The displayed lower bound is only valid when the larger rate k tau
        // stays below l as well; with tau <= l alone it fails for large k.
        if (!(k * tau <= l)) return skip(r, "requires k * tau <= l");
        const double l3 = l * l * l, l5 = l3 * l * l, l7 = l5 * l * l;
        r.lower = tau * tau * k1 / std::sqrt(128.0 * kPi) *
                  (1.0 / l3 - 3.0 / (2.0 * l5) - 15.0 / (32.0 * l7));
        r.upper = kInf;
      }
      break;
    }
    case LemmaId::moment_bounded_variance_distance: {
      const double tau = param(P, "tau"), rho = param(P, "rho");
      if (!(tau >= 1.0)) return skip(r, "requires tau >= 1");
      if (!valid_rho(rho)) return skip(r, "requires rho in [-1, 1]");
      const double s = ortho(rho);
      const auto k = line_angles(rho, s);
      const std::array<double, 2> kinks{k[0], k[1]};
      r.value = expect_plane(
          [=](double u, double v) {
            const double d = log1p_exp_neg(tau * std::abs(u)) -
                             log1p_exp_neg(tau * std::abs(rho * u + s * v));
            return d * d;
          },
          kinks);
      const double d2 = 2.0 * (1.0 - rho);
      const double f = std::sqrt(tau / std::sqrt(2.0 * kPi)) +
                       std::sqrt(11.0 / 8.0 * kSqrt2OverPi) / std::sqrt(tau);
      r.lower = -kInf;
      r.upper = 2.0 * d2 * f * f;
      break;
    }
    case LemmaId::trig:
    case LemmaId::trig_m1:
    case LemmaId::trig_moment: {
      const double m = req.lemma == LemmaId::trig_m1 ? 1.0 : param(P, "m");
      const double rho = param(P, "rho");
      if (!(m >= 0.0)) return skip(r, "requires m >= 0");
      if (!valid_rho(rho)) return skip(r, "requires rho in [-1, 1]");
      r.value = trig_value(m, rho);
      const double d = std::sqrt(2.0 * (1.0 - rho));
      if (req.lemma == LemmaId::trig) {
        r.lower = r.upper = trig_identity(m, rho);
      } else if (req.lemma == LemmaId::trig_m1) {
        r.lower = r.upper = d * d / std::sqrt(8.0 * kPi);
      } else {
        r.lower = -kInf;
        r.upper = 1.0 / (std::numbers::sqrt2 * kPi) * std::tgamma(0.5 * m + 1.0) / (m + 1.0) *
                  std::pow(kPi / std::numbers::sqrt2 * d, m + 1.0);
      }
      break;
    }
    case LemmaId::trig_y:
    case LemmaId::trig_y_excess: {
      const double rho = param(P, "rho"), sigma = param(P, "sigma");
      if (!valid_rho(rho)) return skip(r, "requires rho in [-1, 1]");
      if (!(sigma >= 0.0)) return skip(r, "requires sigma >= 0");
      const double s = ortho(rho);
      const auto k = line_angles(rho, s);
      const std::array<double, 2> kinks{k[0], k[1]};
      const double root = std::sqrt(1.0 + sigma * sigma);
      if (req.lemma == LemmaId::trig_y) {
        r.value = expect_plane(
            [=](double u, double v) {
              return std::abs(u) * label_flip_prob(u, rho * u + s * v, sigma);
            },
            kinks);
        r.lower = r.upper = kInvSqrt2Pi * (1.0 - rho / root);
      } else {
        r.value = expect_plane(
            [=](double u, double v) {
              const double w = rho * u + s * v;
              return std::abs(u) * label_flip_prob(u, w, sigma) -
                     std::abs(w) * label_flip_prob(w, w, sigma);
            },
            kinks);
        r.lower = r.upper = 2.0 * (1.0 - rho) / std::sqrt(8.0 * kPi * root * root);
      }
      break;
    }
    case LemmaId::unbounded_bernstein_moment: {
      const double m = param(P, "m"), sigma = param(P, "sigma"), tau = param(P, "tau"),
                   rho = param(P, "rho");
      if (!(m >= 1.0) || m != std::floor(m)) return skip(r, "requires integer m >= 1");
      if (!(sigma > 0.0)) return skip(r, "requires sigma > 0");
      if (!(tau > 0.0)) return skip(r, "requires tau > 0");
      if (!valid_rho(rho)) return skip(r, "requires rho in [-1, 1]");
      const double tau_star = P.count("tau_star") ? P.at("tau_star") : sigma_to_tau_star(sigma);
      if (!(tau_star > 0.0)) return skip(r, "requires tau_star > 0");
      // x'(gamma - gamma*) = c z1 + a w with z1 = x'beta*, w independent.
      const double c = tau * rho - tau_star, a = tau * ortho(rho);
      const double two_m = std::pow(2.0, m);
      if (req.method == EvalMethod::quadrature) {
        const auto k = line_angles(c, a);
        const std::array<double, 2> kinks{k[0], k[1]};
        r.value = expect_plane(
            [=](double u, double v) {
              return two_m * normal_cdf(-std::abs(u) / sigma) * std::pow(std::abs(c * u + a * v), m);
            },
            kinks);
      } else {
        r.method = EvalMethod::monte_carlo;
        RandomStream rs(req.seed);
        const std::uint64_t n = std::max<std::uint64_t>(req.draws, 2);
        double mean = 0.0, m2 = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
          const double z1 = rs.normal(), w = rs.normal(), eps = rs.normal();
          const double y = (z1 + sigma * eps) >= 0.0 ? 1.0 : -1.0;
          const double ys = z1 >= 0.0 ? 1.0 : -1.0;
          const double x = std::pow(std::abs((y - ys) * (c * z1 + a * w)), m);
          const double delta = x - mean;
          mean += delta / static_cast<double>(i + 1);
          m2 += delta * (x - mean);
        }
        r.value = mean;
        r.std_error = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
        r.slack = std::max(1e-9, 4.0 * r.std_error);
      }
      const double d = std::sqrt(2.0 * (1.0 - rho));
      r.lower = -kInf;
      r.upper = sigma / (2.0 * kPi) * std::tgamma(0.5 * (m + 1.0)) *
                (std::pow(std::sqrt(32.0) * tau * d, m) / std::sqrt(kPi) +
                 std::pow(std::sqrt(8.0) * kPi * std::abs(c) * sigma, m));
      break;
    }
    case LemmaId::margin:
      throw DomainError("margin reports are produced by margin_check, not check_bound");
  }
  finalize_report(r);
  return r;
}

}  // namespace

std::string_view to_string(LemmaId id) {
  for (const auto& n : kNames)
    if (n.id == id) return n.name;
  return "unknown";
}

std::string_view to_string(EvalMethod m) {
  return m == EvalMethod::quadrature ? "quadrature" : "monte_carlo";
}

LemmaId parse_lemma_id(std::string_view name) {
  for (const auto& n : kNames)
    if (n.name == name) return n.id;
  throw FormatError("unknown lemma id '" + std::string(name) + "'");
}

std::span<const LemmaId> all_appendix_lemmas() {
  static const std::vector<LemmaId> ids = [] {
    std::vector<LemmaId> v;
    for (const auto& n : kNames)
      if (n.id != LemmaId::margin) v.push_back(n.id);
    return v;
  }();
  return ids;
}

void finalize_report(BoundReport& r) {
  if (r.lower < 0.0) r.lower = -kInf;
  r.holds = std::isfinite(r.value) && r.lower - r.slack <= r.value && r.value <= r.upper + r.slack;
}

BoundReport check_bound(const BoundRequest& request) { return eval(request); }

std::vector<BoundReport> check_appendix_bounds(std::span<const BoundRequest> grid) {
  std::vector<BoundReport> out;
  out.reserve(grid.size());
  for (const auto& req : grid) out.push_back(eval(req));
  return out;
}

ParameterPoint pair_parameters(const Eigen::VectorXd& gamma, const Eigen::VectorXd& gamma_prime) {
  if (gamma.size() != gamma_prime.size())
    throw DimensionError("pair_parameters: dimension mismatch");
  const double a = gamma.norm(), b = gamma_prime.norm();
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("pair_parameters: zero vector");
  const PlaneBasis basis = orthonormalize_pair(gamma_prime, gamma);
  const double rho = std::clamp(basis.e1.dot(gamma) / a, -1.0, 1.0);
  return {{"norm", a}, {"norm_prime", b}, {"rho", rho}};
}

std::vector<BoundRequest> default_appendix_grid() {
  std::vector<BoundRequest> g;
  const auto add = [&g](LemmaId id, ParameterPoint p, EvalMethod m = EvalMethod::quadrature) {
    BoundRequest r;
    r.lemma = id;
    r.params = std::move(p);
    r.method = m;
    g.push_back(std::move(r));
  };
  const std::vector<double> taus{0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0, 1e3};
  for (double t : taus) {
    add(LemmaId::moment_zero, {{"tau", t}});
    add(LemmaId::bound_noiseless, {{"tau", t}});
    add(LemmaId::bound_noiseless_2, {{"tau", t}});
  }
  const std::vector<double> rhos{-0.9, -0.3, 0.0, 0.5, 0.9, 0.99, 1.0};
  for (double a : {0.5, 1.0, 3.0})
    for (double b : {0.3, 1.0, 2.0, 10.0})
      for (double rho : rhos) {
        add(LemmaId::moment_distance, {{"norm", a}, {"norm_prime", b}, {"rho", rho}});
        if (b >= 1.0)
          add(LemmaId::moment_distance_unit, {{"norm", a}, {"norm_prime", b}, {"rho", rho}});
      }
  for (double t : {1.0, 2.0, 5.0, 20.0})
    for (double rho : rhos) add(LemmaId::moment_distance_equal_norm, {{"tau", t}, {"rho", rho}});
  const double tb0 = std::sqrt(6.0 + std::sqrt(51.0));
  for (double tb : {tb0, 4.0, 6.0, 10.0, 50.0, 1e3}) add(LemmaId::f_dotdot, {{"tau_bar", tb}});
  for (double kappa : {2.7, 3.0, 5.0})
    for (double f : {1.0, 1.5, 4.0}) add(LemmaId::f_dotdot_kappa, {{"tau_bar", kappa * f}, {"kappa", kappa}});
  for (double t : {0.3, 1.0, 2.0, 5.0, 20.0})
    for (double k : {1.01, 1.5, 2.0, 5.0, 20.0}) {
      add(LemmaId::moment_bounded_difference, {{"tau", t}, {"k", k}});
      add(LemmaId::moment_bounded_difference_variance, {{"tau", t}, {"k", k}});
      for (double lf : {1.0, 2.0, 5.0}) add(LemmaId::moment_bounded_difference_local, {{"tau", t}, {"k", k}, {"l", t * lf}});
      for (double lf : {1.0, 3.0}) add(LemmaId::moment_bounded_difference_variance_lower, {{"tau", t}, {"k", k}, {"l", k * t * lf}});
    }
  for (double t : {1.0, 2.0, 5.0, 20.0, 100.0})
    for (double rho : rhos) add(LemmaId::moment_bounded_variance_distance, {{"tau", t}, {"rho", rho}});
  for (double m : {0.0, 1.0, 2.0, 3.0, 5.0})
    for (double rho : rhos) {
      add(LemmaId::trig, {{"m", m}, {"rho", rho}});
      add(LemmaId::trig_moment, {{"m", m}, {"rho", rho}});
    }
  for (double rho : rhos) {
    add(LemmaId::trig_m1, {{"rho", rho}});
    for (double s : {0.0, 0.05, 0.2, 0.5, 1.0, 3.0}) {
      add(LemmaId::trig_y, {{"rho", rho}, {"sigma", s}});
      add(LemmaId::trig_y_excess, {{"rho", rho}, {"sigma", s}});
    }
  }
  for (double m : {1.0, 2.0, 3.0})
    for (double s : {0.1, 0.3, 0.7})
      for (double tf : {0.5, 1.0, 2.0})
        for (double rho : {0.0, 0.8, 0.99, 1.0}) {
          const double ts = sigma_to_tau_star(s);
          add(LemmaId::unbounded_bernstein_moment,
              {{"m", m}, {"sigma", s}, {"tau", tf * ts}, {"rho", rho}, {"tau_star", ts}});
        }
  return g;
}

}  // namespace probitlr
