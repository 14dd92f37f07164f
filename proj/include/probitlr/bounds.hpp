#pragma once

// Machine-checkable catalogue of the Gaussian moment inequalities and
// identities used to control the bounded and unbounded parts of the logistic
// loss. Each entry evaluates the quantity numerically and compares it with
// its closed-form lower/upper bounds.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace probitlr {

enum class LemmaId {
  moment_zero,                              // E exp(-tau|z|)
  bound_noiseless,                          // E |z| / (1 + exp(tau|z|))
  bound_noiseless_2,                        // E z^2 exp(-tau|z|)
  moment_distance,                          // sqrt(E (x'(g - g'))^2 exp(-2|g'x|)), general display
  moment_distance_unit,                     // same, simplified display for ||g'|| >= 1
  moment_distance_equal_norm,               // same, ||g|| = ||g'|| = tau >= 1
  f_dotdot,                                 // second derivative of E log(1 + exp(-tau|z|)), tau >= sqrt(6 + sqrt 51)
  f_dotdot_kappa,                           // same with a general kappa
  moment_bounded_difference,                // E log((1 + e^{-tau|z|}) / (1 + e^{-k tau|z|}))
  moment_bounded_difference_local,          // same, bounds that need tau <= l
  moment_bounded_difference_variance,       // second moment of the log ratio, upper bound
  moment_bounded_difference_variance_lower, // second moment of the log ratio, lower bound
  moment_bounded_variance_distance,         // second moment across two directions
  trig,                                     // E |x'b|^m 1{b'x x'b' < 0}, sine-integral identity
  trig_m1,                                  // same for m = 1 in closed form
  trig_moment,                              // same, bound for general m
  trig_y,                                   // E |x'b| 1{y x'b < 0} under the probit model
  trig_y_excess,                            // excess unbounded term
  unbounded_bernstein_moment,               // E |(y - y*) x'(g - g*)|^m
  margin,                                   // excess population risk vs d_*^2 (from margin_check)
};

enum class EvalMethod { quadrature, monte_carlo };

using ParameterPoint = std::map<std::string, double>;

struct BoundRequest {
  LemmaId lemma = LemmaId::moment_zero;
  ParameterPoint params;
  EvalMethod method = EvalMethod::quadrature;
  std::uint64_t draws = 10'000'000;  // Monte Carlo only
  std::uint64_t seed = 1;            // Monte Carlo only
};

struct BoundReport {
  LemmaId lemma = LemmaId::moment_zero;
  ParameterPoint params;
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  double slack = 0.0;
  double std_error = 0.0;  // Monte Carlo only
  EvalMethod method = EvalMethod::quadrature;
  bool holds = false;
  bool skipped = false;
  std::string skip_reason;
};

std::string_view to_string(LemmaId id);
std::string_view to_string(EvalMethod m);
LemmaId parse_lemma_id(std::string_view name);
std::span<const LemmaId> all_appendix_lemmas();

/// Evaluates one catalogue entry. Precondition violations return a report
/// with skipped = true and holds = false; missing parameters throw FormatError.
BoundReport check_bound(const BoundRequest& request);
std::vector<BoundReport> check_appendix_bounds(std::span<const BoundRequest> grid);

/// A grid that satisfies every entry's precondition, covering small and
/// large tau, k near and far from one, and several angles.
std::vector<BoundRequest> default_appendix_grid();

/// Parameters for the two-vector entries from explicit vectors, reduced to
/// (norm, norm_prime, rho) by rotation invariance.
ParameterPoint pair_parameters(const Eigen::VectorXd& gamma, const Eigen::VectorXd& gamma_prime);

/// Sets holds from (lower, value, upper, slack); negative lower bounds of
/// nonnegative quantities become -inf.
void finalize_report(BoundReport& report);

}  // namespace probitlr
