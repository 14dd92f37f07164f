#include "probitlr/separability.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/LU>

#include "probitlr/errors.hpp"
#include "probitlr/rng.hpp"

namespace probitlr {

namespace {

// Weights alpha (summing to one) of the minimum-norm point of the affine hull
// of the selected rows, from the KKT system [B B^T 1; 1^T 0][alpha; mu] = [0; 1].
Eigen::VectorXd affine_minimizer(const Eigen::MatrixXd& P, const std::vector<Eigen::Index>& S) {
  const Eigen::Index k = static_cast<Eigen::Index>(S.size());
  Eigen::MatrixXd B(k, P.cols());
  for (Eigen::Index i = 0; i < k; ++i) B.row(i) = P.row(S[i]);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(k + 1, k + 1);
  K.topLeftCorner(k, k) = B * B.transpose();
  K.block(0, k, k, 1).setOnes();
  K.block(k, 0, 1, k).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs[k] = 1.0;
  const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
  return sol.head(k);
}

Eigen::VectorXd combine(const Eigen::MatrixXd& P, const std::vector<Eigen::Index>& S,
                        const std::vector<double>& w) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(P.cols());
  for (std::size_t i = 0; i < S.size(); ++i) x += w[i] * P.row(S[i]).transpose();
  return x;
}

}  // namespace

MinNormPoint min_norm_point(const Eigen::MatrixXd& P, double zero_tol, int max_iter) {
  const Eigen::Index n = P.rows();
  if (n < 1) throw DimensionError("min_norm_point: no points");
  constexpr double kEps = 1e-15;

  const Eigen::VectorXd norms2 = P.rowwise().squaredNorm();
  Eigen::Index start = 0;
  norms2.minCoeff(&start);
  const double scale2 = std::max(norms2.maxCoeff(), 1e-300);

  std::vector<Eigen::Index> S{start};
  std::vector<double> lam{1.0};
  Eigen::VectorXd x = P.row(start).transpose();

  MinNormPoint out;
  int it = 0;
  while (it < max_iter) {
    ++it;
    if (x.norm() <= zero_tol) {
      out.converged = true;
      break;
    }
    const Eigen::VectorXd scores = P * x;
    Eigen::Index j = 0;
    const double best = scores.minCoeff(&j);
    const double gap = x.squaredNorm() - best;
    if (gap <= 1e-14 * scale2 || std::find(S.begin(), S.end(), j) != S.end()) {
      out.converged = gap <= 1e-10 * scale2;
      break;
    }
    S.push_back(j);
    lam.push_back(0.0);

    for (int minor = 0; minor <= static_cast<int>(S.size()) + 1; ++minor) {
      const Eigen::VectorXd alpha = affine_minimizer(P, S);
      bool interior = alpha.allFinite();
      for (Eigen::Index k = 0; interior && k < alpha.size(); ++k) interior = alpha[k] > kEps;
      if (interior) {
        for (std::size_t k = 0; k < S.size(); ++k) lam[k] = alpha[static_cast<Eigen::Index>(k)];
        break;
      }
      // Move from lam towards alpha until the first weight hits zero.
      double theta = 1.0;
      if (alpha.allFinite()) {
        for (std::size_t k = 0; k < S.size(); ++k) {
          const double a = alpha[static_cast<Eigen::Index>(k)];
          if (a <= kEps && lam[k] - a > 0.0) theta = std::min(theta, lam[k] / (lam[k] - a));
        }
      } else {
        theta = 0.0;
      }
      for (std::size_t k = 0; k < S.size(); ++k)
        lam[k] = (1.0 - theta) * lam[k] + theta * (alpha.allFinite() ? alpha[static_cast<Eigen::Index>(k)] : 0.0);
      // Drop the vanished weights (at least one).
      std::size_t worst = 0;
      for (std::size_t k = 1; k < S.size(); ++k)
        if (lam[k] < lam[worst]) worst = k;
      lam[worst] = 0.0;
      std::vector<Eigen::Index> S2;
      std::vector<double> lam2;
      for (std::size_t k = 0; k < S.size(); ++k)
        if (lam[k] > kEps) {
          S2.push_back(S[k]);
          lam2.push_back(lam[k]);
        }
      if (S2.empty()) {
        S2.push_back(j);
        lam2.push_back(1.0);
      }
      double sum = 0.0;
      for (double v : lam2) sum += v;
      for (double& v : lam2) v /= sum;
      S = std::move(S2);
      lam = std::move(lam2);
      if (S.size() == 1) break;
    }
    x = combine(P, S, lam);
  }
  out.point = x;
  out.lambda = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < S.size(); ++k) out.lambda[S[k]] = lam[k];
  out.iterations = it;
  return out;
}

SeparabilityVerdict is_separable(const Dataset& data, double tol, int max_iter) {
  data.validate();
  if (data.n() < 1) throw DimensionError("is_separable: dataset is empty");
  if (!(tol > 0.0)) throw DomainError("is_separable: tol must be > 0");
  Eigen::MatrixXd U = data.y.asDiagonal() * data.X;
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    const double nr = U.row(i).norm();
    if (!(nr > 0.0)) throw DomainError("is_separable: zero covariate row");
    U.row(i) /= nr;
  }
  const MinNormPoint mnp = min_norm_point(U, tol, max_iter);
  SeparabilityVerdict v;
  v.tol = tol;
  v.witness_norm = mnp.point.norm();
  if (v.witness_norm <= tol) {
    v.separable = false;
    v.lambda = mnp.lambda;
    return v;
  }
  const Eigen::VectorXd margins = data.y.cwiseProduct(data.X * mnp.point);
  const double m = margins.minCoeff();
  if (m > 0.0) {
    Eigen::VectorXd gamma = mnp.point / m;
    for (int k = 0; k < 8; ++k) {
      const double mm = data.y.cwiseProduct(data.X * gamma).minCoeff();
      if (mm >= 1.0) break;
      gamma *= (1.0 + 1e-15) / mm;
    }
    v.separable = true;
    v.separator = gamma;
    return v;
  }
  throw IndeterminateError("is_separable: no certificate within the iteration budget", v.witness_norm);
}

bool verify_certificate(const Dataset& data, const SeparabilityVerdict& v) {
  if (v.separable) {
    if (!v.separator || v.lambda) return false;
    if (v.separator->size() != data.p()) return false;
    return data.y.cwiseProduct(data.X * *v.separator).minCoeff() >= 1.0;
  }
  if (!v.lambda || v.separator) return false;
  const Eigen::VectorXd& lam = *v.lambda;
  if (lam.size() != data.n() || lam.minCoeff() < 0.0 || std::abs(lam.sum() - 1.0) > 1e-12) return false;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(data.p());
  for (Eigen::Index i = 0; i < data.n(); ++i)
    if (lam[i] > 0.0) w += lam[i] * data.y[i] * data.X.row(i).transpose() / data.X.row(i).norm();
  return w.norm() <= v.tol;
}

double cover_probability(long long n, long long p) {
  if (n < 1 || p < 1) throw DomainError("cover_probability: n and p must be >= 1");
  if (p >= n) return 1.0;
  if (n <= 64) {
    // Exact integer binomial sum; the final scaling by 2^(1-n) is exact too.
    using u128 = unsigned __int128;
    u128 c = 1, sum = 0;
    for (long long k = 0; k < p; ++k) {
      sum += c;
      c = c * static_cast<u128>(n - 1 - k) / static_cast<u128>(k + 1);
    }
    return std::ldexp(static_cast<double>(sum), static_cast<int>(1 - n));
  }
  const double lg_n1 = std::lgamma(static_cast<double>(n));  // log (n-1)!
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(p));
  for (long long k = 0; k < p; ++k)
    logs.push_back(lg_n1 - std::lgamma(static_cast<double>(k) + 1.0) -
                   std::lgamma(static_cast<double>(n - k)));
  const double top = *std::max_element(logs.begin(), logs.end());
  double s = 0.0;
  for (double l : logs) s += std::exp(l - top);
  const double v = std::exp(top + std::log(s) + (1.0 - static_cast<double>(n)) * std::log(2.0));
  return std::clamp(v, 0.0, 1.0);
}

std::pair<double, double> wilson_interval(long long successes, long long trials, double z) {
  if (trials < 1 || successes < 0 || successes > trials)
    throw DomainError("wilson_interval: need 0 <= successes <= trials, trials >= 1");
  const double nn = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (ph + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The endpoints are exact at the extremes; the closed form leaves rounding residue there.
  const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

SeparabilityTally run_separability(const SeparabilityExperiment& exp) {
  if (exp.n < 1 || exp.p < 1 || exp.reps < 1) throw DomainError("run_separability: n, p, reps must be >= 1");
  if (exp.sigma && !(*exp.sigma > 0.0)) throw DomainError("run_separability: sigma must be > 0");
  SeparabilityTally t;
  t.reps = exp.reps;
  for (long long r = 0; r < exp.reps; ++r) {
    RandomStream rs(derive_stream_seed(exp.seed, 0, static_cast<std::uint64_t>(r)));
    Dataset d;
    if (exp.sigma) {
      const ModelSpec spec(exp.p, *exp.sigma, random_direction(exp.p, rs));
      d = sample(spec, exp.n, rs);
    } else {
      d.X.resize(exp.n, exp.p);
      d.y.resize(exp.n);
      for (long long i = 0; i < exp.n; ++i) {
        for (int j = 0; j < exp.p; ++j) d.X(i, j) = rs.normal();
        d.y[i] = rs.rademacher();
      }
    }
    try {
      t.separable += is_separable(d).separable ? 1 : 0;
    } catch (const IndeterminateError&) {
      ++t.indeterminate;
    }
  }
  return t;
}

}  // namespace probitlr
