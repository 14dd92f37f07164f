#include "probitlr/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "probitlr/errors.hpp"

namespace probitlr {

namespace {

// One loss term l = softplus(-m) for margin m, in a form that survives
// m -> +inf: log l, sigmoid(-m) / l, and sigmoid(-m).
struct LossTerm {
  double log_l;
  double ratio;
  double sig;
};

LossTerm loss_term(double m) {
  const double e = std::exp(-std::abs(m));
  const double sig = m >= 0.0 ? e / (1.0 + e) : 1.0 / (1.0 + e);
  if (m > 36.0) {
    // softplus(-m) = e^{-m}(1 - e^{-m}/2 + ...), sigmoid(-m) = e^{-m}(1 - e^{-m} + ...)
    return {-m + std::log1p(-0.5 * e), 1.0 - 0.5 * e, sig};
  }
  const double l = softplus(-m);
  return {std::log(l), sig / l, sig};
}

void check_dims(const Eigen::VectorXd& gamma, const Dataset& data) {
  if (gamma.size() != data.p()) throw DimensionError("parameter length does not match dataset dimension");
  if (data.n() < 1) throw DimensionError("dataset is empty");
}

// G = log of the mean loss at the given margins. With detail, also the
// normalized loss shares l_i / sum l, the ratios sigmoid(-m_i) / l_i and
// sigmoid(-m_i) themselves.
struct Objective {
  double G = 0.0;
  Eigen::VectorXd share, ratio, sig;

  // grad G = -Z^T (share .* ratio)
  Eigen::VectorXd coefficients() const { return share.cwiseProduct(ratio); }
};

Objective evaluate(const Eigen::VectorXd& margins, bool detail) {
  const Eigen::Index n = margins.size();
  Objective o;
  std::vector<LossTerm> terms(n);
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    terms[i] = loss_term(margins[i]);
    top = std::max(top, terms[i].log_l);
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += std::exp(terms[i].log_l - top);
  o.G = top + std::log(sum) - std::log(static_cast<double>(n));
  if (detail) {
    o.share.resize(n);
    o.ratio.resize(n);
    o.sig.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      o.share[i] = std::exp(terms[i].log_l - top) / sum;
      o.ratio[i] = terms[i].ratio;
      o.sig[i] = terms[i].sig;
    }
  }
  return o;
}

// G(m + delta) - G(m) without cancellation for small changes, using
// softplus(a + d) - softplus(a) = log1p(expm1(d) sigmoid(a)).
double objective_change(const Objective& cur, const Eigen::VectorXd& delta) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    const double em = std::expm1(-delta[i]);
    const double x = em * cur.sig[i];
    const double q = x == 0.0 ? 1.0 : std::log1p(x) / x;
    acc += cur.share[i] * q * em * cur.ratio[i];
  }
  return std::log1p(acc);
}

Eigen::VectorXd project(const Eigen::VectorXd& v, double M) {
  const double nv = v.norm();
  return nv > M ? Eigen::VectorXd(v * (M / nv)) : v;
}

}  // namespace

void FitConfig::validate() const {
  if (!(M > 0.0) || !std::isfinite(M)) throw DomainError("FitConfig: M must be finite and > 0");
  if (!(tol > 0.0)) throw DomainError("FitConfig: tol must be > 0");
  if (max_iter < 1) throw DomainError("FitConfig: max_iter must be >= 1");
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double logistic_loss(const Eigen::VectorXd& gamma, const Dataset& data) {
  check_dims(gamma, data);
  const Eigen::VectorXd m = data.y.cwiseProduct(data.X * gamma);
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) s += softplus(-m[i]);
  return s / static_cast<double>(m.size());
}

Eigen::VectorXd loss_gradient(const Eigen::VectorXd& gamma, const Dataset& data) {
  check_dims(gamma, data);
  const Eigen::VectorXd m = data.y.cwiseProduct(data.X * gamma);
  Eigen::VectorXd c(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    // sigmoid(-m) without overflow
    const double e = std::exp(-std::abs(m[i]));
    const double s = m[i] >= 0.0 ? e / (1.0 + e) : 1.0 / (1.0 + e);
    c[i] = -data.y[i] * s;
  }
  return data.X.transpose() * c / static_cast<double>(m.size());
}

double bounded_term(const Eigen::VectorXd& gamma, const Eigen::VectorXd& x) {
  if (gamma.size() != x.size()) throw DimensionError("bounded_term: dimension mismatch");
  return std::log1p(std::exp(-std::abs(x.dot(gamma))));
}

double unbounded_term(const Eigen::VectorXd& gamma, const Eigen::VectorXd& x, double y) {
  if (gamma.size() != x.size()) throw DimensionError("unbounded_term: dimension mismatch");
  const double s = y * x.dot(gamma);
  return s < 0.0 ? -s : 0.0;
}

FitResult fit(const Dataset& data, const FitConfig& cfg, const std::optional<Eigen::VectorXd>& init) {
  cfg.validate();
  data.validate();
  const Eigen::Index n = data.n(), p = data.p();
  if (n < 1) throw DimensionError("fit: dataset is empty");

  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(p);
  if (init) {
    if (init->size() != p) throw DimensionError("fit: init has wrong dimension");
    if (init->norm() > cfg.M * (1.0 + 1e-12)) throw DomainError("fit: init lies outside the ball");
    gamma = project(*init, cfg.M);
  }

  // Rows pre-multiplied by their labels: margins are Z gamma.
  const Eigen::MatrixXd Z = data.y.asDiagonal() * data.X;
  const double trace = Z.squaredNorm();
  const double base_step = trace > 0.0 ? 4.0 * static_cast<double>(n) / trace : 1.0;

  Eigen::VectorXd margins = Z * gamma;
  Objective obj = evaluate(margins, true);
  if (!std::isfinite(obj.G)) throw SolverError("fit: non-finite objective at the initial point", gamma, 0);

  FitResult res;
  double step = base_step * std::exp(obj.G);
  if (!(step > 0.0)) step = base_step;
  double pg = std::numeric_limits<double>::infinity();
  int it = 0;

  while (it < cfg.max_iter) {
    const Eigen::VectorXd grad = -(Z.transpose() * obj.coefficients());
    const Eigen::VectorXd Zg = Z * grad;
    Eigen::VectorXd cand, cand_margins;
    double s = cfg.step_rule == StepRule::backtracking ? 2.0 * step : base_step * std::exp(obj.G);
    if (!(s > 0.0)) s = base_step;
    bool accepted = false;
    for (int bt = 0; bt < 200; ++bt) {
      const Eigen::VectorXd raw = gamma - s * grad;
      const double nr = raw.norm();
      const double c = nr > cfg.M ? cfg.M / nr : 1.0;
      cand = raw * c;
      cand_margins = c * (margins - s * Zg);
      const double cand_G = evaluate(cand_margins, false).G;
      if (!std::isfinite(cand_G)) throw SolverError("fit: non-finite objective", cand, it);
      if (cfg.step_rule == StepRule::fixed_inverse_lipschitz) {
        accepted = true;
        break;
      }
      double change = cand_G - obj.G;
      if (std::abs(change) < 1e-6) change = objective_change(obj, cand_margins - margins);
      if (change <= 1e-4 * grad.dot(cand - gamma)) {
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;  // no representable decrease left
    ++it;
    pg = (gamma - cand).norm() / s;
    step = s;
    gamma = cand;
    margins = Z * gamma;  // refresh to avoid drift from the incremental update
    obj = evaluate(margins, true);
    if (!std::isfinite(obj.G)) throw SolverError("fit: non-finite objective", gamma, it);
    if (cfg.record_history) res.loss_history.push_back(std::exp(obj.G));
    if (pg <= cfg.tol) break;
  }

  res.gamma_hat = gamma;
  res.tau_hat = gamma.norm();
  if (res.tau_hat > 0.0) res.beta_hat = Direction::normalize(gamma);
  res.log_loss = obj.G;
  res.loss = logistic_loss(gamma, data);
  res.proj_grad_norm = pg;
  res.iterations = it;
  res.converged = pg <= cfg.tol;
  res.boundary_active = res.tau_hat >= cfg.M * (1.0 - 1e-9);
  return res;
}

std::pair<double, Direction> decompose(const FitResult& result) {
  if (!(result.tau_hat > 0.0) || !result.beta_hat)
    throw DegenerateFitError("decompose: gamma_hat is zero");
  return {result.tau_hat, *result.beta_hat};
}

}  // namespace probitlr
