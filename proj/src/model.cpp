#include "probitlr/model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "probitlr/errors.hpp"
#include "probitlr/gaussian_integrals.hpp"

namespace probitlr {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double softplus_neg(double a) { return std::log1p(std::exp(-a)); }  // a >= 0

double margin_tau_floor() { return std::sqrt(6.0 + std::sqrt(51.0)); }

}  // namespace

ModelSpec::ModelSpec(int p_, double sigma_, Direction beta_star_)
    : p(p_), sigma(sigma_), beta_star(std::move(beta_star_)) {
  if (p < 1) throw DomainError("ModelSpec: p must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("ModelSpec: sigma must be > 0");
  if (beta_star.dim() != p) throw DimensionError("ModelSpec: beta_star has wrong dimension");
}

void Dataset::validate() const {
  if (X.rows() != y.size()) throw DimensionError("Dataset: X rows and y length differ");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 1.0 && y[i] != -1.0) throw FormatError("Dataset: label not in {-1, +1}");
}

Dataset sample(const ModelSpec& spec, Eigen::Index n, RandomStream& stream) {
  if (n < 1) throw DomainError("sample: n must be >= 1");
  Dataset d;
  d.X.resize(n, spec.p);
  d.y.resize(n);
  const Eigen::VectorXd& b = spec.beta_star.coords();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < spec.p; ++j) d.X(i, j) = stream.normal();
    const double eps = stream.normal();
    d.y[i] = sign_label(d.X.row(i).dot(b) + spec.sigma * eps);
  }
  return d;
}

Direction random_direction(Eigen::Index p, RandomStream& stream) {
  for (;;) {
    Eigen::VectorXd g = stream.normal_vector(p);
    if (g.norm() > 0.0) return Direction::normalize(g);
  }
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  data.validate();
  for (Eigen::Index j = 0; j < data.p(); ++j) os << 'x' << (j + 1) << ',';
  os << "y\n";
  char buf[32];
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.X(i, j));
      os << buf << ',';
    }
    os << (data.y[i] > 0 ? "1" : "-1") << '\n';
  }
}

Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("dataset csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header.back() != "y")
    throw FormatError("dataset csv: header must be x1,...,xp,y");
  const std::size_t p = header.size() - 1;
  for (std::size_t j = 0; j < p; ++j)
    if (header[j] != "x" + std::to_string(j + 1))
      throw FormatError("dataset csv: unexpected header column '" + header[j] + "'");

  std::vector<double> xs, ys;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw FormatError("dataset csv: bad number on line " + std::to_string(row));
      }
      if (used != cell.size())
        throw FormatError("dataset csv: trailing characters on line " + std::to_string(row));
      if (col < p)
        xs.push_back(v);
      else if (col == p)
        ys.push_back(v);
      ++col;
    }
    if (col != p + 1)
      throw FormatError("dataset csv: wrong column count on line " + std::to_string(row));
  }
  Dataset d;
  const Eigen::Index n = static_cast<Eigen::Index>(ys.size());
  d.X = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      xs.data(), n, static_cast<Eigen::Index>(p));
  d.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  d.validate();
  return d;
}

double population_unbounded_mean(const Direction& beta, const ModelSpec& spec) {
  if (beta.dim() != spec.p) throw DimensionError("population_unbounded_mean: dimension mismatch");
  const double root = std::sqrt(1.0 + spec.sigma * spec.sigma);
  // 1 - rho/root = (root - 1)/root + (1 - rho)/root, with 1 - rho = ||b - b*||^2 / 2.
  const double half_d2 = 0.5 * (beta.coords() - spec.beta_star.coords()).squaredNorm();
  return kInvSqrt2Pi * ((root - 1.0) + half_d2) / root;
}

double population_excess_unbounded(const Direction& beta, const ModelSpec& spec) {
  if (beta.dim() != spec.p) throw DimensionError("population_excess_unbounded: dimension mismatch");
  const double d2 = (beta.coords() - spec.beta_star.coords()).squaredNorm();
  return d2 / std::sqrt(8.0 * std::numbers::pi * (1.0 + spec.sigma * spec.sigma));
}

double population_bounded_mean(double tau) {
  if (!(tau >= 0.0)) throw DomainError("population_bounded_mean: tau must be >= 0");
  return expect_abs([tau](double t) { return softplus_neg(tau * t); });
}

double population_risk(double tau, const Direction& beta, const ModelSpec& spec) {
  if (!(tau > 0.0)) throw DomainError("population_risk: tau must be > 0");
  return population_bounded_mean(tau) + tau * population_unbounded_mean(beta, spec);
}

double population_risk_h(double tau, const Eigen::VectorXd& h, const ModelSpec& spec) {
  if (!(tau > 0.0)) throw DomainError("population_risk_h: tau must be > 0");
  const double h2 = h.squaredNorm();
  if (!(h2 <= 1.0)) throw DomainError("population_risk_h: ||h|| must be <= 1");
  const double root = std::sqrt(1.0 + spec.sigma * spec.sigma);
  const double rho = std::sqrt(1.0 - h2);
  return population_bounded_mean(tau) + tau * kInvSqrt2Pi * (1.0 - rho / root);
}

double population_risk_dtau(double tau, const ModelSpec& spec) {
  return link_target(spec.sigma) - link_value(tau);
}

double population_excess_risk(double tau, const Direction& beta, const ModelSpec& spec,
                              double tau_star) {
  if (!(tau > 0.0) || !(tau_star > 0.0)) throw DomainError("population_excess_risk: tau must be > 0");
  const double bounded = expect_abs(
      [tau, tau_star](double t) { return softplus_neg(tau * t) - softplus_neg(tau_star * t); });
  const double root = std::sqrt(1.0 + spec.sigma * spec.sigma);
  const double half_d2 = 0.5 * (beta.coords() - spec.beta_star.coords()).squaredNorm();
  // tau (1 - rho/root) - tau* (1 - 1/root) = (tau - tau*)(1 - 1/root) + tau (1 - rho)/root
  const double unbounded =
      kInvSqrt2Pi * ((tau - tau_star) * (root - 1.0) / root + tau * half_d2 / root);
  return bounded + unbounded;
}

double population_hessian_tau_block(double tau) {
  return expect_abs([tau](double t) {
    const double e = std::exp(-tau * t);
    return t * t * e / ((1.0 + e) * (1.0 + e));
  });
}

Eigen::MatrixXd population_hessian(double tau, const Eigen::VectorXd& h, const ModelSpec& spec) {
  if (!(tau > 0.0)) throw DomainError("population_hessian: tau must be > 0");
  if (h.size() != spec.p - 1) throw DimensionError("population_hessian: h must have length p - 1");
  const double h2 = h.squaredNorm();
  if (!(h2 < 1.0)) throw DomainError("population_hessian: ||h|| must be < 1");
  const Eigen::Index q = h.size();
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi * (1.0 + spec.sigma * spec.sigma));
  const double r = std::sqrt(1.0 - h2);
  Eigen::MatrixXd H(q + 1, q + 1);
  H(0, 0) = population_hessian_tau_block(tau);
  H.block(1, 0, q, 1) = (c / r) * h;
  H.block(0, 1, 1, q) = H.block(1, 0, q, 1).transpose();
  H.block(1, 1, q, q) = (tau * c / r) * (Eigen::MatrixXd::Identity(q, q) + h * h.transpose() / (1.0 - h2));
  return H;
}

BoundReport margin_check_point(const ModelSpec& spec, double kappa, double tau,
                               const Direction& beta, double tau_star) {
  BoundReport r;
  r.lemma = LemmaId::margin;
  r.method = EvalMethod::quadrature;
  const double rho = beta.dot(spec.beta_star);
  const double dist = (beta.coords() - spec.beta_star.coords()).norm();
  r.params = {{"sigma", spec.sigma}, {"kappa", kappa},     {"tau", tau},
              {"tau_star", tau_star}, {"rho", rho},        {"beta_dist", dist}};
  const auto skip = [&r](const char* why) {
    r.skipped = true;
    r.holds = false;
    r.skip_reason = why;
    r.lower = r.value = r.upper = std::numeric_limits<double>::quiet_NaN();
    return r;
  };
  const double floor = margin_tau_floor();
  if (!(kappa > 0.0 && kappa < 1.0 / 3.0)) return skip("requires kappa in (0, 1/3)");
  if (!(tau_star >= floor)) return skip("requires tau* >= sqrt(6 + sqrt 51)");
  if (!(tau >= floor)) return skip("requires tau >= sqrt(6 + sqrt 51)");
  if (!(std::abs(tau - tau_star) <= kappa * tau_star)) return skip("requires |tau - tau*| <= kappa tau*");
  if (!(rho > 0.0)) return skip("requires beta^T beta* > 0");

  const StarGeometry geom(tau_star);
  const double ds = d_star(geom, spec.beta_star, tau * beta.coords());
  r.params["d_star"] = ds;
  const double root = std::sqrt(1.0 + spec.sigma * spec.sigma);
  const double c = std::min(1.0 / std::pow(1.0 + kappa, 3), (1.0 - 3.0 * kappa) / root);
  r.lower = c / std::sqrt(32.0 * std::numbers::pi) * ds * ds;
  r.value = population_excess_risk(tau, beta, spec, tau_star);
  r.upper = std::numeric_limits<double>::infinity();
  // Both sides come from the same quadrature; the difference integrand is
  // accurate to roughly machine precision relative to log 2.
  r.slack = 1e-12;
  r.holds = r.lower - r.slack <= r.value;
  return r;
}

std::vector<BoundReport> margin_check(const ModelSpec& spec, double kappa, int sample_count,
                                      RandomStream& stream) {
  const double tau_star = sigma_to_tau_star(spec.sigma);
  const double floor = margin_tau_floor();
  std::vector<BoundReport> out;
  out.reserve(sample_count);
  const Eigen::VectorXd& b = spec.beta_star.coords();
  for (int s = 0; s < sample_count; ++s) {
    // tau uniform over the admissible band.
    const double lo = std::max(floor, tau_star * (1.0 - kappa));
    const double hi = tau_star * (1.0 + kappa);
    const double tau = hi > lo ? lo + (hi - lo) * stream.uniform() : tau_star * (1.0 + kappa);
    // Angle to beta* log-uniform in [1e-3, pi/2) so small and large d_* both appear.
    const double theta = std::exp(std::log(1e-3) + (std::log(0.5 * std::numbers::pi * 0.999) - std::log(1e-3)) * stream.uniform());
    Eigen::VectorXd beta = b;
    if (spec.p > 1) {
      Eigen::VectorXd g = stream.normal_vector(spec.p);
      g -= g.dot(b) * b;
      const double gn = g.norm();
      if (gn > 0.0) beta = std::cos(theta) * b + std::sin(theta) * (g / gn);
    }
    out.push_back(margin_check_point(spec, kappa, tau, Direction::normalize(beta), tau_star));
  }
  return out;
}

}  // namespace probitlr
