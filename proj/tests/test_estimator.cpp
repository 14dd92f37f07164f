#include <doctest.h>

#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "probitlr/errors.hpp"
#include "probitlr/estimator.hpp"
#include "probitlr/model.hpp"

using namespace probitlr;

namespace {

Dataset probit_data(int p, long n, double sigma, std::uint64_t seed) {
  RandomStream rs(seed);
  const ModelSpec spec(p, sigma, random_direction(p, rs));
  return sample(spec, n, rs);
}

FitConfig config(double M, double tol = 1e-10) {
  FitConfig c;
  c.M = M;
  c.tol = tol;
  return c;
}

}  // namespace

TEST_CASE("loss at the origin and along a separating ray") {
  const Dataset d = probit_data(3, 40, 0.5, 1);
  CHECK(logistic_loss(Eigen::VectorXd::Zero(3), d) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  Dataset sep;
  sep.X = Eigen::MatrixXd(3, 2);
  sep.X << 1, 0.2, 0.5, -1, 2, 1;
  sep.y = Eigen::Vector3d(1, 1, 1);
  const Eigen::Vector2d g(1, 0);  // margins 1, 0.5, 2
  double prev = logistic_loss(Eigen::Vector2d::Zero(), sep);
  for (double c = 0.5; c < 1000; c *= 2) {
    const double l = logistic_loss(c * g, sep);
    CHECK(l < prev);
    prev = l;
  }
  CHECK(prev < 1e-100);
}

TEST_CASE("loss is overflow safe") {
  Dataset d;
  d.X = Eigen::MatrixXd(2, 1);
  d.X << 1e300, -1e300;
  d.y = Eigen::Vector2d(1, 1);
  const double l = logistic_loss(Eigen::VectorXd::Constant(1, 1.0), d);
  CHECK(std::isfinite(l));
  CHECK(l == doctest::Approx(0.5e300));
  CHECK(loss_gradient(Eigen::VectorXd::Constant(1, 1.0), d).allFinite());
  CHECK(softplus(-800) >= 0.0);
  CHECK(softplus(800) == 800.0);
}

TEST_CASE("bounded plus unbounded equals the pointwise loss") {
  const Eigen::Vector2d g(0.3, -0.7);
  CHECK(bounded_term(g, Eigen::Vector2d::Zero()) == doctest::Approx(std::log(2.0)));
  CHECK(unbounded_term(g, Eigen::Vector2d::Zero(), 1.0) == 0.0);
  // y x^T gamma = -2
  const Eigen::Vector2d x(0.0, 2.0 / 0.7);
  CHECK(bounded_term(g, x) == doctest::Approx(std::log1p(std::exp(-2.0))));
  CHECK(unbounded_term(g, x, 1.0) == doctest::Approx(2.0));
  const Dataset d = probit_data(4, 300, 0.5, 2);
  RandomStream rs(3);
  for (int t = 0; t < 5; ++t) {
    const Eigen::VectorXd gamma = 2 * rs.normal_vector(4);
    double sb = 0, su = 0;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      const Eigen::VectorXd xi = d.X.row(i).transpose();
      const double b = bounded_term(gamma, xi), u = unbounded_term(gamma, xi, d.y[i]);
      CHECK(b > 0.0);
      CHECK(b <= std::log(2.0));
      CHECK(u >= 0.0);
      sb += b;
      su += u;
    }
    CHECK(std::abs(logistic_loss(gamma, d) - (sb + su) / d.n()) < 1e-12);
  }
}

TEST_CASE("gradient") {
  const Dataset d = probit_data(5, 50, 0.5, 4);
  const Eigen::VectorXd g0 = loss_gradient(Eigen::VectorXd::Zero(5), d);
  const Eigen::VectorXd expect = -(d.X.transpose() * d.y) / (2.0 * d.n());
  CHECK((g0 - expect).norm() < 1e-15);

  RandomStream rs(5);
  for (int t = 0; t < 5; ++t) {
    const Eigen::VectorXd gamma = rs.normal_vector(5);
    const Eigen::VectorXd g = loss_gradient(gamma, d);
    Eigen::VectorXd fd(5);
    const double h = 1e-6;
    for (int j = 0; j < 5; ++j) {
      Eigen::VectorXd a = gamma, b = gamma;
      a[j] += h;
      b[j] -= h;
      fd[j] = (logistic_loss(a, d) - logistic_loss(b, d)) / (2 * h);
    }
    CHECK((fd - g).norm() / g.norm() <= 1e-6);
  }

  Dataset dup;
  dup.X.resize(2 * d.n(), 5);
  dup.X << d.X, d.X;
  dup.y.resize(2 * d.n());
  dup.y << d.y, -d.y;
  CHECK(loss_gradient(Eigen::VectorXd::Zero(5), dup).norm() <= 1e-15);
  CHECK_THROWS_AS(loss_gradient(Eigen::VectorXd::Zero(4), d), DimensionError);
  CHECK_THROWS_AS(logistic_loss(Eigen::VectorXd::Zero(6), d), DimensionError);
}

TEST_CASE("config validation") {
  FitConfig c;
  c.M = -1;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c.M = 1;
  c.tol = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c.tol = 1e-8;
  c.max_iter = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("separable data end on the boundary") {
  Dataset d = probit_data(3, 20, 1e-9, 6);
  const FitResult r = fit(d, config(5.0, 1e-8));
  CHECK(r.boundary_active);
  CHECK(r.tau_hat == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(r.tau_hat <= 5.0 * (1 + 1e-12));
}

TEST_CASE("one-dimensional fit matches golden-section search") {
  const Dataset d = probit_data(1, 200, 0.8, 7);
  const double M = 50.0;
  const FitResult r = fit(d, config(M));
  CHECK(r.converged);
  double a = -M, b = M;
  const double g = (std::sqrt(5.0) - 1) / 2;
  const auto L = [&](double t) { return logistic_loss(Eigen::VectorXd::Constant(1, t), d); };
  while (b - a > 1e-12) {
    const double c = b - g * (b - a), e = a + g * (b - a);
    if (L(c) < L(e))
      b = e;
    else
      a = c;
  }
  CHECK(std::abs(r.gamma_hat[0] - 0.5 * (a + b)) < 1e-6);
}

TEST_CASE("two-dimensional fit beats a dense grid") {
  const Dataset d = probit_data(2, 30, 0.7, 8);
  const double M = 10.0;
  const FitResult r = fit(d, config(M));
  CHECK(r.converged);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j <= 400; ++j) {
      const Eigen::Vector2d g(-M + 0.05 * i, -M + 0.05 * j);
      if (g.norm() > M) continue;
      best = std::min(best, logistic_loss(g, d));
    }
  CHECK(r.loss <= best + 1e-12);
}

TEST_CASE("monotone descent, feasibility and the optimality certificate") {
  const Dataset d = probit_data(4, 500, 0.5, 9);
  FitConfig c = config(100.0, 1e-9);
  c.record_history = true;
  const FitResult r = fit(d, c);
  REQUIRE(r.converged);
  CHECK(r.proj_grad_norm <= c.tol);
  CHECK_FALSE(r.boundary_active);
  CHECK(loss_gradient(r.gamma_hat, d).norm() <= 1e-8);
  for (std::size_t i = 1; i < r.loss_history.size(); ++i) CHECK(r.loss_history[i] <= r.loss_history[i - 1] * (1 + 1e-14));  // rounding only
  CHECK((r.beta_hat->coords() * r.tau_hat - r.gamma_hat).norm() < 1e-10);

  // A small radius makes the constraint active.
  const FitResult s = fit(d, config(0.3, 1e-10));
  CHECK(s.boundary_active);
  CHECK(s.gamma_hat.norm() <= 0.3 * (1 + 1e-12));
}

TEST_CASE("fixed inverse-Lipschitz step converges to the same point") {
  const Dataset d = probit_data(3, 200, 0.6, 10);
  FitConfig a = config(20.0, 1e-10), b = a;
  b.step_rule = StepRule::fixed_inverse_lipschitz;
  const FitResult ra = fit(d, a), rb = fit(d, b);
  CHECK(ra.converged);
  CHECK(rb.converged);
  CHECK((ra.gamma_hat - rb.gamma_hat).norm() < 1e-7);
}

TEST_CASE("label and rotation symmetries") {
  const Dataset d = probit_data(3, 300, 0.5, 11);
  const FitResult base = fit(d, config(50.0));
  Dataset flipped = d;
  flipped.y = -d.y;
  CHECK((fit(flipped, config(50.0)).gamma_hat + base.gamma_hat).norm() < 1e-7);
  Dataset both = flipped;
  both.X = -d.X;
  CHECK((fit(both, config(50.0)).gamma_hat - base.gamma_hat).norm() < 1e-7);

  RandomStream rs(12);
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::NullaryExpr(3, 3, [&] { return rs.normal(); })).householderQ();
  Dataset rot = d;
  rot.X = d.X * Q.transpose();
  CHECK((fit(rot, config(50.0)).gamma_hat - Q * base.gamma_hat).norm() < 1e-7);
}

TEST_CASE("initial point and failures") {
  const Dataset d = probit_data(2, 50, 0.5, 13);
  CHECK_THROWS_AS(fit(d, config(1.0), Eigen::Vector2d(2, 0)), DomainError);
  CHECK_THROWS_AS(fit(d, config(1.0), Eigen::VectorXd::Zero(3)), DimensionError);
  const FitResult warm = fit(d, config(5.0), Eigen::Vector2d(0, 1));
  const FitResult cold = fit(d, config(5.0));
  CHECK((warm.gamma_hat - cold.gamma_hat).norm() < 1e-7);

  Dataset bad = d;
  bad.X(3, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit(bad, config(1.0)), SolverError);

  FitConfig capped = config(5.0, 1e-14);
  capped.max_iter = 2;
  const FitResult c = fit(d, capped);
  CHECK_FALSE(c.converged);
  CHECK(c.iterations <= 2);
}

TEST_CASE("decompose") {
  FitResult r;
  r.gamma_hat = Eigen::Vector2d(3, 4);
  r.tau_hat = 5;
  r.beta_hat = Direction::normalize(r.gamma_hat);
  const auto [t, b] = decompose(r);
  CHECK(t == 5.0);
  CHECK(b.coords()[0] == doctest::Approx(0.6));
  CHECK(b.coords()[1] == doctest::Approx(0.8));
  FitResult scaled = r;
  scaled.gamma_hat *= 7;
  scaled.beta_hat = Direction::normalize(scaled.gamma_hat);
  CHECK((decompose(scaled).second.coords() - b.coords()).norm() < 1e-15);
  FitResult zero;
  zero.gamma_hat = Eigen::Vector2d::Zero();
  CHECK_THROWS_AS(decompose(zero), DegenerateFitError);
}

TEST_CASE("mean unbounded term tracks its population value") {
  RandomStream rs(14);
  const ModelSpec spec(3, 0.5, random_direction(3, rs));
  const Dataset d = sample(spec, 400000, rs);
  const Direction beta = random_direction(3, rs);
  double s = 0, s2 = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double u = unbounded_term(beta.coords(), d.X.row(i).transpose(), d.y[i]);
    s += u;
    s2 += u * u;
  }
  const double mean = s / d.n(), se = std::sqrt((s2 / d.n() - mean * mean) / d.n());
  CHECK(std::abs(mean - population_unbounded_mean(beta, spec)) < 4 * se);
}
