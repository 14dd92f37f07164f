#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "probitlr/errors.hpp"
#include "probitlr/geometry.hpp"
#include "probitlr/rng.hpp"

using namespace probitlr;

namespace {

Eigen::VectorXd unit(RandomStream& rs, int p) { return Direction::normalize(rs.normal_vector(p)).coords(); }

}  // namespace

TEST_CASE("Direction validates its norm") {
  CHECK_THROWS_AS(Direction::normalize(Eigen::VectorXd::Zero(3)), DomainError);
  CHECK_THROWS_AS(Direction::from_unit(Eigen::Vector3d(1, 1, 0)), DomainError);
  const Direction d = Direction::normalize(Eigen::Vector2d(3, 4));
  CHECK(d.coords()[0] == doctest::Approx(0.6));
  CHECK(Direction::axis(4, 2).coords()[2] == 1.0);
}

TEST_CASE("angle disagreement extremes and scale invariance") {
  RandomStream rs(1);
  const Eigen::VectorXd a = rs.normal_vector(5);
  CHECK(angle_disagreement(a, a) == 0.0);
  CHECK(angle_disagreement(a, -a) == 1.0);
  CHECK(angle_disagreement(a, 3.5 * a) == 0.0);
  CHECK_THROWS_AS(angle_disagreement(a, Eigen::VectorXd::Zero(5)), DomainError);
  const Eigen::VectorXd b = rs.normal_vector(5);
  CHECK(angle_disagreement(2.0 * a, 0.1 * b) == doctest::Approx(angle_disagreement(a, b)).epsilon(1e-15));
}

TEST_CASE("orthogonal vectors disagree half the time") {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(5), b = Eigen::VectorXd::Zero(5);
  a[0] = 1;
  b[3] = 2;
  CHECK(angle_disagreement(a, b) == doctest::Approx(0.5).epsilon(1e-15));
  RandomStream rs(2);
  const int N = 1000000;
  int count = 0;
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd x = rs.normal_vector(5);
    count += a.dot(x) * x.dot(b) <= 0.0;
  }
  CHECK(std::abs(static_cast<double>(count) / N - 0.5) < 4 * std::sqrt(0.25 / N));
}

TEST_CASE("sphere distance sandwich") {
  RandomStream rs(3);
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd a = unit(rs, 6), b = unit(rs, 6);
    const double pi_q = std::numbers::pi * angle_disagreement(a, b);
    const double d = (a - b).norm();
    CHECK(d <= pi_q + 1e-12);
    CHECK(pi_q <= 0.5 * std::numbers::pi * d + 1e-12);
  }
}

TEST_CASE("wrong-label probability") {
  CHECK(wrong_label_prob(0.0) == 0.0);
  CHECK(wrong_label_prob(1.0) == 0.25);
  for (double s = 0.05; s <= 0.7001; s += 0.05) {
    const double q = wrong_label_prob(s);
    CHECK(q >= s / (std::numbers::pi * (1 + s * s)));
    CHECK(q <= s / std::numbers::pi);
    CHECK(q == doctest::Approx(std::acos(1 / std::sqrt(1 + s * s)) / std::numbers::pi).epsilon(1e-13));
  }
  double prev = 0.0;
  for (double s = 1e-3; s < 1e3; s *= 1.7) {
    CHECK(wrong_label_prob(s) > prev);
    prev = wrong_label_prob(s);
  }
}

TEST_CASE("star norm") {
  const StarGeometry g(4.0);
  CHECK(star_norm(g, 0.0, Eigen::VectorXd::Zero(3)) == 0.0);
  CHECK(star_norm(g, 8.0, Eigen::VectorXd::Zero(3)) == doctest::Approx(1.0));
  RandomStream rs(4);
  for (int i = 0; i < 20; ++i) {
    const double t = rs.normal(), c = 3 * rs.normal();
    const Eigen::VectorXd v = rs.normal_vector(3);
    CHECK(star_norm(g, c * t, c * v) == doctest::Approx(std::abs(c) * star_norm(g, t, v)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(StarGeometry(0.0), DomainError);
  CHECK_THROWS_AS(StarGeometry(std::numeric_limits<double>::infinity()), DomainError);
}

TEST_CASE("d_star") {
  RandomStream rs(5);
  const Direction bstar = Direction::normalize(rs.normal_vector(4));
  const StarGeometry g(4.0);
  CHECK(d_star(g, bstar, 4.0 * bstar.coords()) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(d_star(g, bstar, Eigen::VectorXd::Zero(4)), DomainError);

  // ||beta - beta*|| = 0.1 with tau = tau* = 4.
  Eigen::VectorXd perp = rs.normal_vector(4);
  perp -= perp.dot(bstar.coords()) * bstar.coords();
  perp.normalize();
  const double theta = 2 * std::asin(0.05);
  const Eigen::VectorXd beta = std::cos(theta) * bstar.coords() + std::sin(theta) * perp;
  CHECK((beta - bstar.coords()).norm() == doctest::Approx(0.1));
  CHECK(d_star(g, bstar, 4.0 * beta) == doctest::Approx(0.2).epsilon(1e-12));

  for (double ts : {1.0, 3.0, 10.0}) {
    const StarGeometry gg(ts);
    for (int i = 0; i < 50; ++i) {
      Eigen::VectorXd gamma = (0.2 + 3 * rs.uniform()) * ts * unit(rs, 4);
      if (gamma.dot(bstar.coords()) < 0) gamma = -gamma;
      const double ratio = (gamma - ts * bstar.coords()).norm() / d_star(gg, bstar, gamma);
      CHECK(ratio >= std::sqrt(ts) / 3 - 1e-12);
      CHECK(ratio <= std::sqrt(2 * ts * ts * ts) + 1e-12);
    }
  }
}

TEST_CASE("d_star triangle inequality") {
  RandomStream rs(6);
  const Direction bstar = Direction::normalize(rs.normal_vector(3));
  const StarGeometry g(2.5);
  // d(a, b) via the identity d(gamma) measured from the base point gamma*; the metric
  // itself is the *-norm distance between (||.||, ./||.||) embeddings.
  const auto embed = [](const Eigen::VectorXd& v) {
    Eigen::VectorXd e(v.size() + 1);
    e[0] = v.norm();
    e.tail(v.size()) = v / v.norm();
    return e;
  };
  const auto dist = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd d = embed(a) - embed(b);
    return star_norm(g, d[0], d.tail(d.size() - 1));
  };
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd a = rs.normal_vector(3), b = rs.normal_vector(3), c = rs.normal_vector(3);
    CHECK(dist(a, c) <= dist(a, b) + dist(b, c) + 1e-12);
  }
  const Eigen::VectorXd a = rs.normal_vector(3);
  CHECK(dist(a, 2.5 * bstar.coords()) == doctest::Approx(d_star(g, bstar, a)).epsilon(1e-13));
}

TEST_CASE("h-frame") {
  RandomStream rs(7);
  for (int p : {1, 2, 5, 12}) {
    const Direction bstar = Direction::normalize(rs.normal_vector(p));
    const HFrame f(bstar);
    const Eigen::MatrixXd& V = f.completion();
    REQUIRE(V.rows() == p);
    REQUIRE(V.cols() == p - 1);
    CHECK((V.transpose() * V - Eigen::MatrixXd::Identity(p - 1, p - 1)).norm() < 1e-10);
    CHECK((V.transpose() * bstar.coords()).norm() < 1e-10);
    CHECK(f.h_coordinates(bstar.coords()).norm() < 1e-12);
    for (int i = 0; i < 50; ++i) {
      Eigen::VectorXd beta = unit(rs, p);
      if (beta.dot(bstar.coords()) < 0) beta = -beta;
      const Eigen::VectorXd h = f.h_coordinates(beta);
      const double d = (beta - bstar.coords()).norm();
      CHECK(h.norm() <= d + 1e-12);
      CHECK(d <= std::sqrt(2.0) * h.norm() + 1e-12);
      CHECK((f.reconstruct(h) - beta).norm() <= 1e-10);
    }
  }
  // Axis-aligned bases exercise both Householder branches.
  for (double s : {1.0, -1.0}) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
    e[0] = s;
    const HFrame f(Direction::from_unit(e));
    CHECK((f.completion().transpose() * e).norm() < 1e-15);
  }
}

TEST_CASE("orthonormalized pairs") {
  RandomStream rs(8);
  const Eigen::VectorXd a = rs.normal_vector(4), b = rs.normal_vector(4);
  const PlaneBasis pb = orthonormalize_pair(a, b);
  CHECK(pb.e1.norm() == doctest::Approx(1.0));
  CHECK(pb.e2.norm() == doctest::Approx(1.0));
  CHECK(std::abs(pb.e1.dot(pb.e2)) < 1e-14);
  const Eigen::VectorXd resid = b - b.dot(pb.e1) * pb.e1 - b.dot(pb.e2) * pb.e2;
  CHECK(resid.norm() < 1e-12);
  const PlaneBasis par = orthonormalize_pair(a, -3.0 * a);
  CHECK(par.e2.norm() == doctest::Approx(1.0));
  CHECK(std::abs(par.e1.dot(par.e2)) < 1e-14);
}
