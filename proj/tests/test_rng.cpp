#include <doctest.h>

#include <cmath>
#include <set>

#include "probitlr/rng.hpp"

using namespace probitlr;

TEST_CASE("philox known answers") {
  const auto a = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(a[0] == 0x6627e8d5u);
  CHECK(a[1] == 0xe169c58du);
  CHECK(a[2] == 0xbc57ac4cu);
  CHECK(a[3] == 0x9b00dbd8u);
  const auto b = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(b[0] == 0x408f276du);
  CHECK(b[1] == 0x41c83b0eu);
  CHECK(b[2] == 0xa20bc7c6u);
  CHECK(b[3] == 0x6d5451fdu);
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differs |= x != c.normal();
  }
  CHECK(differs);
}

TEST_CASE("derived seeds separate cells and replicates") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t cell = 0; cell < 20; ++cell)
    for (std::uint64_t rep = 0; rep < 50; ++rep) seen.insert(derive_stream_seed(7, cell, rep));
  CHECK(seen.size() == 1000);
  CHECK(derive_stream_seed(7, 1, 2) == splitmix64(splitmix64(splitmix64(7) ^ 1) ^ 2));
}

TEST_CASE("uniform and normal moments") {
  RandomStream rs(1);
  const int N = 400000;
  double su = 0, sn = 0, sn2 = 0, sn4 = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < N; ++i) {
    const double u = rs.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    const double z = rs.normal();
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  CHECK(umin >= 0.0);
  CHECK(umax < 1.0);
  CHECK(std::abs(su / N - 0.5) < 4 * std::sqrt(1.0 / 12 / N));
  CHECK(std::abs(sn / N) < 4 / std::sqrt(N));
  CHECK(std::abs(sn2 / N - 1.0) < 4 * std::sqrt(2.0 / N));
  CHECK(std::abs(sn4 / N - 3.0) < 4 * std::sqrt(96.0 / N));
}

TEST_CASE("open-low uniform never returns zero; rademacher is balanced") {
  RandomStream rs(9);
  int plus = 0;
  const int N = 100000;
  for (int i = 0; i < N; ++i) {
    CHECK(rs.uniform_open_low() > 0.0);
    const double r = rs.rademacher();
    REQUIRE((r == 1.0 || r == -1.0));
    plus += r > 0;
  }
  CHECK(std::abs(plus - N / 2) < 4 * std::sqrt(N / 4.0));
}
