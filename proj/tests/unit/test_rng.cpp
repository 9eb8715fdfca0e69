#include <set>
#include <vector>

#include "crrl/rng.hpp"
#include "doctest.h"

using crrl::Rng;

TEST_CASE("same key, same sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
}

TEST_CASE("derive leaves the parent untouched and separates roles") {
  Rng parent(7);
  const auto before = parent.position();
  Rng x = parent.derive(1, 0), y = parent.derive(1, 1), z = parent.derive(2, 0);
  CHECK(parent.position() == before);
  CHECK(x.key() != y.key());
  CHECK(x.key() != z.key());
  CHECK(parent.derive(1, 0).key() == x.key());
}

TEST_CASE("make_stream is keyed by seed, role and index") {
  using crrl::StreamRole;
  std::set<std::uint64_t> keys;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    for (auto role : {StreamRole::environment, StreamRole::adversary, StreamRole::estall, StreamRole::scheduler}) {
      for (std::uint64_t i = 0; i < 4; ++i) keys.insert(crrl::make_stream(seed, role, i).key());
    }
  }
  CHECK(keys.size() == 64);
}

TEST_CASE("uniform draws stay in range and look uniform") {
  Rng r(3);
  double sum = 0.0;
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    const auto k = r.uniform_index(7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  for (int c : counts) CHECK(std::abs(c - n / 7) < 400);
}

TEST_CASE("uniform_index of one is always zero") {
  Rng r(9);
  for (int i = 0; i < 50; ++i) CHECK(r.uniform_index(1) == 0);
}
