#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "crrl/barbar.hpp"
#include "crrl/errors.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace crrl;

namespace {

Environment null_env(const TabularMdp& m, std::uint64_t T, std::uint64_t seed) {
  return Environment(m, make_adversary(AdversarySpec{}, m, T), T, make_stream(seed, StreamRole::environment));
}

MetaRunResult run_m0(std::uint64_t T, std::uint64_t seed) {
  const auto m = fixtures::m0();
  const auto set = enumerate_policies(m.shape());
  auto env = null_env(m, T, seed);
  return run_barbar(set, env, MetaParams{T, 0.1, 1e-12, 6}, seed);
}

}  // namespace

TEST_CASE("constants") {
  const auto l = barbar_constants(2, 2, 2, 0.01, 8, 0.5);
  CHECK(l.lambda1 == doctest::Approx(177.06621).epsilon(1e-7));
  CHECK(l.lambda1 == doctest::Approx(24.0 * std::log(1600.0)).epsilon(1e-15));
  CHECK(l.lambda2 == doctest::Approx(12.0 * std::log(128.0)).epsilon(1e-15));
  CHECK(barbar_constants(2, 2, 2, 0.02, 8, 0.5).lambda1 < l.lambda1);
  CHECK_THROWS_AS(barbar_constants(2, 2, 2, 0.0, 8, 0.5), DomainError);
  CHECK_THROWS_AS(barbar_constants(2, 2, 2, 0.01, 0, 0.5), DomainError);
  CHECK_THROWS_AS(barbar_constants(2, 2, 2, 0.01, 8, 1.0), DomainError);
}

TEST_CASE("epoch count and finest accuracy") {
  CHECK(max_epochs(1) == 1);
  CHECK(max_epochs(2) == 1);
  CHECK(max_epochs(3) == 2);
  CHECK(max_epochs(1024) == 10);
  CHECK(max_epochs(1025) == 11);
  CHECK(finest_epsilon_est(1024) == std::ldexp(1.0, -10) / 128.0);
}

TEST_CASE("equal estimates all land in bucket m") {
  const std::vector<double> est(5, 0.7), prev(5, 1.0);
  const auto r = rebucket(est, prev, 1);
  CHECK(r.r_star == doctest::Approx(0.7 - 1.0 / 16));
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(r.bucket[k] == 1);
    CHECK(r.gap[k] == 0.5);
  }
}

TEST_CASE("rebucket by hand") {
  // r_* = 1.0 - 1/16 = 0.9375; deficits 0, 0.1375, 0.4375, 0.9375
  const std::vector<double> est{1.0, 0.8, 0.5, 0.0}, prev(4, 1.0);
  const auto r = rebucket(est, prev, 3);
  CHECK(r.bucket == std::vector<std::int32_t>{3, 3, 2, 1});
  CHECK(r.gap == std::vector<double>{0.125, 0.125, 0.25, 0.5});
  // large deficits clamp to bucket 0
  const std::vector<double> est2{3.0, 0.0}, prev2(2, 1.0);
  CHECK(rebucket(est2, prev2, 4).bucket == std::vector<std::int32_t>{4, 0});
}

TEST_CASE("rebucket properties on random inputs") {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const unsigned m = 1 + trial % 8;
    const std::size_t n = 1 + trial % 17;
    std::vector<double> est(n), prev(n);
    for (std::size_t k = 0; k < n; ++k) {
      est[k] = u(gen);
      prev[k] = std::ldexp(1.0, -static_cast<int>(gen() % m));
    }
    const auto r = rebucket(est, prev, m);
    std::size_t attainer = 0;
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(r.bucket[k] >= 0);
      CHECK(r.bucket[k] <= static_cast<std::int32_t>(m));
      CHECK(r.gap[k] >= std::ldexp(1.0, -static_cast<int>(m)));
      CHECK(r.gap[k] <= 1.0);
      CHECK(r.gap[k] == std::ldexp(1.0, -r.bucket[k]));
      if (est[k] - prev[k] / 16 > est[attainer] - prev[attainer] / 16) attainer = k;
    }
    CHECK(r.bucket[attainer] == static_cast<std::int32_t>(m));
    GapTable table(n);
    table.apply(r);
    std::size_t covered = 0;
    for (const auto& [j, members] : table.buckets()) {
      covered += members.size();
      for (PolicyId id : members) CHECK(r.bucket[id] == j);
    }
    CHECK(covered == n);
  }
}

TEST_CASE("epoch plans") {
  const MdpShape shape{2, 2, 2, 0};
  const MetaParams params{1000, 0.1, 0.5, 6};
  const auto lambdas = barbar_constants(2, 2, 2, finest_epsilon_est(1000), 1000, 0.1);
  std::map<std::int32_t, std::vector<PolicyId>> buckets{{1, {0, 1, 2}}, {3, {3}}};
  const auto plan = plan_epoch(3, buckets, shape, 4, params, lambdas);
  REQUIRE(plan.buckets.size() == 2);
  double total = 0.0;
  for (const auto& b : plan.buckets) {
    CHECK(b.epsilon_est == std::ldexp(1.0, -b.j) / 128.0);
    CHECK(b.delta == doctest::Approx(b.members.size() * 0.1 / (5.0 * 4 * 1000)).epsilon(1e-15));
    const double F = 8.0 * 4 * 16 * 4 * std::log(2.0 * b.members.size() / b.delta) / (b.epsilon_est * b.epsilon_est);
    CHECK(b.F == doctest::Approx(F).epsilon(1e-13));
    CHECK(b.F_est == static_cast<std::uint64_t>(std::ceil(0.5 * F)));
    CHECK(b.n == doctest::Approx(2 * lambdas.lambda1 * lambdas.lambda2 * 0.5 * F).epsilon(1e-13));
    total += b.n;
  }
  CHECK(plan.length == doctest::Approx(total).epsilon(1e-15));
  // finer buckets mean longer epochs
  std::map<std::int32_t, std::vector<PolicyId>> finer{{2, {0, 1, 2}}, {4, {3}}};
  CHECK(plan_epoch(4, finer, shape, 4, params, lambdas).length > plan.length);
}

TEST_CASE("short runs truncate at T") {
  for (std::uint64_t T : {1, 7, 100, 3000}) {
    const auto r = run_m0(T, 3);
    CHECK(r.episodes.size() == T);
    for (std::size_t k = 0; k < r.episodes.size(); ++k) {
      CHECK(r.episodes[k].t == k + 1);
      if (r.episodes[k].epoch == 1) CHECK(r.episodes[k].bucket == 0);
    }
  }
}

TEST_CASE("M0 run: schedule bookkeeping and determinism") {
  const std::uint64_t T = 20000;
  const auto r = run_m0(T, 5);
  CHECK(r.episodes.size() == T);
  CHECK(r.restarts == 0);
  REQUIRE(r.epochs.size() >= 2);
  CHECK(r.epochs[0].bucket_sizes == std::vector<std::pair<std::int32_t, std::size_t>>{{0, 16}});
  for (const auto& e : r.epochs) {
    std::size_t total = 0;
    for (const auto& [j, n] : e.bucket_sizes) {
      CHECK(j >= 0);
      CHECK(j <= static_cast<std::int32_t>(e.m));
      total += n;
    }
    CHECK(total == 16);
    CHECK(e.subepochs >= 1);
  }
  // one episode per t, each tagged with a bucket of the epoch
  std::uint32_t last_epoch = 1;
  for (const auto& ep : r.episodes) {
    CHECK(ep.epoch >= last_epoch);
    last_epoch = ep.epoch;
    if (ep.epoch <= r.epochs.size()) {
      const auto& sizes = r.epochs[ep.epoch - 1].bucket_sizes;
      CHECK(std::any_of(sizes.begin(), sizes.end(), [&](const auto& p) { return p.first == ep.bucket; }));
    }
  }
  const auto again = run_m0(T, 5);
  REQUIRE(again.episodes.size() == r.episodes.size());
  for (std::size_t k = 0; k < r.episodes.size(); ++k) {
    CHECK(again.episodes[k].policy == r.episodes[k].policy);
    CHECK(again.episodes[k].observed_return == r.episodes[k].observed_return);
  }
}

TEST_CASE("parameter checks") {
  const auto m = fixtures::m0();
  const auto set = enumerate_policies(m.shape());
  auto env = null_env(m, 10, 1);
  CHECK_THROWS_AS(run_barbar(set, env, MetaParams{0, 0.1, 1e-12, 6}, 1), DomainError);
  CHECK_THROWS_AS(run_barbar(set, env, MetaParams{10, 0.1, 2.0, 6}, 1), DomainError);
  CHECK_THROWS_AS(run_barbar(set, env, MetaParams{10, 0.1, 1e-12, 5}, 1), DomainError);
  const auto other = enumerate_policies(1, 2, 2);
  CHECK_THROWS_AS(run_barbar(other, env, MetaParams{10, 0.1, 1e-12, 6}, 1), ShapeMismatch);
}
