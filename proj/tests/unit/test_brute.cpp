#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "crrl/brute.hpp"
#include "crrl/errors.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace crrl;

namespace {

MetaRunResult run_m0(std::uint64_t T, std::uint64_t seed, const AdversarySpec& spec = {}) {
  const auto m = fixtures::m0();
  const auto set = enumerate_policies(m.shape());
  Environment env(m, make_adversary(spec, m, T), T, make_stream(seed, StreamRole::environment));
  return run_brute(set, env, MetaParams{T, 0.1, 1e-12, 6}, seed);
}

}  // namespace

TEST_CASE("equal estimates eliminate nothing") {
  const std::vector<double> est(6, 0.4);
  const std::vector<PolicyId> active{0, 1, 2, 3, 4, 5};
  std::vector<PolicyId> gone;
  CHECK(eliminate(est, active, 0.0, &gone) == active);
  CHECK(gone.empty());
}

TEST_CASE("exact M0 values against a hand-picked threshold") {
  const auto m = fixtures::m0();
  const auto values = exact_policy_values(m, enumerate_policies(m.shape()));
  std::vector<PolicyId> all(16);
  for (PolicyId k = 0; k < 16; ++k) all[k] = k;
  std::vector<PolicyId> gone;
  // gaps are 0.9, 0.3, 0 and 0.1 by group, so 0.15 keeps ids 8..15
  const auto kept = eliminate(values, all, 0.15, &gone);
  CHECK(kept == std::vector<PolicyId>{8, 9, 10, 11, 12, 13, 14, 15});
  CHECK(gone == std::vector<PolicyId>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(eliminate(values, all, 0.05) == std::vector<PolicyId>{8, 10, 12, 14});
  CHECK(eliminate(values, all, 0.0) == std::vector<PolicyId>{8, 10, 12, 14});
}

TEST_CASE("the empirical max always survives") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> est(10);
    for (auto& x : est) x = u(gen);
    std::vector<PolicyId> active{1, 3, 4, 7, 9};
    const auto best = *std::max_element(active.begin(), active.end(),
                                        [&](PolicyId a, PolicyId b) { return est[a] < est[b]; });
    const auto kept = eliminate(est, active, u(gen) / 10, nullptr);
    CHECK(std::find(kept.begin(), kept.end(), best) != kept.end());
    CHECK(kept.size() <= active.size());
  }
}

TEST_CASE("active set parameters and threshold") {
  const MdpShape shape{2, 2, 2, 0};
  const MetaParams params{1000, 0.1, 0.25, 6};
  const auto lambdas = barbar_constants(2, 2, 2, finest_epsilon_est(1000), 1000, 0.1);
  const auto a = plan_active_set(3, {0, 2, 5}, shape, params, lambdas);
  CHECK(a.delta == doctest::Approx(0.1 / 5000).epsilon(1e-15));
  CHECK(a.epsilon == 0.125);
  CHECK(a.epsilon_sim == 0.125 / 128);
  const double F = 8.0 * 4 * 16 * 4 * std::log(2.0 * 3 / a.delta) / (a.epsilon_sim * a.epsilon_sim);
  CHECK(a.F == doctest::Approx(F).epsilon(1e-13));
  CHECK(a.F_est == static_cast<std::uint64_t>(std::ceil(0.25 * F)));
  CHECK(a.length == doctest::Approx(2 * lambdas.lambda1 * lambdas.lambda2 * 0.25 * F).epsilon(1e-13));
  const double thr = elimination_threshold(a, shape, 16, 1000, 0.1, lambdas);
  const double expect = 8 * lambdas.lambda1 * lambdas.lambda2 * 4 * std::sqrt(4 * std::log(10.0 * 1000 * 16 / 0.1) * 1000) /
                            a.length +
                        0.125 / 8;
  CHECK(thr == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("short runs truncate at T") {
  for (std::uint64_t T : {1, 50}) {
    const auto r = run_m0(T, 4);
    CHECK(r.episodes.size() == T);
    REQUIRE_FALSE(r.active_sets.empty());
    CHECK(r.active_sets[0].size == 16);
  }
}

TEST_CASE("active sets shrink monotonically and keep the optimum") {
  const auto r = run_m0(30000, 6);
  CHECK(r.episodes.size() == 30000);
  REQUIRE_FALSE(r.active_sets.empty());
  std::size_t last = 16;
  std::set<PolicyId> gone;
  for (const auto& a : r.active_sets) {
    CHECK(a.size <= last);
    CHECK(a.size == 16 - gone.size());
    last = a.size;
    for (PolicyId id : a.eliminated) gone.insert(id);
  }
  for (PolicyId opt : {8u, 10u, 12u, 14u}) CHECK(gone.count(opt) == 0);
}
