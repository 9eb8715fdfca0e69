#include <cmath>
#include <random>

#include "crrl/environment.hpp"
#include "crrl/errors.hpp"
#include "crrl/estall.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace crrl;

namespace {

Environment null_env(const TabularMdp& m, std::uint64_t budget, std::uint64_t seed = 1) {
  return Environment(m, make_adversary(AdversarySpec{}, m, budget), budget, make_stream(seed, StreamRole::environment));
}

// The smallest scale that admits F_est = F for the given members.
double scale_for(const PolicySet& set, std::size_t members, double eps, double delta, std::uint64_t F) {
  const auto& sh = set.shape();
  const double req = required_trajectories(sh.num_states, sh.num_actions, sh.horizon, members, eps, delta);
  return std::min(1.0, static_cast<double>(F) / req);
}

}  // namespace

TEST_CASE("simulate on empty buffers fails at the first step") {
  const auto pi = fixtures::m0_flip_then_stay();
  SampleBuffer buffers(2, 2);
  const auto out = simulate(pi, buffers, 3);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(out[i].failed());
    CHECK(out[i].fail->h == 0);
    CHECK(out[i].fail->s == 0);
    CHECK(out[i].fail->a == 1);
    CHECK(out[i].fail->index == i);
    CHECK(out[i].steps.empty());
    CHECK(out[i].value() == 0.0);
  }
}

TEST_CASE("simulate reproduces a deterministic rollout") {
  const auto m = fixtures::m0();
  const auto pi = fixtures::m0_flip_then_stay();
  auto env = null_env(m, 100);
  SampleBuffer buffers(2, 2);
  Rng rng(4);
  const auto kept = rollout(pi, 6, buffers, 1, env, rng);
  REQUIRE(kept.size() == 1);
  const auto out = simulate(pi, buffers, 1);
  REQUIRE_FALSE(out[0].failed());
  REQUIRE(out[0].steps.size() == 2);
  for (std::size_t h = 0; h < 2; ++h) {
    CHECK(out[0].steps[h].state == kept[0].steps[h].state);
    CHECK(out[0].steps[h].action == kept[0].steps[h].action);
    CHECK(out[0].steps[h].reward == kept[0].steps[h].reward);
  }
  CHECK(out[0].value() == doctest::Approx(1.3));
}

TEST_CASE("exactly H*F samples along the path are each used once") {
  const auto pi = fixtures::m0_flip_then_stay();
  SampleBuffer buffers(2, 2);
  const std::size_t F = 5;
  for (std::size_t i = 0; i < F; ++i) {
    buffers.append(0, 1, Sample{0.8, 1});
    buffers.append(1, 0, Sample{0.5, 1});
  }
  const auto out = simulate(pi, buffers, F);
  for (const auto& z : out) CHECK_FALSE(z.failed());
  CHECK(buffers.cursor(0, 1) == F);
  CHECK(buffers.cursor(1, 0) == F);
  // one short: the last trajectory fails at step 2
  SampleBuffer short_buffers(2, 2);
  for (std::size_t i = 0; i < F; ++i) short_buffers.append(0, 1, Sample{0.8, 1});
  for (std::size_t i = 0; i + 1 < F; ++i) short_buffers.append(1, 0, Sample{0.5, 1});
  const auto partial = simulate(pi, short_buffers, F);
  for (std::size_t i = 0; i + 1 < F; ++i) CHECK_FALSE(partial[i].failed());
  REQUIRE(partial[F - 1].failed());
  CHECK(partial[F - 1].fail->h == 1);
  CHECK(partial[F - 1].steps.size() == 1);
}

TEST_CASE("simulate consumes layer by layer") {
  // Two trajectories from state 0 with action 0. The first sample at (0, 0)
  // moves to state 1, the second stays; with layer-major order the step-2
  // draws see the buffers after both step-1 draws.
  const auto pi = fixtures::policy(2, 2, {0, 0, 0, 0});
  SampleBuffer buffers(2, 2);
  buffers.append(0, 0, Sample{0.1, 1});
  buffers.append(0, 0, Sample{0.2, 0});
  buffers.append(1, 0, Sample{0.3, 0});
  const auto out = simulate(pi, buffers, 2);
  REQUIRE_FALSE(out[0].failed());
  CHECK(out[0].steps[1].reward == 0.3);
  // trajectory 1 is at state 0 for step 2, but both (0,0) samples are gone
  REQUIRE(out[1].failed());
  CHECK(out[1].fail->h == 1);
  CHECK(out[1].fail->s == 0);
  // rewinding makes the result repeatable
  const auto again = simulate(pi, buffers, 2);
  CHECK(again[0].steps[1].reward == 0.3);
  CHECK(again[1].failed());
}

TEST_CASE("rollout counts") {
  const auto m = fixtures::m0();
  const auto pi = fixtures::m0_flip_then_stay();
  auto env = null_env(m, 100);
  SampleBuffer buffers(2, 2);
  Rng rng(2);
  const auto before = buffers.total_size();
  const auto kept = rollout(pi, 6, buffers, 2, env, rng);
  CHECK(env.episodes_used() == 12);
  CHECK(buffers.total_size() - before == 24);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].total_reward() == doctest::Approx(1.3));
  CHECK(kept[1].total_reward() == doctest::Approx(1.3));
  const auto mid = buffers.size(0, 1);
  rollout(pi, 6, buffers, 1, env, rng);
  CHECK(buffers.size(0, 1) >= mid);
}

namespace {

// Episode k returns reward k / 100 so kept trajectories reveal their position.
class CountingSource final : public EpisodeSource {
 public:
  Trajectory run_episode(const Policy&) override {
    Trajectory t;
    t.steps.push_back(Step{0, 0, static_cast<double>(used_++) / 100.0});
    return t;
  }
  std::uint64_t episodes_used() const override { return used_; }
  std::uint64_t episodes_remaining() const override { return 1000000 - used_; }
  const MdpShape& shape() const override { return shape_; }

 private:
  std::uint64_t used_ = 0;
  MdpShape shape_{1, 1, 1, 0};
};

}  // namespace

TEST_CASE("rollout keeps F distinct positions chosen uniformly") {
  const std::uint64_t F = 2, tau = 6;
  std::vector<int> hits(F * tau, 0);
  Rng rng(77);
  const auto pi = fixtures::policy(1, 1, {0});
  const int runs = 12000;
  for (int r = 0; r < runs; ++r) {
    CountingSource source;
    SampleBuffer buffers(1, 1);
    RolloutCursor cursor(0, F, tau, rng, true);
    while (!cursor.done()) cursor.play_one(pi, source, buffers);
    REQUIRE(cursor.kept().size() == F);
    const auto a = static_cast<std::size_t>(std::lround(cursor.kept()[0].total_reward() * 100));
    const auto b = static_cast<std::size_t>(std::lround(cursor.kept()[1].total_reward() * 100));
    CHECK(a < b);
    ++hits[a];
    ++hits[b];
  }
  // each position is kept with probability F / (F tau) = 1/6
  const double expected = runs * 2.0 / 12.0;
  for (int h : hits) CHECK(std::fabs(h - expected) < 5 * std::sqrt(expected));
}

TEST_CASE("interaction budget") {
  CHECK(interaction_budget(2, 2, 2, 1000, 6, 0.25) == 99814);
  const double e = 16.0 / std::exp(1.0);
  const auto b = interaction_budget(2, 2, 2, 1000, 6, e);
  CHECK((b == 24000 || b == 24001));
  const auto b1 = interaction_budget(3, 2, 3, 500, 6, 0.1);
  const auto b2 = interaction_budget(3, 2, 3, 1000, 6, 0.1);
  CHECK(std::llabs(static_cast<long long>(b2) - 2 * static_cast<long long>(b1)) <= 1);
  CHECK_THROWS_AS(interaction_budget(2, 2, 2, 10, 6, 0.0), DomainError);
  CHECK_THROWS_AS(interaction_budget(2, 2, 2, 10, 6, -1.0), DomainError);
  CHECK_THROWS_AS(interaction_budget(2, 2, 2, 10, 6, 16.0), DomainError);
}

TEST_CASE("required trajectories") {
  // 8 * 4 * 16 * 4 * ln(320) / 0.0625 on M0 with 16 policies, delta 0.1
  const double req = required_trajectories(2, 2, 2, 16, 0.25, 0.1);
  CHECK(req == doctest::Approx(8.0 * 4 * 16 * 4 * std::log(320.0) / 0.0625).epsilon(1e-14));
  CHECK(scaled_trajectories(2, 2, 2, 16, 0.25, 0.1, 1.0) == 189017);
  CHECK(scaled_trajectories(2, 2, 2, 16, 0.25, 0.1, 1e-12) == 1);
  CHECK_THROWS_AS(scaled_trajectories(2, 2, 2, 16, 0.25, 0.1, 0.0), DomainError);
  CHECK_THROWS_AS(required_trajectories(2, 2, 2, 16, 0.25, 1.0), DomainError);
}

TEST_CASE("EstAll with abundant data needs no episodes") {
  const auto m = fixtures::m0();
  const PolicySet set(m.shape(), {fixtures::m0_flip_then_stay()});
  const std::uint64_t F = 20;
  SampleBuffer buffers(2, 2);
  for (int i = 0; i < 100; ++i) {
    buffers.append(0, 1, Sample{0.8, 1});
    buffers.append(1, 0, Sample{0.5, 1});
  }
  EstAll est(set, {0}, EstAllParams{0.25, 0.1, F, 6, scale_for(set, 1, 0.25, 0.1, F)}, Rng(1), buffers);
  CHECK(est.finished());
  CHECK(est.episodes_used() == 0);
  CHECK(est.exploration_set().empty());
  CHECK(est.estimate(0) == doctest::Approx(1.3));
}

TEST_CASE("EstAll on empty buffers rolls out once") {
  const auto m = fixtures::m0();
  const PolicySet set(m.shape(), {fixtures::m0_flip_then_stay()});
  const std::uint64_t F = 20;
  EstAll est(set, {0}, EstAllParams{0.25, 0.1, F, 6, scale_for(set, 1, 0.25, 0.1, F)}, Rng(1));
  CHECK_FALSE(est.finished());
  CHECK(est.awaiting() == PolicyId{0});
  CHECK_THROWS_AS(est.estimates(), std::logic_error);
  auto env = null_env(m, 1000);
  std::uint64_t n = 0;
  while (est.step(env) != EstAllStatus::finished) ++n;
  CHECK(n + 1 == F * 6);
  CHECK(est.episodes_used() == F * 6);
  CHECK(env.episodes_used() == F * 6);
  CHECK(est.exploration_set() == std::vector<PolicyId>{0});
  CHECK(est.estimate(0) == doctest::Approx(1.3));
  // after finishing, every call still plays exactly one episode
  est.play_one(env);
  CHECK(env.episodes_used() == F * 6 + 1);
  CHECK(est.rollout_episodes() == F * 6);
  CHECK_FALSE(est.unfinished());
}

TEST_CASE("EstAll parameter checks") {
  const auto m = fixtures::m0();
  const auto set = enumerate_policies(m.shape());
  std::vector<PolicyId> all(16);
  for (PolicyId k = 0; k < 16; ++k) all[k] = k;
  CHECK_THROWS_AS(EstAll(set, all, EstAllParams{0.25, 0.1, 100, 6, 1.0}, Rng(1)), DomainError);
  CHECK_THROWS_AS(EstAll(set, all, EstAllParams{0.25, 0.1, 189017, 5, 1.0}, Rng(1)), DomainError);
  CHECK_THROWS_AS(EstAll(set, {}, EstAllParams{0.25, 0.1, 189017, 6, 1.0}, Rng(1)), DomainError);
  CHECK_THROWS_AS(EstAll(set, {16}, EstAllParams{0.25, 0.1, 189017, 6, 1.0}, Rng(1)), DomainError);
  CHECK_NOTHROW(EstAll(set, all, EstAllParams{0.25, 0.1, 189017, 6, 1.0}, Rng(1)));
}

TEST_CASE("EstAll on random MDPs: fail cap, range, determinism") {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 6; ++trial) {
    const auto m = fixtures::random_mdp(gen, 2, 2, 2);
    const auto set = enumerate_policies(m.shape());
    std::vector<PolicyId> ids(set.size());
    for (PolicyId k = 0; k < ids.size(); ++k) ids[k] = k;
    const double eps = 0.5;
    const std::uint64_t F = 400;
    const EstAllParams params{eps, 0.1, F, 6, scale_for(set, ids.size(), eps, 0.1, F)};
    auto run = [&](std::uint64_t seed) {
      EstAll est(set, ids, params, make_stream(seed, StreamRole::estall));
      auto env = null_env(m, 10000000, seed);
      while (!est.finished()) est.play_one(env);
      CHECK(est.episodes_used() <= est.interaction_budget());
      return est;
    };
    const auto est = run(trial + 1);
    const auto& explored = est.exploration_set();
    const double H = static_cast<double>(m.horizon());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      CHECK(est.estimates()[k] >= 0.0);
      CHECK(est.estimates()[k] <= H);
      if (std::find(explored.begin(), explored.end(), ids[k]) == explored.end()) {
        CHECK(static_cast<double>(est.max_fail_counts()[k]) < est.fail_threshold());
      }
    }
    const auto again = run(trial + 1);
    CHECK(again.estimates() == est.estimates());
    CHECK(again.exploration_set() == est.exploration_set());
  }
}

TEST_CASE("EstAll propagates budget exhaustion and stays consistent") {
  const auto m = fixtures::m0();
  const PolicySet set(m.shape(), {fixtures::m0_flip_then_stay()});
  const std::uint64_t F = 20;
  EstAll est(set, {0}, EstAllParams{0.25, 0.1, F, 6, scale_for(set, 1, 0.25, 0.1, F)}, Rng(1));
  auto env = null_env(m, 7);
  for (int i = 0; i < 7; ++i) est.play_one(env);
  CHECK_THROWS_AS(est.play_one(env), BudgetExhausted);
  CHECK(est.episodes_used() == 7);
  CHECK_FALSE(est.finished());
  CHECK(est.unfinished());
  auto more = null_env(m, 1000, 2);
  while (!est.finished()) est.play_one(more);
  CHECK(est.episodes_used() == F * 6);
}
