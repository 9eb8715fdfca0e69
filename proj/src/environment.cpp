#include "crrl/environment.hpp"

#include "crrl/errors.hpp"

namespace crrl {

Environment::Environment(TabularMdp nominal, std::unique_ptr<Adversary> adversary, std::uint64_t budget, Rng rng)
    : nominal_(std::move(nominal)), adversary_(std::move(adversary)), budget_(budget), rng_(rng) {
  if (!adversary_) throw BadSpec("environment needs an adversary (use AdversaryType::none)");
  if (!nominal_.is_stationary()) throw InvalidMdp("nominal MDP must be stationary");
}

Trajectory Environment::run_episode(const Policy& policy) {
  if (ledger_.size() >= budget_) {
    throw BudgetExhausted("episode budget of " + std::to_string(budget_) + " exhausted");
  }
  if (policy.num_states() != nominal_.num_states() || policy.horizon() != nominal_.horizon()) {
    throw ShapeMismatch("policy shape does not match the environment");
  }
  const std::uint64_t t = ledger_.size() + 1;
  EpisodeContext ctx{t, adversary_->kind() == AdversaryKind::non_cheated ? nullptr : &policy};
  const TabularMdp* decided = adversary_->decide(ctx);
  const TabularMdp& base = decided ? *decided : nominal_;
  if (!(base.shape() == nominal_.shape())) throw ShapeMismatch("adversary returned an MDP of the wrong shape");

  Trajectory trajectory;
  CorruptionMagnitudes c;
  if (adversary_->kind() == AdversaryKind::cheated_step) {
    std::optional<TabularMdp> realized;
    trajectory = play_stepwise(base, policy, t, realized);
    const TabularMdp& played = realized ? *realized : base;
    if (&played != &nominal_) c = corruption_magnitudes(nominal_, played);
    if (observer_) observer_(t, played);
  } else {
    trajectory = sample_trajectory(base, policy, rng_);
    if (decided) c = corruption_magnitudes(nominal_, base);
    if (observer_) observer_(t, base);
  }
  ledger_.record(c);
  adversary_->observe(t, trajectory);
  return trajectory;
}

// Overrides are folded into a copy of the episode MDP so that the ledger
// charges exactly the entries the adversary touched.
Trajectory Environment::play_stepwise(const TabularMdp& base, const Policy& policy, std::uint64_t t,
                                      std::optional<TabularMdp>& realized) {
  Trajectory out;
  out.steps.reserve(base.horizon());
  StateId s = base.start_state();
  for (std::size_t h = 0; h < base.horizon(); ++h) {
    const ActionId a = policy.action(h, s);
    StepOverride change;
    adversary_->on_step(t, h, s, a, change);
    if (change.reward_mean || change.transition_row) {
      if (!realized) realized.emplace(base);
      if (change.reward_mean) realized->set_reward_mean(h, s, a, *change.reward_mean);
      if (change.transition_row) realized->set_transition_row(h, s, a, *change.transition_row);
    }
    const TabularMdp& mdp = realized ? *realized : base;
    const double mean = mdp.reward_mean(h, s, a);
    const double reward = mdp.noise() == RewardNoise::bernoulli ? (rng_.bernoulli(mean) ? 1.0 : 0.0) : mean;
    out.steps.push_back(Step{s, a, reward});
    s = sample_from_row(mdp.transition_row(h, s, a), rng_.uniform());
  }
  out.terminal_state = s;
  return out;
}

}  // namespace crrl
