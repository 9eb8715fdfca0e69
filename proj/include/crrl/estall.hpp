#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crrl/environment.hpp"
#include "crrl/mdp.hpp"
#include "crrl/rng.hpp"

namespace crrl {

/// One observed transition out of some (s, a): the reward received and the next state.
struct Sample {
  double reward;
  StateId next_state;
};

/// Replay buffers D_{s,a}. Samples are only ever appended; each buffer has a
/// read cursor that SIMULATE rewinds at the start of every call.
class SampleBuffer {
 public:
  SampleBuffer() = default;
  SampleBuffer(std::size_t num_states, std::size_t num_actions);

  void append(StateId s, ActionId a, Sample sample);
  /// Appends the H transitions of a complete trajectory.
  void append(const Trajectory& trajectory);

  const std::vector<Sample>& samples(StateId s, ActionId a) const { return data_.at(index(s, a)); }
  std::size_t size(StateId s, ActionId a) const { return samples(s, a).size(); }
  std::size_t total_size() const noexcept;
  std::size_t cursor(StateId s, ActionId a) const { return cursor_.at(index(s, a)); }

  void rewind();
  /// Next unused sample of D_{s,a}, marking it used, or nullptr when all are used.
  const Sample* take(StateId s, ActionId a);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }

 private:
  std::size_t index(StateId s, ActionId a) const noexcept { return s * num_actions_ + a; }

  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<std::vector<Sample>> data_;
  std::vector<std::size_t> cursor_;
};

/// Where a simulated trajectory ran out of data: step h, the (s, a) whose
/// buffer was exhausted, and the trajectory's index i.
struct FailMarker {
  std::size_t h;
  StateId s;
  ActionId a;
  std::size_t index;
};

/// A simulated trajectory: complete (H steps), or a prefix ending in a fail.
struct SimOutcome {
  std::vector<Step> steps;
  std::optional<FailMarker> fail;

  bool failed() const noexcept { return fail.has_value(); }
  /// r(z): total reward, or 0 for a failed trajectory.
  double value() const noexcept;
};

/// SIMULATE: F trajectories of `policy` replayed from the buffers, consuming
/// samples layer by layer (all trajectories at step h before any at h+1).
std::vector<SimOutcome> simulate(const Policy& policy, SampleBuffer& buffers, std::size_t F,
                                 StateId start_state = 0);

/// The aggregate of a SIMULATE call without storing trajectories.
struct SimSummary {
  std::vector<std::uint64_t> fail_counts;  // per (s, a), row-major
  double value_sum = 0.0;                  // sum of r(z)
  std::uint64_t failures = 0;
};

SimSummary simulate_summary(const Policy& policy, SampleBuffer& buffers, std::size_t F, StateId start_state = 0);

/// ROLLOUT in progress: F * tau real episodes of one policy, of which F chosen
/// uniformly without replacement are kept. The kept indices are drawn up front
/// with a partial Fisher-Yates shuffle, so the rollout can pause between episodes.
class RolloutCursor {
 public:
  RolloutCursor(PolicyId policy, std::uint64_t F, std::uint64_t tau, Rng& rng, bool keep_trajectories = false);

  /// Plays the next episode and appends its samples. Throws BudgetExhausted
  /// (state unchanged) if the source is out of episodes.
  Trajectory play_one(const Policy& policy, EpisodeSource& env, SampleBuffer& buffers);

  bool done() const noexcept { return played_ == total_; }
  PolicyId policy() const noexcept { return policy_; }
  std::uint64_t played() const noexcept { return played_; }
  std::uint64_t total() const noexcept { return total_; }
  /// Sum of returns over the kept trajectories played so far.
  double kept_value_sum() const noexcept { return kept_sum_; }
  const std::vector<Trajectory>& kept() const noexcept { return kept_; }

 private:
  PolicyId policy_;
  std::uint64_t total_;
  std::uint64_t played_ = 0;
  std::vector<bool> keep_;
  bool keep_trajectories_;
  double kept_sum_ = 0.0;
  std::vector<Trajectory> kept_;
};

/// ROLLOUT run to completion. Returns the F kept trajectories in play order.
std::vector<Trajectory> rollout(const Policy& policy, std::uint64_t tau, SampleBuffer& buffers, std::uint64_t F,
                                EpisodeSource& env, Rng& rng);

/// ceil(S * A * F * tau * ln(H^2 S A / epsilon)). Throws DomainError unless
/// 0 < epsilon < H^2 S A.
std::uint64_t interaction_budget(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                                 std::uint64_t F, std::uint64_t tau, double epsilon);

/// 8 S^2 H^4 A^2 ln(2 |Pi| / delta) / epsilon^2, the smallest admissible F before scaling.
double required_trajectories(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                             std::size_t num_policies, double epsilon, double delta);

/// max(1, ceil(scale * required_trajectories(...))).
std::uint64_t scaled_trajectories(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                                  std::size_t num_policies, double epsilon, double delta, double scale);

struct EstAllParams {
  double epsilon = 0.0;
  double delta = 0.0;
  std::uint64_t trajectories = 0;  // F_est
  std::uint64_t tau = 6;
  double scale = 1.0;  // F_est may be as small as scale * required_trajectories
};

enum class EstAllStatus { needs_episode, finished };

struct PlayedEpisode {
  PolicyId policy;
  double observed_return;
};

struct EstAllTraceEvent {
  enum class Kind { simulated, rollout_started, rollout_finished, finished };
  Kind kind;
  std::uint64_t step;  // count of policies processed so far
  PolicyId policy;
  std::uint64_t max_fail_count;
  StateId fail_state;
  ActionId fail_action;
  std::uint64_t episodes;  // cumulative environment episodes
};

const char* to_string(EstAllTraceEvent::Kind kind);

/// Reward-free exploration over a policy subset, run as a resumable stepper.
///
/// Construction performs INIT: policies are simulated in ascending order until
/// one needs real episodes. Each play_one call (CONTINUE) consumes exactly one
/// environment episode: the next episode of the awaiting rollout, followed by
/// offline simulation up to the next rollout; or, once finished, an episode of
/// a uniformly random member.
class EstAll {
 public:
  /// `members` are ids into `policies`; `initial` seeds the buffers (tests).
  /// Throws DomainError on invalid parameters or F below the scaled requirement.
  EstAll(const PolicySet& policies, std::vector<PolicyId> members, EstAllParams params, Rng rng,
         std::optional<SampleBuffer> initial = std::nullopt, bool trace = false);

  PlayedEpisode play_one(EpisodeSource& env);
  EstAllStatus step(EpisodeSource& env);

  EstAllStatus status() const noexcept { return finished_ ? EstAllStatus::finished : EstAllStatus::needs_episode; }
  bool finished() const noexcept { return finished_; }
  /// More rollout episodes than the interaction budget allows. Episodes played
  /// after finishing are not rollouts and do not count.
  bool over_budget() const noexcept { return rollout_episodes_ > budget_; }
  /// Not finished, or finished only after exceeding the interaction budget.
  bool unfinished() const noexcept { return !finished_ || over_budget(); }

  /// r-hat per member, in member order. Throws std::logic_error before finishing.
  const std::vector<double>& estimates() const;
  double estimate(PolicyId id) const;

  const std::vector<PolicyId>& members() const noexcept { return members_; }
  const std::vector<PolicyId>& exploration_set() const noexcept { return exploration_; }
  /// Largest per-(s, a) fail count in each member's simulation (member order; 0 until simulated).
  const std::vector<std::uint64_t>& max_fail_counts() const noexcept { return max_fail_; }
  double fail_threshold() const noexcept { return threshold_; }
  std::optional<PolicyId> awaiting() const;
  std::size_t processed() const noexcept { return next_; }

  std::uint64_t episodes_used() const noexcept { return episodes_; }
  std::uint64_t rollout_episodes() const noexcept { return rollout_episodes_; }
  std::uint64_t interaction_budget() const noexcept { return budget_; }
  const EstAllParams& params() const noexcept { return params_; }
  const SampleBuffer& buffers() const noexcept { return buffers_; }
  const std::vector<EstAllTraceEvent>& trace() const noexcept { return trace_; }

 private:
  void advance();
  void emit(EstAllTraceEvent::Kind kind, PolicyId id, std::uint64_t fails, StateId s, ActionId a);

  const PolicySet* policies_;
  std::vector<PolicyId> members_;
  EstAllParams params_;
  Rng rng_;
  SampleBuffer buffers_;
  double threshold_;
  std::uint64_t budget_;

  std::size_t next_ = 0;
  std::optional<RolloutCursor> pending_;
  bool finished_ = false;
  std::uint64_t episodes_ = 0;
  std::uint64_t rollout_episodes_ = 0;
  std::vector<double> estimates_;
  std::vector<std::uint64_t> max_fail_;
  std::vector<PolicyId> exploration_;
  bool tracing_;
  std::vector<EstAllTraceEvent> trace_;
};

}  // namespace crrl
