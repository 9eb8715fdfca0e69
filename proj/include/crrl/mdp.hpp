#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crrl/rng.hpp"

namespace crrl {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;
using PolicyId = std::uint32_t;

/// Steps are 0-based throughout the library: step 0 is the first decision
/// of an episode, taken at the start state. User-facing config files use
/// 1-based steps and are converted on load.
struct MdpShape {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  StateId start_state = 0;

  bool operator==(const MdpShape&) const = default;
};

enum class RewardNoise { deterministic, bernoulli };

const char* to_string(RewardNoise noise);

/// Rows within this distance of summing to one are renormalized, others rejected.
inline constexpr double kProbabilityTolerance = 1e-9;

/// Finite-horizon tabular MDP with per-step transition and mean-reward tensors.
///
/// The transition tensor is laid out (h, s, a, s') and the reward tensor
/// (h, s, a), both row-major. A nominal MDP is stationary; the per-episode
/// MDPs an adversary hands out need not be.
class TabularMdp {
 public:
  TabularMdp(MdpShape shape, std::vector<double> transition, std::vector<double> reward_mean,
             RewardNoise noise = RewardNoise::deterministic);

  /// Replicates one (s, a, s') transition block and one (s, a) reward block over all steps.
  static TabularMdp stationary(MdpShape shape, std::span<const double> transition,
                               std::span<const double> reward_mean,
                               RewardNoise noise = RewardNoise::deterministic);

  const MdpShape& shape() const noexcept { return shape_; }
  std::size_t num_states() const noexcept { return shape_.num_states; }
  std::size_t num_actions() const noexcept { return shape_.num_actions; }
  std::size_t horizon() const noexcept { return shape_.horizon; }
  StateId start_state() const noexcept { return shape_.start_state; }
  RewardNoise noise() const noexcept { return noise_; }

  std::span<const double> transition_row(std::size_t h, StateId s, ActionId a) const;
  double reward_mean(std::size_t h, StateId s, ActionId a) const {
    return reward_[sa_index(h, s, a)];
  }

  const std::vector<double>& transition_tensor() const noexcept { return transition_; }
  const std::vector<double>& reward_tensor() const noexcept { return reward_; }

  bool is_stationary() const;

  /// Row replacement, validated like the constructor.
  void set_transition_row(std::size_t h, StateId s, ActionId a, std::span<const double> row);
  void set_reward_mean(std::size_t h, StateId s, ActionId a, double mean);

  bool operator==(const TabularMdp&) const = default;

 private:
  std::size_t sa_index(std::size_t h, StateId s, ActionId a) const noexcept {
    return (h * shape_.num_states + s) * shape_.num_actions + a;
  }
  void validate_and_normalize();

  MdpShape shape_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  RewardNoise noise_;
};

/// Deterministic non-stationary policy: a total map (h, s) -> action.
class Policy {
 public:
  Policy(std::size_t num_states, std::size_t horizon, std::vector<ActionId> actions);

  ActionId action(std::size_t h, StateId s) const { return actions_[h * num_states_ + s]; }
  std::span<const ActionId> table() const noexcept { return actions_; }
  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t horizon() const noexcept { return horizon_; }

  bool operator==(const Policy&) const = default;

 private:
  std::size_t num_states_;
  std::size_t horizon_;
  std::vector<ActionId> actions_;
};

inline constexpr std::uint64_t kDefaultPolicyCap = 1'000'000;

/// Ordered candidate set; a policy's id is its index.
class PolicySet {
 public:
  /// Rejects policies of the wrong shape and duplicate policies.
  PolicySet(MdpShape shape, std::vector<Policy> policies);

  const MdpShape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return policies_.size(); }
  const Policy& operator[](PolicyId id) const { return policies_.at(id); }
  auto begin() const noexcept { return policies_.begin(); }
  auto end() const noexcept { return policies_.end(); }

 private:
  struct Unchecked {};
  PolicySet(Unchecked, MdpShape shape, std::vector<Policy> policies)
      : shape_(shape), policies_(std::move(policies)) {}
  friend PolicySet enumerate_policies(const MdpShape&, std::uint64_t);

  MdpShape shape_;
  std::vector<Policy> policies_;
};

/// Number of deterministic non-stationary policies, |A|^(H|S|), saturating at UINT64_MAX.
std::uint64_t policy_count(std::size_t num_states, std::size_t num_actions, std::size_t horizon);

/// All deterministic non-stationary policies in lexicographic order of the
/// flattened (h, s) -> a table (first entry most significant).
/// Throws CapExceeded when |A|^(H|S|) > cap.
PolicySet enumerate_policies(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                             std::uint64_t cap = kDefaultPolicyCap);
PolicySet enumerate_policies(const MdpShape& shape, std::uint64_t cap = kDefaultPolicyCap);

struct Step {
  StateId state;
  ActionId action;
  double reward;
};

struct Trajectory {
  std::vector<Step> steps;
  StateId terminal_state = 0;

  double total_reward() const noexcept;
};

/// Draws the next state from a probability row given u in [0, 1).
StateId sample_from_row(std::span<const double> row, double u) noexcept;

Trajectory sample_trajectory(const TabularMdp& mdp, const Policy& policy, Rng& rng);

/// V^{M,pi}(s0) by backward induction.
double exact_policy_value(const TabularMdp& mdp, const Policy& policy);

struct OptimalSolution {
  double value;
  Policy policy;
};

/// Bellman optimality recursion; ties go to the lowest action index.
OptimalSolution exact_optimal_value(const TabularMdp& mdp);

/// exact_policy_value for every member of a set, indexed by id.
std::vector<double> exact_policy_values(const TabularMdp& mdp, const PolicySet& policies);

/// Occupancy q(h, s) of a policy and its expected visit counts mu(s, a).
class VisitDistribution {
 public:
  VisitDistribution(std::size_t num_states, std::size_t num_actions, std::size_t horizon)
      : num_states_(num_states),
        num_actions_(num_actions),
        horizon_(horizon),
        occupancy_(horizon * num_states, 0.0),
        visits_(num_states * num_actions, 0.0) {}

  double occupancy(std::size_t h, StateId s) const { return occupancy_[h * num_states_ + s]; }
  double expected_visits(StateId s, ActionId a) const { return visits_[s * num_actions_ + a]; }
  std::span<const double> layer(std::size_t h) const {
    return std::span<const double>(occupancy_).subspan(h * num_states_, num_states_);
  }
  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t num_states() const noexcept { return num_states_; }

 private:
  friend VisitDistribution visit_distribution(const TabularMdp&, const Policy&);
  std::size_t num_states_;
  std::size_t num_actions_;
  std::size_t horizon_;
  std::vector<double> occupancy_;
  std::vector<double> visits_;
};

VisitDistribution visit_distribution(const TabularMdp& mdp, const Policy& policy);

}  // namespace crrl
