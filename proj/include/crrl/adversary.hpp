#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crrl/mdp.hpp"

namespace crrl {

/// What the adversary may look at before committing to M_t.
enum class AdversaryKind {
  non_cheated,     // history through episode t-1 only
  cheated_policy,  // also the learner's policy for episode t
  cheated_step,    // also each (h, s, a) before the reward/transition draw
};

const char* to_string(AdversaryKind kind);

struct EpisodeContext {
  std::uint64_t t = 0;              // 1-based episode index
  const Policy* policy = nullptr;  // withheld (null) from non_cheated adversaries
};

/// Per-step override for cheated_step adversaries, applied to the current
/// (h, s, a) only. Unset fields keep the episode MDP's values.
struct StepOverride {
  std::optional<double> reward_mean;
  std::optional<std::vector<double>> transition_row;
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual AdversaryKind kind() const = 0;

  /// The MDP for episode t, or nullptr for the nominal one. The pointer must
  /// stay valid until the next call.
  virtual const TabularMdp* decide(const EpisodeContext& ctx) = 0;

  /// Called before each draw when kind() == cheated_step.
  virtual void on_step(std::uint64_t /*t*/, std::size_t /*h*/, StateId /*s*/, ActionId /*a*/,
                       StepOverride& /*out*/) {}

  /// The realized trajectory of episode t, after it is played.
  virtual void observe(std::uint64_t /*t*/, const Trajectory& /*trajectory*/) {}
};

/// A transition to redirect: (step, state, action) in 0-based steps, and the
/// state all mass is moved to. Without a destination the mass goes to the
/// state after the nominal row's most likely one, modulo S.
struct TransitionTarget {
  std::size_t h = 0;
  StateId s = 0;
  ActionId a = 0;
  std::optional<StateId> destination;
};

enum class AdversaryType { none, reward_burst, transition_burst, targeted_cheated };

const char* to_string(AdversaryType type);
AdversaryType adversary_type_from_string(const std::string& name);

/// Parameters for the built-in adversaries. Windows are 1-based inclusive
/// episode ranges; a zero window_end means "through T".
struct AdversarySpec {
  AdversaryType type = AdversaryType::none;
  double delta_r = 0.0;
  std::uint64_t window_start = 1;
  std::uint64_t window_end = 0;
  std::vector<TransitionTarget> targets;
  double budget = 0.0;
};

/// Instantiates a built-in adversary against `nominal` for a run of T episodes.
///  - none: never corrupts.
///  - reward_burst: lowers every reward mean by delta_r (floored at 0) inside the window.
///  - transition_burst: moves all mass of each target row to its destination inside the window.
///  - targeted_cheated: when the learner plays the nominal optimal policy,
///    lowers that policy's reward means by delta_r, while the cumulative c^r
///    spent stays within budget.
/// Throws BadSpec on out-of-range parameters.
std::unique_ptr<Adversary> make_adversary(const AdversarySpec& spec, const TabularMdp& nominal, std::uint64_t T);

}  // namespace crrl
