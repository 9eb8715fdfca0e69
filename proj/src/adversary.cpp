#include "crrl/adversary.hpp"

#include <algorithm>
#include <cmath>

#include "crrl/corruption.hpp"
#include "crrl/errors.hpp"

namespace crrl {

const char* to_string(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::non_cheated: return "non_cheated";
    case AdversaryKind::cheated_policy: return "cheated_policy";
    case AdversaryKind::cheated_step: return "cheated_step";
  }
  return "?";
}

const char* to_string(AdversaryType type) {
  switch (type) {
    case AdversaryType::none: return "none";
    case AdversaryType::reward_burst: return "reward_burst";
    case AdversaryType::transition_burst: return "transition_burst";
    case AdversaryType::targeted_cheated: return "targeted_cheated";
  }
  return "?";
}

AdversaryType adversary_type_from_string(const std::string& name) {
  if (name == "none" || name == "null") return AdversaryType::none;
  if (name == "reward_burst") return AdversaryType::reward_burst;
  if (name == "transition_burst") return AdversaryType::transition_burst;
  if (name == "targeted_cheated") return AdversaryType::targeted_cheated;
  throw BadSpec("unknown adversary kind '" + name + "'");
}

namespace {

class NullAdversary final : public Adversary {
 public:
  AdversaryKind kind() const override { return AdversaryKind::non_cheated; }
  const TabularMdp* decide(const EpisodeContext&) override { return nullptr; }
};

/// Plays a fixed corrupted MDP inside [first, last] and the nominal one elsewhere.
class WindowAdversary final : public Adversary {
 public:
  WindowAdversary(TabularMdp corrupted, std::uint64_t first, std::uint64_t last)
      : corrupted_(std::move(corrupted)), first_(first), last_(last) {}

  AdversaryKind kind() const override { return AdversaryKind::non_cheated; }
  const TabularMdp* decide(const EpisodeContext& ctx) override {
    return ctx.t >= first_ && ctx.t <= last_ ? &corrupted_ : nullptr;
  }

 private:
  TabularMdp corrupted_;
  std::uint64_t first_;
  std::uint64_t last_;
};

class TargetedCheatedAdversary final : public Adversary {
 public:
  TargetedCheatedAdversary(const TabularMdp& nominal, double delta_r, double budget)
      : target_(exact_optimal_value(nominal).policy), corrupted_(nominal), budget_(budget) {
    for (std::size_t h = 0; h < nominal.horizon(); ++h) {
      for (StateId s = 0; s < nominal.num_states(); ++s) {
        const ActionId a = target_.action(h, s);
        corrupted_.set_reward_mean(h, s, a, std::max(0.0, nominal.reward_mean(h, s, a) - delta_r));
      }
    }
    cost_ = corruption_magnitudes(nominal, corrupted_).reward;
  }

  AdversaryKind kind() const override { return AdversaryKind::cheated_policy; }

  const TabularMdp* decide(const EpisodeContext& ctx) override {
    if (ctx.policy == nullptr || !(*ctx.policy == target_)) return nullptr;
    if (cost_ <= 0.0 || spent_ + cost_ > budget_ + 1e-12) return nullptr;
    spent_ += cost_;
    return &corrupted_;
  }

  double spent() const noexcept { return spent_; }

 private:
  Policy target_;
  TabularMdp corrupted_;
  double budget_;
  double cost_ = 0.0;
  double spent_ = 0.0;
};

void check_window(const AdversarySpec& spec, std::uint64_t T, std::uint64_t& first, std::uint64_t& last) {
  first = spec.window_start;
  last = spec.window_end == 0 ? T : spec.window_end;
  if (first < 1 || last > T || first > last) {
    throw BadSpec("adversary window [" + std::to_string(first) + ", " + std::to_string(last) +
                  "] must lie within [1, " + std::to_string(T) + "]");
  }
}

void check_delta(double delta_r) {
  if (!(delta_r >= 0.0 && delta_r <= 1.0)) throw BadSpec("delta_r must lie in [0, 1]");
}

}  // namespace

std::unique_ptr<Adversary> make_adversary(const AdversarySpec& spec, const TabularMdp& nominal, std::uint64_t T) {
  if (T < 1) throw BadSpec("episode count must be positive");
  switch (spec.type) {
    case AdversaryType::none:
      return std::make_unique<NullAdversary>();

    case AdversaryType::reward_burst: {
      check_delta(spec.delta_r);
      std::uint64_t first = 0, last = 0;
      check_window(spec, T, first, last);
      TabularMdp corrupted = nominal;
      for (std::size_t h = 0; h < nominal.horizon(); ++h) {
        for (StateId s = 0; s < nominal.num_states(); ++s) {
          for (ActionId a = 0; a < nominal.num_actions(); ++a) {
            corrupted.set_reward_mean(h, s, a, std::max(0.0, nominal.reward_mean(h, s, a) - spec.delta_r));
          }
        }
      }
      return std::make_unique<WindowAdversary>(std::move(corrupted), first, last);
    }

    case AdversaryType::transition_burst: {
      std::uint64_t first = 0, last = 0;
      check_window(spec, T, first, last);
      if (spec.targets.empty()) throw BadSpec("transition_burst needs at least one target");
      TabularMdp corrupted = nominal;
      const std::size_t S = nominal.num_states();
      for (const auto& target : spec.targets) {
        if (target.h >= nominal.horizon() || target.s >= S || target.a >= nominal.num_actions()) {
          throw BadSpec("transition target (h=" + std::to_string(target.h + 1) + ", s=" + std::to_string(target.s) +
                        ", a=" + std::to_string(target.a) + ") out of range");
        }
        StateId dest = 0;
        if (target.destination) {
          dest = *target.destination;
          if (dest >= S) throw BadSpec("transition target destination out of range");
        } else {
          const auto row = nominal.transition_row(target.h, target.s, target.a);
          const auto mode = static_cast<StateId>(std::max_element(row.begin(), row.end()) - row.begin());
          dest = static_cast<StateId>((mode + 1) % S);
        }
        std::vector<double> point(S, 0.0);
        point[dest] = 1.0;
        corrupted.set_transition_row(target.h, target.s, target.a, point);
      }
      return std::make_unique<WindowAdversary>(std::move(corrupted), first, last);
    }

    case AdversaryType::targeted_cheated:
      check_delta(spec.delta_r);
      if (!(spec.budget >= 0.0) || !std::isfinite(spec.budget)) throw BadSpec("budget must be a finite value >= 0");
      return std::make_unique<TargetedCheatedAdversary>(nominal, spec.delta_r, spec.budget);
  }
  throw BadSpec("unknown adversary type");
}

}  // namespace crrl
