#include "crrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "crrl/errors.hpp"

namespace crrl {

const char* to_string(RewardNoise noise) {
  switch (noise) {
    case RewardNoise::deterministic:
      return "deterministic";
    case RewardNoise::bernoulli:
      return "bernoulli";
  }
  return "unknown";
}

TabularMdp::TabularMdp(MdpShape shape, std::vector<double> transition,
                       std::vector<double> reward_mean, RewardNoise noise)
    : shape_(shape), transition_(std::move(transition)), reward_(std::move(reward_mean)), noise_(noise) {
  validate_and_normalize();
}

TabularMdp TabularMdp::stationary(MdpShape shape, std::span<const double> transition,
                                  std::span<const double> reward_mean, RewardNoise noise) {
  const std::size_t sa = shape.num_states * shape.num_actions;
  if (transition.size() != sa * shape.num_states) {
    throw InvalidMdp("stationary transition block must have S*A*S entries");
  }
  if (reward_mean.size() != sa) {
    throw InvalidMdp("stationary reward block must have S*A entries");
  }
  std::vector<double> p;
  std::vector<double> r;
  p.reserve(transition.size() * shape.horizon);
  r.reserve(sa * shape.horizon);
  for (std::size_t h = 0; h < shape.horizon; ++h) {
    p.insert(p.end(), transition.begin(), transition.end());
    r.insert(r.end(), reward_mean.begin(), reward_mean.end());
  }
  return TabularMdp(shape, std::move(p), std::move(r), noise);
}

void TabularMdp::validate_and_normalize() {
  const auto& [S, A, H, s0] = shape_;
  if (S == 0 || A == 0 || H == 0) {
    throw InvalidMdp("num_states, num_actions and horizon must be positive");
  }
  if (s0 >= S) {
    throw InvalidMdp("start_state out of range");
  }
  if (transition_.size() != H * S * A * S) {
    throw InvalidMdp("transition tensor must have H*S*A*S entries");
  }
  if (reward_.size() != H * S * A) {
    throw InvalidMdp("reward tensor must have H*S*A entries");
  }
  for (std::size_t row = 0; row < H * S * A; ++row) {
    auto first = transition_.begin() + static_cast<std::ptrdiff_t>(row * S);
    auto last = first + static_cast<std::ptrdiff_t>(S);
    double sum = 0.0;
    for (auto it = first; it != last; ++it) {
      if (!std::isfinite(*it) || *it < 0.0) {
        std::ostringstream msg;
        msg << "transition row " << row << " has a negative or non-finite entry";
        throw InvalidMdp(msg.str());
      }
      sum += *it;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "transition row " << row << " sums to " << sum;
      throw InvalidMdp(msg.str());
    }
    if (sum != 1.0) {
      std::for_each(first, last, [sum](double& p) { p /= sum; });
    }
  }
  for (double r : reward_) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw InvalidMdp("reward means must lie in [0, 1]");
    }
  }
}

std::span<const double> TabularMdp::transition_row(std::size_t h, StateId s, ActionId a) const {
  return std::span<const double>(transition_).subspan(sa_index(h, s, a) * shape_.num_states,
                                                      shape_.num_states);
}

bool TabularMdp::is_stationary() const {
  const std::size_t block_p = shape_.num_states * shape_.num_actions * shape_.num_states;
  const std::size_t block_r = shape_.num_states * shape_.num_actions;
  for (std::size_t h = 1; h < shape_.horizon; ++h) {
    if (!std::equal(transition_.begin(), transition_.begin() + static_cast<std::ptrdiff_t>(block_p),
                    transition_.begin() + static_cast<std::ptrdiff_t>(h * block_p))) {
      return false;
    }
    if (!std::equal(reward_.begin(), reward_.begin() + static_cast<std::ptrdiff_t>(block_r),
                    reward_.begin() + static_cast<std::ptrdiff_t>(h * block_r))) {
      return false;
    }
  }
  return true;
}

void TabularMdp::set_transition_row(std::size_t h, StateId s, ActionId a, std::span<const double> row) {
  if (h >= shape_.horizon || s >= shape_.num_states || a >= shape_.num_actions) {
    throw InvalidMdp("transition row index out of range");
  }
  if (row.size() != shape_.num_states) {
    throw InvalidMdp("transition row has the wrong length");
  }
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0) throw InvalidMdp("transition row has a negative or non-finite entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw InvalidMdp("transition row does not sum to one");
  }
  auto dst = transition_.begin() + static_cast<std::ptrdiff_t>(sa_index(h, s, a) * shape_.num_states);
  std::transform(row.begin(), row.end(), dst, [sum](double p) { return p / sum; });
}

void TabularMdp::set_reward_mean(std::size_t h, StateId s, ActionId a, double mean) {
  if (h >= shape_.horizon || s >= shape_.num_states || a >= shape_.num_actions) {
    throw InvalidMdp("reward index out of range");
  }
  if (!(mean >= 0.0 && mean <= 1.0)) {
    throw InvalidMdp("reward means must lie in [0, 1]");
  }
  reward_[sa_index(h, s, a)] = mean;
}

Policy::Policy(std::size_t num_states, std::size_t horizon, std::vector<ActionId> actions)
    : num_states_(num_states), horizon_(horizon), actions_(std::move(actions)) {
  if (actions_.size() != num_states_ * horizon_) {
    throw std::invalid_argument("policy table must have H*S entries");
  }
}

PolicySet::PolicySet(MdpShape shape, std::vector<Policy> policies)
    : shape_(shape), policies_(std::move(policies)) {
  std::set<std::vector<ActionId>> seen;
  for (const auto& p : policies_) {
    if (p.num_states() != shape_.num_states || p.horizon() != shape_.horizon) {
      throw std::invalid_argument("policy shape does not match the policy set");
    }
    for (ActionId a : p.table()) {
      if (a >= shape_.num_actions) throw std::invalid_argument("policy action out of range");
    }
    if (!seen.emplace(p.table().begin(), p.table().end()).second) {
      throw std::invalid_argument("duplicate policy in policy set");
    }
  }
}

std::uint64_t policy_count(std::size_t num_states, std::size_t num_actions, std::size_t horizon) {
  const std::size_t slots = num_states * horizon;
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < slots; ++i) {
    if (num_actions != 0 && count > std::numeric_limits<std::uint64_t>::max() / num_actions) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    count *= num_actions;
  }
  return count;
}

PolicySet enumerate_policies(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                             std::uint64_t cap) {
  return enumerate_policies(MdpShape{num_states, num_actions, horizon, 0}, cap);
}

PolicySet enumerate_policies(const MdpShape& shape, std::uint64_t cap) {
  const auto& [num_states, num_actions, horizon, s0] = shape;
  const std::uint64_t count = policy_count(num_states, num_actions, horizon);
  if (count > cap) {
    std::ostringstream msg;
    msg << "|A|^(H|S|) = " << num_actions << "^(" << horizon << "*" << num_states << ") = ";
    if (count == std::numeric_limits<std::uint64_t>::max()) {
      msg << "overflow";
    } else {
      msg << count;
    }
    msg << " policies exceeds the enumeration cap of " << cap;
    throw CapExceeded(count, cap, msg.str());
  }
  const std::size_t slots = num_states * horizon;
  std::vector<Policy> out;
  out.reserve(count);
  std::vector<ActionId> table(slots, 0);
  for (std::uint64_t id = 0; id < count; ++id) {
    out.emplace_back(num_states, horizon, table);
    // odometer increment, last slot least significant
    for (std::size_t k = slots; k-- > 0;) {
      if (++table[k] < num_actions) break;
      table[k] = 0;
    }
  }
  return PolicySet(PolicySet::Unchecked{}, shape, std::move(out));
}

double Trajectory::total_reward() const noexcept {
  double total = 0.0;
  for (const auto& step : steps) total += step.reward;
  return total;
}

StateId sample_from_row(std::span<const double> row, double u) noexcept {
  double acc = 0.0;
  for (std::size_t s = 0; s < row.size(); ++s) {
    acc += row[s];
    if (u < acc) return static_cast<StateId>(s);
  }
  // u landed in the rounding gap above the cumulative sum: last state with mass
  for (std::size_t s = row.size(); s-- > 0;) {
    if (row[s] > 0.0) return static_cast<StateId>(s);
  }
  return 0;
}

Trajectory sample_trajectory(const TabularMdp& mdp, const Policy& policy, Rng& rng) {
  Trajectory out;
  out.steps.reserve(mdp.horizon());
  StateId s = mdp.start_state();
  for (std::size_t h = 0; h < mdp.horizon(); ++h) {
    const ActionId a = policy.action(h, s);
    const double mean = mdp.reward_mean(h, s, a);
    double reward = mean;
    if (mdp.noise() == RewardNoise::bernoulli) {
      reward = rng.bernoulli(mean) ? 1.0 : 0.0;
    }
    out.steps.push_back(Step{s, a, reward});
    s = sample_from_row(mdp.transition_row(h, s, a), rng.uniform());
  }
  out.terminal_state = s;
  return out;
}

double exact_policy_value(const TabularMdp& mdp, const Policy& policy) {
  const std::size_t S = mdp.num_states();
  std::vector<double> next(S, 0.0);
  std::vector<double> cur(S, 0.0);
  for (std::size_t h = mdp.horizon(); h-- > 0;) {
    for (StateId s = 0; s < S; ++s) {
      const ActionId a = policy.action(h, s);
      const auto row = mdp.transition_row(h, s, a);
      cur[s] = mdp.reward_mean(h, s, a) + std::inner_product(row.begin(), row.end(), next.begin(), 0.0);
    }
    std::swap(cur, next);
  }
  return next[mdp.start_state()];
}

OptimalSolution exact_optimal_value(const TabularMdp& mdp) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const std::size_t H = mdp.horizon();
  std::vector<ActionId> table(H * S, 0);
  std::vector<double> next(S, 0.0);
  std::vector<double> cur(S, 0.0);
  for (std::size_t h = H; h-- > 0;) {
    for (StateId s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      ActionId best_a = 0;
      for (ActionId a = 0; a < A; ++a) {
        const auto row = mdp.transition_row(h, s, a);
        const double q = mdp.reward_mean(h, s, a) + std::inner_product(row.begin(), row.end(), next.begin(), 0.0);
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      cur[s] = best;
      table[h * S + s] = best_a;
    }
    std::swap(cur, next);
  }
  return OptimalSolution{next[mdp.start_state()], Policy(S, H, std::move(table))};
}

std::vector<double> exact_policy_values(const TabularMdp& mdp, const PolicySet& policies) {
  std::vector<double> values;
  values.reserve(policies.size());
  for (const auto& p : policies) values.push_back(exact_policy_value(mdp, p));
  return values;
}

VisitDistribution visit_distribution(const TabularMdp& mdp, const Policy& policy) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const std::size_t H = mdp.horizon();
  VisitDistribution out(S, A, H);
  out.occupancy_[mdp.start_state()] = 1.0;
  for (std::size_t h = 0; h < H; ++h) {
    for (StateId s = 0; s < S; ++s) {
      const double q = out.occupancy_[h * S + s];
      if (q == 0.0) continue;
      const ActionId a = policy.action(h, s);
      out.visits_[s * A + a] += q;
      if (h + 1 == H) continue;
      const auto row = mdp.transition_row(h, s, a);
      for (StateId next = 0; next < S; ++next) {
        out.occupancy_[(h + 1) * S + next] += q * row[next];
      }
    }
  }
  return out;
}

}  // namespace crrl
