#include "crrl/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crrl/errors.hpp"

namespace crrl {
namespace {

void require_same_shape(const TabularMdp& a, const TabularMdp& b) {
  if (!(a.shape() == b.shape())) {
    throw ShapeMismatch("MDP shapes differ: (S=" + std::to_string(a.num_states()) + ", A=" +
                        std::to_string(a.num_actions()) + ", H=" + std::to_string(a.horizon()) + ", s0=" +
                        std::to_string(a.start_state()) + ") vs (S=" + std::to_string(b.num_states()) +
                        ", A=" + std::to_string(b.num_actions()) + ", H=" + std::to_string(b.horizon()) +
                        ", s0=" + std::to_string(b.start_state()) + ")");
  }
}

double row_l1(const TabularMdp& a, const TabularMdp& b, std::size_t h, StateId s, ActionId act) {
  const auto ra = a.transition_row(h, s, act);
  const auto rb = b.transition_row(h, s, act);
  double d = 0.0;
  for (std::size_t k = 0; k < ra.size(); ++k) d += std::abs(ra[k] - rb[k]);
  return d;
}

// Worst-case reward and transition gap at step h over the states that matter there.
CorruptionMagnitudes step_sup(const TabularMdp& a, const TabularMdp& b, std::size_t h) {
  CorruptionMagnitudes out;
  const StateId first = h == 0 ? a.start_state() : 0;
  const StateId last = h == 0 ? a.start_state() + 1 : static_cast<StateId>(a.num_states());
  for (StateId s = first; s < last; ++s) {
    for (ActionId act = 0; act < a.num_actions(); ++act) {
      out.reward = std::max(out.reward, std::abs(a.reward_mean(h, s, act) - b.reward_mean(h, s, act)));
      out.transition = std::max(out.transition, row_l1(a, b, h, s, act));
    }
  }
  return out;
}

}  // namespace

CorruptionMagnitudes corruption_magnitudes(const TabularMdp& nominal, const TabularMdp& corrupted) {
  require_same_shape(nominal, corrupted);
  CorruptionMagnitudes total;
  for (std::size_t h = 0; h < nominal.horizon(); ++h) {
    const auto c = step_sup(nominal, corrupted, h);
    total.reward += c.reward;
    total.transition += c.transition;
  }
  return total;
}

std::vector<double> visit_deviation(const TabularMdp& first, const TabularMdp& second, const Policy& policy) {
  require_same_shape(first, second);
  const auto q1 = visit_distribution(first, policy);
  const auto q2 = visit_distribution(second, policy);
  std::vector<double> out(first.horizon(), 0.0);
  for (std::size_t h = 0; h < first.horizon(); ++h) {
    for (StateId s = 0; s < first.num_states(); ++s) out[h] += std::abs(q1.occupancy(h, s) - q2.occupancy(h, s));
  }
  return out;
}

std::vector<double> visit_deviation_bound(const TabularMdp& first, const TabularMdp& second) {
  require_same_shape(first, second);
  std::vector<double> out(first.horizon(), 0.0);
  double acc = 0.0;
  for (std::size_t h = 1; h < first.horizon(); ++h) {
    acc += step_sup(first, second, h - 1).transition;
    out[h] = acc;
  }
  return out;
}

double value_deviation_bound(const TabularMdp& first, const TabularMdp& second, const Policy& policy) {
  require_same_shape(first, second);
  double transition = 0.0;
  double reward = 0.0;
  for (std::size_t h = 0; h < first.horizon(); ++h) {
    const StateId lo = h == 0 ? first.start_state() : 0;
    const StateId hi = h == 0 ? first.start_state() + 1 : static_cast<StateId>(first.num_states());
    double t_sup = 0.0;
    double r_sup = 0.0;
    for (StateId s = lo; s < hi; ++s) {
      const ActionId a = policy.action(h, s);
      t_sup = std::max(t_sup, row_l1(first, second, h, s, a));
      r_sup = std::max(r_sup, std::abs(first.reward_mean(h, s, a) - second.reward_mean(h, s, a)));
    }
    transition += t_sup;
    reward += r_sup;
  }
  return static_cast<double>(first.horizon()) * transition + reward;
}

void CorruptionLedger::record(CorruptionMagnitudes c) {
  ++size_;
  if (!segments_.empty() && segments_.back().value == c) {
    ++segments_.back().count;
    return;
  }
  long double r = 0.0L;
  long double p = 0.0L;
  if (!segments_.empty()) {
    const auto& last = segments_.back();
    r = last.reward_before + static_cast<long double>(last.count) * last.value.reward;
    p = last.transition_before + static_cast<long double>(last.count) * last.value.transition;
  }
  segments_.push_back(Segment{size_, 1, c, r, p});
}

const CorruptionLedger::Segment& CorruptionLedger::segment_of(std::uint64_t t) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](std::uint64_t value, const Segment& seg) { return value < seg.first; });
  return *std::prev(it);
}

CorruptionMagnitudes CorruptionLedger::entry(std::uint64_t t) const {
  if (t < 1 || t > size_) {
    throw RangeError("ledger entry " + std::to_string(t) + " outside [1, " + std::to_string(size_) + "]");
  }
  return segment_of(t).value;
}

CorruptionMagnitudes CorruptionLedger::prefix(std::uint64_t t) const {
  if (t > size_) throw RangeError("ledger prefix " + std::to_string(t) + " beyond " + std::to_string(size_));
  if (t == 0) return {};
  const auto& seg = segment_of(t);
  const auto n = static_cast<long double>(t - seg.first + 1);
  return {static_cast<double>(seg.reward_before + n * seg.value.reward),
          static_cast<double>(seg.transition_before + n * seg.value.transition)};
}

CorruptionMagnitudes CorruptionLedger::interval_sum(std::uint64_t t_start, std::uint64_t t_end) const {
  if (t_start < 1 || t_end > size_ || t_start > t_end + 1) {
    throw RangeError("ledger interval [" + std::to_string(t_start) + ", " + std::to_string(t_end) +
                     "] invalid for " + std::to_string(size_) + " episodes");
  }
  if (t_start == t_end + 1) return {};
  // Differences taken in long double before rounding once.
  auto raw = [this](std::uint64_t t, bool reward) -> long double {
    if (t == 0) return 0.0L;
    const auto& seg = segment_of(t);
    const auto n = static_cast<long double>(t - seg.first + 1);
    return reward ? seg.reward_before + n * seg.value.reward : seg.transition_before + n * seg.value.transition;
  };
  return {static_cast<double>(raw(t_end, true) - raw(t_start - 1, true)),
          static_cast<double>(raw(t_end, false) - raw(t_start - 1, false))};
}

CorruptionMagnitudes CorruptionLedger::totals() const { return prefix(size_); }

}  // namespace crrl
