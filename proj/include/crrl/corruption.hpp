#pragma once

#include <cstdint>
#include <vector>

#include "crrl/mdp.hpp"

namespace crrl {

/// Per-episode corruption (c^r, c^p), or an interval sum of them.
struct CorruptionMagnitudes {
  double reward = 0.0;
  double transition = 0.0;

  bool operator==(const CorruptionMagnitudes&) const = default;
};

/// Distance of an episode MDP from the nominal one:
///   c^r = sup_a |R_t(s0,a,0) - R*(s0,a)| + sum_{h>=1} sup_{s,a} |R_t(s,a,h) - R*(s,a)|
/// on reward means, and c^p the same with L1 distances between transition rows.
/// Only the start state matters at step 0 since no other state is reachable there.
/// Throws ShapeMismatch when (S, A, H, s0) differ.
CorruptionMagnitudes corruption_magnitudes(const TabularMdp& nominal, const TabularMdp& corrupted);

/// Per-layer L1 distance between the occupancy measures of one policy under two MDPs.
std::vector<double> visit_deviation(const TabularMdp& first, const TabularMdp& second, const Policy& policy);

/// Per-layer upper bound on visit_deviation: for layer k it is the sum over the
/// steps before k of the worst-case row L1 distance, with step 0 taken at s0 only.
/// The bound is returned uncapped; the true deviation never exceeds 2.
std::vector<double> visit_deviation_bound(const TabularMdp& first, const TabularMdp& second);

/// Bound on |V^{first,pi} - V^{second,pi}|: H times the summed worst-case row
/// L1 distances plus the summed worst-case reward gaps, both over pi's actions.
double value_deviation_bound(const TabularMdp& first, const TabularMdp& second, const Policy& policy);

/// Write-once record of per-episode corruption with O(log n) interval sums.
///
/// Consecutive identical entries share a run-length segment, so a run that is
/// clean for millions of episodes costs one segment. Prefix sums are kept in
/// long double.
class CorruptionLedger {
 public:
  void record(CorruptionMagnitudes c);

  std::uint64_t size() const noexcept { return size_; }
  /// Entry of episode t, 1-based.
  CorruptionMagnitudes entry(std::uint64_t t) const;
  /// Sum over episodes t_start..t_end inclusive, 1-based. t_start = t_end + 1 is
  /// the empty interval. Throws RangeError otherwise out of range.
  CorruptionMagnitudes interval_sum(std::uint64_t t_start, std::uint64_t t_end) const;
  CorruptionMagnitudes totals() const;
  /// Sum over episodes 1..t.
  CorruptionMagnitudes prefix(std::uint64_t t) const;

  std::size_t segment_count() const noexcept { return segments_.size(); }

 private:
  struct Segment {
    std::uint64_t first;  // 1-based episode index
    std::uint64_t count;
    CorruptionMagnitudes value;
    long double reward_before;
    long double transition_before;
  };
  const Segment& segment_of(std::uint64_t t) const;

  std::vector<Segment> segments_;
  std::uint64_t size_ = 0;
};

}  // namespace crrl
