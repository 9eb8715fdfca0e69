#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "crrl/environment.hpp"
#include "crrl/meta.hpp"

namespace crrl {

struct Lambdas {
  double lambda1;
  double lambda2;
};

/// lambda1 = 6 S A ln(H^2 S A / epsilon_est), lambda2 = 12 ln(8 T / delta).
/// Throws DomainError unless epsilon_est > 0, T >= 1 and delta in (0, 1).
Lambdas barbar_constants(std::size_t num_states, std::size_t num_actions, std::size_t horizon, double epsilon_est,
                         std::uint64_t T, double delta);

/// The epsilon_est used in lambda1: the finest level 2^-M / 128 with M = max_epochs(T).
double finest_epsilon_est(std::uint64_t T);

struct RebucketResult {
  double r_star;
  std::vector<std::int32_t> bucket;  // j^m(pi), by policy id
  std::vector<double> gap;           // 2^-j^m(pi)
};

/// Re-estimates gaps after epoch m >= 1:
///   r_* = max_pi (r(pi) - gap_prev(pi) / 16),
///   j(pi) = inf { j >= 0 : 2^-j < max(2^-m, r_* - r(pi)) }, clamped to [0, m].
RebucketResult rebucket(const std::vector<double>& estimates, const std::vector<double>& previous_gaps, unsigned m);

/// Current estimated gap per policy plus the bucket each epoch assigned it.
class GapTable {
 public:
  explicit GapTable(std::size_t num_policies) : gap_(num_policies, 1.0), history_(num_policies) {}

  void apply(const RebucketResult& result);
  const std::vector<double>& gaps() const noexcept { return gap_; }
  const std::vector<std::int32_t>& history(PolicyId id) const { return history_.at(id); }
  /// Policies grouped by their most recent bucket (all in bucket 0 initially).
  std::map<std::int32_t, std::vector<PolicyId>> buckets() const;

 private:
  std::vector<double> gap_;
  std::vector<std::vector<std::int32_t>> history_;
};

struct BucketPlan {
  std::int32_t j;
  std::vector<PolicyId> members;
  double epsilon_est;  // 2^-j / 128
  double delta;        // |Pi_j| delta / (5 |Pi| T)
  double F;            // unscaled 8 S^2 H^4 A^2 ln(2 |Pi_j| / delta_j) / epsilon_est^2
  std::uint64_t F_est; // max(1, ceil(scale * F))
  double n;            // 2 lambda1 lambda2 * scale * F
};

struct EpochPlan {
  unsigned m;
  std::vector<BucketPlan> buckets;
  double length;  // N_m = sum of n
};

EpochPlan plan_epoch(unsigned m, const std::map<std::int32_t, std::vector<PolicyId>>& buckets, const MdpShape& shape,
                     std::size_t num_policies, const MetaParams& params, const Lambdas& lambdas);

/// BARBAR-RL over `policies` until `env` has no episodes left or T is reached.
MetaRunResult run_barbar(const PolicySet& policies, EpisodeSource& env, const MetaParams& params, std::uint64_t seed);

}  // namespace crrl
