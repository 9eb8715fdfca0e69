#pragma once

#include <cstdint>
#include <vector>

#include "crrl/barbar.hpp"
#include "crrl/environment.hpp"
#include "crrl/meta.hpp"

namespace crrl {

/// Surviving policies of brute-force elimination and the epoch parameters.
struct ActiveSet {
  unsigned m = 1;
  std::vector<PolicyId> ids;  // ascending
  double delta = 0.0;         // delta / (5 T)
  double epsilon = 0.0;       // 2^-m
  double epsilon_sim = 0.0;   // 2^-m / 128
  double F = 0.0;             // unscaled trajectory requirement
  std::uint64_t F_est = 0;    // max(1, ceil(scale * F))
  double length = 0.0;        // N_m = 2 lambda1 lambda2 * scale * F
};

/// Fills in the epoch-m parameters for `ids`.
ActiveSet plan_active_set(unsigned m, std::vector<PolicyId> ids, const MdpShape& shape, const MetaParams& params,
                          const Lambdas& lambdas);

/// 8 lambda1 lambda2 H^2 sqrt(S A ln(10 T |Pi| / delta) T) / N_m + epsilon_m / 8.
double elimination_threshold(const ActiveSet& active, const MdpShape& shape, std::size_t num_policies,
                             std::uint64_t T, double delta, const Lambdas& lambdas);

/// Keeps pi iff max r-hat - r-hat(pi) <= threshold. `estimates` is indexed by
/// policy id. The result lists the survivors; `eliminated` receives the rest.
std::vector<PolicyId> eliminate(const std::vector<double>& estimates, const std::vector<PolicyId>& active,
                                double threshold, std::vector<PolicyId>* eliminated = nullptr);

/// Brute-force policy elimination: one EstAll over the active set per
/// sub-epoch, every episode stepping it, restarts on unfinished, elimination
/// between epochs. Fills MetaRunResult::active_sets.
MetaRunResult run_brute(const PolicySet& policies, EpisodeSource& env, const MetaParams& params, std::uint64_t seed);

}  // namespace crrl
