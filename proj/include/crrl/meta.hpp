#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "crrl/mdp.hpp"

namespace crrl {

/// Inputs shared by both meta-algorithms.
struct MetaParams {
  std::uint64_t episodes = 0;  // T
  double delta = 0.1;          // overall confidence
  double scale_f = 1.0;        // sigma_F, multiplies every F and hence every epoch length
  std::uint64_t tau = 6;
};

/// Validates MetaParams, throwing DomainError.
void check_meta_params(const MetaParams& params);

/// Epochs scheduled before the replay phase: ceil(log2 T), at least 1.
unsigned max_epochs(std::uint64_t T);

/// One learner episode as the learner sees it. Episodes after the last
/// scheduled epoch carry epoch = max_epochs + 1, subepoch = 0, bucket = -1.
struct EpisodeRecord {
  std::uint64_t t;
  std::uint32_t epoch;
  std::uint32_t subepoch;
  std::int32_t bucket;
  PolicyId policy;
  double observed_return;
};

struct EpochRecord {
  std::uint32_t m;
  std::uint32_t subepochs;  // Gamma_m, sub-epochs started in this epoch
  double length;            // N_m
  std::vector<std::pair<std::int32_t, std::size_t>> bucket_sizes;  // (j, |Pi_j^m|)
  double r_star;            // r-hat_* computed at the end of the epoch (NaN if not completed)
  bool completed;
};

struct ActiveSetRecord {
  std::uint32_t m;
  std::size_t size;                  // |Pi^m| entering the epoch
  std::vector<PolicyId> eliminated;  // removed at the end of the epoch
};

struct MetaRunResult {
  std::vector<EpisodeRecord> episodes;
  std::vector<EpochRecord> epochs;
  std::vector<ActiveSetRecord> active_sets;  // brute elimination only
  std::uint64_t restarts = 0;
  std::uint32_t epochs_completed = 0;
  std::vector<double> last_estimates;  // r-hat of the last completed epoch, by policy id
};

}  // namespace crrl
