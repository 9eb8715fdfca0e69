#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crrl/adversary.hpp"
#include "crrl/config.hpp"
#include "crrl/corruption.hpp"
#include "crrl/meta.hpp"

namespace crrl {

enum class Algorithm { barbar, brute };

const char* to_string(Algorithm algorithm);
Algorithm algorithm_from_string(const std::string& name);

struct ExperimentConfig {
  std::string mdp_path;                // resolved against the config file's directory
  std::optional<TabularMdp> mdp;       // inline [mdp] section, takes precedence
  Algorithm algorithm = Algorithm::barbar;
  std::uint64_t episodes = 0;          // T
  double delta = 0.1;
  double scale_f = 1.0;
  std::uint64_t trials = 1;
  std::uint64_t seed = 1;              // trial k runs with seed + k
  std::string out = "out";
  unsigned jobs = 1;
  std::uint64_t tau = 6;
  std::uint64_t policy_cap = kDefaultPolicyCap;
  AdversarySpec adversary;
};

/// Reads [experiment], [adversary] and an optional inline [mdp] section.
ExperimentConfig experiment_config_from_document(const ConfigDocument& doc, const std::string& base_dir = ".");
ExperimentConfig load_experiment_config(const std::string& path);

/// Checks the invariants (T >= 1, trials >= 1, scale_f in (0,1], delta in (0,1), ...). Throws ConfigError.
void validate(const ExperimentConfig& config);

/// Applies "key=value,key=value" adversary overrides: kind, delta_r, window
/// (start:end, 1-based), budget, targets (h:s:a[:dest] joined by ';', h 1-based).
/// Throws ConfigError on unknown keys or malformed values.
void apply_adversary_overrides(AdversarySpec& spec, const std::string& overrides);

/// Reads the adversary block of a config table.
AdversarySpec adversary_from_table(const ConfigTable& table);

/// The inline MDP, or the one loaded from mdp_path.
TabularMdp resolve_mdp(const ExperimentConfig& config);

struct EpisodeRow {
  std::uint64_t t;
  std::uint32_t epoch;
  std::uint32_t subepoch;
  std::int32_t bucket;
  PolicyId policy;
  double observed_return;
  double c_r;
  double c_p;
  double inst_regret;  // V* - V^{pi_t} on the nominal MDP
  double cum_regret;
};

struct RunSummary {
  std::uint64_t trial = 0;
  Algorithm algorithm = Algorithm::barbar;
  std::uint64_t episodes = 0;
  double total_regret = 0.0;
  double c_r = 0.0;
  double c_p = 0.0;
  std::uint64_t restarts = 0;
  std::uint32_t epochs_completed = 0;
};

struct RunLog {
  std::vector<EpisodeRow> episodes;
  std::vector<EpochRecord> epochs;
  std::vector<ActiveSetRecord> active_sets;
  std::vector<CorruptionMagnitudes> corruption;  // per episode
  std::vector<CorruptionMagnitudes> cumulative;  // per episode prefix sums from the ledger
  RunSummary summary;
};

/// One seeded run against the nominal MDP with the configured adversary.
/// `values` holds exact nominal values by policy id and `optimal` is V*.
RunLog run_trial(const ExperimentConfig& config, const TabularMdp& nominal, const PolicySet& policies,
                 const std::vector<double>& values, double optimal, std::uint64_t trial);

/// Runs all trials (in parallel up to config.jobs), writing
/// out/trial_<k>/{episodes,epochs,corruption[,active_set]}.csv and out/summary.csv.
std::vector<RunSummary> run_experiment(const ExperimentConfig& config);

void write_episodes_csv(std::ostream& out, std::uint64_t trial, const RunLog& log);
void write_epochs_csv(std::ostream& out, const RunLog& log);
void write_corruption_csv(std::ostream& out, const RunLog& log);
void write_active_set_csv(std::ostream& out, const RunLog& log);
void write_summary_csv(std::ostream& out, const std::vector<RunSummary>& runs);

struct AggregateRow {
  std::uint64_t t;
  double mean;
  double stddev;  // population standard deviation
};

/// Per-t mean and standard deviation of cum_regret over every episodes.csv
/// reachable from `paths` (files, run directories, or trial directories).
/// Throws MismatchedHorizons when the runs differ in length.
std::vector<AggregateRow> compare_runs(const std::vector<std::string>& paths);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

/// "%.17g".
std::string format_real(double x);

}  // namespace crrl
