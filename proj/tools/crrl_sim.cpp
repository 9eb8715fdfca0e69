// crrl_sim: runs corruption-robust RL experiments and aggregates their output.
//
//   crrl_sim run --config exp.toml [--algo barbar|brute] [--episodes T] ...
//   crrl_sim compare --out aggregate.csv RUN_DIR...
//   crrl_sim estall --mdp m0.toml --epsilon 0.25 --delta 0.1 --out DIR
//
// Exit codes: 0 ok, 2 configuration error, 3 runtime error, 4 policy cap exceeded.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crrl/environment.hpp"
#include "crrl/errors.hpp"
#include "crrl/estall.hpp"
#include "crrl/experiment.hpp"
#include "crrl/mdp_io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitCap = 4;

struct RunOptions {
  std::string config;
  std::optional<std::string> mdp;
  std::optional<std::string> algo;
  std::optional<std::uint64_t> episodes;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<double> scale_f;
  std::optional<std::string> out;
  std::optional<std::string> adversary;
  std::optional<unsigned> jobs;
};

int do_run(const RunOptions& o) {
  crrl::ExperimentConfig config = crrl::load_experiment_config(o.config);
  if (o.mdp) {
    config.mdp.reset();
    config.mdp_path = *o.mdp;
  }
  if (o.algo) config.algorithm = crrl::algorithm_from_string(*o.algo);
  if (o.episodes) config.episodes = *o.episodes;
  if (o.seed) config.seed = *o.seed;
  if (o.trials) config.trials = *o.trials;
  if (o.scale_f) config.scale_f = *o.scale_f;
  if (o.out) config.out = *o.out;
  if (o.jobs) config.jobs = *o.jobs;
  if (o.adversary) crrl::apply_adversary_overrides(config.adversary, *o.adversary);
  const auto runs = crrl::run_experiment(config);
  for (const auto& r : runs) {
    std::cout << "trial " << r.trial << ": regret " << crrl::format_real(r.total_regret) << ", C_r "
              << crrl::format_real(r.c_r) << ", C_p " << crrl::format_real(r.c_p) << ", restarts " << r.restarts
              << ", epochs " << r.epochs_completed << '\n';
  }
  std::cout << "wrote " << config.out << '\n';
  return 0;
}

int do_compare(const std::vector<std::string>& paths, const std::string& out) {
  const auto rows = crrl::compare_runs(paths);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + out);
  crrl::write_aggregate_csv(f, rows);
  std::cout << "aggregated " << rows.size() << " episodes into " << out << '\n';
  return 0;
}

struct EstAllOptions {
  std::string mdp;
  double epsilon = 0.25;
  double delta = 0.1;
  double scale_f = 1.0;
  std::uint64_t tau = 6;
  std::uint64_t seed = 1;
  std::string out = "estall_out";
  std::string adversary;
  std::optional<std::uint64_t> episodes;
  std::uint64_t policy_cap = crrl::kDefaultPolicyCap;
};

// Runs one EstAll over every policy until it finishes, then writes its trace
// and estimates next to the exact nominal values.
int do_estall(const EstAllOptions& o) {
  const crrl::TabularMdp mdp = crrl::load_mdp_file(o.mdp);
  const crrl::PolicySet policies = crrl::enumerate_policies(mdp.shape(), o.policy_cap);
  std::vector<crrl::PolicyId> ids(policies.size());
  for (std::size_t k = 0; k < ids.size(); ++k) ids[k] = static_cast<crrl::PolicyId>(k);
  const auto S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  const std::uint64_t F = crrl::scaled_trajectories(S, A, H, ids.size(), o.epsilon, o.delta, o.scale_f);
  const std::uint64_t budget = crrl::interaction_budget(S, A, H, F, o.tau, o.epsilon);
  const std::uint64_t limit = o.episodes.value_or(budget);

  crrl::AdversarySpec spec;
  crrl::apply_adversary_overrides(spec, o.adversary);
  crrl::Environment env(mdp, crrl::make_adversary(spec, mdp, limit), limit,
                        crrl::make_stream(o.seed, crrl::StreamRole::environment));
  crrl::EstAll est(policies, ids, crrl::EstAllParams{o.epsilon, o.delta, F, o.tau, o.scale_f},
                   crrl::make_stream(o.seed, crrl::StreamRole::estall), std::nullopt, true);
  while (!est.finished() && env.episodes_remaining() > 0) est.play_one(env);

  namespace fs = std::filesystem;
  fs::create_directories(o.out);
  {
    std::ofstream f(fs::path(o.out) / "estall_trace.csv", std::ios::binary);
    f << "event,step,policy_id,max_fail_count,fail_s,fail_a,episodes\n";
    for (const auto& e : est.trace()) {
      f << crrl::to_string(e.kind) << ',' << e.step << ',' << e.policy << ',' << e.max_fail_count << ','
        << e.fail_state << ',' << e.fail_action << ',' << e.episodes << '\n';
    }
  }
  {
    std::ofstream f(fs::path(o.out) / "estimates.csv", std::ios::binary);
    f << "policy_id,r_hat,value,in_exploration_set\n";
    const auto values = crrl::exact_policy_values(mdp, policies);
    const auto& explored = est.exploration_set();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const bool in_d = std::find(explored.begin(), explored.end(), ids[k]) != explored.end();
      f << ids[k] << ',' << (est.finished() ? crrl::format_real(est.estimates()[k]) : std::string("nan")) << ','
        << crrl::format_real(values[k]) << ',' << (in_d ? 1 : 0) << '\n';
    }
  }
  const auto c = env.ledger().totals();
  std::cout << "F_est " << F << ", episodes " << est.episodes_used() << " / budget " << budget << ", "
            << (est.finished() ? "finished" : "unfinished") << (est.over_budget() ? " (over budget)" : "")
            << ", exploration set " << est.exploration_set().size() << ", C_r " << crrl::format_real(c.reward)
            << ", C_p " << crrl::format_real(c.transition) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corruption-robust episodic RL simulator"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
  run_cmd->add_option("--config", run.config, "Experiment config file")->required();
  run_cmd->add_option("--mdp", run.mdp, "MDP file (overrides the config)");
  run_cmd->add_option("--algo", run.algo, "barbar or brute");
  run_cmd->add_option("--episodes", run.episodes, "Episode count T");
  run_cmd->add_option("--seed", run.seed, "Seed of trial 0");
  run_cmd->add_option("--trials", run.trials, "Number of trials");
  run_cmd->add_option("--scale-f", run.scale_f, "Scale factor for F in (0, 1]");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--adversary", run.adversary, "KEY=VAL,... (kind, delta_r, window, targets, budget)");
  run_cmd->add_option("--jobs", run.jobs, "Trials run in parallel");

  std::vector<std::string> compare_paths;
  std::string compare_out = "aggregate.csv";
  auto* compare_cmd = app.add_subcommand("compare", "Aggregate cum_regret curves across runs");
  compare_cmd->add_option("runs", compare_paths, "Run directories or episodes.csv files")->required();
  compare_cmd->add_option("--out", compare_out, "Output CSV");

  EstAllOptions est;
  auto* est_cmd = app.add_subcommand("estall", "Run a single EstAll over all policies");
  est_cmd->add_option("--mdp", est.mdp, "MDP file")->required();
  est_cmd->add_option("--epsilon", est.epsilon, "Target accuracy");
  est_cmd->add_option("--delta", est.delta, "Confidence");
  est_cmd->add_option("--scale-f", est.scale_f, "Scale factor for F in (0, 1]");
  est_cmd->add_option("--tau", est.tau, "Rollout repetition (>= 6)");
  est_cmd->add_option("--seed", est.seed, "Seed");
  est_cmd->add_option("--out", est.out, "Output directory");
  est_cmd->add_option("--adversary", est.adversary, "KEY=VAL,...");
  est_cmd->add_option("--episodes", est.episodes, "Episode limit (default: interaction budget)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return do_run(run);
    if (*compare_cmd) return do_compare(compare_paths, compare_out);
    if (*est_cmd) return do_estall(est);
  } catch (const crrl::CapExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCap;
  } catch (const crrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const crrl::BadSpec& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const crrl::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const crrl::InvalidMdp& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
