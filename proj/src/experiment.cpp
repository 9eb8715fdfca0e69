#include "crrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "crrl/barbar.hpp"
#include "crrl/brute.hpp"
#include "crrl/environment.hpp"
#include "crrl/errors.hpp"
#include "crrl/mdp_io.hpp"

namespace fs = std::filesystem;

namespace crrl {

const char* to_string(Algorithm algorithm) {
  return algorithm == Algorithm::barbar ? "barbar" : "brute";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "barbar") return Algorithm::barbar;
  if (name == "brute") return Algorithm::brute;
  throw ConfigError("unknown algorithm '" + name + "' (expected barbar or brute)");
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::uint64_t nonnegative(const ConfigTable& table, const std::string& key, std::int64_t value) {
  if (value < 0) table.fail(table.at(key), "'" + key + "' must not be negative");
  return static_cast<std::uint64_t>(value);
}

TransitionTarget target_from_numbers(const std::vector<std::int64_t>& v, const std::string& where) {
  if (v.size() != 3 && v.size() != 4) throw ConfigError(where + ": a target is (h, s, a) or (h, s, a, destination)");
  for (auto x : v) {
    if (x < 0) throw ConfigError(where + ": target entries must not be negative");
  }
  if (v[0] < 1) throw ConfigError(where + ": target step h is 1-based");
  TransitionTarget t;
  t.h = static_cast<std::size_t>(v[0] - 1);
  t.s = static_cast<StateId>(v[1]);
  t.a = static_cast<ActionId>(v[2]);
  if (v.size() == 4) t.destination = static_cast<StateId>(v[3]);
  return t;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    if (text.empty() || text[0] == '-') throw std::invalid_argument(text);
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("invalid " + what + " '" + text + "'");
  }
}

double parse_real(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("invalid " + what + " '" + text + "'");
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

AdversarySpec adversary_from_table(const ConfigTable& table) {
  table.expect_only({"kind", "delta_r", "window", "targets", "budget"});
  AdversarySpec spec;
  try {
    spec.type = adversary_type_from_string(table.optional_string("kind").value_or("none"));
  } catch (const BadSpec& e) {
    table.fail(table.at("kind"), e.what());
  }
  spec.delta_r = table.optional_double("delta_r").value_or(0.0);
  spec.budget = table.optional_double("budget").value_or(0.0);
  if (table.contains("window")) {
    const auto& w = table.get_array("window");
    if (w.size() != 2) table.fail(table.at("window"), "window is [start, end]");
    spec.window_start = nonnegative(table, "window", config_to_int(table, w[0]));
    spec.window_end = nonnegative(table, "window", config_to_int(table, w[1]));
  }
  if (table.contains("targets")) {
    for (const auto& node : table.get_array("targets")) {
      if (!node.is_array()) table.fail(node, "each target is an array [h, s, a] or [h, s, a, destination]");
      std::vector<std::int64_t> v;
      for (const auto& e : std::get<ConfigValue::Array>(node.data)) v.push_back(config_to_int(table, e));
      spec.targets.push_back(target_from_numbers(v, table.source() + ":" + std::to_string(node.line)));
    }
  }
  return spec;
}

void apply_adversary_overrides(AdversarySpec& spec, const std::string& overrides) {
  if (overrides.empty()) return;
  for (const auto& item : split(overrides, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("adversary override '" + item + "' is not KEY=VALUE");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "kind") {
      try {
        spec.type = adversary_type_from_string(value);
      } catch (const BadSpec& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "delta_r") {
      spec.delta_r = parse_real(value, "delta_r");
    } else if (key == "budget") {
      spec.budget = parse_real(value, "budget");
    } else if (key == "window") {
      const auto parts = split(value, ':');
      if (parts.size() != 2) throw ConfigError("window override is START:END");
      spec.window_start = parse_u64(parts[0], "window start");
      spec.window_end = parse_u64(parts[1], "window end");
    } else if (key == "targets") {
      spec.targets.clear();
      for (const auto& target : split(value, ';')) {
        std::vector<std::int64_t> v;
        for (const auto& part : split(target, ':')) v.push_back(static_cast<std::int64_t>(parse_u64(part, "target")));
        spec.targets.push_back(target_from_numbers(v, "--adversary targets"));
      }
    } else {
      throw ConfigError("unknown adversary key '" + key + "'");
    }
  }
}

ExperimentConfig experiment_config_from_document(const ConfigDocument& doc, const std::string& base_dir) {
  ExperimentConfig config;
  for (const auto& table : doc.tables()) {
    const auto& name = table.name();
    if (name.empty()) {
      if (!table.values().empty()) table.fail(table.values().begin()->second, "keys must live in a [section]");
    } else if (name != "experiment" && name != "adversary" && name != "mdp") {
      throw ConfigError(doc.source(), table.line(), "unknown section [" + name + "]");
    }
  }
  const ConfigTable* exp = doc.section("experiment");
  if (exp == nullptr) throw ConfigError(doc.source(), 1, "missing [experiment] section");
  exp->expect_only({"mdp", "algorithm", "episodes", "delta", "scale_f", "trials", "seed", "out", "jobs", "tau",
                    "policy_cap"});
  if (auto mdp = exp->optional_string("mdp")) {
    fs::path p(*mdp);
    config.mdp_path = p.is_absolute() ? p.string() : (fs::path(base_dir) / p).lexically_normal().string();
  }
  if (auto algo = exp->optional_string("algorithm")) {
    try {
      config.algorithm = algorithm_from_string(*algo);
    } catch (const ConfigError& e) {
      exp->fail(exp->at("algorithm"), e.what());
    }
  }
  if (auto v = exp->optional_int("episodes")) config.episodes = nonnegative(*exp, "episodes", *v);
  if (auto v = exp->optional_double("delta")) config.delta = *v;
  if (auto v = exp->optional_double("scale_f")) config.scale_f = *v;
  if (auto v = exp->optional_int("trials")) config.trials = nonnegative(*exp, "trials", *v);
  if (auto v = exp->optional_int("seed")) config.seed = nonnegative(*exp, "seed", *v);
  if (auto v = exp->optional_string("out")) {
    fs::path p(*v);
    config.out = p.is_absolute() ? p.string() : (fs::path(base_dir) / p).lexically_normal().string();
  }
  if (auto v = exp->optional_int("jobs")) config.jobs = static_cast<unsigned>(nonnegative(*exp, "jobs", *v));
  if (auto v = exp->optional_int("tau")) config.tau = nonnegative(*exp, "tau", *v);
  if (auto v = exp->optional_int("policy_cap")) config.policy_cap = nonnegative(*exp, "policy_cap", *v);
  if (const auto* adv = doc.section("adversary")) config.adversary = adversary_from_table(*adv);
  if (const auto* mdp = doc.section("mdp")) config.mdp = mdp_from_table(*mdp);
  if (config.mdp_path.empty() && !config.mdp) {
    throw ConfigError(doc.source(), exp->line(), "no MDP: set experiment.mdp or add an [mdp] section");
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const auto doc = parse_config_file(path);
  const auto dir = fs::path(path).parent_path();
  return experiment_config_from_document(doc, dir.empty() ? "." : dir.string());
}

void validate(const ExperimentConfig& config) {
  if (config.episodes < 1) throw ConfigError("episodes (T) must be at least 1");
  if (config.trials < 1) throw ConfigError("trials must be at least 1");
  if (!(config.scale_f > 0.0 && config.scale_f <= 1.0)) throw ConfigError("scale_f must lie in (0, 1]");
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (config.tau < 6) throw ConfigError("tau must be at least 6");
  if (config.jobs < 1) throw ConfigError("jobs must be at least 1");
  if (config.out.empty()) throw ConfigError("output directory must be set");
}

TabularMdp resolve_mdp(const ExperimentConfig& config) {
  if (config.mdp) return *config.mdp;
  return load_mdp_file(config.mdp_path);
}

RunLog run_trial(const ExperimentConfig& config, const TabularMdp& nominal, const PolicySet& policies,
                 const std::vector<double>& values, double optimal, std::uint64_t trial) {
  const std::uint64_t seed = config.seed + trial;
  Environment env(nominal, make_adversary(config.adversary, nominal, config.episodes), config.episodes,
                  make_stream(seed, StreamRole::environment));
  const MetaParams params{config.episodes, config.delta, config.scale_f, config.tau};
  MetaRunResult result = config.algorithm == Algorithm::barbar ? run_barbar(policies, env, params, seed)
                                                               : run_brute(policies, env, params, seed);
  RunLog log;
  const auto& ledger = env.ledger();
  log.episodes.reserve(result.episodes.size());
  log.corruption.reserve(ledger.size());
  log.cumulative.reserve(ledger.size());
  for (std::uint64_t t = 1; t <= ledger.size(); ++t) {
    log.corruption.push_back(ledger.entry(t));
    log.cumulative.push_back(ledger.prefix(t));
  }
  double cum = 0.0;
  for (const auto& e : result.episodes) {
    const double inst = optimal - values.at(e.policy);
    cum += inst;
    const auto c = ledger.entry(e.t);
    log.episodes.push_back(EpisodeRow{e.t, e.epoch, e.subepoch, e.bucket, e.policy, e.observed_return, c.reward,
                                      c.transition, inst, cum});
  }
  log.epochs = std::move(result.epochs);
  log.active_sets = std::move(result.active_sets);
  const auto totals = ledger.totals();
  log.summary = RunSummary{trial, config.algorithm, config.episodes, cum, totals.reward, totals.transition,
                           result.restarts, result.epochs_completed};
  return log;
}

void write_episodes_csv(std::ostream& out, std::uint64_t trial, const RunLog& log) {
  out << "trial,t,epoch,subepoch,bucket_j,policy_id,observed_return,c_r,c_p,inst_regret,cum_regret\n";
  for (const auto& e : log.episodes) {
    out << trial << ',' << e.t << ',' << e.epoch << ',' << e.subepoch << ',' << e.bucket << ',' << e.policy << ','
        << format_real(e.observed_return) << ',' << format_real(e.c_r) << ',' << format_real(e.c_p) << ','
        << format_real(e.inst_regret) << ',' << format_real(e.cum_regret) << '\n';
  }
}

void write_epochs_csv(std::ostream& out, const RunLog& log) {
  out << "m,gamma_m,N_m,bucket_sizes,r_star,completed\n";
  for (const auto& e : log.epochs) {
    out << e.m << ',' << e.subepochs << ',' << format_real(e.length) << ',';
    for (std::size_t k = 0; k < e.bucket_sizes.size(); ++k) {
      out << (k ? ";" : "") << e.bucket_sizes[k].first << ':' << e.bucket_sizes[k].second;
    }
    out << ',' << (std::isnan(e.r_star) ? std::string("nan") : format_real(e.r_star)) << ','
        << (e.completed ? 1 : 0) << '\n';
  }
}

void write_corruption_csv(std::ostream& out, const RunLog& log) {
  out << "t,c_r,c_p,cum_c_r,cum_c_p\n";
  for (std::size_t k = 0; k < log.corruption.size(); ++k) {
    out << k + 1 << ',' << format_real(log.corruption[k].reward) << ',' << format_real(log.corruption[k].transition)
        << ',' << format_real(log.cumulative[k].reward) << ',' << format_real(log.cumulative[k].transition) << '\n';
  }
}

void write_active_set_csv(std::ostream& out, const RunLog& log) {
  out << "m,active_size,eliminated_ids\n";
  for (const auto& a : log.active_sets) {
    out << a.m << ',' << a.size << ',';
    for (std::size_t k = 0; k < a.eliminated.size(); ++k) out << (k ? " " : "") << a.eliminated[k];
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<RunSummary>& runs) {
  out << "trial,algo,T,total_regret,C_r,C_p,restarts,epochs_completed\n";
  for (const auto& r : runs) {
    out << r.trial << ',' << to_string(r.algorithm) << ',' << r.episodes << ',' << format_real(r.total_regret) << ','
        << format_real(r.c_r) << ',' << format_real(r.c_p) << ',' << r.restarts << ',' << r.epochs_completed << '\n';
  }
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  if (!f) throw std::runtime_error("error writing " + path.string());
}

}  // namespace

std::vector<RunSummary> run_experiment(const ExperimentConfig& config) {
  validate(config);
  const TabularMdp nominal = resolve_mdp(config);
  const PolicySet policies = enumerate_policies(nominal.shape(), config.policy_cap);
  // Checks the adversary spec once up front so a bad spec fails before any output.
  (void)make_adversary(config.adversary, nominal, config.episodes);
  const std::vector<double> values = exact_policy_values(nominal, policies);
  const double optimal = exact_optimal_value(nominal).value;

  const fs::path root(config.out);
  fs::create_directories(root);

  std::vector<RunSummary> summaries(config.trials);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::uint64_t k = next.fetch_add(1);
      if (k >= config.trials) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) return;
      }
      try {
        const RunLog log = run_trial(config, nominal, policies, values, optimal, k);
        const fs::path dir = root / ("trial_" + std::to_string(k));
        fs::create_directories(dir);
        std::ostringstream episodes, epochs, corruption;
        write_episodes_csv(episodes, k, log);
        write_epochs_csv(epochs, log);
        write_corruption_csv(corruption, log);
        write_file(dir / "episodes.csv", episodes.str());
        write_file(dir / "epochs.csv", epochs.str());
        write_file(dir / "corruption.csv", corruption.str());
        if (config.algorithm == Algorithm::brute) {
          std::ostringstream active;
          write_active_set_csv(active, log);
          write_file(dir / "active_set.csv", active.str());
        }
        summaries[k] = log.summary;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(config.jobs, config.trials));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::ostringstream summary;
  write_summary_csv(summary, summaries);
  write_file(root / "summary.csv", summary.str());
  return summaries;
}

namespace {

void collect_episode_files(const fs::path& path, std::vector<fs::path>& out) {
  if (fs::is_regular_file(path)) {
    out.push_back(path);
    return;
  }
  if (!fs::is_directory(path)) throw std::runtime_error("no such run: " + path.string());
  if (fs::is_regular_file(path / "episodes.csv")) {
    out.push_back(path / "episodes.csv");
    return;
  }
  std::vector<fs::path> found;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_directory() && fs::is_regular_file(entry.path() / "episodes.csv")) {
      found.push_back(entry.path() / "episodes.csv");
    }
  }
  if (found.empty()) throw std::runtime_error("no episodes.csv under " + path.string());
  std::sort(found.begin(), found.end());
  out.insert(out.end(), found.begin(), found.end());
}

std::vector<double> read_cum_regret(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(file.string() + " is empty");
  const auto header = split(line, ',');
  const auto it = std::find(header.begin(), header.end(), "cum_regret");
  if (it == header.end()) throw std::runtime_error(file.string() + " has no cum_regret column");
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) + ": wrong number of fields");
    }
    out.push_back(parse_real(fields[col], "cum_regret"));
  }
  return out;
}

}  // namespace

std::vector<AggregateRow> compare_runs(const std::vector<std::string>& paths) {
  if (paths.empty()) throw std::runtime_error("compare needs at least one run");
  std::vector<fs::path> files;
  for (const auto& p : paths) collect_episode_files(p, files);
  std::vector<std::vector<double>> curves;
  for (const auto& f : files) curves.push_back(read_cum_regret(f));
  const std::size_t T = curves.front().size();
  for (std::size_t k = 1; k < curves.size(); ++k) {
    if (curves[k].size() != T) {
      throw MismatchedHorizons("run " + files[k].string() + " has " + std::to_string(curves[k].size()) +
                               " episodes, expected " + std::to_string(T));
    }
  }
  std::vector<AggregateRow> rows(T);
  const double n = static_cast<double>(curves.size());
  for (std::size_t t = 0; t < T; ++t) {
    double mean = 0.0;
    for (const auto& c : curves) mean += c[t];
    mean /= n;
    double var = 0.0;
    for (const auto& c : curves) var += (c[t] - mean) * (c[t] - mean);
    rows[t] = AggregateRow{t + 1, mean, std::sqrt(var / n)};
  }
  return rows;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "t,mean_cum_regret,std_cum_regret\n";
  for (const auto& r : rows) out << r.t << ',' << format_real(r.mean) << ',' << format_real(r.stddev) << '\n';
}

}  // namespace crrl
