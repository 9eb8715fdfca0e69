#include "crrl/mdp_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "crrl/errors.hpp"

namespace crrl {
namespace {

std::size_t positive_count(const ConfigTable& table, const std::string& key) {
  const auto v = table.get_int(key);
  if (v <= 0) table.fail(table.at(key), "'" + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

TabularMdp mdp_from_table(const ConfigTable& table) {
  table.expect_only({"num_states", "num_actions", "horizon", "start_state", "noise", "transition", "reward"});
  MdpShape shape;
  shape.num_states = positive_count(table, "num_states");
  shape.num_actions = positive_count(table, "num_actions");
  shape.horizon = positive_count(table, "horizon");
  const auto start = table.optional_int("start_state").value_or(0);
  if (start < 0 || static_cast<std::size_t>(start) >= shape.num_states) {
    table.fail(table.at("start_state"), "start_state out of range");
  }
  shape.start_state = static_cast<StateId>(start);

  RewardNoise noise = RewardNoise::deterministic;
  if (auto n = table.optional_string("noise")) {
    if (*n == "bernoulli") {
      noise = RewardNoise::bernoulli;
    } else if (*n != "deterministic") {
      table.fail(table.at("noise"), "noise must be \"deterministic\" or \"bernoulli\"");
    }
  }

  const std::size_t S = shape.num_states;
  const std::size_t A = shape.num_actions;
  const std::size_t H = shape.horizon;

  const auto& rows = table.get_array("transition");
  const bool per_step_rows = rows.size() == H * S * A;
  if (rows.size() != S * A && !per_step_rows) {
    table.fail(table.at("transition"), "transition needs " + std::to_string(S * A) + " rows (stationary) or " +
                                           std::to_string(H * S * A) + " rows (per step), found " +
                                           std::to_string(rows.size()));
  }
  std::vector<double> block;
  block.reserve(rows.size() * S);
  for (const auto& row : rows) {
    if (!row.is_array()) table.fail(row, "each transition row must be an array");
    const auto& entries = std::get<ConfigValue::Array>(row.data);
    if (entries.size() != S) {
      table.fail(row, "transition row has " + std::to_string(entries.size()) + " entries, expected " +
                          std::to_string(S));
    }
    double sum = 0.0;
    for (const auto& e : entries) {
      if (!e.is_number()) table.fail(e, "transition entries must be numbers");
      const double p = config_to_double(table, e);
      if (!(p >= 0.0) || !std::isfinite(p)) table.fail(e, "transition probability must be nonnegative");
      sum += p;
      block.push_back(p);
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      table.fail(row, "transition row sums to " + format_double(sum) + ", not 1");
    }
  }

  const auto& reward_nodes = table.get_array("reward");
  const bool per_step_reward = reward_nodes.size() == H * S * A;
  if (reward_nodes.size() != S * A && !per_step_reward) {
    table.fail(table.at("reward"), "reward needs " + std::to_string(S * A) + " or " + std::to_string(H * S * A) +
                                       " entries, found " + std::to_string(reward_nodes.size()));
  }
  std::vector<double> reward;
  reward.reserve(reward_nodes.size());
  for (const auto& e : reward_nodes) {
    if (!e.is_number()) table.fail(e, "reward entries must be numbers");
    const double r = config_to_double(table, e);
    if (!(r >= 0.0 && r <= 1.0)) table.fail(e, "reward mean must lie in [0, 1]");
    reward.push_back(r);
  }

  auto expand = [H](const std::vector<double>& one_step) {
    std::vector<double> out;
    out.reserve(one_step.size() * H);
    for (std::size_t h = 0; h < H; ++h) out.insert(out.end(), one_step.begin(), one_step.end());
    return out;
  };

  try {
    return TabularMdp(shape, per_step_rows ? std::move(block) : expand(block),
                      per_step_reward ? std::move(reward) : expand(reward), noise);
  } catch (const InvalidMdp& e) {
    throw ConfigError(table.source(), table.line(), e.what());
  }
}

TabularMdp load_mdp_file(const std::string& path) {
  const ConfigDocument doc = parse_config_file(path);
  if (const auto* section = doc.section("mdp")) return mdp_from_table(*section);
  return mdp_from_table(doc.root());
}

std::string format_mdp(const TabularMdp& mdp) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const std::size_t steps = mdp.is_stationary() ? 1 : mdp.horizon();
  std::ostringstream out;
  out << "num_states = " << S << "\n"
      << "num_actions = " << A << "\n"
      << "horizon = " << mdp.horizon() << "\n"
      << "start_state = " << mdp.start_state() << "\n"
      << "noise = \"" << to_string(mdp.noise()) << "\"\n"
      << "transition = [\n";
  for (std::size_t h = 0; h < steps; ++h) {
    for (StateId s = 0; s < S; ++s) {
      for (ActionId a = 0; a < A; ++a) {
        out << "  [";
        const auto row = mdp.transition_row(h, s, a);
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? ", " : "") << format_double(row[k]);
        out << "],\n";
      }
    }
  }
  out << "]\nreward = [";
  bool first = true;
  for (std::size_t h = 0; h < steps; ++h) {
    for (StateId s = 0; s < S; ++s) {
      for (ActionId a = 0; a < A; ++a) {
        out << (first ? "" : ", ") << format_double(mdp.reward_mean(h, s, a));
        first = false;
      }
    }
  }
  out << "]\n";
  return out.str();
}

}  // namespace crrl
