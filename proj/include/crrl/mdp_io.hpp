#pragma once

#include <string>

#include "crrl/config.hpp"
#include "crrl/mdp.hpp"

namespace crrl {

/// Builds an MDP from a config table with keys num_states, num_actions,
/// horizon, start_state (default 0), noise ("deterministic" or "bernoulli"),
/// transition and reward.
///
/// `transition` is a list of probability rows ordered (s, a) for a stationary
/// MDP, or (h, s, a) with h outermost for a per-step one. `reward` is a flat
/// list of means in the same order (S*A or H*S*A entries).
TabularMdp mdp_from_table(const ConfigTable& table);

/// Loads a file holding the keys above at top level or inside an [mdp] section.
TabularMdp load_mdp_file(const std::string& path);

/// Inverse of load_mdp_file, writing the per-step form unless the MDP is stationary.
std::string format_mdp(const TabularMdp& mdp);

}  // namespace crrl
