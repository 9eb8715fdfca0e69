#pragma once

// Shared fixtures and reference oracles for the unit and acceptance tests.
// The oracles deliberately avoid the library's own recursions: values come
// from enumerating every trajectory, corruption from explicit loops.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "crrl/mdp.hpp"

namespace fixtures {

using crrl::ActionId;
using crrl::MdpShape;
using crrl::Policy;
using crrl::StateId;
using crrl::TabularMdp;

// Two states, two actions, H = 2. Action 0 stays, action 1 flips; rewards
// r(0,0) = 0.2, r(0,1) = 0.8, r(1,0) = 0.5, r(1,1) = 0.4.
inline TabularMdp m0(crrl::RewardNoise noise = crrl::RewardNoise::deterministic) {
  const std::vector<double> p{1, 0, 0, 1, 0, 1, 1, 0};
  const std::vector<double> r{0.2, 0.8, 0.5, 0.4};
  return TabularMdp::stationary(MdpShape{2, 2, 2, 0}, p, r, noise);
}

// Policy with table entries in (h, s) order.
inline Policy policy(std::size_t states, std::size_t horizon, std::vector<ActionId> table) {
  return Policy(states, horizon, std::move(table));
}

// On M0: flip at step 1, stay at step 2 (value 1.3).
inline Policy m0_flip_then_stay() { return policy(2, 2, {1, 0, 0, 0}); }

inline std::vector<double> random_row(std::mt19937_64& gen, std::size_t n, double sparsity = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> row(n);
  double sum = 0.0;
  for (auto& x : row) {
    x = u(gen) < sparsity ? 0.0 : u(gen);
    sum += x;
  }
  if (sum == 0.0) {
    row[std::uniform_int_distribution<std::size_t>(0, n - 1)(gen)] = 1.0;
    return row;
  }
  for (auto& x : row) x /= sum;
  return row;
}

// Random stationary MDP; shape drawn from the given ranges.
inline TabularMdp random_mdp(std::mt19937_64& gen, std::size_t max_states, std::size_t max_actions,
                             std::size_t max_horizon) {
  auto pick = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(1, hi)(gen); };
  const std::size_t S = pick(max_states), A = pick(max_actions), H = pick(max_horizon);
  const StateId s0 = static_cast<StateId>(std::uniform_int_distribution<std::size_t>(0, S - 1)(gen));
  std::vector<double> p, r;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < S * A; ++k) {
    const auto row = random_row(gen, S);
    p.insert(p.end(), row.begin(), row.end());
    r.push_back(u(gen));
  }
  return TabularMdp::stationary(MdpShape{S, A, H, s0}, p, r);
}

// A per-step MDP of the same shape: each row mixed with a random row by a
// weight in [0, eta], each reward mean moved by up to eta and clipped to [0, 1].
inline TabularMdp perturb(std::mt19937_64& gen, const TabularMdp& base, double eta) {
  const auto& sh = base.shape();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p, r;
  for (std::size_t h = 0; h < sh.horizon; ++h) {
    for (StateId s = 0; s < sh.num_states; ++s) {
      for (ActionId a = 0; a < sh.num_actions; ++a) {
        const auto row = base.transition_row(h, s, a);
        const auto noise = random_row(gen, sh.num_states);
        const double w = eta * u(gen);
        for (std::size_t k = 0; k < sh.num_states; ++k) p.push_back((1 - w) * row[k] + w * noise[k]);
        r.push_back(std::clamp(base.reward_mean(h, s, a) + eta * (2 * u(gen) - 1), 0.0, 1.0));
      }
    }
  }
  return TabularMdp(sh, p, r);
}

inline Policy random_policy(std::mt19937_64& gen, const MdpShape& sh) {
  std::uniform_int_distribution<ActionId> pick(0, static_cast<ActionId>(sh.num_actions - 1));
  std::vector<ActionId> table(sh.horizon * sh.num_states);
  for (auto& a : table) a = pick(gen);
  return Policy(sh.num_states, sh.horizon, table);
}

// Walks every state path of the policy, calling visit(h, s, probability) at
// each reachable node and leaf(probability, total reward) at the end.
inline void enumerate_paths(const TabularMdp& mdp, const Policy& pi,
                            const std::function<void(std::size_t, StateId, double)>& visit,
                            const std::function<void(double, double)>& leaf) {
  std::function<void(std::size_t, StateId, double, double)> walk = [&](std::size_t h, StateId s, double prob,
                                                                       double ret) {
    if (prob == 0.0) return;
    if (h == mdp.horizon()) {
      leaf(prob, ret);
      return;
    }
    visit(h, s, prob);
    const ActionId a = pi.action(h, s);
    const auto row = mdp.transition_row(h, s, a);
    for (StateId next = 0; next < mdp.num_states(); ++next) {
      walk(h + 1, next, prob * row[next], ret + mdp.reward_mean(h, s, a));
    }
  };
  walk(0, mdp.start_state(), 1.0, 0.0);
}

// Expected return as a probability-weighted sum over complete paths.
inline double path_value(const TabularMdp& mdp, const Policy& pi) {
  double v = 0.0;
  enumerate_paths(mdp, pi, [](std::size_t, StateId, double) {}, [&](double prob, double ret) { v += prob * ret; });
  return v;
}

// Occupancy q(h, s) by path enumeration, flattened h-major.
inline std::vector<double> path_occupancy(const TabularMdp& mdp, const Policy& pi) {
  std::vector<double> q(mdp.horizon() * mdp.num_states(), 0.0);
  enumerate_paths(
      mdp, pi, [&](std::size_t h, StateId s, double prob) { q[h * mdp.num_states() + s] += prob; },
      [](double, double) {});
  return q;
}

struct Magnitudes {
  double reward;
  double transition;
};

// Corruption magnitudes written out longhand: the start state alone at the
// first step, every (s, a) at later steps.
inline Magnitudes brute_magnitudes(const TabularMdp& nominal, const TabularMdp& corrupted) {
  Magnitudes out{0.0, 0.0};
  const std::size_t S = nominal.num_states(), A = nominal.num_actions();
  for (std::size_t h = 0; h < nominal.horizon(); ++h) {
    double worst_r = 0.0, worst_p = 0.0;
    for (StateId s = 0; s < S; ++s) {
      if (h == 0 && s != nominal.start_state()) continue;
      for (ActionId a = 0; a < A; ++a) {
        const double dr = std::fabs(corrupted.reward_mean(h, s, a) - nominal.reward_mean(0, s, a));
        double l1 = 0.0;
        for (StateId k = 0; k < S; ++k) {
          l1 += std::fabs(corrupted.transition_row(h, s, a)[k] - nominal.transition_row(0, s, a)[k]);
        }
        if (dr > worst_r) worst_r = dr;
        if (l1 > worst_p) worst_p = l1;
      }
    }
    out.reward += worst_r;
    out.transition += worst_p;
  }
  return out;
}

}  // namespace fixtures
