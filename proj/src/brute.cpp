#include "crrl/brute.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "crrl/errors.hpp"
#include "crrl/estall.hpp"

namespace crrl {

ActiveSet plan_active_set(unsigned m, std::vector<PolicyId> ids, const MdpShape& shape, const MetaParams& params,
                          const Lambdas& lambdas) {
  ActiveSet a;
  a.m = m;
  a.ids = std::move(ids);
  a.delta = params.delta / (5.0 * static_cast<double>(params.episodes));
  a.epsilon = std::ldexp(1.0, -static_cast<int>(m));
  a.epsilon_sim = a.epsilon / 128.0;
  a.F = required_trajectories(shape.num_states, shape.num_actions, shape.horizon, a.ids.size(), a.epsilon_sim,
                              a.delta);
  a.F_est = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(params.scale_f * a.F)));
  a.length = 2.0 * lambdas.lambda1 * lambdas.lambda2 * params.scale_f * a.F;
  return a;
}

double elimination_threshold(const ActiveSet& active, const MdpShape& shape, std::size_t num_policies,
                             std::uint64_t T, double delta, const Lambdas& lambdas) {
  const double sa = static_cast<double>(shape.num_states) * static_cast<double>(shape.num_actions);
  const double h2 = static_cast<double>(shape.horizon) * static_cast<double>(shape.horizon);
  const double t = static_cast<double>(T);
  const double width = std::sqrt(sa * std::log(10.0 * t * static_cast<double>(num_policies) / delta) * t);
  return 8.0 * lambdas.lambda1 * lambdas.lambda2 * h2 * width / active.length + active.epsilon / 8.0;
}

std::vector<PolicyId> eliminate(const std::vector<double>& estimates, const std::vector<PolicyId>& active,
                                double threshold, std::vector<PolicyId>* eliminated) {
  if (active.empty()) throw DomainError("active set is empty");
  double best = -std::numeric_limits<double>::infinity();
  for (PolicyId id : active) best = std::max(best, estimates.at(id));
  std::vector<PolicyId> kept;
  for (PolicyId id : active) {
    if (best - estimates[id] <= threshold) {
      kept.push_back(id);
    } else if (eliminated) {
      eliminated->push_back(id);
    }
  }
  // The maximizer has deficit 0, so it always survives.
  if (kept.empty()) throw std::logic_error("elimination removed every policy");
  return kept;
}

MetaRunResult run_brute(const PolicySet& policies, EpisodeSource& env, const MetaParams& params, std::uint64_t seed) {
  check_meta_params(params);
  if (policies.size() == 0) throw DomainError("policy set is empty");
  if (!(policies.shape() == env.shape())) throw ShapeMismatch("policy set and environment shapes differ");

  const auto& shape = policies.shape();
  const unsigned M = max_epochs(params.episodes);
  const Lambdas lambdas = barbar_constants(shape.num_states, shape.num_actions, shape.horizon,
                                           finest_epsilon_est(params.episodes), params.episodes, params.delta);
  MetaRunResult result;
  std::uint64_t instances = 0;
  auto time_left = [&] { return result.episodes.size() < params.episodes && env.episodes_remaining() > 0; };
  auto log = [&](std::uint32_t epoch, std::uint32_t sub, std::int32_t bucket, PlayedEpisode played) {
    result.episodes.push_back(
        EpisodeRecord{result.episodes.size() + 1, epoch, sub, bucket, played.policy, played.observed_return});
  };

  std::vector<PolicyId> ids(policies.size());
  for (std::size_t k = 0; k < ids.size(); ++k) ids[k] = static_cast<PolicyId>(k);

  for (unsigned m = 1; m <= M; ++m) {
    const ActiveSet active = plan_active_set(m, ids, shape, params, lambdas);
    EpochRecord record{m, 0, active.length, {{0, active.ids.size()}}, std::numeric_limits<double>::quiet_NaN(), false};
    ActiveSetRecord set_record{m, active.ids.size(), {}};
    const auto length = static_cast<std::uint64_t>(std::ceil(active.length));
    std::vector<double> estimates;
    bool done = false;
    while (!done) {
      if (!time_left()) break;
      ++record.subepochs;
      EstAll sub(policies, active.ids, EstAllParams{active.epsilon_sim, active.delta, active.F_est, params.tau,
                                                    params.scale_f},
                 make_stream(seed, StreamRole::estall, instances++));
      for (std::uint64_t k = 0; k < length && time_left(); ++k) log(m, record.subepochs, 0, sub.play_one(env));
      if (sub.unfinished()) {
        if (!time_left()) break;
        ++result.restarts;
        continue;
      }
      estimates.assign(policies.size(), std::numeric_limits<double>::quiet_NaN());
      for (std::size_t k = 0; k < active.ids.size(); ++k) estimates[active.ids[k]] = sub.estimates()[k];
      done = true;
    }
    if (!done) {
      result.epochs.push_back(std::move(record));
      result.active_sets.push_back(std::move(set_record));
      return result;
    }
    const double threshold = elimination_threshold(active, shape, policies.size(), params.episodes, params.delta,
                                                   lambdas);
    double best = -std::numeric_limits<double>::infinity();
    for (PolicyId id : active.ids) best = std::max(best, estimates[id]);
    record.r_star = best;
    record.completed = true;
    ids = eliminate(estimates, active.ids, threshold, &set_record.eliminated);
    result.epochs.push_back(std::move(record));
    result.active_sets.push_back(std::move(set_record));
    result.epochs_completed = m;
    result.last_estimates = std::move(estimates);
  }

  // Replay the empirically best surviving policy.
  PolicyId best = ids.front();
  for (PolicyId id : ids) {
    if (result.last_estimates[id] > result.last_estimates[best]) best = id;
  }
  while (time_left()) {
    const Trajectory trajectory = env.run_episode(policies[best]);
    log(M + 1, 0, -1, PlayedEpisode{best, trajectory.total_reward()});
  }
  return result;
}

}  // namespace crrl
