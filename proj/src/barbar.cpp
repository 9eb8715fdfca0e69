#include "crrl/barbar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "crrl/errors.hpp"
#include "crrl/estall.hpp"

namespace crrl {

Lambdas barbar_constants(std::size_t num_states, std::size_t num_actions, std::size_t horizon, double epsilon_est,
                         std::uint64_t T, double delta) {
  if (!(epsilon_est > 0.0)) throw DomainError("epsilon_est must be positive");
  if (T < 1) throw DomainError("T must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  const double sa = static_cast<double>(num_states) * static_cast<double>(num_actions);
  const double h2 = static_cast<double>(horizon) * static_cast<double>(horizon);
  return {6.0 * sa * std::log(h2 * sa / epsilon_est), 12.0 * std::log(8.0 * static_cast<double>(T) / delta)};
}

double finest_epsilon_est(std::uint64_t T) { return std::ldexp(1.0, -static_cast<int>(max_epochs(T))) / 128.0; }

RebucketResult rebucket(const std::vector<double>& estimates, const std::vector<double>& previous_gaps, unsigned m) {
  if (estimates.size() != previous_gaps.size() || estimates.empty()) {
    throw ShapeMismatch("rebucket needs one estimate and one previous gap per policy");
  }
  if (m < 1) throw DomainError("rebucket needs epoch m >= 1");
  RebucketResult out;
  out.r_star = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    out.r_star = std::max(out.r_star, estimates[k] - previous_gaps[k] / 16.0);
  }
  const double floor_gap = std::ldexp(1.0, -static_cast<int>(m));
  out.bucket.resize(estimates.size());
  out.gap.resize(estimates.size());
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    const double x = std::max(floor_gap, out.r_star - estimates[k]);
    // 2^-(m+1) < x always holds, so the infimum is at most m + 1 before clamping.
    std::int32_t j = 0;
    while (j <= static_cast<std::int32_t>(m) && !(std::ldexp(1.0, -j) < x)) ++j;
    j = std::min<std::int32_t>(j, static_cast<std::int32_t>(m));
    out.bucket[k] = j;
    out.gap[k] = std::ldexp(1.0, -j);
  }
  return out;
}

void GapTable::apply(const RebucketResult& result) {
  if (result.gap.size() != gap_.size()) throw ShapeMismatch("rebucket result size differs from gap table");
  gap_ = result.gap;
  for (std::size_t k = 0; k < gap_.size(); ++k) history_[k].push_back(result.bucket[k]);
}

std::map<std::int32_t, std::vector<PolicyId>> GapTable::buckets() const {
  std::map<std::int32_t, std::vector<PolicyId>> out;
  for (std::size_t k = 0; k < gap_.size(); ++k) {
    const std::int32_t j = history_[k].empty() ? 0 : history_[k].back();
    out[j].push_back(static_cast<PolicyId>(k));
  }
  return out;
}

EpochPlan plan_epoch(unsigned m, const std::map<std::int32_t, std::vector<PolicyId>>& buckets, const MdpShape& shape,
                     std::size_t num_policies, const MetaParams& params, const Lambdas& lambdas) {
  EpochPlan plan{m, {}, 0.0};
  const double T = static_cast<double>(params.episodes);
  for (const auto& [j, members] : buckets) {
    if (members.empty()) continue;
    BucketPlan b;
    b.j = j;
    b.members = members;
    b.epsilon_est = std::ldexp(1.0, -j) / 128.0;
    b.delta = static_cast<double>(members.size()) * params.delta / (5.0 * static_cast<double>(num_policies) * T);
    b.F = required_trajectories(shape.num_states, shape.num_actions, shape.horizon, members.size(), b.epsilon_est,
                                b.delta);
    b.F_est = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(params.scale_f * b.F)));
    b.n = 2.0 * lambdas.lambda1 * lambdas.lambda2 * params.scale_f * b.F;
    plan.length += b.n;
    plan.buckets.push_back(std::move(b));
  }
  return plan;
}

namespace {

class BarbarRun {
 public:
  BarbarRun(const PolicySet& policies, EpisodeSource& env, const MetaParams& params, std::uint64_t seed)
      : policies_(policies),
        env_(env),
        params_(params),
        seed_(seed),
        scheduler_(make_stream(seed, StreamRole::scheduler)),
        gaps_(policies.size()) {}

  MetaRunResult run() {
    const auto& shape = policies_.shape();
    const unsigned M = max_epochs(params_.episodes);
    const Lambdas lambdas = barbar_constants(shape.num_states, shape.num_actions, shape.horizon,
                                             finest_epsilon_est(params_.episodes), params_.episodes, params_.delta);
    for (unsigned m = 1; m <= M; ++m) {
      const EpochPlan plan = plan_epoch(m, gaps_.buckets(), shape, policies_.size(), params_, lambdas);
      EpochRecord record{m, 0, plan.length, {}, std::numeric_limits<double>::quiet_NaN(), false};
      for (const auto& b : plan.buckets) record.bucket_sizes.emplace_back(b.j, b.members.size());
      std::vector<double> estimates;
      const bool done = run_epoch(plan, record, estimates);
      if (!done) {
        result_.epochs.push_back(std::move(record));
        return std::move(result_);
      }
      const RebucketResult rb = rebucket(estimates, gaps_.gaps(), m);
      gaps_.apply(rb);
      record.r_star = rb.r_star;
      record.completed = true;
      result_.epochs.push_back(std::move(record));
      result_.epochs_completed = m;
      result_.last_estimates = std::move(estimates);
    }
    replay_best(M + 1);
    return std::move(result_);
  }

 private:
  bool time_left() const { return result_.episodes.size() < params_.episodes && env_.episodes_remaining() > 0; }

  void log(std::uint32_t epoch, std::uint32_t sub, std::int32_t bucket, const PlayedEpisode& played) {
    result_.episodes.push_back(EpisodeRecord{result_.episodes.size() + 1, epoch, sub, bucket, played.policy,
                                             played.observed_return});
  }

  // Runs sub-epochs until every EstAll finishes. Returns false if time ran out.
  bool run_epoch(const EpochPlan& plan, EpochRecord& record, std::vector<double>& estimates) {
    const std::uint64_t trials = static_cast<std::uint64_t>(std::ceil(plan.length));
    while (true) {
      if (!time_left()) return false;
      ++record.subepochs;
      std::vector<std::unique_ptr<EstAll>> subs;
      for (const auto& b : plan.buckets) {
        EstAllParams p{b.epsilon_est, b.delta, b.F_est, params_.tau, params_.scale_f};
        subs.push_back(std::make_unique<EstAll>(policies_, b.members, p,
                                                make_stream(seed_, StreamRole::estall, instances_++)));
      }
      // Activation counts per bucket, then a round-robin interleave so that
      // exactly one EstAll plays per episode.
      std::vector<std::uint64_t> remaining(plan.buckets.size());
      for (std::size_t k = 0; k < plan.buckets.size(); ++k) {
        const double q = std::min(1.0, plan.buckets[k].n / plan.length);
        std::binomial_distribution<std::uint64_t> draw(trials, q);
        remaining[k] = draw(scheduler_);
      }
      bool any = true;
      while (any) {
        any = false;
        for (std::size_t k = 0; k < subs.size(); ++k) {
          if (remaining[k] == 0) continue;
          if (!time_left()) return false;
          log(plan.m, record.subepochs, plan.buckets[k].j, subs[k]->play_one(env_));
          --remaining[k];
          any = true;
        }
      }
      const bool restart = std::any_of(subs.begin(), subs.end(), [](const auto& e) { return e->unfinished(); });
      if (restart) {
        ++result_.restarts;
        continue;
      }
      estimates.assign(policies_.size(), 0.0);
      for (const auto& e : subs) {
        const auto& est = e->estimates();
        for (std::size_t k = 0; k < est.size(); ++k) estimates[e->members()[k]] = est[k];
      }
      return true;
    }
  }

  void replay_best(std::uint32_t epoch) {
    const auto& est = result_.last_estimates;
    const auto best = static_cast<PolicyId>(std::max_element(est.begin(), est.end()) - est.begin());
    while (time_left()) {
      const Trajectory trajectory = env_.run_episode(policies_[best]);
      log(epoch, 0, -1, PlayedEpisode{best, trajectory.total_reward()});
    }
  }

  const PolicySet& policies_;
  EpisodeSource& env_;
  MetaParams params_;
  std::uint64_t seed_;
  Rng scheduler_;
  GapTable gaps_;
  std::uint64_t instances_ = 0;
  MetaRunResult result_;
};

}  // namespace

MetaRunResult run_barbar(const PolicySet& policies, EpisodeSource& env, const MetaParams& params, std::uint64_t seed) {
  check_meta_params(params);
  if (policies.size() == 0) throw DomainError("policy set is empty");
  if (!(policies.shape() == env.shape())) throw ShapeMismatch("policy set and environment shapes differ");
  return BarbarRun(policies, env, params, seed).run();
}

}  // namespace crrl
