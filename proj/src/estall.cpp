#include "crrl/estall.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "crrl/errors.hpp"

namespace crrl {

SampleBuffer::SampleBuffer(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      data_(num_states * num_actions),
      cursor_(num_states * num_actions, 0) {}

void SampleBuffer::append(StateId s, ActionId a, Sample sample) { data_.at(index(s, a)).push_back(sample); }

void SampleBuffer::append(const Trajectory& trajectory) {
  const auto& steps = trajectory.steps;
  for (std::size_t h = 0; h < steps.size(); ++h) {
    const StateId next = h + 1 < steps.size() ? steps[h + 1].state : trajectory.terminal_state;
    append(steps[h].state, steps[h].action, Sample{steps[h].reward, next});
  }
}

std::size_t SampleBuffer::total_size() const noexcept {
  std::size_t n = 0;
  for (const auto& d : data_) n += d.size();
  return n;
}

void SampleBuffer::rewind() { std::fill(cursor_.begin(), cursor_.end(), 0); }

const Sample* SampleBuffer::take(StateId s, ActionId a) {
  const std::size_t k = index(s, a);
  if (cursor_[k] == data_[k].size()) return nullptr;
  return &data_[k][cursor_[k]++];
}

double SimOutcome::value() const noexcept {
  if (failed()) return 0.0;
  double total = 0.0;
  for (const auto& step : steps) total += step.reward;
  return total;
}

namespace {

// Layer-major replay shared by simulate and simulate_summary. `on_step` sees
// (i, step), `on_fail` sees the marker.
template <class OnStep, class OnFail>
void replay(const Policy& policy, SampleBuffer& buffers, std::size_t F, StateId start, std::vector<double>& values,
            OnStep on_step, OnFail on_fail) {
  buffers.rewind();
  std::vector<StateId> state(F, start);
  std::vector<char> failed(F, 0);
  values.assign(F, 0.0);
  for (std::size_t h = 0; h < policy.horizon(); ++h) {
    for (std::size_t i = 0; i < F; ++i) {
      if (failed[i]) continue;
      const StateId s = state[i];
      const ActionId a = policy.action(h, s);
      const Sample* sample = buffers.take(s, a);
      if (sample == nullptr) {
        failed[i] = 1;
        on_fail(FailMarker{h, s, a, i});
        continue;
      }
      on_step(i, Step{s, a, sample->reward});
      values[i] += sample->reward;
      state[i] = sample->next_state;
    }
  }
  for (std::size_t i = 0; i < F; ++i) {
    if (failed[i]) values[i] = 0.0;
  }
}

}  // namespace

std::vector<SimOutcome> simulate(const Policy& policy, SampleBuffer& buffers, std::size_t F, StateId start_state) {
  std::vector<SimOutcome> out(F);
  std::vector<double> values;
  replay(
      policy, buffers, F, start_state, values, [&](std::size_t i, const Step& step) { out[i].steps.push_back(step); },
      [&](const FailMarker& marker) { out[marker.index].fail = marker; });
  return out;
}

SimSummary simulate_summary(const Policy& policy, SampleBuffer& buffers, std::size_t F, StateId start_state) {
  SimSummary out;
  out.fail_counts.assign(buffers.num_states() * buffers.num_actions(), 0);
  std::vector<double> values;
  replay(
      policy, buffers, F, start_state, values, [](std::size_t, const Step&) {},
      [&](const FailMarker& marker) {
        ++out.fail_counts[marker.s * buffers.num_actions() + marker.a];
        ++out.failures;
      });
  out.value_sum = std::accumulate(values.begin(), values.end(), 0.0);
  return out;
}

RolloutCursor::RolloutCursor(PolicyId policy, std::uint64_t F, std::uint64_t tau, Rng& rng, bool keep_trajectories)
    : policy_(policy), total_(F * tau), keep_trajectories_(keep_trajectories) {
  if (F == 0 || tau == 0) throw DomainError("rollout needs F >= 1 and tau >= 1");
  std::vector<std::uint64_t> order(total_);
  std::iota(order.begin(), order.end(), std::uint64_t{0});
  for (std::uint64_t k = 0; k < F; ++k) {
    const std::uint64_t j = k + rng.uniform_index(total_ - k);
    std::swap(order[k], order[j]);
  }
  keep_.assign(total_, false);
  for (std::uint64_t k = 0; k < F; ++k) keep_[order[k]] = true;
}

Trajectory RolloutCursor::play_one(const Policy& policy, EpisodeSource& env, SampleBuffer& buffers) {
  if (done()) throw std::logic_error("rollout already complete");
  Trajectory trajectory = env.run_episode(policy);
  buffers.append(trajectory);
  if (keep_[played_]) {
    kept_sum_ += trajectory.total_reward();
    if (keep_trajectories_) kept_.push_back(trajectory);
  }
  ++played_;
  return trajectory;
}

std::vector<Trajectory> rollout(const Policy& policy, std::uint64_t tau, SampleBuffer& buffers, std::uint64_t F,
                                EpisodeSource& env, Rng& rng) {
  RolloutCursor cursor(0, F, tau, rng, true);
  while (!cursor.done()) cursor.play_one(policy, env, buffers);
  return cursor.kept();
}

std::uint64_t interaction_budget(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                                 std::uint64_t F, std::uint64_t tau, double epsilon) {
  const double sa = static_cast<double>(num_states) * static_cast<double>(num_actions);
  const double ceiling = static_cast<double>(horizon) * static_cast<double>(horizon) * sa;
  if (!(epsilon > 0.0) || !(epsilon < ceiling)) {
    throw DomainError("interaction budget needs 0 < epsilon < H^2 S A, got " + std::to_string(epsilon));
  }
  const long double value = static_cast<long double>(sa) * static_cast<long double>(F) *
                            static_cast<long double>(tau) * std::log(static_cast<long double>(ceiling) / epsilon);
  return static_cast<std::uint64_t>(std::ceil(value));
}

double required_trajectories(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                             std::size_t num_policies, double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (num_policies == 0) throw DomainError("policy set is empty");
  const double S = static_cast<double>(num_states);
  const double A = static_cast<double>(num_actions);
  const double H = static_cast<double>(horizon);
  return 8.0 * S * S * std::pow(H, 4) * A * A * std::log(2.0 * static_cast<double>(num_policies) / delta) /
         (epsilon * epsilon);
}

std::uint64_t scaled_trajectories(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                                  std::size_t num_policies, double epsilon, double delta, double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw DomainError("scale factor must lie in (0, 1]");
  const double f = scale * required_trajectories(num_states, num_actions, horizon, num_policies, epsilon, delta);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(f)));
}

const char* to_string(EstAllTraceEvent::Kind kind) {
  switch (kind) {
    case EstAllTraceEvent::Kind::simulated: return "simulated";
    case EstAllTraceEvent::Kind::rollout_started: return "rollout_started";
    case EstAllTraceEvent::Kind::rollout_finished: return "rollout_finished";
    case EstAllTraceEvent::Kind::finished: return "finished";
  }
  return "?";
}

EstAll::EstAll(const PolicySet& policies, std::vector<PolicyId> members, EstAllParams params, Rng rng,
               std::optional<SampleBuffer> initial, bool trace)
    : policies_(&policies), members_(std::move(members)), params_(params), rng_(rng), tracing_(trace) {
  const auto& shape = policies.shape();
  if (members_.empty()) throw DomainError("EstAll needs at least one policy");
  for (PolicyId id : members_) {
    if (id >= policies.size()) throw DomainError("policy id " + std::to_string(id) + " out of range");
  }
  if (params_.tau < 6) throw DomainError("tau must be at least 6");
  if (params_.trajectories == 0) throw DomainError("F_est must be at least 1");
  const double required = required_trajectories(shape.num_states, shape.num_actions, shape.horizon, members_.size(),
                                                params_.epsilon, params_.delta);
  if (!(params_.scale > 0.0 && params_.scale <= 1.0)) throw DomainError("scale factor must lie in (0, 1]");
  if (static_cast<double>(params_.trajectories) < params_.scale * required * (1.0 - 1e-12)) {
    throw DomainError("F_est = " + std::to_string(params_.trajectories) + " is below the required " +
                      std::to_string(params_.scale * required));
  }
  const double sah =
      static_cast<double>(shape.num_states) * static_cast<double>(shape.num_actions) * static_cast<double>(shape.horizon);
  threshold_ = static_cast<double>(params_.tau) * params_.epsilon * static_cast<double>(params_.trajectories) / sah;
  budget_ = crrl::interaction_budget(shape.num_states, shape.num_actions, shape.horizon, params_.trajectories,
                                     params_.tau, params_.epsilon);
  if (initial) {
    if (initial->num_states() != shape.num_states || initial->num_actions() != shape.num_actions) {
      throw ShapeMismatch("initial buffers do not match the policy set's shape");
    }
    buffers_ = std::move(*initial);
  } else {
    buffers_ = SampleBuffer(shape.num_states, shape.num_actions);
  }
  estimates_.assign(members_.size(), 0.0);
  max_fail_.assign(members_.size(), 0);
  advance();
}

void EstAll::emit(EstAllTraceEvent::Kind kind, PolicyId id, std::uint64_t fails, StateId s, ActionId a) {
  if (tracing_) trace_.push_back(EstAllTraceEvent{kind, next_, id, fails, s, a, episodes_});
}

// Simulates members in order until one trips the fail threshold or all are done.
void EstAll::advance() {
  const auto& shape = policies_->shape();
  const std::size_t F = params_.trajectories;
  while (!pending_ && next_ < members_.size()) {
    const PolicyId id = members_[next_];
    const Policy& policy = (*policies_)[id];
    const SimSummary sim = simulate_summary(policy, buffers_, F, shape.start_state);
    const auto worst = std::max_element(sim.fail_counts.begin(), sim.fail_counts.end());
    const std::uint64_t fails = *worst;
    const auto k = static_cast<std::size_t>(worst - sim.fail_counts.begin());
    const auto s = static_cast<StateId>(k / shape.num_actions);
    const auto a = static_cast<ActionId>(k % shape.num_actions);
    max_fail_[next_] = fails;
    if (static_cast<double>(fails) >= threshold_) {
      pending_.emplace(id, params_.trajectories, params_.tau, rng_);
      exploration_.push_back(id);
      emit(EstAllTraceEvent::Kind::rollout_started, id, fails, s, a);
      return;
    }
    estimates_[next_] = sim.value_sum / static_cast<double>(F);
    emit(EstAllTraceEvent::Kind::simulated, id, fails, s, a);
    ++next_;
  }
  if (!pending_ && next_ == members_.size() && !finished_) {
    finished_ = true;
    emit(EstAllTraceEvent::Kind::finished, members_.back(), 0, 0, 0);
  }
}

PlayedEpisode EstAll::play_one(EpisodeSource& env) {
  if (pending_) {
    const PolicyId id = pending_->policy();
    const Trajectory trajectory = pending_->play_one((*policies_)[id], env, buffers_);
    ++episodes_;
    ++rollout_episodes_;
    if (pending_->done()) {
      estimates_[next_] = pending_->kept_value_sum() / static_cast<double>(params_.trajectories);
      emit(EstAllTraceEvent::Kind::rollout_finished, id, max_fail_[next_], 0, 0);
      pending_.reset();
      ++next_;
      advance();
    }
    return {id, trajectory.total_reward()};
  }
  const PolicyId id = members_[rng_.uniform_index(members_.size())];
  const Trajectory trajectory = env.run_episode((*policies_)[id]);
  ++episodes_;
  return {id, trajectory.total_reward()};
}

EstAllStatus EstAll::step(EpisodeSource& env) {
  play_one(env);
  return status();
}

const std::vector<double>& EstAll::estimates() const {
  if (!finished_) throw std::logic_error("EstAll estimates requested before it finished");
  return estimates_;
}

double EstAll::estimate(PolicyId id) const {
  const auto& est = estimates();
  const auto it = std::find(members_.begin(), members_.end(), id);
  if (it == members_.end()) throw DomainError("policy " + std::to_string(id) + " is not a member");
  return est[static_cast<std::size_t>(it - members_.begin())];
}

std::optional<PolicyId> EstAll::awaiting() const {
  if (pending_) return pending_->policy();
  return std::nullopt;
}

}  // namespace crrl
