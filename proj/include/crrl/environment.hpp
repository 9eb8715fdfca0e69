#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "crrl/adversary.hpp"
#include "crrl/corruption.hpp"
#include "crrl/mdp.hpp"
#include "crrl/rng.hpp"

namespace crrl {

/// The learner's only handle on the world: play a policy for one episode.
class EpisodeSource {
 public:
  virtual ~EpisodeSource() = default;

  /// Plays one episode. Throws BudgetExhausted when no episodes remain; the
  /// source is then unchanged.
  virtual Trajectory run_episode(const Policy& policy) = 0;

  virtual std::uint64_t episodes_used() const = 0;
  virtual std::uint64_t episodes_remaining() const = 0;
  virtual const MdpShape& shape() const = 0;
};

/// Nominal MDP plus adversary, with a fixed episode budget. The corruption
/// ledger lives here and is reachable only through Environment, never
/// through EpisodeSource.
class Environment final : public EpisodeSource {
 public:
  using EpisodeObserver = std::function<void(std::uint64_t t, const TabularMdp& episode_mdp)>;

  Environment(TabularMdp nominal, std::unique_ptr<Adversary> adversary, std::uint64_t budget, Rng rng);

  Trajectory run_episode(const Policy& policy) override;
  std::uint64_t episodes_used() const override { return ledger_.size(); }
  std::uint64_t episodes_remaining() const override { return budget_ - ledger_.size(); }
  const MdpShape& shape() const override { return nominal_.shape(); }

  const TabularMdp& nominal() const noexcept { return nominal_; }
  const CorruptionLedger& ledger() const noexcept { return ledger_; }
  const Adversary& adversary() const noexcept { return *adversary_; }

  /// Sees every episode MDP as played (tests of the information barrier).
  void set_episode_observer(EpisodeObserver observer) { observer_ = std::move(observer); }

 private:
  Trajectory play_stepwise(const TabularMdp& base, const Policy& policy, std::uint64_t t,
                           std::optional<TabularMdp>& realized);

  TabularMdp nominal_;
  std::unique_ptr<Adversary> adversary_;
  std::uint64_t budget_;
  Rng rng_;
  CorruptionLedger ledger_;
  EpisodeObserver observer_;
};

}  // namespace crrl
