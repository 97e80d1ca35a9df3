#pragma once

// Synchronous federated-learning simulation: broadcast the global model,
// let every client train locally (attackers on poisoned shards while their
// schedule is active), aggregate, evaluate on a held-out test split.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedrep/aggregators.hpp"
#include "fedrep/attacks.hpp"
#include "fedrep/datagen.hpp"
#include "fedrep/model.hpp"
#include "fedrep/rng.hpp"

namespace fedrep {

/// Fraction of rows whose argmax prediction equals the label.
inline double evaluate_accuracy(const ModelParams& params, const Dataset& test) {
  require(!test.empty(), "accuracy: empty test set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) correct += predict(params, test.row(i)) == test.labels[i];
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

/// Label flip: share of true-source rows predicted as the target.
/// Backdoor: share of non-target rows predicted as the target once the
/// trigger is written into them.
inline double attack_success_rate(const ModelParams& params, const Dataset& test, const AttackConfig& attack) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const bool eligible =
        attack.type == AttackType::kLabelFlip ? test.labels[i] == attack.source : test.labels[i] != attack.target;
    if (eligible) rows.push_back(i);
  }
  require(!rows.empty(), "attack success rate: no attacked samples in the test set");
  Dataset attacked = test.subset(rows);
  if (attack.type == AttackType::kBackdoor) {
    require(!attack.trigger.empty(), "attack success rate: backdoor without a trigger");
    attacked = apply_trigger(attacked, attack.trigger);
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < attacked.size(); ++i) hits += predict(params, attacked.row(i)) == attack.target;
  return static_cast<double>(hits) / static_cast<double>(attacked.size());
}

struct SimConfig {
  std::size_t clients = 10;
  std::size_t rounds = 100;
  AggregatorKind aggregator = ReputationRule{};
  TrainConfig train;
  std::vector<std::size_t> hidden{64, 32};
  DataSpec data;
  std::optional<std::filesystem::path> csv;
  double iota = 0.9;
  double test_fraction = 0.2;
  AttackConfig attack;
  /// Explicit attacker ids; when absent, ⌈p·M⌉ clients are drawn by seed.
  std::optional<std::vector<std::size_t>> attacker_ids;
  std::size_t trigger_size = 10;
  std::optional<double> trigger_value;
  std::uint64_t seed = 1;

  void validate() const {
    require(clients >= 1, "sim: at least one client required");
    require(rounds >= 1, "sim: at least one round required");
    require(test_fraction > 0.0 && test_fraction < 1.0, "sim: test fraction must lie in (0, 1)");
    require(iota > 0.0, "sim: iota must be positive");
    train.validate();
    if (!std::holds_alternative<FedAvgRule>(aggregator) && !std::holds_alternative<MedianRule>(aggregator))
      require(clients >= 3, "sim: robust aggregators need at least three clients");
    if (const auto* tm = std::get_if<TrimmedMeanRule>(&aggregator))
      require(2 * tm->beta < clients, "sim: trimmed mean needs 2*beta < clients");
    if (const auto* r = std::get_if<ReputationRule>(&aggregator)) {
      r->robust.validate();
      r->reputation.validate();
    }
    if (const auto* r = std::get_if<ResidualRule>(&aggregator)) r->robust.validate();
    if (attacker_ids) {
      for (auto id : *attacker_ids) require(id < clients, "sim: attacker id " + std::to_string(id) + " out of range");
    }
  }
};

struct RoundReport {
  std::size_t round = 0;
  double accuracy = 0.0;
  double attack_success = 0.0;
  double loss = 0.0;
  bool attack_active = false;
  std::vector<ClientRoundSummary> clients;  // reputation aggregator only

  friend bool operator==(const RoundReport&, const RoundReport&) = default;
};

/// Owns the data, the client population and the running global model.
class Simulation {
 public:
  explicit Simulation(SimConfig config) : config_(std::move(config)) {
    config_.validate();
    const Dataset all = config_.csv ? load_csv(*config_.csv) : synth_dataset(config_.data);
    auto split = stratified_split(all, config_.test_fraction, derive_seed(config_.seed, Stream::kSplit));
    train_ = std::move(split.train);
    test_ = std::move(split.test);

    partition_ = dirichlet_partition(train_, config_.clients, config_.iota, derive_seed(config_.seed, Stream::kPartition));
    for (std::size_t i = 0; i < partition_.shards.size(); ++i)
      require(!partition_.shards[i].empty(),
              "sim: client " + std::to_string(i) + " received no training samples; change the seed, iota or data size");

    arch_ = Architecture{train_.num_features, config_.hidden, train_.num_classes};

    auto& attack = config_.attack;
    if (attack.type == AttackType::kBackdoor && attack.trigger.empty())
      attack.trigger = default_trigger(train_, std::min(config_.trigger_size, train_.num_features),
                                       config_.trigger_value);
    attack.validate(train_.num_classes, train_.num_features);
    attackers_ = config_.attacker_ids
                     ? *config_.attacker_ids
                     : select_attackers(config_.clients, attack.fraction, derive_seed(config_.seed, Stream::kAttackers));
    std::ranges::sort(attackers_);
    attackers_.erase(std::unique(attackers_.begin(), attackers_.end()), attackers_.end());

    schedules_.assign(config_.clients, Schedule{schedule::Never{}});
    poisoned_.resize(config_.clients);
    for (std::size_t k = 0; k < attackers_.size(); ++k) {
      const auto id = attackers_[k];
      schedules_[id] = shift_schedule(attack.schedule, k * attack.stagger);
      const auto seed = derive_seed(config_.seed, Stream::kPoison, id);
      const auto& shard = partition_.shards[id];
      poisoned_[id] = attack.type == AttackType::kLabelFlip
                          ? flip_labels(shard, attack.source, attack.target, attack.flip_rate, seed)
                          : implant_backdoor(shard, attack.trigger, attack.target, attack.poison_rate, seed);
    }

    global_ = init_params(arch_, derive_seed(config_.seed, Stream::kInit));
    aggregator_.emplace(config_.aggregator, config_.clients);
  }

  const SimConfig& config() const noexcept { return config_; }
  const Architecture& architecture() const noexcept { return arch_; }
  const Dataset& train_set() const noexcept { return train_; }
  const Dataset& test_set() const noexcept { return test_; }
  const ClientPartition& partition() const noexcept { return partition_; }
  const ModelParams& global() const noexcept { return global_; }
  std::span<const std::size_t> attackers() const noexcept { return attackers_; }
  const AttackConfig& attack() const noexcept { return config_.attack; }
  std::size_t completed_rounds() const noexcept { return completed_; }

  bool is_attacker(std::size_t client) const { return std::ranges::binary_search(attackers_, client); }

  bool attacker_active(std::size_t client, std::size_t t) const {
    return is_attacker(client) && schedule_active(schedules_[client], t);
  }

  /// Client i's locally trained parameters for round t, starting from the
  /// current global model.
  ModelParams train_client(std::size_t i, std::size_t t) const {
    const bool active = attacker_active(i, t);
    TrainConfig cfg = config_.train;
    cfg.seed = derive_seed(config_.seed, Stream::kTrain, t, i);
    if (active) cfg.local_epochs += config_.attack.extra_epochs;
    return local_train(global_, active ? poisoned_[i] : partition_.shards[i], cfg);
  }

  /// Runs round completed_rounds() + 1.
  RoundReport run_round() {
    const std::size_t t = completed_ + 1;
    require(t <= config_.rounds, "sim: all rounds already completed");
    const std::size_t m = config_.clients;
    UpdateMatrix updates(m, global_.size());
    RoundReport report;
    report.round = t;
    for (std::size_t i = 0; i < m; ++i) {
      updates.set_row(i, train_client(i, t).flatten());
      updates.sample_counts[i] = partition_.shards[i].size();
      report.attack_active = report.attack_active || attacker_active(i, t);
    }
    const auto next = aggregator_->aggregate(updates, t, report.clients);
    global_.assign(next);
    completed_ = t;

    report.accuracy = evaluate_accuracy(global_, test_);
    report.attack_success = attack_success_rate(global_, test_, config_.attack);
    report.loss = mean_loss(global_, train_);
    return report;
  }

 private:
  SimConfig config_;
  Dataset train_;
  Dataset test_;
  ClientPartition partition_;
  Architecture arch_;
  std::vector<std::size_t> attackers_;
  std::vector<Schedule> schedules_;
  std::vector<Dataset> poisoned_;
  ModelParams global_;
  std::optional<Aggregator> aggregator_;
  std::size_t completed_ = 0;
};

/// Runs all configured rounds; `on_round` sees each report as it is produced.
inline std::vector<RoundReport> run_experiment(Simulation& sim,
                                               const std::function<void(const RoundReport&)>& on_round = {}) {
  std::vector<RoundReport> reports;
  reports.reserve(sim.config().rounds);
  while (sim.completed_rounds() < sim.config().rounds) {
    reports.push_back(sim.run_round());
    if (on_round) on_round(reports.back());
  }
  return reports;
}

inline std::vector<RoundReport> run_experiment(const SimConfig& config,
                                               const std::function<void(const RoundReport&)>& on_round = {}) {
  Simulation sim(config);
  return run_experiment(sim, on_round);
}

}  // namespace fedrep
