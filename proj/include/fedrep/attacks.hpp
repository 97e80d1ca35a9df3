#pragma once

// Data-poisoning attacks and their activation schedules.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fedrep/dataset.hpp"
#include "fedrep/error.hpp"
#include "fedrep/rng.hpp"

namespace fedrep {

namespace schedule {
struct Never {};
struct Always {};
struct Once {
  std::size_t start = 1;
};
struct From {
  std::size_t start = 1;
};
struct Every {
  std::size_t start = 1;
  std::size_t period = 1;
};
}  // namespace schedule

using Schedule = std::variant<schedule::Never, schedule::Always, schedule::Once, schedule::From, schedule::Every>;

inline bool schedule_active(const Schedule& s, std::size_t t) {
  require(t >= 1, "schedule: rounds are 1-based");
  struct Visitor {
    std::size_t t;
    bool operator()(const schedule::Never&) const { return false; }
    bool operator()(const schedule::Always&) const { return true; }
    bool operator()(const schedule::Once& o) const { return t == o.start; }
    bool operator()(const schedule::From& f) const { return t >= f.start; }
    bool operator()(const schedule::Every& e) const { return t >= e.start && (t - e.start) % e.period == 0; }
  };
  return std::visit(Visitor{t}, s);
}

/// Same schedule with its start moved `offset` rounds later.
inline Schedule shift_schedule(const Schedule& s, std::size_t offset) {
  struct Visitor {
    std::size_t d;
    Schedule operator()(const schedule::Never& v) const { return v; }
    Schedule operator()(const schedule::Always& v) const { return v; }
    Schedule operator()(const schedule::Once& v) const { return schedule::Once{v.start + d}; }
    Schedule operator()(const schedule::From& v) const { return schedule::From{v.start + d}; }
    Schedule operator()(const schedule::Every& v) const { return schedule::Every{v.start + d, v.period}; }
  };
  return std::visit(Visitor{offset}, s);
}

/// Textual forms: never | always | once:T | from:T | every:T:P
inline std::string format_schedule(const Schedule& s) {
  struct Visitor {
    std::string operator()(const schedule::Never&) const { return "never"; }
    std::string operator()(const schedule::Always&) const { return "always"; }
    std::string operator()(const schedule::Once& v) const { return "once:" + std::to_string(v.start); }
    std::string operator()(const schedule::From& v) const { return "from:" + std::to_string(v.start); }
    std::string operator()(const schedule::Every& v) const {
      return "every:" + std::to_string(v.start) + ":" + std::to_string(v.period);
    }
  };
  return std::visit(Visitor{}, s);
}

inline Schedule parse_schedule(const std::string& text) {
  auto number = [&](const std::string& part) -> std::size_t {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(part, &pos);
    } catch (const std::exception&) {
      fail("schedule: bad number '" + part + "' in '" + text + "'");
    }
    require(pos == part.size() && v >= 1, "schedule: rounds must be positive integers in '" + text + "'");
    return static_cast<std::size_t>(v);
  };
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  const auto& head = parts[0];
  if (head == "never" && parts.size() == 1) return schedule::Never{};
  if (head == "always" && parts.size() == 1) return schedule::Always{};
  if (head == "once" && parts.size() == 2) return schedule::Once{number(parts[1])};
  if (head == "from" && parts.size() == 2) return schedule::From{number(parts[1])};
  if (head == "every" && parts.size() == 3) return schedule::Every{number(parts[1]), number(parts[2])};
  fail("schedule: unrecognized '" + text + "' (never|always|once:T|from:T|every:T:P)");
}

enum class AttackType { kLabelFlip, kBackdoor };

inline std::string attack_type_name(AttackType t) { return t == AttackType::kLabelFlip ? "label_flip" : "backdoor"; }

struct TriggerEntry {
  std::size_t feature = 0;
  double value = 0.0;

  friend bool operator==(const TriggerEntry&, const TriggerEntry&) = default;
};

struct AttackConfig {
  AttackType type = AttackType::kLabelFlip;
  std::size_t source = 0;  // label flip only
  std::size_t target = 1;
  double flip_rate = 1.0;
  double poison_rate = 0.5;  // backdoor only
  std::vector<TriggerEntry> trigger;
  double fraction = 0.0;  // p, share of clients that attack
  std::size_t extra_epochs = 5;
  Schedule schedule = schedule::Always{};
  std::size_t stagger = 0;  // attacker k starts k·stagger rounds later

  void validate(std::size_t classes, std::size_t features) const {
    require(fraction >= 0.0 && fraction <= 0.5, "attack: attacker fraction must lie in [0, 0.5]");
    require(flip_rate >= 0.0 && flip_rate <= 1.0, "attack: flip rate must lie in [0, 1]");
    require(poison_rate >= 0.0 && poison_rate <= 1.0, "attack: poison rate must lie in [0, 1]");
    require(target < classes, "attack: target class out of range");
    if (type == AttackType::kLabelFlip) {
      require(source < classes, "attack: source class out of range");
      require(source != target, "attack: source and target classes must differ");
    } else {
      for (const auto& e : trigger) require(e.feature < features, "attack: trigger index out of range");
    }
  }
};

/// Relabels exactly round(rate·|source rows|) seeded-chosen source rows as target.
inline Dataset flip_labels(const Dataset& data, std::size_t source, std::size_t target, double rate,
                           std::uint64_t seed) {
  require(source != target, "flip_labels: source and target must differ");
  require(source < data.num_classes && target < data.num_classes, "flip_labels: class out of range");
  require(rate >= 0.0 && rate <= 1.0, "flip_labels: rate must lie in [0, 1]");
  Dataset out = data;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.labels[i] == source) rows.push_back(i);
  const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(rows.size())));
  Rng rng(seed);
  shuffle(std::span<std::size_t>(rows), rng);
  for (std::size_t k = 0; k < count; ++k) out.labels[rows[k]] = target;
  return out;
}

/// Writes the trigger into round(rate·|data|) seeded-chosen rows and sets
/// their label to target.
inline Dataset implant_backdoor(const Dataset& data, std::span<const TriggerEntry> trigger, std::size_t target,
                                double rate, std::uint64_t seed) {
  require(!trigger.empty(), "implant_backdoor: empty trigger");
  require(target < data.num_classes, "implant_backdoor: target class out of range");
  require(rate >= 0.0 && rate <= 1.0, "implant_backdoor: rate must lie in [0, 1]");
  for (const auto& e : trigger)
    require(e.feature < data.num_features, "implant_backdoor: trigger index " + std::to_string(e.feature) +
                                               " >= feature count " + std::to_string(data.num_features));
  Dataset out = data;
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(rows.size())));
  Rng rng(seed);
  shuffle(std::span<std::size_t>(rows), rng);
  for (std::size_t k = 0; k < count; ++k) {
    auto x = out.row(rows[k]);
    for (const auto& e : trigger) x[e.feature] = e.value;
    out.labels[rows[k]] = target;
  }
  return out;
}

/// Writes the trigger into every row without touching labels.
inline Dataset apply_trigger(const Dataset& data, std::span<const TriggerEntry> trigger) {
  Dataset out = data;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto x = out.row(i);
    for (const auto& e : trigger) x[e.feature] = e.value;
  }
  return out;
}

/// The 99th-percentile feature value over all cells of `data`.
inline double percentile99(const Dataset& data) {
  require(!data.features.empty(), "percentile: empty dataset");
  std::vector<double> cells = data.features;
  const auto k = static_cast<std::size_t>(std::floor(0.99 * static_cast<double>(cells.size() - 1)));
  std::nth_element(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(k), cells.end());
  return cells[k];
}

/// `size` trailing feature coordinates set to `value` (or the training
/// set's 99th-percentile cell value when absent).
inline std::vector<TriggerEntry> default_trigger(const Dataset& train, std::size_t size,
                                                 std::optional<double> value = std::nullopt) {
  require(size >= 1 && size <= train.num_features, "trigger: size must lie in [1, features]");
  const double v = value ? *value : percentile99(train);
  std::vector<TriggerEntry> trigger;
  for (std::size_t f = train.num_features - size; f < train.num_features; ++f) trigger.push_back({f, v});
  return trigger;
}

/// The first ⌈p·M⌉ ids of a seeded shuffle of 0..M−1, returned sorted.
inline std::vector<std::size_t> select_attackers(std::size_t clients, double fraction, std::uint64_t seed) {
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(clients) - 1e-9));
  std::vector<std::size_t> ids(clients);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span<std::size_t>(ids), rng);
  ids.resize(std::min(count, clients));
  std::ranges::sort(ids);
  return ids;
}

}  // namespace fedrep
