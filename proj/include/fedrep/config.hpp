#pragma once

// `section.key = value` configuration files. Every key has a default, so an
// empty file resolves to the full default experiment.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fedrep/attacks.hpp"
#include "fedrep/error.hpp"
#include "fedrep/simulator.hpp"
#include "fedrep/theory.hpp"

namespace fedrep {

/// Every recognized key with its default value, in canonical order.
inline const std::vector<std::pair<std::string, std::string>>& config_defaults() {
  static const std::vector<std::pair<std::string, std::string>> defaults = {
      {"sim.clients", "10"},
      {"sim.rounds", "100"},
      {"sim.aggregator", "reputation"},
      {"sim.trim_beta", "1"},
      {"sim.seed", "1"},
      {"sim.test_fraction", "0.2"},
      {"sim.iota", "0.9"},
      {"train.lr", "0.01"},
      {"train.batch_size", "64"},
      {"train.local_epochs", "10"},
      {"train.hidden", "64,32"},
      {"robust.range", "2"},
      {"robust.delta", "0.1"},
      {"robust.lambda", "2"},
      {"robust.residual_epsilon", "1e-12"},
      {"robust.max_rescale_iterations", "100"},
      {"reputation.kappa", "0.3"},
      {"reputation.prior", "0.5"},
      {"reputation.prior_weight", "2"},
      {"reputation.decay", "0.5"},
      {"reputation.window", "10"},
      {"attack.kind", "label_flip"},
      {"attack.fraction", "0"},
      {"attack.clients", "auto"},
      {"attack.source", "0"},
      {"attack.target", "1"},
      {"attack.flip_rate", "1"},
      {"attack.poison_rate", "0.5"},
      {"attack.trigger_size", "10"},
      {"attack.trigger_value", "auto"},
      {"attack.extra_epochs", "5"},
      {"attack.schedule", "always"},
      {"attack.stagger", "0"},
      {"data.classes", "2"},
      {"data.features", "100"},
      {"data.samples_per_class", "500"},
      {"data.separation", "6"},
      {"data.noise", "1"},
      {"data.seed", "1"},
      {"data.csv", ""},
      {"theory.lipschitz", "1"},
      {"theory.strong_convexity", "1"},
      {"theory.grad_bound", "1"},
      {"theory.variance_bound", "1"},
      {"theory.residual_sup", "1"},
      {"theory.radius", "1"},
      {"theory.quantile", "1"},
      {"theory.initial_distance", "1000"},
      {"theory.max_samples", "100"},
      {"theory.params", "auto"},
      {"theory.dimension", "auto"},
  };
  return defaults;
}

/// Fully resolved configuration.
struct ResolvedConfig {
  SimConfig sim;
  std::string aggregator_name;
  std::size_t trim_beta = 1;
  RobustConfig robust;
  ReputationConfig reputation;
  theory::TheoryInputs theory;
  /// Final textual value of every key (defaults included), canonical order.
  std::vector<std::pair<std::string, std::string>> values;
};

namespace detail {

struct RawEntry {
  std::string value;
  std::size_t line = 0;  // 0 = default
};

class Resolver {
 public:
  explicit Resolver(std::map<std::string, RawEntry> raw) : raw_(std::move(raw)) {}

  const std::string& text(const std::string& key) const { return raw_.at(key).value; }

  [[noreturn]] void error(const std::string& key, const std::string& what) const {
    const auto line = raw_.at(key).line;
    fail("config: key '" + key + "'" + (line ? " (line " + std::to_string(line) + ")" : std::string(" (default)")) +
         ": " + what);
  }

  double real(const std::string& key) const {
    const auto& s = text(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
      error(key, "expected a number, got '" + s + "'");
    return v;
  }

  std::uint64_t integer(const std::string& key) const {
    const auto& s = text(key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
      error(key, "expected a non-negative integer, got '" + s + "'");
    return v;
  }

  std::vector<std::size_t> integer_list(const std::string& key) const {
    const auto& s = text(key);
    std::vector<std::size_t> out;
    if (s.empty() || s == "none") return out;
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto comma = s.find(',', start);
      const auto item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      std::size_t v = 0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size())
        error(key, "expected a comma-separated list of integers, got '" + s + "'");
      out.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  template <typename Fn>
  void check(const std::string& key, bool ok, Fn&& message) const {
    if (!ok) error(key, message());
  }

 private:
  std::map<std::string, RawEntry> raw_;
};

inline std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Parses config text, applies `overrides` (key, value) on top, and
/// resolves every key into typed settings. Errors name the key and line.
inline ResolvedConfig parse_config(std::string_view text,
                                   const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::map<std::string, detail::RawEntry> raw;
  for (const auto& [k, v] : config_defaults()) raw[k] = {v, 0};

  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim_view(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = " at line " + std::to_string(line_no);
    require(eq != std::string_view::npos, "config: expected 'section.key = value'" + where);
    const std::string key(detail::trim_view(line.substr(0, eq)));
    const std::string value(detail::trim_view(line.substr(eq + 1)));
    require(raw.contains(key), "config: unknown key '" + key + "'" + where);
    require(seen.insert(key).second, "config: duplicate key '" + key + "'" + where);
    raw[key] = {value, line_no};
  }
  for (const auto& [key, value] : overrides) {
    require(raw.contains(key), "config: unknown key '" + key + "' in override");
    raw[key] = {value, 0};
  }

  const detail::Resolver r(raw);
  ResolvedConfig cfg;
  auto& sim = cfg.sim;

  sim.clients = r.integer("sim.clients");
  r.check("sim.clients", sim.clients >= 1, [] { return "must be at least 1"; });
  sim.rounds = r.integer("sim.rounds");
  r.check("sim.rounds", sim.rounds >= 1, [] { return "must be at least 1"; });
  sim.seed = r.integer("sim.seed");
  sim.test_fraction = r.real("sim.test_fraction");
  r.check("sim.test_fraction", sim.test_fraction > 0 && sim.test_fraction < 1, [] { return "must lie in (0, 1)"; });
  sim.iota = r.real("sim.iota");
  r.check("sim.iota", sim.iota > 0, [] { return "must be positive"; });

  sim.train.learning_rate = r.real("train.lr");
  r.check("train.lr", sim.train.learning_rate > 0, [] { return "must be positive"; });
  sim.train.batch_size = r.integer("train.batch_size");
  r.check("train.batch_size", sim.train.batch_size >= 1, [] { return "must be at least 1"; });
  sim.train.local_epochs = r.integer("train.local_epochs");
  sim.hidden = r.integer_list("train.hidden");
  r.check("train.hidden", std::ranges::all_of(sim.hidden, [](std::size_t h) { return h > 0; }),
          [] { return "hidden widths must be positive"; });

  auto& robust = cfg.robust;
  robust.range_threshold = r.real("robust.range");
  r.check("robust.range", robust.range_threshold > 0, [] { return "must be positive"; });
  robust.confidence_threshold = r.real("robust.delta");
  r.check("robust.delta", robust.confidence_threshold > 0 && robust.confidence_threshold < 1,
          [] { return "must lie in (0, 1)"; });
  robust.clamp = r.real("robust.lambda");
  r.check("robust.lambda", robust.clamp > 0, [] { return "must be positive"; });
  robust.residual_epsilon = r.real("robust.residual_epsilon");
  r.check("robust.residual_epsilon", robust.residual_epsilon >= 0, [] { return "must be non-negative"; });
  robust.max_rescale_iterations = r.integer("robust.max_rescale_iterations");

  auto& rep = cfg.reputation;
  const double kappa = r.real("reputation.kappa");
  r.check("reputation.kappa", kappa > 0 && kappa < 1, [] { return "must lie in (0, 1)"; });
  rep.set_positive_weight(kappa);
  rep.prior = r.real("reputation.prior");
  r.check("reputation.prior", rep.prior >= 0 && rep.prior <= 1, [] { return "must lie in [0, 1]"; });
  rep.prior_weight = r.real("reputation.prior_weight");
  r.check("reputation.prior_weight", rep.prior_weight > 0, [] { return "must be positive"; });
  rep.decay = r.real("reputation.decay");
  r.check("reputation.decay", rep.decay > 0, [] { return "must be positive"; });
  rep.window = r.integer("reputation.window");
  r.check("reputation.window", rep.window >= 1, [] { return "must be at least 1"; });

  cfg.aggregator_name = r.text("sim.aggregator");
  cfg.trim_beta = r.integer("sim.trim_beta");
  if (cfg.aggregator_name == "fedavg") {
    sim.aggregator = FedAvgRule{};
  } else if (cfg.aggregator_name == "median") {
    sim.aggregator = MedianRule{};
  } else if (cfg.aggregator_name == "trimmed_mean") {
    r.check("sim.trim_beta", 2 * cfg.trim_beta < sim.clients, [&] {
      return "trimmed mean needs 2*beta < clients (beta=" + std::to_string(cfg.trim_beta) +
             ", clients=" + std::to_string(sim.clients) + ")";
    });
    sim.aggregator = TrimmedMeanRule{cfg.trim_beta};
  } else if (cfg.aggregator_name == "residual") {
    sim.aggregator = ResidualRule{robust};
  } else if (cfg.aggregator_name == "reputation") {
    sim.aggregator = ReputationRule{robust, rep};
  } else {
    r.error("sim.aggregator", "expected fedavg|median|trimmed_mean|residual|reputation, got '" +
                                  cfg.aggregator_name + "'");
  }
  if (cfg.aggregator_name == "trimmed_mean" || cfg.aggregator_name == "residual" ||
      cfg.aggregator_name == "reputation")
    r.check("sim.clients", sim.clients >= 3, [] { return "robust aggregators need at least 3 clients"; });

  auto& attack = sim.attack;
  const auto& kind = r.text("attack.kind");
  if (kind == "label_flip") {
    attack.type = AttackType::kLabelFlip;
  } else if (kind == "backdoor") {
    attack.type = AttackType::kBackdoor;
  } else {
    r.error("attack.kind", "expected label_flip|backdoor, got '" + kind + "'");
  }
  attack.fraction = r.real("attack.fraction");
  r.check("attack.fraction", attack.fraction >= 0 && attack.fraction <= 0.5, [] { return "must lie in [0, 0.5]"; });
  if (r.text("attack.clients") != "auto") {
    sim.attacker_ids = r.integer_list("attack.clients");
    for (auto id : *sim.attacker_ids)
      r.check("attack.clients", id < sim.clients, [&] { return "client id " + std::to_string(id) + " out of range"; });
  }
  attack.source = r.integer("attack.source");
  attack.target = r.integer("attack.target");
  attack.flip_rate = r.real("attack.flip_rate");
  r.check("attack.flip_rate", attack.flip_rate >= 0 && attack.flip_rate <= 1, [] { return "must lie in [0, 1]"; });
  attack.poison_rate = r.real("attack.poison_rate");
  r.check("attack.poison_rate", attack.poison_rate >= 0 && attack.poison_rate <= 1,
          [] { return "must lie in [0, 1]"; });
  sim.trigger_size = r.integer("attack.trigger_size");
  r.check("attack.trigger_size", sim.trigger_size >= 1, [] { return "must be at least 1"; });
  if (r.text("attack.trigger_value") != "auto") sim.trigger_value = r.real("attack.trigger_value");
  attack.extra_epochs = r.integer("attack.extra_epochs");
  try {
    attack.schedule = parse_schedule(r.text("attack.schedule"));
  } catch (const Error& e) {
    r.error("attack.schedule", e.what());
  }
  attack.stagger = r.integer("attack.stagger");

  auto& data = sim.data;
  data.classes = r.integer("data.classes");
  r.check("data.classes", data.classes >= 2, [] { return "must be at least 2"; });
  data.features = r.integer("data.features");
  r.check("data.features", data.features >= data.classes, [] { return "must be at least data.classes"; });
  data.samples_per_class = r.integer("data.samples_per_class");
  r.check("data.samples_per_class", data.samples_per_class >= 1, [] { return "must be at least 1"; });
  data.separation = r.real("data.separation");
  data.noise = r.real("data.noise");
  r.check("data.noise", data.noise > 0, [] { return "must be positive"; });
  data.seed = r.integer("data.seed");
  if (!r.text("data.csv").empty()) sim.csv = r.text("data.csv");

  const std::size_t classes = data.classes;
  r.check("attack.target", attack.target < classes, [] { return "must be below data.classes"; });
  if (attack.type == AttackType::kLabelFlip) {
    r.check("attack.source", attack.source < classes, [] { return "must be below data.classes"; });
    r.check("attack.source", attack.source != attack.target, [] { return "must differ from attack.target"; });
  }

  auto& th = cfg.theory;
  th.clients = static_cast<double>(sim.clients);
  th.attacker_fraction = attack.fraction;
  th.range = robust.range_threshold;
  th.confidence = robust.confidence_threshold;
  th.kappa = rep.positive_weight;
  th.eta = rep.negative_weight;
  th.prior = rep.prior;
  th.prior_weight = rep.prior_weight;
  th.learning_rate = sim.train.learning_rate;
  th.lipschitz = r.real("theory.lipschitz");
  th.strong_convexity = r.real("theory.strong_convexity");
  th.grad_bound = r.real("theory.grad_bound");
  th.variance_bound = r.real("theory.variance_bound");
  th.residual_sup = r.real("theory.residual_sup");
  th.radius = r.real("theory.radius");
  th.quantile = r.real("theory.quantile");
  th.initial_distance = r.real("theory.initial_distance");
  th.max_samples = r.real("theory.max_samples");
  if (r.text("theory.params") == "auto") {
    // Without reading a CSV the synthetic data shape stands in.
    Architecture arch{data.features, sim.hidden, data.classes};
    th.params = static_cast<double>(arch.parameter_count());
  } else {
    th.params = r.real("theory.params");
  }
  th.dimension = r.text("theory.dimension") == "auto" ? th.params : r.real("theory.dimension");

  for (const auto& [k, _] : config_defaults()) cfg.values.emplace_back(k, r.text(k));
  cfg.values.emplace_back("reputation.eta", [&] {
    std::ostringstream os;
    os << rep.negative_weight;
    return os.str();
  }());
  return cfg;
}

}  // namespace fedrep
