#pragma once

// Experiment output: rounds.csv, reputation.csv and a config.json sidecar.
// All numbers are written with six fixed decimals so that equal runs are
// byte-identical and diffs stay readable.

#include <cstdio>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedrep/config.hpp"
#include "fedrep/error.hpp"
#include "fedrep/simulator.hpp"

namespace fedrep {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s.erase(0, 1);
  return s;
}

/// Creates `dir` for a fresh run. An existing directory is an error unless
/// `force` is set.
inline void prepare_output_dir(const std::filesystem::path& dir, bool force) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    require(force, "output directory '" + dir.string() + "' already exists (use --force to overwrite)");
    require(fs::is_directory(dir, ec), "output path '" + dir.string() + "' is not a directory");
  } else {
    fs::create_directories(dir, ec);
    require(!ec, "cannot create output directory '" + dir.string() + "': " + ec.message());
  }
}

/// Appends one rounds.csv row per report and flushes, so long runs can be tailed.
class RoundsCsvWriter {
 public:
  RoundsCsvWriter(const std::filesystem::path& path, std::size_t clients, bool with_reputation)
      : out_(path, std::ios::binary | std::ios::trunc), clients_(clients), with_reputation_(with_reputation) {
    require(static_cast<bool>(out_), "cannot write '" + path.string() + "'");
    out_ << "round,acc,asr,loss,attack_active";
    if (with_reputation_)
      for (std::size_t i = 0; i < clients_; ++i) out_ << ",rep_" << i << ",weight_" << i;
    out_ << '\n';
    out_.flush();
  }

  void append(const RoundReport& r) {
    out_ << r.round << ',' << fixed6(r.accuracy) << ',' << fixed6(r.attack_success) << ',' << fixed6(r.loss) << ','
         << (r.attack_active ? 1 : 0);
    if (with_reputation_) {
      require(r.clients.size() == clients_, "report: round " + std::to_string(r.round) + " lacks client data");
      for (const auto& c : r.clients) out_ << ',' << fixed6(c.windowed) << ',' << fixed6(c.weight);
    }
    out_ << '\n';
    out_.flush();
    require(static_cast<bool>(out_), "report: write failed");
  }

 private:
  std::ofstream out_;
  std::size_t clients_;
  bool with_reputation_;
};

/// Round × client matrix of windowed reputations. Baseline aggregators keep
/// no reputation, so only the header is written for them.
inline void write_reputation_csv(const std::filesystem::path& path, std::span<const RoundReport> series,
                                 std::size_t clients) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot write '" + path.string() + "'");
  out << "round";
  for (std::size_t i = 0; i < clients; ++i) out << ",client_" << i;
  out << '\n';
  for (const auto& r : series) {
    if (r.clients.empty()) continue;
    out << r.round;
    for (const auto& c : r.clients) out << ',' << fixed6(c.windowed);
    out << '\n';
  }
  require(static_cast<bool>(out), "report: write failed for '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  require(static_cast<bool>(out), "report: write failed for '" + path.string() + "'");
}

/// Resolved configuration grouped by section, plus the attacker ids.
/// Values that parse fully as numbers are stored as JSON numbers.
inline nlohmann::json sidecar_json(const ResolvedConfig& cfg, std::span<const std::size_t> attackers) {
  nlohmann::json doc;
  auto& config = doc["config"];
  for (const auto& [key, text] : cfg.values) {
    const auto dot = key.find('.');
    auto& slot = config[key.substr(0, dot)][key.substr(dot + 1)];
    const char* first = text.data();
    const char* last = first + text.size();
    long long integer = 0;
    double real = 0.0;
    if (auto [p, ec] = std::from_chars(first, last, integer); !text.empty() && ec == std::errc{} && p == last)
      slot = integer;
    else if (auto [q, ec2] = std::from_chars(first, last, real); !text.empty() && ec2 == std::errc{} && q == last)
      slot = real;
    else
      slot = text;
  }
  doc["attackers"] = std::vector<std::size_t>(attackers.begin(), attackers.end());
  return doc;
}

/// Writes all three report files for a finished series into `dir`.
inline void emit_reports(std::span<const RoundReport> series, std::size_t clients, const nlohmann::json& sidecar,
                         const std::filesystem::path& dir, bool force) {
  require(!series.empty(), "report: empty series");
  prepare_output_dir(dir, force);
  const bool with_reputation = !series.front().clients.empty();
  RoundsCsvWriter rounds(dir / "rounds.csv", clients, with_reputation);
  for (const auto& r : series) rounds.append(r);
  write_reputation_csv(dir / "reputation.csv", series, clients);
  write_json(dir / "config.json", sidecar);
}

/// Runs a resolved experiment, streaming rounds.csv as rounds finish, then
/// writes reputation.csv. config.json is written before round 1.
inline std::vector<RoundReport> run_and_report(const ResolvedConfig& cfg, const std::filesystem::path& dir,
                                               bool force,
                                               const std::function<void(const RoundReport&)>& on_round = {}) {
  Simulation sim(cfg.sim);
  prepare_output_dir(dir, force);
  write_json(dir / "config.json", sidecar_json(cfg, sim.attackers()));
  const bool with_reputation = std::holds_alternative<ReputationRule>(cfg.sim.aggregator);
  RoundsCsvWriter rounds(dir / "rounds.csv", cfg.sim.clients, with_reputation);
  auto series = run_experiment(sim, [&](const RoundReport& r) {
    rounds.append(r);
    if (on_round) on_round(r);
  });
  write_reputation_csv(dir / "reputation.csv", series, cfg.sim.clients);
  return series;
}

/// Parses rounds.csv back into reports. Client entries carry only the
/// windowed reputation and the weight.
inline std::vector<RoundReport> read_rounds_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot read '" + path.string() + "'");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "rounds.csv: missing header");
  std::size_t columns = 1;
  for (char ch : line) columns += ch == ',';
  require(columns >= 5 && (columns - 5) % 2 == 0, "rounds.csv: malformed header");
  const std::size_t clients = (columns - 5) / 2;

  std::vector<RoundReport> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    require(cells.size() == columns, "rounds.csv: line " + std::to_string(line_no) + " has " +
                                         std::to_string(cells.size()) + " fields, expected " + std::to_string(columns));
    try {
      RoundReport r;
      r.round = std::stoul(cells[0]);
      r.accuracy = std::stod(cells[1]);
      r.attack_success = std::stod(cells[2]);
      r.loss = std::stod(cells[3]);
      r.attack_active = cells[4] == "1";
      for (std::size_t i = 0; i < clients; ++i) {
        ClientRoundSummary c;
        c.windowed = std::stod(cells[5 + 2 * i]);
        c.weight = std::stod(cells[6 + 2 * i]);
        r.clients.push_back(c);
      }
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      fail("rounds.csv: non-numeric field at line " + std::to_string(line_no));
    }
  }
  return out;
}

}  // namespace fedrep
