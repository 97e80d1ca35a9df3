// fedrep: run federated-learning poisoning experiments and evaluate the
// convergence-bound terms from the command line.

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedrep/fedrep.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  fedrep::require(static_cast<bool>(in), "cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

int simulate(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed, bool force,
             bool quiet) {
  std::vector<std::pair<std::string, std::string>> overrides;
  if (seed) overrides.emplace_back("sim.seed", std::to_string(*seed));
  const auto cfg = fedrep::parse_config(read_file(config_path), overrides);
  const auto series = fedrep::run_and_report(cfg, out, force, [&](const fedrep::RoundReport& r) {
    if (!quiet)
      std::fprintf(stderr, "round %zu/%zu acc=%.4f asr=%.4f loss=%.4f\n", r.round, cfg.sim.rounds, r.accuracy,
                   r.attack_success, r.loss);
  });
  const auto& last = series.back();
  std::printf("%s\n", nlohmann::json{{"out", out},
                                     {"rounds", series.size()},
                                     {"final_accuracy", last.accuracy},
                                     {"final_asr", last.attack_success}}
                          .dump()
                          .c_str());
  return 0;
}

int gen_data(const std::string& spec_path, const std::string& out) {
  const auto cfg = fedrep::parse_config(read_file(spec_path));
  fedrep::write_csv(fedrep::synth_dataset(cfg.sim.data), out);
  return 0;
}

int bound(const std::string& config_path) {
  const auto cfg = fedrep::parse_config(read_file(config_path));
  const auto& in = cfg.theory;
  in.validate();
  const double d1 = fedrep::theory::delta1(in);
  const double d2 = fedrep::theory::delta2(in);
  const auto rate = fedrep::theory::error_rate(in);
  const nlohmann::json doc = {
      {"delta1", d1},
      {"delta2", d2},
      {"d_epsilon", fedrep::theory::d_epsilon(in.quantile)},
      {"min_iterations", fedrep::theory::min_iterations(in, d1, d2)},
      {"error_rate",
       {{"range", rate.range_term},
        {"reward", rate.reward_term},
        {"confidence", rate.confidence_term},
        {"sample", rate.sample_term},
        {"attacker", rate.attacker_term},
        {"pooled", rate.pooled_term},
        {"total", rate.total()}}},
      {"inputs", {{"clients", in.clients}, {"params", in.params}, {"attacker_fraction", in.attacker_fraction}}},
  };
  std::printf("%s\n", doc.dump(2).c_str());
  return 0;
}

int sweep(const std::string& config_path, const std::string& param, const std::string& values,
          const std::string& out, bool force, std::size_t jobs) {
  const auto text = read_file(config_path);
  const auto list = split_list(values);
  fedrep::require(!list.empty(), "sweep: --values is empty");
  // Resolve every variant up front so a bad value fails before any run starts.
  std::vector<fedrep::ResolvedConfig> configs;
  for (const auto& v : list) configs.push_back(fedrep::parse_config(text, {{param, v}}));
  fedrep::prepare_output_dir(out, force);

  std::vector<nlohmann::json> results(list.size());
  std::vector<std::string> errors(list.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < list.size(); k = next++) {
      const auto dir = std::filesystem::path(out) / (param + "=" + list[k]);
      try {
        const auto series = fedrep::run_and_report(configs[k], dir, force);
        results[k] = {{"value", list[k]},
                      {"dir", dir.string()},
                      {"final_accuracy", series.back().accuracy},
                      {"final_asr", series.back().attack_success}};
        std::lock_guard lock(log_mutex);
        std::fprintf(stderr, "%s=%s done\n", param.c_str(), list[k].c_str());
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t j = 0; j < std::max<std::size_t>(1, std::min(jobs, list.size())); ++j) pool.emplace_back(worker);
  pool.clear();

  int status = 0;
  for (std::size_t k = 0; k < list.size(); ++k) {
    if (!errors[k].empty()) {
      std::fprintf(stderr, "error: %s=%s: %s\n", param.c_str(), list[k].c_str(), errors[k].c_str());
      status = 1;
    } else {
      std::printf("%s\n", results[k].dump().c_str());
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated-learning poisoning simulator with reputation-weighted robust aggregation"};
  app.require_subcommand(1);

  std::string config, out, param, values;
  std::optional<std::uint64_t> seed;
  bool force = false, quiet = false;
  std::size_t jobs = 1;

  auto* sim = app.add_subcommand("simulate", "Run one experiment and write rounds.csv, reputation.csv, config.json");
  sim->add_option("config", config, "Config file")->required();
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_option("--seed", seed, "Override sim.seed");
  sim->add_flag("--force", force, "Overwrite an existing output directory");
  sim->add_flag("--quiet", quiet, "No per-round progress on stderr");

  auto* gen = app.add_subcommand("gen-data", "Write the synthetic dataset described by data.* keys as CSV");
  gen->add_option("spec", config, "Config file")->required();
  gen->add_option("--out", out, "Output CSV path")->required();

  auto* bnd = app.add_subcommand("bound", "Print the convergence-bound terms as JSON");
  bnd->add_option("config", config, "Config file")->required();

  auto* swp = app.add_subcommand("sweep", "Run simulate once per value of one config key");
  swp->add_option("config", config, "Base config file")->required();
  swp->add_option("--param", param, "Config key to vary, e.g. attack.fraction")->required();
  swp->add_option("--values", values, "Comma-separated values")->required();
  swp->add_option("--out", out, "Output directory; one subdirectory per value")->required();
  swp->add_option("--jobs", jobs, "Concurrent experiments")->check(CLI::PositiveNumber);
  swp->add_flag("--force", force, "Overwrite existing output directories");

  CLI11_PARSE(app, argc, argv);
  try {
    if (sim->parsed()) return simulate(config, out, seed, force, quiet);
    if (gen->parsed()) return gen_data(config, out);
    if (bnd->parsed()) return bound(config);
    return sweep(config, param, values, out, force, jobs);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
