#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedmarket/fed_sim.hpp"
#include "fedmarket/game.hpp"
#include "fedmarket/system_params.hpp"

// Experiment orchestration: JSON config ingestion, seeded single runs of the
// sample -> optimize -> equilibrium pipeline, parameter sweeps with CSV
// output, and training runs at equilibrium budgets.

namespace fedmarket {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentConfig {
  int num_users = 100;     // population size n
  double value_min = 1.0;  // lower end of the valuation distribution
  double value_max = 5.0;  // upper end (valuations are uniform on [min, max])
  SystemParams params;
  std::vector<std::uint64_t> seeds = {1};
  std::string sweep_variable = "n";  // "n" or "nu_max"
  std::vector<double> sweep_values;
  std::string output_dir = "out";

  void validate() const;  // throws ConfigError with an actionable message
};

// Strict JSON parsing: every field checked, unknown keys rejected.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

// n linear-cost users with valuations uniform on [value_min, value_max].
std::vector<UserProfile> sample_population(int num_users, double value_min,
                                           double value_max, std::uint64_t seed);

struct SweepRow {
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  int num_participants = 0;
  double reward = 0.0;          // optimal total reward
  double server_utility = 0.0;  // objective value at that reward
  double utility_mean = 0.0;    // participant utilities at equilibrium
  double utility_std = 0.0;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;
};

struct AggregateRow {
  double sweep_value = 0.0;
  Stat participants;
  Stat reward;
  Stat server_utility;
  Stat user_utility;  // of the per-run participant means
};

// One pipeline run at a sweep point: sample the population, optimize the
// reward, compute the equilibrium, summarize utilities. Deterministic in
// (config, sweep_value, seed).
SweepRow run_single(const ExperimentConfig& config, double sweep_value,
                    std::uint64_t seed);

// Per-seed means/stds across seeds for each sweep value (input order kept).
std::vector<AggregateRow> aggregate_rows(const std::vector<SweepRow>& rows);

// Every (sweep value x seed) run. Writes sweep.csv, aggregate.csv, and one
// chart_<metric>.csv (x, mean, std) per metric under config.output_dir.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config);

struct TrainingExperimentSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<double> private_final_loss;
  std::vector<double> noiseless_final_loss;
};

// Trains at the equilibrium budgets once per seed, pairing every private run
// with a noiseless control on the same data and seed. Writes per-run trace
// CSVs and a summary.csv under out_dir.
TrainingExperimentSummary run_training_experiment(const ExperimentConfig& config,
                                                  const EquilibriumResult& equilibrium,
                                                  TaskKind kind,
                                                  const std::string& out_dir);

}  // namespace fedmarket
