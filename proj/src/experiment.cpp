#include "fedmarket/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fedmarket/server.hpp"

#include "json.hpp"

namespace fedmarket {

namespace {

using nlohmann::json;

double require_number(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing config key: ") + key);
  if (!j[key].is_number())
    throw ConfigError(std::string("config key must be a number: ") + key);
  return j[key].get<double>();
}

int require_int(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing config key: ") + key);
  if (!j[key].is_number_integer())
    throw ConfigError(std::string("config key must be an integer: ") + key);
  return j[key].get<int>();
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write output file: " + path.string());
  out.precision(12);
  return out;
}

Stat mean_std(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.std += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(values.size()));
  return s;
}

void write_chart(const std::filesystem::path& dir, const std::string& metric,
                 const std::vector<AggregateRow>& rows,
                 Stat AggregateRow::*field) {
  auto out = open_csv(dir / ("chart_" + metric + ".csv"));
  out << "x,mean,std\n";
  for (const auto& r : rows)
    out << r.sweep_value << ',' << (r.*field).mean << ',' << (r.*field).std << '\n';
}

}  // namespace

void ExperimentConfig::validate() const {
  if (num_users < 2)
    throw ConfigError("n must be at least 2 (the budget game needs two users)");
  if (!(value_min > 0.0)) throw ConfigError("nu_min must be positive");
  if (!(value_max >= value_min)) throw ConfigError("nu_max must be >= nu_min");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (sweep_variable != "n" && sweep_variable != "nu_max")
    throw ConfigError("sweep_variable must be \"n\" or \"nu_max\"");
  if (sweep_variable == "n") {
    for (double v : sweep_values) {
      if (v < 2.0 || v != std::floor(v))
        throw ConfigError("n sweep values must be integers >= 2");
    }
  } else {
    for (double v : sweep_values) {
      if (!(v >= value_min))
        throw ConfigError("nu_max sweep values must be >= nu_min");
    }
  }
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const char* known[] = {"n",     "nu_min",         "nu_max", "lambda",
                                "d",     "eta",            "T",      "m",
                                "L",     "seeds",          "sweep_variable",
                                "sweep_values",            "output_dir"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
          return key == k;
        }) == std::end(known)) {
      throw ConfigError("unknown config key: " + key);
    }
  }

  ExperimentConfig c;
  c.num_users = require_int(j, "n");
  c.value_min = require_number(j, "nu_min");
  c.value_max = require_number(j, "nu_max");
  c.params.accuracy_weight = require_number(j, "lambda");
  c.params.model_dim = require_int(j, "d");
  c.params.stepsize = require_number(j, "eta");
  c.params.iterations = require_int(j, "T");
  c.params.samples_per_user = require_int(j, "m");
  c.params.grad_bound = require_number(j, "L");

  if (!j.contains("seeds") || !j["seeds"].is_array())
    throw ConfigError("config key \"seeds\" must be an array of integers");
  c.seeds.clear();
  for (const auto& s : j["seeds"]) {
    if (!s.is_number_integer() || s.get<std::int64_t>() < 0)
      throw ConfigError("seeds must be non-negative integers");
    c.seeds.push_back(s.get<std::uint64_t>());
  }

  c.sweep_variable = j.value("sweep_variable", std::string("n"));
  c.sweep_values.clear();
  if (j.contains("sweep_values")) {
    if (!j["sweep_values"].is_array())
      throw ConfigError("config key \"sweep_values\" must be an array of numbers");
    for (const auto& v : j["sweep_values"]) {
      if (!v.is_number()) throw ConfigError("sweep_values must be numbers");
      c.sweep_values.push_back(v.get<double>());
    }
  }
  c.output_dir = j.value("output_dir", std::string("out"));
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string config_to_json(const ExperimentConfig& config) {
  json j;
  j["n"] = config.num_users;
  j["nu_min"] = config.value_min;
  j["nu_max"] = config.value_max;
  j["lambda"] = config.params.accuracy_weight;
  j["d"] = config.params.model_dim;
  j["eta"] = config.params.stepsize;
  j["T"] = config.params.iterations;
  j["m"] = config.params.samples_per_user;
  j["L"] = config.params.grad_bound;
  j["seeds"] = config.seeds;
  j["sweep_variable"] = config.sweep_variable;
  j["sweep_values"] = config.sweep_values;
  j["output_dir"] = config.output_dir;
  return j.dump(2);
}

std::vector<UserProfile> sample_population(int num_users, double value_min,
                                           double value_max, std::uint64_t seed) {
  if (num_users < 2) throw std::invalid_argument("population needs at least 2 users");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<UserProfile> users(num_users);
  // Scaling explicit unit draws keeps populations at the same seed coupled
  // across sweep points (common random numbers), which smooths trend curves.
  for (int i = 0; i < num_users; ++i) {
    users[i].id = i;
    users[i].nu = value_min + (value_max - value_min) * unit(rng);
    users[i].cost = CostKind::Linear;
  }
  return users;
}

SweepRow run_single(const ExperimentConfig& config, double sweep_value,
                    std::uint64_t seed) {
  int n = config.num_users;
  double nu_max = config.value_max;
  if (config.sweep_variable == "n")
    n = static_cast<int>(sweep_value);
  else
    nu_max = sweep_value;

  const auto users = sample_population(n, config.value_min, nu_max, seed);

  const RewardSolution best = optimal_reward(users, config.params);
  const EquilibriumResult eq = nash_equilibrium(users, best.reward);

  std::vector<double> utilities;
  utilities.reserve(eq.participants.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (eq.budgets.budgets[i].is_participating())
      utilities.push_back(user_utility(i, eq.budgets, users, best.reward));
  }
  const Stat u = mean_std(utilities);

  SweepRow row;
  row.sweep_value = sweep_value;
  row.seed = seed;
  row.num_participants = static_cast<int>(eq.participants.size());
  row.reward = best.reward;
  row.server_utility = best.utility;
  row.utility_mean = u.mean;
  row.utility_std = u.std;
  return row;
}

std::vector<AggregateRow> aggregate_rows(const std::vector<SweepRow>& rows) {
  std::vector<double> order;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.sweep_value) == order.end())
      order.push_back(r.sweep_value);
  }
  std::vector<AggregateRow> out;
  out.reserve(order.size());
  for (double value : order) {
    std::vector<double> parts, rewards, server, user;
    for (const auto& r : rows) {
      if (r.sweep_value != value) continue;
      parts.push_back(static_cast<double>(r.num_participants));
      rewards.push_back(r.reward);
      server.push_back(r.server_utility);
      user.push_back(r.utility_mean);
    }
    AggregateRow agg;
    agg.sweep_value = value;
    agg.participants = mean_std(parts);
    agg.reward = mean_std(rewards);
    agg.server_utility = mean_std(server);
    agg.user_utility = mean_std(user);
    out.push_back(agg);
  }
  return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config) {
  config.validate();
  if (config.sweep_values.empty())
    throw ConfigError("sweep_values is empty: nothing to sweep");

  std::vector<SweepRow> rows;
  rows.reserve(config.sweep_values.size() * config.seeds.size());
  for (double value : config.sweep_values) {
    for (std::uint64_t seed : config.seeds) {
      rows.push_back(run_single(config, value, seed));
    }
  }

  const std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  auto sweep_csv = open_csv(dir / "sweep.csv");
  sweep_csv << "sweep_var,sweep_value,seed,num_participants,r_star,"
               "server_utility,user_utility_mean,user_utility_std\n";
  for (const auto& r : rows) {
    sweep_csv << config.sweep_variable << ',' << r.sweep_value << ',' << r.seed
              << ',' << r.num_participants << ',' << r.reward << ','
              << r.server_utility << ',' << r.utility_mean << ','
              << r.utility_std << '\n';
  }

  const auto aggregates = aggregate_rows(rows);
  auto agg_csv = open_csv(dir / "aggregate.csv");
  agg_csv << "sweep_var,sweep_value,participants_mean,participants_std,"
             "r_star_mean,r_star_std,server_utility_mean,server_utility_std,"
             "user_utility_mean,user_utility_std\n";
  for (const auto& a : aggregates) {
    agg_csv << config.sweep_variable << ',' << a.sweep_value << ','
            << a.participants.mean << ',' << a.participants.std << ','
            << a.reward.mean << ',' << a.reward.std << ','
            << a.server_utility.mean << ',' << a.server_utility.std << ','
            << a.user_utility.mean << ',' << a.user_utility.std << '\n';
  }

  write_chart(dir, "participants", aggregates, &AggregateRow::participants);
  write_chart(dir, "server_utility", aggregates, &AggregateRow::server_utility);
  write_chart(dir, "user_utility", aggregates, &AggregateRow::user_utility);
  return rows;
}

TrainingExperimentSummary run_training_experiment(const ExperimentConfig& config,
                                                  const EquilibriumResult& equilibrium,
                                                  TaskKind kind,
                                                  const std::string& out_dir) {
  config.validate();
  std::vector<double> budgets;
  for (const auto& b : equilibrium.budgets.budgets) {
    if (b.is_participating()) budgets.push_back(b.rho());
  }
  if (budgets.empty())
    throw std::invalid_argument("training experiment needs at least one participant");

  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  TrainingExperimentSummary summary;
  auto summary_csv = open_csv(dir / "summary.csv");
  summary_csv << "seed,final_loss_private,final_loss_noiseless\n";

  for (std::uint64_t seed : config.seeds) {
    SyntheticTask task;
    task.kind = kind;
    task.seed = derive_seed(seed, 0x7461736bULL);
    task.dimension = config.params.model_dim;
    task.samples_per_user = config.params.samples_per_user;
    task.clip_bound = config.params.grad_bound;

    const TrainingTrace noisy = run_training(task, budgets, config.params, seed);
    const TrainingTrace clean =
        run_training(task, budgets, config.params, seed, /*noise_disabled=*/true);

    write_trace_csv(noisy, (dir / ("trace_seed" + std::to_string(seed) +
                                   "_private.csv")).string());
    write_trace_csv(clean, (dir / ("trace_seed" + std::to_string(seed) +
                                   "_noiseless.csv")).string());

    summary.seeds.push_back(seed);
    summary.private_final_loss.push_back(noisy.losses.back());
    summary.noiseless_final_loss.push_back(clean.losses.back());
    summary_csv << seed << ',' << noisy.losses.back() << ','
                << clean.losses.back() << '\n';
  }
  return summary;
}

}  // namespace fedmarket
