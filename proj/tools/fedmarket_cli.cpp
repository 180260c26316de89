// Command-line front end for the privacy-compensation market simulator.
//
// Subcommands:
//   equilibrium     budgets and payments for an explicit valuation list
//   optimize-reward optimal total reward for a population
//   sweep           parameter sweep driven by a JSON config, CSV output
//   train           private federated training at equilibrium budgets
//
// Exit codes: 0 success, 2 config error, 3 numeric failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fedmarket/experiment.hpp"
#include "fedmarket/fed_sim.hpp"
#include "fedmarket/game.hpp"
#include "fedmarket/server.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::vector<fedmarket::UserProfile> users_from_values(const std::vector<double>& nu) {
  std::vector<fedmarket::UserProfile> users(nu.size());
  for (std::size_t i = 0; i < nu.size(); ++i) {
    users[i].id = static_cast<int>(i);
    users[i].nu = nu[i];
  }
  return users;
}

void print_equilibrium(const fedmarket::EquilibriumResult& eq,
                       const std::vector<fedmarket::UserProfile>& users,
                       bool csv) {
  if (csv) {
    std::cout << "user_id,nu,participating,budget,payment,utility\n";
  } else {
    std::cout << "reward R = " << eq.reward << ", participants = "
              << eq.participants.size() << " of " << users.size() << "\n";
  }
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto& b = eq.budgets.budgets[i];
    const double utility =
        fedmarket::user_utility(i, eq.budgets, users, eq.reward);
    if (csv) {
      std::cout << users[i].id << ',' << users[i].nu << ','
                << (b.is_participating() ? 1 : 0) << ',' << b.rho() << ','
                << eq.payments[i] << ',' << utility << '\n';
    } else {
      std::cout << "  user " << users[i].id << " (nu=" << users[i].nu << "): ";
      if (b.is_participating()) {
        std::cout << "budget " << b.rho() << ", payment " << eq.payments[i]
                  << ", utility " << utility << '\n';
      } else {
        std::cout << "not participating\n";
      }
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incentive-mechanism simulator for private federated learning"};
  app.require_subcommand(1);
  std::cout.precision(10);

  std::string config_path;
  std::string out_dir;
  std::string format = "text";
  std::uint64_t seed = 1;

  // equilibrium
  auto* eq_cmd = app.add_subcommand(
      "equilibrium", "Equilibrium budgets and payments for a valuation list");
  std::vector<double> eq_nu;
  double eq_reward = 10.0;
  eq_cmd->add_option("--nu", eq_nu, "User privacy valuations")->required();
  eq_cmd->add_option("--reward", eq_reward, "Total reward R")->required();
  eq_cmd->add_option("--format", format, "Output format: text or csv");

  // optimize-reward
  auto* opt_cmd = app.add_subcommand(
      "optimize-reward", "Optimal total reward for a population");
  std::vector<double> opt_nu;
  std::string opt_method = "bisection";
  opt_cmd->add_option("--nu", opt_nu,
                      "Explicit valuations (otherwise sampled from config)");
  opt_cmd->add_option("--config", config_path, "JSON experiment config");
  opt_cmd->add_option("--seed", seed, "Seed for population sampling");
  opt_cmd->add_option("--method", opt_method,
                      "Solver: bisection, newton or golden-section");

  // sweep
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Run the configured parameter sweep");
  sweep_cmd->add_option("--config", config_path, "JSON experiment config")
      ->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory override");
  sweep_cmd->add_option("--format", format, "Output format (csv)");

  // train
  auto* train_cmd = app.add_subcommand(
      "train", "Private federated training at equilibrium budgets");
  std::string task_name = "quadratic";
  train_cmd->add_option("--config", config_path, "JSON experiment config")
      ->required();
  train_cmd->add_option("--out", out_dir, "Output directory override");
  train_cmd->add_option("--seed", seed, "Seed for the population sample");
  train_cmd->add_option("--task", task_name, "Synthetic task: quadratic or logistic");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eq_cmd->parsed()) {
      const auto users = users_from_values(eq_nu);
      const auto eq = fedmarket::nash_equilibrium(users, eq_reward);
      print_equilibrium(eq, users, format == "csv");
      return kExitOk;
    }

    if (opt_cmd->parsed()) {
      std::vector<fedmarket::UserProfile> users;
      fedmarket::SystemParams params;
      if (!opt_nu.empty()) {
        users = users_from_values(opt_nu);
        if (!config_path.empty()) {
          params = fedmarket::load_config(config_path).params;
        }
      } else if (!config_path.empty()) {
        const auto config = fedmarket::load_config(config_path);
        params = config.params;
        users = fedmarket::sample_population(config.num_users, config.value_min,
                                             config.value_max, seed);
      } else {
        std::cerr << "optimize-reward needs --nu or --config\n";
        return kExitConfig;
      }
      fedmarket::RewardMethod method = fedmarket::RewardMethod::Bisection;
      if (opt_method == "newton")
        method = fedmarket::RewardMethod::Newton;
      else if (opt_method == "golden-section")
        method = fedmarket::RewardMethod::GoldenSection;
      else if (opt_method != "bisection") {
        std::cerr << "unknown method: " << opt_method << "\n";
        return kExitConfig;
      }
      const auto solution = fedmarket::optimal_reward(users, params, 1e-10, method);
      const auto eq = fedmarket::nash_equilibrium(users, solution.reward);
      std::cout << "r_star = " << solution.reward
                << "\nserver_utility = " << solution.utility
                << "\nparticipants = " << eq.participants.size() << " of "
                << users.size() << "\nmethod = "
                << fedmarket::to_string(solution.method)
                << "\niterations = " << solution.iterations << "\n";
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      auto config = fedmarket::load_config(config_path);
      if (!out_dir.empty()) config.output_dir = out_dir;
      const auto rows = fedmarket::run_sweep(config);
      std::cout << "wrote " << rows.size() << " rows to " << config.output_dir
                << "/sweep.csv\n";
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      auto config = fedmarket::load_config(config_path);
      if (!out_dir.empty()) config.output_dir = out_dir;
      fedmarket::TaskKind kind;
      if (task_name == "quadratic")
        kind = fedmarket::TaskKind::Quadratic;
      else if (task_name == "logistic")
        kind = fedmarket::TaskKind::Logistic;
      else {
        std::cerr << "unknown task: " << task_name << "\n";
        return kExitConfig;
      }
      const auto users = fedmarket::sample_population(
          config.num_users, config.value_min, config.value_max, seed);
      const auto solution = fedmarket::optimal_reward(users, config.params);
      const auto eq = fedmarket::nash_equilibrium(users, solution.reward);
      const auto summary = fedmarket::run_training_experiment(
          config, eq, kind, config.output_dir);
      double noisy = 0.0, clean = 0.0;
      for (std::size_t i = 0; i < summary.seeds.size(); ++i) {
        noisy += summary.private_final_loss[i];
        clean += summary.noiseless_final_loss[i];
      }
      const double runs = static_cast<double>(summary.seeds.size());
      std::cout << "r_star = " << solution.reward << ", participants = "
                << eq.participants.size() << "\nmean final loss: private = "
                << noisy / runs << ", noiseless = " << clean / runs
                << "\ntraces written to " << config.output_dir << "\n";
      return kExitOk;
    }
  } catch (const fedmarket::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fedmarket::PopulationTooSmall& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
