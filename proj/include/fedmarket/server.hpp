#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fedmarket/game.hpp"
#include "fedmarket/system_params.hpp"

// Server-side economics: the accuracy proxy driven by per-user noise, the
// reward objective induced by the users' equilibrium response, and scalar
// solvers for the optimal total reward.

namespace fedmarket {

struct EmptyParticipantSet : std::runtime_error {
  EmptyParticipantSet()
      : std::runtime_error("server objective needs a nonempty participant set") {}
};

// The reward objective is decreasing over the whole search bracket; the
// server would post an arbitrarily small reward. Reported, never clamped.
struct NoInteriorMaximum : std::runtime_error {
  NoInteriorMaximum()
      : std::runtime_error("reward objective has no interior maximum in the bracket") {}
};

// Bounded stand-in for trained-model accuracy, in (1/2, 1].
struct AccuracyProxy {
  double value = 0.5;
};

enum class RewardMethod { Bisection, Newton, GoldenSection };

const char* to_string(RewardMethod method);

struct RewardSolution {
  double reward = 0.0;   // argmax of the server objective
  double utility = 0.0;  // objective value at reward
  int iterations = 0;
  RewardMethod method = RewardMethod::Bisection;
};

// Per-participant coefficients of the reduced server objective, for a
// participant set with valuations `participant_values` (all members of the
// strictly admitted set, so every coefficient is positive):
//   x_i = m^2 (s-1) / (2 d eta^2 T sum_nu) * (1 - (s-1) nu_i / sum_nu).
std::vector<double> x_coefficients(const std::vector<double>& participant_values,
                                   const SystemParams& params);

// Accuracy proxy for participants training with calibrated noise at the
// given budgets:
//   a = 1/2 [1 + exp(-mean_i log(1 + 2 d eta^2 T / (rho_i m^2)))].
// Larger budgets mean less noise and a value closer to 1.
AccuracyProxy accuracy_proxy(const std::vector<double>& budgets,
                             const SystemParams& params);

// The reduced reward objective for a fixed population, with the equilibrium
// response already substituted in:
//   U(R) = (w/2) [1 + exp(-(1/n) sum_i log(1 + 1/(x_i R)))] - R.
// The sum runs over the participant set; users staying out contribute
// nothing (their noise term vanishes under the stay-out convention), but the
// average keeps the full population size n in the denominator. Precomputes
// the x coefficients once so solvers and sweeps can evaluate it repeatedly.
class RewardObjective {
 public:
  RewardObjective(std::vector<double> coefficients, double accuracy_weight,
                  std::size_t population_size = 0);

  // Runs the admission rule on the population (the participant set does not
  // depend on the reward) and builds the objective for the admitted users.
  static RewardObjective for_population(const std::vector<UserProfile>& users,
                                        const SystemParams& params);

  double utility(double reward) const;
  double derivative(double reward) const;
  double second_derivative(double reward) const;

  double accuracy_weight() const { return weight_; }
  std::size_t num_participants() const { return x_.size(); }
  std::size_t population_size() const { return population_; }
  const std::vector<double>& coefficients() const { return x_; }

  // Search bracket (lo, hi] guaranteed to contain the maximizer when one
  // exists: the objective starts at weight/2 > 0 near 0 and is below
  // weight - R, hence negative, past R = weight.
  double bracket_lo() const { return 1e-9 * weight_; }
  double bracket_hi() const { return 0.5 * weight_; }

 private:
  std::vector<double> x_;
  double weight_;
  std::size_t population_;
};

// Server utility at the given reward with the population's equilibrium
// response substituted in. Throws EmptyParticipantSet via the admission rule
// preconditions (population of n >= 2 linear-cost users required).
double server_utility(double reward, const std::vector<UserProfile>& users,
                      const SystemParams& params);

// Analytic d/dR of server_utility; matches central finite differences.
double server_utility_derivative(double reward,
                                 const std::vector<UserProfile>& users,
                                 const SystemParams& params);

// Maximizes the reward objective over its bracket. Bisection (default) and
// Newton drive the analytic derivative to |U'| <= tolerance; golden-section
// shrinks the interval to width <= max(tolerance, 1e-12) * bracket width.
// Newton falls back to a bisection step whenever an iterate leaves the
// bracket or fails to shrink the derivative.
RewardSolution optimal_reward(const RewardObjective& objective,
                              double tolerance = 1e-10,
                              RewardMethod method = RewardMethod::Bisection);
RewardSolution optimal_reward(const std::vector<UserProfile>& users,
                              const SystemParams& params,
                              double tolerance = 1e-10,
                              RewardMethod method = RewardMethod::Bisection);

}  // namespace fedmarket
