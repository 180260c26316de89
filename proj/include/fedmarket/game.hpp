#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

// User-side economics of the privacy-compensation market: payments split
// proportionally to contributed privacy budgets, privacy cost families,
// best responses, and the closed-form Nash equilibrium of the budget game.

namespace fedmarket {

// Payment rule is undefined when nobody contributes a positive budget.
struct AllNonParticipating : std::runtime_error {
  AllNonParticipating()
      : std::runtime_error("no participating budgets: proportional payment undefined") {}
};

// Best response needs at least one active rival; with a zero rival sum the
// first-order condition has no solution.
struct DegenerateOpponents : std::runtime_error {
  DegenerateOpponents()
      : std::runtime_error("best response undefined without active rivals") {}
};

struct PopulationTooSmall : std::runtime_error {
  PopulationTooSmall()
      : std::runtime_error("equilibrium requires a population of at least 2 users") {}
};

// Shape of a user's privacy cost c(nu, rho).
enum class CostKind { Linear, Quadratic, Exponential };

// One member of a publicly known cost family. Families are totally ordered
// in nu: at any positive budget, a larger nu never costs less.
struct CostFamily {
  CostKind kind = CostKind::Linear;
  double nu = 1.0;  // per-unit privacy valuation, > 0
};

struct UserProfile {
  int id = 0;
  double nu = 1.0;  // privacy valuation, > 0
  CostKind cost = CostKind::Linear;

  CostFamily cost_family() const { return CostFamily{cost, nu}; }
};

// A user's strategy: a strictly positive privacy budget (zCDP units) or
// staying out of the task entirely.
class Budget {
 public:
  static Budget participating(double rho) {
    if (!(rho > 0.0))
      throw std::invalid_argument("participating budget must be strictly positive");
    Budget b;
    b.rho_ = rho;
    return b;
  }
  static Budget out() { return Budget{}; }

  bool is_participating() const { return rho_ > 0.0; }
  // Budget value; 0 for a non-participant, so it adds nothing to sums.
  double rho() const { return rho_; }

 private:
  double rho_ = 0.0;
};

// One budget per user, in population order.
struct StrategyProfile {
  std::vector<Budget> budgets;
};

struct EquilibriumResult {
  std::vector<int> participants;  // user ids, ascending (nu, id)
  StrategyProfile budgets;        // indexed like the input population
  std::vector<double> payments;   // same indexing; exactly 0 outside S
  double reward = 0.0;
};

// c(nu, rho): Linear nu*rho, Quadratic nu*rho^2, Exponential exp(nu*rho).
double user_cost(const CostFamily& family, double rho);

// Splits the reward proportionally to budgets. Non-participants receive 0.
// Throws AllNonParticipating when every budget is out.
std::vector<double> payment(const StrategyProfile& profile, double reward);

// Utility of users[index] under the given profile: payment minus privacy
// cost. Zero for a non-participant.
double user_utility(std::size_t index, const StrategyProfile& profile,
                    const std::vector<UserProfile>& users, double reward);

// Unique utility-maximizing budget of a linear-cost user facing rivals whose
// budgets sum to rivals_sum > 0. Out when the reward cannot cover the
// marginal privacy cost (reward <= nu * rivals_sum).
Budget best_response(double rivals_sum, double nu, double reward);

// Equilibrium of the budget game for a linear-cost population. Users are
// sorted ascending by (nu, id); the two smallest-valuation users seed the
// participant set; a candidate with current set size s and valuation sum
// sigma joins while (s - 1) * nu < sigma (strict, so every member's budget
// stays positive). Budgets and payments are mapped back to input order.
EquilibriumResult nash_equilibrium(const std::vector<UserProfile>& users,
                                   double reward);

struct DeviationAudit {
  bool testable = true;   // false when the profile has no participants
  bool verified = false;  // no unilateral deviation gains more than tolerance
  double max_gain = 0.0;  // best improvement any single user found
  int worst_user = -1;    // id of the user realizing max_gain
};

// Numeric no-profitable-deviation check, independent of the closed forms
// above: for every user it scans a log-spaced grid of unilateral budget
// deviations (rivals held fixed) and refines the best cell by golden-section
// search. tolerance < 0 selects the default 1e-9 * reward.
DeviationAudit verify_equilibrium(const EquilibriumResult& result,
                                  const std::vector<UserProfile>& users,
                                  double reward, int grid_points = 256,
                                  double tolerance = -1.0);

}  // namespace fedmarket
