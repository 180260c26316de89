#include "fedmarket/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace fedmarket {

namespace {

void validate_population(const std::vector<UserProfile>& users) {
  if (users.size() < 2) throw PopulationTooSmall{};
  std::unordered_set<int> ids;
  ids.reserve(users.size());
  for (const auto& u : users) {
    if (!(u.nu > 0.0))
      throw std::invalid_argument("user valuation nu must be strictly positive");
    if (!ids.insert(u.id).second)
      throw std::invalid_argument("duplicate user id in population");
  }
}

double participating_sum(const StrategyProfile& profile) {
  double sum = 0.0;
  for (const auto& b : profile.budgets) sum += b.rho();
  return sum;
}

// Utility of one user deviating to budget rho while rivals contribute
// rivals_sum in total. Continuous extension at rho = 0 equals staying out
// for linear and quadratic costs.
double deviation_utility(double rho, double rivals_sum, const CostFamily& family,
                         double reward) {
  return rho / (rho + rivals_sum) * reward - user_cost(family, rho);
}

// Golden-section maximum of the (concave) deviation utility on [lo, hi].
double golden_max(double lo, double hi, double rivals_sum,
                  const CostFamily& family, double reward) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = deviation_utility(x1, rivals_sum, family, reward);
  double f2 = deviation_utility(x2, rivals_sum, family, reward);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, hi); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = deviation_utility(x2, rivals_sum, family, reward);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = deviation_utility(x1, rivals_sum, family, reward);
    }
  }
  return std::max(f1, f2);
}

// Grid scan plus golden refinement of the best unilateral deviation.
double best_deviation_value(double rho_max, double rivals_sum,
                            const CostFamily& family, double reward,
                            int grid_points) {
  const int n = std::max(grid_points, 8);
  const double lo = rho_max * 1e-12;
  const double ratio = std::pow(rho_max / lo, 1.0 / (n - 1));
  double best = -std::numeric_limits<double>::infinity();
  int best_idx = 0;
  double rho = lo;
  for (int k = 0; k < n; ++k) {
    const double u = deviation_utility(rho, rivals_sum, family, reward);
    if (u > best) {
      best = u;
      best_idx = k;
    }
    rho *= ratio;
  }
  const double cell_lo = lo * std::pow(ratio, std::max(best_idx - 1, 0));
  const double cell_hi = lo * std::pow(ratio, std::min(best_idx + 1, n - 1));
  return std::max(best, golden_max(cell_lo, cell_hi, rivals_sum, family, reward));
}

}  // namespace

double user_cost(const CostFamily& family, double rho) {
  if (!(family.nu > 0.0))
    throw std::invalid_argument("cost family requires nu > 0");
  if (rho < 0.0) throw std::invalid_argument("privacy budget cannot be negative");
  switch (family.kind) {
    case CostKind::Linear:
      return family.nu * rho;
    case CostKind::Quadratic:
      return family.nu * rho * rho;
    case CostKind::Exponential:
      return std::exp(family.nu * rho);
  }
  throw std::logic_error("unknown cost kind");
}

std::vector<double> payment(const StrategyProfile& profile, double reward) {
  if (!(reward > 0.0)) throw std::invalid_argument("reward must be positive");
  const double total = participating_sum(profile);
  if (!(total > 0.0)) throw AllNonParticipating{};
  std::vector<double> pay(profile.budgets.size(), 0.0);
  for (std::size_t i = 0; i < profile.budgets.size(); ++i) {
    pay[i] = profile.budgets[i].rho() / total * reward;
  }
  return pay;
}

double user_utility(std::size_t index, const StrategyProfile& profile,
                    const std::vector<UserProfile>& users, double reward) {
  if (index >= users.size() || users.size() != profile.budgets.size())
    throw std::invalid_argument("user index out of range");
  const Budget& own = profile.budgets[index];
  if (!own.is_participating()) return 0.0;
  const std::vector<double> pay = payment(profile, reward);
  return pay[index] - user_cost(users[index].cost_family(), own.rho());
}

Budget best_response(double rivals_sum, double nu, double reward) {
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  if (!(reward > 0.0)) throw std::invalid_argument("reward must be positive");
  if (!(rivals_sum > 0.0)) throw DegenerateOpponents{};
  if (reward <= nu * rivals_sum) return Budget::out();
  return Budget::participating(std::sqrt(reward * rivals_sum / nu) - rivals_sum);
}

EquilibriumResult nash_equilibrium(const std::vector<UserProfile>& users,
                                   double reward) {
  validate_population(users);
  if (!(reward > 0.0)) throw std::invalid_argument("reward must be positive");
  for (const auto& u : users) {
    if (u.cost != CostKind::Linear)
      throw std::invalid_argument(
          "equilibrium closed form holds for linear-cost users only");
  }

  const std::size_t n = users.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (users[a].nu != users[b].nu) return users[a].nu < users[b].nu;
    return users[a].id < users[b].id;
  });

  // Admission: starting from the two smallest valuations, take the next user
  // while (s - 1) * nu < sum of admitted valuations (s = current set size).
  // Strict inequality keeps every admitted budget strictly positive.
  std::size_t s = 2;
  double nu_sum = users[order[0]].nu + users[order[1]].nu;
  while (s < n && (static_cast<double>(s) - 1.0) * users[order[s]].nu < nu_sum) {
    nu_sum += users[order[s]].nu;
    ++s;
  }

  EquilibriumResult result;
  result.reward = reward;
  result.budgets.budgets.assign(n, Budget::out());
  result.participants.reserve(s);
  const double scale = (static_cast<double>(s) - 1.0) * reward / nu_sum;
  for (std::size_t k = 0; k < s; ++k) {
    const std::size_t idx = order[k];
    const double rho =
        scale * (1.0 - (static_cast<double>(s) - 1.0) * users[idx].nu / nu_sum);
    result.budgets.budgets[idx] = Budget::participating(rho);
    result.participants.push_back(users[idx].id);
  }
  result.payments = payment(result.budgets, reward);
  return result;
}

DeviationAudit verify_equilibrium(const EquilibriumResult& result,
                                  const std::vector<UserProfile>& users,
                                  double reward, int grid_points,
                                  double tolerance) {
  if (users.size() != result.budgets.budgets.size())
    throw std::invalid_argument("profile size does not match population");
  if (tolerance < 0.0) tolerance = 1e-9 * reward;

  DeviationAudit audit;
  const double total = participating_sum(result.budgets);
  if (!(total > 0.0)) {
    // Empty market: single-user entry keeps the whole reward at any cost,
    // so there is no meaningful stationary deviation to test against.
    audit.testable = false;
    return audit;
  }

  double rho_max = 0.0;
  for (const auto& b : result.budgets.budgets) rho_max = std::max(rho_max, b.rho());
  rho_max *= 10.0;  // utility is concave, so the maximizer is interior or at 0

  for (std::size_t i = 0; i < users.size(); ++i) {
    const Budget& own = result.budgets.budgets[i];
    const double rivals = total - own.rho();
    double gain;
    if (rivals <= 0.0) {
      // Lone participant: it can shrink its budget toward 0 and keep the
      // whole reward, so any positive cost is improvable. Report the
      // supremum of the gain (reward minus current utility).
      const double current =
          own.rho() / total * reward - user_cost(users[i].cost_family(), own.rho());
      gain = reward - current;
    } else {
      const double best = best_deviation_value(rho_max, rivals,
                                               users[i].cost_family(), reward,
                                               grid_points);
      const double current =
          own.is_participating()
              ? own.rho() / total * reward -
                    user_cost(users[i].cost_family(), own.rho())
              : 0.0;
      // Staying out (utility 0) is also available to a participant.
      gain = std::max(best, 0.0) - current;
    }
    if (gain > audit.max_gain) {
      audit.max_gain = gain;
      audit.worst_user = users[i].id;
    }
  }
  audit.verified = audit.max_gain <= tolerance;
  return audit;
}

}  // namespace fedmarket
