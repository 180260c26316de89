#include "fedmarket/server.hpp"

#include <cmath>
#include <utility>

namespace fedmarket {

const char* to_string(RewardMethod method) {
  switch (method) {
    case RewardMethod::Bisection:
      return "bisection";
    case RewardMethod::Newton:
      return "newton";
    case RewardMethod::GoldenSection:
      return "golden-section";
  }
  return "unknown";
}

std::vector<double> x_coefficients(const std::vector<double>& participant_values,
                                   const SystemParams& params) {
  params.validate();
  if (params.iterations < 1)
    throw std::invalid_argument("reward objective needs at least one iteration");
  if (participant_values.empty()) throw EmptyParticipantSet{};
  const double s = static_cast<double>(participant_values.size());
  double nu_sum = 0.0;
  for (double nu : participant_values) {
    if (!(nu > 0.0)) throw std::invalid_argument("participant valuations must be > 0");
    nu_sum += nu;
  }
  const double m = static_cast<double>(params.samples_per_user);
  const double denom = 2.0 * params.model_dim * params.stepsize * params.stepsize *
                       params.iterations * nu_sum;
  const double lead = m * m * (s - 1.0) / denom;
  std::vector<double> x;
  x.reserve(participant_values.size());
  for (double nu : participant_values) {
    x.push_back(lead * (1.0 - (s - 1.0) * nu / nu_sum));
  }
  return x;
}

AccuracyProxy accuracy_proxy(const std::vector<double>& budgets,
                             const SystemParams& params) {
  params.validate();
  if (params.iterations < 1)
    throw std::invalid_argument("accuracy proxy needs at least one iteration");
  if (budgets.empty()) throw EmptyParticipantSet{};
  const double m = static_cast<double>(params.samples_per_user);
  const double noise_scale =
      2.0 * params.model_dim * params.stepsize * params.stepsize * params.iterations /
      (m * m);
  double mean_log = 0.0;
  for (double rho : budgets) {
    if (!(rho > 0.0)) throw std::invalid_argument("budgets must be strictly positive");
    mean_log += std::log1p(noise_scale / rho);
  }
  mean_log /= static_cast<double>(budgets.size());
  return AccuracyProxy{0.5 * (1.0 + std::exp(-mean_log))};
}

RewardObjective::RewardObjective(std::vector<double> coefficients,
                                 double accuracy_weight,
                                 std::size_t population_size)
    : x_(std::move(coefficients)),
      weight_(accuracy_weight),
      population_(population_size == 0 ? x_.size() : population_size) {
  if (x_.empty()) throw EmptyParticipantSet{};
  if (population_ < x_.size())
    throw std::invalid_argument("population cannot be smaller than the participant set");
  for (double xi : x_) {
    if (!(xi > 0.0))
      throw std::invalid_argument("objective coefficients must be positive");
  }
  if (!(weight_ > 1.0)) throw std::invalid_argument("accuracy weight must be > 1");
}

RewardObjective RewardObjective::for_population(const std::vector<UserProfile>& users,
                                                const SystemParams& params) {
  // The admission rule ignores the reward, so any positive value works here.
  const EquilibriumResult eq = nash_equilibrium(users, 1.0);
  std::vector<double> values;
  values.reserve(eq.participants.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (eq.budgets.budgets[i].is_participating()) values.push_back(users[i].nu);
  }
  return RewardObjective(x_coefficients(values, params), params.accuracy_weight,
                         users.size());
}

double RewardObjective::utility(double reward) const {
  double mean_log = 0.0;
  for (double xi : x_) mean_log += std::log1p(1.0 / (xi * reward));
  mean_log /= static_cast<double>(population_);
  return 0.5 * weight_ * (1.0 + std::exp(-mean_log)) - reward;
}

double RewardObjective::derivative(double reward) const {
  double mean_log = 0.0;
  double mean_frac = 0.0;
  for (double xi : x_) {
    mean_log += std::log1p(1.0 / (xi * reward));
    mean_frac += 1.0 / (xi * reward + 1.0);
  }
  const double n = static_cast<double>(population_);
  mean_log /= n;
  mean_frac /= n;
  return 0.5 * weight_ * std::exp(-mean_log) * mean_frac / reward - 1.0;
}

double RewardObjective::second_derivative(double reward) const {
  double mean_log = 0.0;
  double mean_frac = 0.0;
  double mean_curv = 0.0;
  for (double xi : x_) {
    const double q = xi * reward + 1.0;
    mean_log += std::log1p(1.0 / (xi * reward));
    mean_frac += 1.0 / q;
    mean_curv += (2.0 * xi * reward + 1.0) / (q * q);
  }
  const double n = static_cast<double>(population_);
  mean_log /= n;
  mean_frac /= n;
  mean_curv /= n;
  const double damp = std::exp(-mean_log);
  return 0.5 * weight_ * damp / (reward * reward) *
         (mean_frac * mean_frac - mean_curv);
}

double server_utility(double reward, const std::vector<UserProfile>& users,
                      const SystemParams& params) {
  if (!(reward > 0.0)) throw std::invalid_argument("reward must be positive");
  return RewardObjective::for_population(users, params).utility(reward);
}

double server_utility_derivative(double reward,
                                 const std::vector<UserProfile>& users,
                                 const SystemParams& params) {
  if (!(reward > 0.0)) throw std::invalid_argument("reward must be positive");
  return RewardObjective::for_population(users, params).derivative(reward);
}

namespace {

RewardSolution solve_bisection(const RewardObjective& f, double tolerance) {
  double lo = f.bracket_lo();
  double hi = f.bracket_hi();
  if (f.derivative(lo) <= 0.0) throw NoInteriorMaximum{};
  RewardSolution sol;
  sol.method = RewardMethod::Bisection;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double d = f.derivative(mid);
    ++sol.iterations;
    if (std::abs(d) <= tolerance || hi - lo <= 1e-15 * f.bracket_hi()) break;
    if (d > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  sol.reward = mid;
  sol.utility = f.utility(mid);
  return sol;
}

RewardSolution solve_newton(const RewardObjective& f, double tolerance) {
  double lo = f.bracket_lo();
  double hi = f.bracket_hi();
  if (f.derivative(lo) <= 0.0) throw NoInteriorMaximum{};
  RewardSolution sol;
  sol.method = RewardMethod::Newton;
  double r = 0.5 * (lo + hi);
  double d = f.derivative(r);
  for (int it = 0; it < 200; ++it) {
    ++sol.iterations;
    if (std::abs(d) <= tolerance || hi - lo <= 1e-15 * f.bracket_hi()) break;
    if (d > 0.0)
      lo = r;
    else
      hi = r;
    const double dd = f.second_derivative(r);
    double next = r - d / dd;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);  // bisection fallback
    const double next_d = f.derivative(next);
    if (std::abs(next_d) >= std::abs(d)) next = 0.5 * (lo + hi);
    r = next;
    d = f.derivative(r);
  }
  sol.reward = r;
  sol.utility = f.utility(r);
  return sol;
}

RewardSolution solve_golden(const RewardObjective& f, double tolerance) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = f.bracket_lo();
  double b = f.bracket_hi();
  if (f.derivative(a) <= 0.0) throw NoInteriorMaximum{};
  RewardSolution sol;
  sol.method = RewardMethod::GoldenSection;
  const double width_goal = std::max(tolerance, 1e-12) * (b - a);
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f.utility(x1);
  double f2 = f.utility(x2);
  while (b - a > width_goal && sol.iterations < 400) {
    ++sol.iterations;
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f.utility(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f.utility(x1);
    }
  }
  sol.reward = f1 > f2 ? x1 : x2;
  sol.utility = std::max(f1, f2);
  return sol;
}

}  // namespace

RewardSolution optimal_reward(const RewardObjective& objective, double tolerance,
                              RewardMethod method) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  switch (method) {
    case RewardMethod::Bisection:
      return solve_bisection(objective, tolerance);
    case RewardMethod::Newton:
      return solve_newton(objective, tolerance);
    case RewardMethod::GoldenSection:
      return solve_golden(objective, tolerance);
  }
  throw std::logic_error("unknown reward method");
}

RewardSolution optimal_reward(const std::vector<UserProfile>& users,
                              const SystemParams& params, double tolerance,
                              RewardMethod method) {
  return optimal_reward(RewardObjective::for_population(users, params), tolerance,
                        method);
}

}  // namespace fedmarket
