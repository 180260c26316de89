#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fedmarket/game.hpp"

using namespace fedmarket;

namespace {

std::vector<UserProfile> make_users(const std::vector<double>& nu) {
  std::vector<UserProfile> users(nu.size());
  for (std::size_t i = 0; i < nu.size(); ++i) {
    users[i].id = static_cast<int>(i);
    users[i].nu = nu[i];
  }
  return users;
}

StrategyProfile make_profile(const std::vector<double>& rho) {
  StrategyProfile p;
  for (double r : rho) {
    p.budgets.push_back(r > 0.0 ? Budget::participating(r) : Budget::out());
  }
  return p;
}

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("payment splits the reward proportionally") {
  const auto pay = payment(make_profile({1.0, 1.0, 2.0}), 8.0);
  CHECK(pay[0] == doctest::Approx(2.0));
  CHECK(pay[1] == doctest::Approx(2.0));
  CHECK(pay[2] == doctest::Approx(4.0));
}

TEST_CASE("payment gives equal budgets equal shares") {
  const auto pay = payment(make_profile({0.7, 0.7, 0.7, 0.7, 0.7}), 3.0);
  for (double p : pay) CHECK(p == doctest::Approx(3.0 / 5.0));
}

TEST_CASE("payment matches direct evaluation of the proportional rule") {
  const auto pay = payment(make_profile({20.0 / 9.0, 10.0 / 9.0}), 10.0);
  CHECK(close_rel(pay[0], 20.0 / 3.0, 1e-12));
  CHECK(close_rel(pay[1], 10.0 / 3.0, 1e-12));
  CHECK(pay[0] + pay[1] == doctest::Approx(10.0));
}

TEST_CASE("payment skips non-participants and rejects an empty market") {
  const auto pay = payment(make_profile({2.0, 0.0, 2.0}), 6.0);
  CHECK(pay[1] == 0.0);
  CHECK(pay[0] == doctest::Approx(3.0));
  CHECK_THROWS_AS(payment(make_profile({0.0, 0.0}), 1.0), AllNonParticipating);
}

TEST_CASE("user_cost families evaluate by substitution") {
  CHECK(user_cost({CostKind::Linear, 2.0}, 3.0) == doctest::Approx(6.0));
  CHECK(user_cost({CostKind::Quadratic, 2.0}, 3.0) == doctest::Approx(18.0));
  CHECK(user_cost({CostKind::Exponential, 2.0}, 3.0) ==
        doctest::Approx(std::exp(6.0)));
  CHECK(user_cost({CostKind::Linear, 7.5}, 0.0) == 0.0);
}

TEST_CASE("cost families are ordered in nu and increasing in rho") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> val(0.1, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    double nu_a = val(rng), nu_b = val(rng);
    if (nu_a > nu_b) std::swap(nu_a, nu_b);
    const double rho = val(rng);
    const double step = 0.25 * val(rng);
    for (CostKind kind :
         {CostKind::Linear, CostKind::Quadratic, CostKind::Exponential}) {
      CHECK(user_cost({kind, nu_a}, rho) <= user_cost({kind, nu_b}, rho));
      CHECK(user_cost({kind, nu_a}, rho + step) > user_cost({kind, nu_a}, rho));
      CHECK(user_cost({kind, nu_a}, rho) >= 0.0);
    }
  }
}

TEST_CASE("user_utility is payment minus cost") {
  const auto users = make_users({1.0, 1.0});
  const auto profile = make_profile({1.0, 1.0});
  CHECK(user_utility(0, profile, users, 4.0) == doctest::Approx(1.0));
}

TEST_CASE("user_utility of a non-participant is zero") {
  const auto users = make_users({1.0, 2.0, 9.0});
  const auto profile = make_profile({1.0, 1.0, 0.0});
  CHECK(user_utility(2, profile, users, 5.0) == 0.0);
}

TEST_CASE("user_utility matches hand evaluation at the three-user equilibrium") {
  const auto users = make_users({1.0, 2.0});
  const auto profile = make_profile({20.0 / 9.0, 10.0 / 9.0});
  CHECK(close_rel(user_utility(1, profile, users, 10.0), 10.0 / 9.0, 1e-12));
}

TEST_CASE("best_response closed form and participation threshold") {
  const Budget inside = best_response(1.0, 1.0, 4.0);
  REQUIRE(inside.is_participating());
  CHECK(inside.rho() == doctest::Approx(1.0));

  // Exactly at the threshold the user stays out.
  CHECK_FALSE(best_response(10.0 / 3.0, 3.0, 10.0).is_participating());
  CHECK_FALSE(best_response(100.0, 1.0, 1.0).is_participating());
  CHECK_THROWS_AS(best_response(0.0, 1.0, 1.0), DegenerateOpponents);
}

TEST_CASE("nash_equilibrium on three users excludes the high-valuation user") {
  const auto users = make_users({1.0, 2.0, 3.0});
  const auto eq = nash_equilibrium(users, 10.0);

  REQUIRE(eq.participants == std::vector<int>{0, 1});
  CHECK(close_rel(eq.budgets.budgets[0].rho(), 20.0 / 9.0, 1e-12));
  CHECK(close_rel(eq.budgets.budgets[1].rho(), 10.0 / 9.0, 1e-12));
  CHECK_FALSE(eq.budgets.budgets[2].is_participating());
  CHECK(eq.payments[2] == 0.0);

  // Fixed point: each participant's closed-form best response reproduces
  // its equilibrium budget given the rivals' total.
  const double total = eq.budgets.budgets[0].rho() + eq.budgets.budgets[1].rho();
  for (int i : {0, 1}) {
    const double own = eq.budgets.budgets[i].rho();
    const Budget reply = best_response(total - own, users[i].nu, 10.0);
    REQUIRE(reply.is_participating());
    CHECK(close_rel(reply.rho(), own, 1e-9));
  }
  // The excluded user's best response to the equilibrium total is out.
  CHECK_FALSE(best_response(total, users[2].nu, 10.0).is_participating());
}

TEST_CASE("nash_equilibrium symmetric closed form") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> size(2, 40);
  std::uniform_real_distribution<double> val(0.2, 8.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = size(rng);
    const double v = val(rng);
    const double reward = val(rng) * 10.0;
    const auto eq = nash_equilibrium(make_users(std::vector<double>(n, v)), reward);
    REQUIRE(static_cast<int>(eq.participants.size()) == n);
    const double expected = (n - 1.0) * reward / (n * n * v);
    for (const auto& b : eq.budgets.budgets) {
      CHECK(close_rel(b.rho(), expected, 1e-12));
    }
  }
}

TEST_CASE("nash_equilibrium two-user case matches the best-response cross-check") {
  const auto eq = nash_equilibrium(make_users({1.0, 1.0}), 4.0);
  CHECK(eq.budgets.budgets[0].rho() == doctest::Approx(1.0));
  CHECK(eq.budgets.budgets[1].rho() == doctest::Approx(1.0));
  const Budget reply = best_response(1.0, 1.0, 4.0);
  CHECK(reply.rho() == doctest::Approx(eq.budgets.budgets[0].rho()));
}

TEST_CASE("nash_equilibrium rejects tiny populations and bad input") {
  CHECK_THROWS_AS(nash_equilibrium(make_users({1.0}), 5.0), PopulationTooSmall);
  CHECK_THROWS_AS(nash_equilibrium({}, 5.0), PopulationTooSmall);
  auto users = make_users({1.0, 2.0});
  users[1].cost = CostKind::Quadratic;
  CHECK_THROWS_AS(nash_equilibrium(users, 5.0), std::invalid_argument);

  auto duplicates = make_users({1.0, 2.0});
  duplicates[1].id = duplicates[0].id;
  CHECK_THROWS_AS(nash_equilibrium(duplicates, 5.0), std::invalid_argument);
  auto negative = make_users({1.0, 2.0});
  negative[0].nu = -1.0;
  CHECK_THROWS_AS(nash_equilibrium(negative, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(nash_equilibrium(make_users({1.0, 2.0}), 0.0),
                  std::invalid_argument);
}

TEST_CASE("participating budgets must be strictly positive") {
  CHECK_THROWS_AS(Budget::participating(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Budget::participating(-1.0), std::invalid_argument);
  CHECK_FALSE(Budget::out().is_participating());
  CHECK(Budget::out().rho() == 0.0);
}

TEST_CASE("boundary valuation is excluded, never admitted at zero budget") {
  // With valuations {1, 1, 2} the third user sits exactly on the admission
  // boundary; admitting it would give it a zero budget and zero payment.
  const auto eq = nash_equilibrium(make_users({1.0, 1.0, 2.0}), 6.0);
  CHECK(eq.participants == std::vector<int>{0, 1});
  for (int i : {0, 1}) CHECK(eq.budgets.budgets[i].rho() > 0.0);
  CHECK_FALSE(eq.budgets.budgets[2].is_participating());
}

TEST_CASE("equilibrium identities hold on random instances") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> size(2, 50);
  std::uniform_real_distribution<double> val(1.0, 10.0);
  std::uniform_real_distribution<double> rew(1.0, 100.0);

  for (int trial = 0; trial < 50; ++trial) {
    const int n = size(rng);
    std::vector<double> nu(n);
    for (auto& v : nu) v = val(rng);
    const double reward = rew(rng);
    const auto users = make_users(nu);
    const auto eq = nash_equilibrium(users, reward);

    double nu_sum = 0.0, rho_sum = 0.0, pay_sum = 0.0;
    const double s = static_cast<double>(eq.participants.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
      if (eq.budgets.budgets[i].is_participating()) {
        nu_sum += users[i].nu;
        rho_sum += eq.budgets.budgets[i].rho();
      }
      pay_sum += eq.payments[i];
    }

    // Total budget of the participant set.
    CHECK(close_rel(rho_sum, (s - 1.0) * reward / nu_sum, 1e-12));
    // Payments exhaust the reward.
    CHECK(close_rel(pay_sum, reward, 1e-9));

    for (std::size_t i = 0; i < users.size(); ++i) {
      if (eq.budgets.budgets[i].is_participating()) {
        // Rival budget total per participant.
        const double rivals = rho_sum - eq.budgets.budgets[i].rho();
        const double expected =
            (s - 1.0) * (s - 1.0) * reward * users[i].nu / (nu_sum * nu_sum);
        CHECK(close_rel(rivals, expected, 1e-12));
        // Best-response fixed point.
        const Budget reply = best_response(rivals, users[i].nu, reward);
        REQUIRE(reply.is_participating());
        CHECK(close_rel(reply.rho(), eq.budgets.budgets[i].rho(), 1e-9));
      } else {
        // Exclusion threshold and out-is-best.
        CHECK(users[i].nu >= nu_sum / (s - 1.0) * (1.0 - 1e-12));
        CHECK_FALSE(best_response(rho_sum, users[i].nu, reward).is_participating());
      }
    }
  }
}

TEST_CASE("participant utility is midpoint-concave in the own budget") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> val(0.5, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double rivals = val(rng);
    const double reward = 10.0 * val(rng);
    const CostFamily family{CostKind::Linear, val(rng)};
    auto utility = [&](double rho) {
      return rho / (rho + rivals) * reward - user_cost(family, rho);
    };
    const double a = 0.1 * val(rng);
    const double b = a + val(rng);
    const double mid = 0.5 * (a + b);
    CHECK(utility(mid) >= 0.5 * (utility(a) + utility(b)) - 1e-12);
  }
}

TEST_CASE("scaling the reward scales budgets and payments linearly") {
  const auto users = make_users({1.3, 2.1, 2.9, 4.4, 1.05});
  const double k = 3.75;
  const auto base = nash_equilibrium(users, 8.0);
  const auto scaled = nash_equilibrium(users, 8.0 * k);
  REQUIRE(base.participants == scaled.participants);
  for (std::size_t i = 0; i < users.size(); ++i) {
    CHECK(close_rel(scaled.budgets.budgets[i].rho(),
                    k * base.budgets.budgets[i].rho(), 1e-12));
    CHECK(close_rel(scaled.payments[i], k * base.payments[i], 1e-12));
  }
}

TEST_CASE("equilibrium is invariant under input permutation") {
  std::vector<double> nu = {3.0, 1.2, 2.4, 5.5, 1.9, 2.2};
  auto users = make_users(nu);
  const auto eq = nash_equilibrium(users, 12.0);

  std::mt19937_64 rng(5);
  auto shuffled = users;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto eq2 = nash_equilibrium(shuffled, 12.0);

  auto sorted_participants = eq.participants;
  auto sorted_participants2 = eq2.participants;
  std::sort(sorted_participants.begin(), sorted_participants.end());
  std::sort(sorted_participants2.begin(), sorted_participants2.end());
  CHECK(sorted_participants == sorted_participants2);

  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    const int id = shuffled[i].id;  // id equals original position
    CHECK(eq2.budgets.budgets[i].rho() ==
          doctest::Approx(eq.budgets.budgets[id].rho()));
    CHECK(eq2.payments[i] == doctest::Approx(eq.payments[id]));
  }
}

TEST_CASE("verify_equilibrium accepts the computed equilibrium") {
  const auto users = make_users({1.0, 1.0});
  const auto eq = nash_equilibrium(users, 4.0);
  const auto audit = verify_equilibrium(eq, users, 4.0);
  CHECK(audit.testable);
  CHECK(audit.verified);
  CHECK(audit.max_gain <= 1e-9 * 4.0);
}

TEST_CASE("verify_equilibrium flags a profitable deviation") {
  // User 0 over-contributes: moving from 1.5 back to 1 gains 0.1.
  const auto users = make_users({1.0, 1.0});
  EquilibriumResult perturbed;
  perturbed.reward = 4.0;
  perturbed.participants = {0, 1};
  perturbed.budgets = make_profile({1.5, 1.0});
  perturbed.payments = payment(perturbed.budgets, 4.0);
  const auto audit = verify_equilibrium(perturbed, users, 4.0);
  CHECK(audit.testable);
  CHECK_FALSE(audit.verified);
  CHECK(audit.max_gain == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(audit.worst_user == 0);
}

TEST_CASE("verify_equilibrium reports an all-out profile as untestable") {
  const auto users = make_users({1.0, 2.0});
  EquilibriumResult empty;
  empty.reward = 4.0;
  empty.budgets = make_profile({0.0, 0.0});
  empty.payments = {0.0, 0.0};
  const auto audit = verify_equilibrium(empty, users, 4.0);
  CHECK_FALSE(audit.testable);
  CHECK_FALSE(audit.verified);
}
