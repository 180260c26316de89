#pragma once

#include <stdexcept>

// zCDP bookkeeping for the Gaussian mechanism: per-release privacy cost,
// additive composition, gradient-query sensitivity, and noise calibration
// for a fixed iteration count.

namespace fedmarket {

struct ZeroSigma : std::runtime_error {
  ZeroSigma() : std::runtime_error("gaussian mechanism requires sigma > 0") {}
};

struct ZeroBudget : std::runtime_error {
  ZeroBudget() : std::runtime_error("cannot calibrate noise for a zero privacy budget") {}
};

// Privacy loss in zCDP units. rho == 0 is allowed only as the identity
// element of composition; calibration rejects it.
struct ZcdpBudget {
  double rho = 0.0;
};

// l2 sensitivity of a vector query: the largest output change over any pair
// of datasets differing in one record.
struct QuerySensitivity {
  double l2 = 0.0;
};

// Per-coordinate Gaussian noise. sigma == 0 means noise disabled (used by
// the simulator's noiseless control runs).
struct NoiseSpec {
  double sigma = 0.0;
  int dimension = 1;
};

// Privacy cost of releasing a query of the given sensitivity with Gaussian
// noise of standard deviation sigma: sensitivity^2 / (2 sigma^2).
ZcdpBudget gaussian_zcdp(QuerySensitivity sensitivity, double sigma);

// zCDP composes additively.
ZcdpBudget compose(ZcdpBudget a, ZcdpBudget b);

// Sensitivity of a mean of per-sample gradients clipped to grad_bound, over
// a dataset of samples_per_user records: 2 * grad_bound / samples_per_user.
QuerySensitivity gradient_sensitivity(double grad_bound, int samples_per_user);

// Smallest per-iteration noise level that keeps the total privacy loss of
// `iterations` gradient releases at budget.rho:
//   sigma = (grad_bound / samples_per_user) * sqrt(2 * iterations / rho).
NoiseSpec calibrate_noise(ZcdpBudget budget, double grad_bound,
                          int samples_per_user, int iterations, int dimension);

// E||b||^2 of a draw b ~ N(0, sigma^2 I_d), i.e. d * sigma^2.
double expected_noise_sq_norm(const NoiseSpec& spec);

}  // namespace fedmarket
