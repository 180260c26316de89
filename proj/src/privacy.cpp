#include "fedmarket/privacy.hpp"

#include <cmath>

namespace fedmarket {

ZcdpBudget gaussian_zcdp(QuerySensitivity sensitivity, double sigma) {
  if (!(sigma > 0.0)) throw ZeroSigma{};
  if (sensitivity.l2 < 0.0)
    throw std::invalid_argument("sensitivity cannot be negative");
  return ZcdpBudget{sensitivity.l2 * sensitivity.l2 / (2.0 * sigma * sigma)};
}

ZcdpBudget compose(ZcdpBudget a, ZcdpBudget b) {
  if (a.rho < 0.0 || b.rho < 0.0)
    throw std::invalid_argument("privacy loss cannot be negative");
  return ZcdpBudget{a.rho + b.rho};
}

QuerySensitivity gradient_sensitivity(double grad_bound, int samples_per_user) {
  if (!(grad_bound > 0.0)) throw std::invalid_argument("grad_bound must be > 0");
  if (samples_per_user < 1)
    throw std::invalid_argument("samples_per_user must be >= 1");
  return QuerySensitivity{2.0 * grad_bound / samples_per_user};
}

NoiseSpec calibrate_noise(ZcdpBudget budget, double grad_bound,
                          int samples_per_user, int iterations, int dimension) {
  if (!(budget.rho > 0.0)) throw ZeroBudget{};
  if (!(grad_bound > 0.0)) throw std::invalid_argument("grad_bound must be > 0");
  if (samples_per_user < 1)
    throw std::invalid_argument("samples_per_user must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (dimension < 1) throw std::invalid_argument("dimension must be >= 1");
  const double sigma = grad_bound / samples_per_user *
                       std::sqrt(2.0 * iterations / budget.rho);
  return NoiseSpec{sigma, dimension};
}

double expected_noise_sq_norm(const NoiseSpec& spec) {
  return static_cast<double>(spec.dimension) * spec.sigma * spec.sigma;
}

}  // namespace fedmarket
