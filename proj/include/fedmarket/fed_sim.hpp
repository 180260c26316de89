#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedmarket/privacy.hpp"
#include "fedmarket/system_params.hpp"

// Private federated gradient descent on synthetic tasks: per-user clipped
// gradient queries, Gaussian-perturbed responses, server-side averaging, and
// seeded end-to-end training runs that record the global loss trajectory.

namespace fedmarket {

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyResponseSet : std::runtime_error {
  EmptyResponseSet() : std::runtime_error("aggregation step received no responses") {}
};

enum class TaskKind {
  Quadratic,  // l(theta; x) = 1/2 ||theta - x||^2, 1-smooth
  Logistic,   // log-loss with labels from a fixed ground-truth separator
};

struct DataPoint {
  std::vector<double> features;
  double label = 0.0;  // +/-1 for Logistic, unused for Quadratic
};

struct LocalDataset {
  std::vector<DataPoint> points;
};

struct SyntheticTask {
  TaskKind kind = TaskKind::Quadratic;
  std::uint64_t seed = 0;  // dataset generator seed
  int dimension = 10;
  int samples_per_user = 100;
  double clip_bound = 1.0;  // per-sample gradient norm cap
};

struct ModelState {
  std::vector<double> theta;
  int iteration = 0;
};

struct TrainingTrace {
  std::vector<double> losses;  // global loss per iteration, length T+1
  std::vector<double> final_theta;
  std::vector<NoiseSpec> noise;  // per-user specs used for the run
};

// Deterministic seed for stream `stream` derived from `base` (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// One dataset per user, drawn from per-user streams off task.seed.
// Quadratic targets are i.i.d. standard normal; Logistic features are
// standard normal and labels come from a fixed unit-norm separator.
std::vector<LocalDataset> generate_datasets(const SyntheticTask& task, int num_users);

// Mean loss of the model on one local dataset.
double local_loss(const std::vector<double>& theta, const LocalDataset& data,
                  const SyntheticTask& task);

// Mean over all users' local losses (the global training objective).
double global_loss(const std::vector<double>& theta,
                   const std::vector<LocalDataset>& datasets,
                   const SyntheticTask& task);

// The gradient query answered by a user: the mean of per-sample gradients,
// each rescaled onto the clip_bound ball. Output norm is at most clip_bound.
std::vector<double> local_query(const std::vector<double>& theta,
                                const LocalDataset& data,
                                const SyntheticTask& task);

// query + b with b ~ N(0, sigma^2 I). A zero-sigma spec returns the query
// unchanged without consuming randomness.
std::vector<double> dp_response(const std::vector<double>& query,
                                const NoiseSpec& noise, std::mt19937_64& rng);

// theta <- theta - stepsize * mean(responses); iteration counter advances.
ModelState aggregate_step(const ModelState& state,
                          const std::vector<std::vector<double>>& responses,
                          double stepsize);

// Runs the full private training loop for the participants holding the given
// budgets. Per-user noise is calibrated from (clip_bound, samples_per_user,
// iterations); each user draws from an independent stream derived from
// `seed`, so results are reproducible and independent of evaluation order.
// noise_disabled swaps in sigma = 0 for every user (the noiseless control).
TrainingTrace run_training(const SyntheticTask& task,
                           const std::vector<double>& budgets,
                           const SystemParams& params, std::uint64_t seed,
                           bool noise_disabled = false);

// CSV with header "iteration,global_loss" and one row per recorded loss.
void write_trace_csv(const TrainingTrace& trace, std::ostream& out);
void write_trace_csv(const TrainingTrace& trace, const std::string& path);

}  // namespace fedmarket
