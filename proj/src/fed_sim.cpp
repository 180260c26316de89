#include "fedmarket/fed_sim.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace fedmarket {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kDatasetStream = 0x6461746173657473ULL;    // dataset draws
constexpr std::uint64_t kSeparatorStream = 0x7365706172617465ULL;  // logistic labels

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

// Ground-truth separator for the logistic task, fixed by the task seed.
std::vector<double> logistic_separator(const SyntheticTask& task) {
  std::mt19937_64 rng(derive_seed(task.seed ^ kSeparatorStream, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(task.dimension);
  for (auto& wi : w) wi = normal(rng);
  const double n = norm(w);
  if (n > 0.0)
    for (auto& wi : w) wi /= n;
  else
    w[0] = 1.0;
  return w;
}

// Per-sample gradient of the task loss at theta, written into grad.
void sample_gradient(const std::vector<double>& theta, const DataPoint& point,
                     TaskKind kind, std::vector<double>& grad) {
  switch (kind) {
    case TaskKind::Quadratic:
      for (std::size_t i = 0; i < theta.size(); ++i)
        grad[i] = theta[i] - point.features[i];
      return;
    case TaskKind::Logistic: {
      const double margin = point.label * dot(theta, point.features);
      const double weight = -point.label / (1.0 + std::exp(margin));
      for (std::size_t i = 0; i < theta.size(); ++i)
        grad[i] = weight * point.features[i];
      return;
    }
  }
  throw std::logic_error("unknown task kind");
}

double sample_loss(const std::vector<double>& theta, const DataPoint& point,
                   TaskKind kind) {
  switch (kind) {
    case TaskKind::Quadratic: {
      double s = 0.0;
      for (std::size_t i = 0; i < theta.size(); ++i) {
        const double d = theta[i] - point.features[i];
        s += d * d;
      }
      return 0.5 * s;
    }
    case TaskKind::Logistic: {
      const double margin = point.label * dot(theta, point.features);
      // log(1 + exp(-margin)) without overflow for large negative margins
      return margin > 0.0 ? std::log1p(std::exp(-margin))
                          : -margin + std::log1p(std::exp(margin));
    }
  }
  throw std::logic_error("unknown task kind");
}

void check_dims(const std::vector<double>& theta, const SyntheticTask& task) {
  if (static_cast<int>(theta.size()) != task.dimension) {
    std::ostringstream msg;
    msg << "model has dimension " << theta.size() << ", task expects "
        << task.dimension;
    throw DimensionMismatch(msg.str());
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t state = base;
  splitmix64(state);
  state ^= 0xA0761D6478BD642FULL * (stream + 1);
  return splitmix64(state);
}

std::vector<LocalDataset> generate_datasets(const SyntheticTask& task,
                                            int num_users) {
  if (num_users < 1) throw std::invalid_argument("need at least one user");
  if (task.dimension < 1 || task.samples_per_user < 1)
    throw std::invalid_argument("task dimensions must be positive");
  const std::vector<double> separator =
      task.kind == TaskKind::Logistic ? logistic_separator(task)
                                      : std::vector<double>{};
  std::vector<LocalDataset> datasets(num_users);
  for (int u = 0; u < num_users; ++u) {
    std::mt19937_64 rng(derive_seed(task.seed ^ kDatasetStream, u));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto& points = datasets[u].points;
    points.resize(task.samples_per_user);
    for (auto& p : points) {
      p.features.resize(task.dimension);
      for (auto& f : p.features) f = normal(rng);
      if (task.kind == TaskKind::Logistic) {
        const double side = dot(p.features, separator);
        p.label = side >= 0.0 ? 1.0 : -1.0;
      }
    }
  }
  return datasets;
}

double local_loss(const std::vector<double>& theta, const LocalDataset& data,
                  const SyntheticTask& task) {
  check_dims(theta, task);
  double sum = 0.0;
  for (const auto& p : data.points) sum += sample_loss(theta, p, task.kind);
  return sum / static_cast<double>(data.points.size());
}

double global_loss(const std::vector<double>& theta,
                   const std::vector<LocalDataset>& datasets,
                   const SyntheticTask& task) {
  double sum = 0.0;
  for (const auto& d : datasets) sum += local_loss(theta, d, task);
  return sum / static_cast<double>(datasets.size());
}

std::vector<double> local_query(const std::vector<double>& theta,
                                const LocalDataset& data,
                                const SyntheticTask& task) {
  check_dims(theta, task);
  if (data.points.empty()) throw std::invalid_argument("dataset is empty");
  for (const auto& p : data.points) {
    if (p.features.size() != theta.size())
      throw DimensionMismatch("data point dimension does not match the model");
  }
  std::vector<double> mean(theta.size(), 0.0);
  std::vector<double> grad(theta.size());
  for (const auto& p : data.points) {
    sample_gradient(theta, p, task.kind, grad);
    const double g_norm = norm(grad);
    const double scale = g_norm > task.clip_bound ? task.clip_bound / g_norm : 1.0;
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += scale * grad[i];
  }
  const double inv_m = 1.0 / static_cast<double>(data.points.size());
  for (auto& v : mean) v *= inv_m;
  return mean;
}

std::vector<double> dp_response(const std::vector<double>& query,
                                const NoiseSpec& noise, std::mt19937_64& rng) {
  if (noise.dimension != static_cast<int>(query.size()))
    throw DimensionMismatch("noise dimension does not match the query");
  if (noise.sigma == 0.0) return query;
  std::normal_distribution<double> normal(0.0, noise.sigma);
  std::vector<double> out(query.size());
  for (std::size_t i = 0; i < query.size(); ++i) out[i] = query[i] + normal(rng);
  return out;
}

ModelState aggregate_step(const ModelState& state,
                          const std::vector<std::vector<double>>& responses,
                          double stepsize) {
  if (responses.empty()) throw EmptyResponseSet{};
  for (const auto& r : responses) {
    if (r.size() != state.theta.size())
      throw DimensionMismatch("response dimension does not match the model");
  }
  ModelState next;
  next.theta = state.theta;
  next.iteration = state.iteration + 1;
  const double scale = stepsize / static_cast<double>(responses.size());
  for (const auto& r : responses) {
    for (std::size_t i = 0; i < r.size(); ++i) next.theta[i] -= scale * r[i];
  }
  return next;
}

TrainingTrace run_training(const SyntheticTask& task,
                           const std::vector<double>& budgets,
                           const SystemParams& params, std::uint64_t seed,
                           bool noise_disabled) {
  params.validate();
  if (budgets.empty()) throw std::invalid_argument("no participants to train with");
  if (task.dimension != params.model_dim ||
      task.samples_per_user != params.samples_per_user)
    throw DimensionMismatch("task shape disagrees with system parameters");
  const int num_users = static_cast<int>(budgets.size());

  TrainingTrace trace;
  trace.noise.reserve(budgets.size());
  for (double rho : budgets) {
    if (noise_disabled || params.iterations == 0) {
      trace.noise.push_back(NoiseSpec{0.0, task.dimension});
    } else {
      trace.noise.push_back(calibrate_noise(ZcdpBudget{rho}, task.clip_bound,
                                            task.samples_per_user,
                                            params.iterations, task.dimension));
    }
  }

  const std::vector<LocalDataset> datasets = generate_datasets(task, num_users);
  std::vector<std::mt19937_64> streams;
  streams.reserve(budgets.size());
  for (int u = 0; u < num_users; ++u)
    streams.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(u)));

  ModelState state;
  state.theta.assign(task.dimension, 0.0);
  trace.losses.reserve(params.iterations + 1);
  trace.losses.push_back(global_loss(state.theta, datasets, task));

  std::vector<std::vector<double>> responses(num_users);
  for (int t = 0; t < params.iterations; ++t) {
    for (int u = 0; u < num_users; ++u) {
      const std::vector<double> query = local_query(state.theta, datasets[u], task);
      responses[u] = dp_response(query, trace.noise[u], streams[u]);
    }
    state = aggregate_step(state, responses, params.stepsize);
    trace.losses.push_back(global_loss(state.theta, datasets, task));
  }
  trace.final_theta = state.theta;
  return trace;
}

void write_trace_csv(const TrainingTrace& trace, std::ostream& out) {
  out << "iteration,global_loss\n";
  for (std::size_t t = 0; t < trace.losses.size(); ++t) {
    out << t << ',' << trace.losses[t] << '\n';
  }
}

void write_trace_csv(const TrainingTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file: " + path);
  out.precision(17);
  write_trace_csv(trace, out);
}

}  // namespace fedmarket
