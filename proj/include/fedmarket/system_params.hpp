#pragma once

#include <stdexcept>

namespace fedmarket {

// Server-side constants shared by the reward optimizer, the noise
// calibration, and the training simulator. Defaults match the simulation
// scale used throughout the test suite.
struct SystemParams {
  double accuracy_weight = 20.0;  // weight of model accuracy vs. reward spend, > 1
  int model_dim = 1000;           // dimension of the trained model
  double stepsize = 0.1;          // gradient-descent stepsize
  int iterations = 500;           // number of training iterations (0 = no training)
  int samples_per_user = 1000;    // records per local dataset
  double grad_bound = 1.0;        // per-sample gradient norm cap (enforced by clipping)

  void validate() const {
    if (!(accuracy_weight > 1.0))
      throw std::invalid_argument("accuracy_weight must be > 1");
    if (model_dim < 1) throw std::invalid_argument("model_dim must be >= 1");
    if (!(stepsize > 0.0)) throw std::invalid_argument("stepsize must be > 0");
    if (iterations < 0) throw std::invalid_argument("iterations cannot be negative");
    if (samples_per_user < 1)
      throw std::invalid_argument("samples_per_user must be >= 1");
    if (!(grad_bound > 0.0)) throw std::invalid_argument("grad_bound must be > 0");
  }
};

}  // namespace fedmarket
