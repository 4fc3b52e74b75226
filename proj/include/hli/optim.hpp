#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hli/tensor.hpp"

namespace hli {

struct AdamConfig {
  double base_lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-8;
  double decay_factor = 0.1;
  std::uint64_t decay_every = 40000;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;  // completed updates
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// Zero moments shaped like `params`. Throws std::invalid_argument on a beta
// outside [0, 1).
AdamState make_adam(const AdamConfig& config, std::span<const TensorView> params);

// base_lr * decay_factor^floor(step / decay_every)
double current_lr(const AdamState& s);

// One bias-corrected Adam update with decoupled weight decay:
//   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
// where lr = current_lr(s) before the step counter advances.
// Throws NumericError if any updated value is non-finite; params are left
// untouched in that case.
void adam_step(AdamState& s, std::span<const TensorView> params, std::span<const TensorView> grads);

}  // namespace hli
