#pragma once

// Bidirectional inference over concept layers.
//
// For each layer t (0 = coarsest) the input is projected to the label space,
//   x_t = W_t x + b_t,
// then propagated top-down (coarse to fine) and bottom-up (fine to coarse),
//   f_t = Vf_t f_{t-1} + Hf_t x_t + bf_t
//   g_t = Vb_t g_{t+1} + Hb_t x_t + bb_t
// with the V terms dropped at the boundary layers, and the two directions
// are combined elementwise:
//   a_t = Uf_t * f_t + Ub_t * g_t + ba_t,   p_t = sigmoid(a_t).
// The loss is the summed sigmoid cross-entropy over every label of every
// layer.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hli/hierarchy.hpp"
#include "hli/tensor.hpp"

namespace hli {

// Positive label set per concept layer for one video.
using LayerLabels = std::vector<LabelSet>;

struct BinnParams {
  std::vector<Matrix> proj_W;  // n_t x D
  std::vector<Vector> proj_b;
  std::vector<Matrix> fwd_V;  // n_t x n_{t-1}; empty at t = 0
  std::vector<Matrix> fwd_H;  // n_t x n_t
  std::vector<Vector> fwd_b;
  std::vector<Matrix> bwd_V;  // n_t x n_{t+1}; empty at the finest layer
  std::vector<Matrix> bwd_H;
  std::vector<Vector> bwd_b;
  std::vector<Vector> agg_fwd_U;
  std::vector<Vector> agg_bwd_U;
  std::vector<Vector> agg_b;

  // All-zero parameters with the given layer sizes.
  static BinnParams zeros(std::span<const std::size_t> layer_sizes, std::size_t input_dim);

  std::size_t layer_count() const noexcept { return proj_W.size(); }
  std::size_t input_dim() const noexcept { return proj_W.empty() ? 0 : proj_W.front().cols(); }
  std::size_t layer_size(std::size_t t) const { return proj_b.at(t).size(); }
  std::vector<std::size_t> layer_sizes() const;

  // Every non-empty tensor in a fixed order.
  std::vector<TensorView> tensors();
  std::size_t parameter_count() const;

  friend bool operator==(const BinnParams&, const BinnParams&) = default;
};

struct BinnActivations {
  std::vector<Vector> x;      // projected input per layer
  std::vector<Vector> fwd_a;  // top-down
  std::vector<Vector> bwd_a;  // bottom-up
  std::vector<Vector> a;      // aggregated
  std::vector<Vector> p;      // sigmoid(a)
};

struct BinnGradients {
  BinnParams params;  // same shapes as the model
  Vector x;           // d loss / d input
};

struct BinnLossGrad {
  double loss = 0.0;
  BinnGradients grads;
};

// Uniform +-sqrt(6 / (fan_in + fan_out)) matrices, zero biases, and both
// aggregation vectors at 0.5. Deterministic for a fixed seed.
BinnParams init_params(std::span<const std::size_t> layer_sizes, std::size_t input_dim, std::uint64_t seed);
BinnParams init_params(const LabelHierarchy& h, std::size_t input_dim, std::uint64_t seed);

// Throws DataError on a dimension mismatch.
Vector project(const BinnParams& params, std::span<const double> x, std::size_t t);

// Throws NumericError (naming the layer) on a non-finite activation.
BinnActivations forward(const BinnParams& params, std::span<const double> x);

// Summed cross-entropy in the stable log-sigmoid form.
double loss(const BinnActivations& acts, const LayerLabels& labels);

BinnLossGrad backward(const BinnParams& params, std::span<const double> x, const LayerLabels& labels);

std::vector<Vector> predict(const BinnParams& params, std::span<const double> x);

// Batched variants: rows of `inputs` are samples. Gradients are summed over
// the batch; each output element is accumulated in ascending sample order so
// Exec::kSerial and Exec::kParallel agree bitwise.
struct BinnBatchResult {
  double loss = 0.0;
  BinnParams grads;
};

BinnBatchResult batch_loss_grad(const BinnParams& params, const Matrix& inputs,
                                std::span<const LayerLabels> labels, Exec exec = Exec::kParallel);

// Per-layer B x n_t probability matrices.
std::vector<Matrix> predict_batch(const BinnParams& params, const Matrix& inputs, Exec exec = Exec::kParallel);

double sigmoid(double a);
// log(1 + exp(a)) without overflow.
double softplus(double a);

}  // namespace hli
