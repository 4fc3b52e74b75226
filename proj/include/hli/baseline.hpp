#pragma once

// Independent per-entity logistic regression over video-level features.

#include <cstddef>
#include <span>

#include "hli/hierarchy.hpp"
#include "hli/tensor.hpp"

namespace hli {

struct LogRegParams {
  Matrix weights;       // N x (D + 1); last column is the bias
  double lambda = 0.0;  // L2 strength on the non-bias weights

  static LogRegParams zeros(std::size_t entities, std::size_t input_dim, double lambda = 0.0) {
    return {Matrix(entities, input_dim + 1), lambda};
  }

  std::size_t entity_count() const noexcept { return weights.rows(); }
  std::size_t input_dim() const noexcept { return weights.cols() == 0 ? 0 : weights.cols() - 1; }

  std::vector<TensorView> tensors() { return {{"weights", weights.rows(), weights.cols(), weights.values()}}; }

  friend bool operator==(const LogRegParams&, const LogRegParams&) = default;
};

// sigmoid(w_e . [x; 1]) for every entity. Throws DataError on a dimension mismatch.
Vector lr_predict(const LogRegParams& p, std::span<const double> x);

struct LogRegLossGrad {
  double loss = 0.0;
  Matrix grad;  // same shape as weights
};

// lambda * sum_e |w_e|^2 (bias excluded) + sum_e cross-entropy(y_e, p_e).
LogRegLossGrad lr_loss_grad(const LogRegParams& p, std::span<const double> x, std::span<const LabelIndex> positives);

// Batched form over the rows of `inputs`; the data term is summed over the
// batch and the regularizer is added once.
LogRegLossGrad lr_batch_loss_grad(const LogRegParams& p, const Matrix& inputs, std::span<const LabelSet> positives,
                                  Exec exec = Exec::kParallel);

// B x N probability matrix.
Matrix lr_predict_batch(const LogRegParams& p, const Matrix& inputs, Exec exec = Exec::kParallel);

}  // namespace hli
