#include "hli/baseline.hpp"

#include <cmath>
#include <string>

#include "hli/binn.hpp"
#include "hli/error.hpp"
#include "hli/kernels.hpp"

namespace hli {
namespace {

void check_dim(const LogRegParams& p, std::size_t d) {
  if (d != p.input_dim())
    throw DataError("input dimension " + std::to_string(d) + " does not match model dimension " +
                    std::to_string(p.input_dim()));
}

std::vector<bool> positive_mask(const LogRegParams& p, std::span<const LabelIndex> positives) {
  std::vector<bool> mask(p.entity_count(), false);
  for (LabelIndex e : positives) {
    if (e >= mask.size()) throw DataError("entity " + std::to_string(e) + " out of range");
    mask[e] = true;
  }
  return mask;
}

double logit(const LogRegParams& p, std::size_t e, std::span<const double> x) {
  const auto w = p.weights.row(e);
  double z = w[x.size()];
  for (std::size_t d = 0; d < x.size(); ++d) z += w[d] * x[d];
  return z;
}

void add_regularizer(const LogRegParams& p, LogRegLossGrad& out) {
  if (p.lambda == 0.0) return;
  const std::size_t dim = p.input_dim();
  for (std::size_t e = 0; e < p.entity_count(); ++e) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double w = p.weights(e, d);
      out.loss += p.lambda * w * w;
      out.grad(e, d) += 2.0 * p.lambda * w;
    }
  }
}

Matrix logits_batch(const LogRegParams& p, const Matrix& inputs, Exec exec) {
  check_dim(p, inputs.cols());
  const std::size_t dim = p.input_dim();
  Matrix w(p.entity_count(), dim);
  for (std::size_t e = 0; e < p.entity_count(); ++e)
    for (std::size_t d = 0; d < dim; ++d) w(e, d) = p.weights(e, d);
  Matrix z(inputs.rows(), p.entity_count());
  kernels::gemm_nt(exec, inputs, w, z);
  for (std::size_t b = 0; b < z.rows(); ++b)
    for (std::size_t e = 0; e < z.cols(); ++e) z(b, e) += p.weights(e, dim);
  return z;
}

}  // namespace

Vector lr_predict(const LogRegParams& p, std::span<const double> x) {
  check_dim(p, x.size());
  Vector out(p.entity_count());
  for (std::size_t e = 0; e < out.size(); ++e) out[e] = sigmoid(logit(p, e, x));
  return out;
}

LogRegLossGrad lr_loss_grad(const LogRegParams& p, std::span<const double> x, std::span<const LabelIndex> positives) {
  check_dim(p, x.size());
  const auto mask = positive_mask(p, positives);
  LogRegLossGrad out{0.0, Matrix(p.weights.rows(), p.weights.cols())};
  for (std::size_t e = 0; e < p.entity_count(); ++e) {
    const double z = logit(p, e, x);
    out.loss += mask[e] ? softplus(-z) : softplus(z);
    const double d = sigmoid(z) - (mask[e] ? 1.0 : 0.0);
    auto g = out.grad.row(e);
    for (std::size_t k = 0; k < x.size(); ++k) g[k] = d * x[k];
    g[x.size()] = d;
  }
  add_regularizer(p, out);
  return out;
}

LogRegLossGrad lr_batch_loss_grad(const LogRegParams& p, const Matrix& inputs, std::span<const LabelSet> positives,
                                  Exec exec) {
  if (positives.size() != inputs.rows()) throw DataError("batch label count does not match input rows");
  const std::size_t dim = p.input_dim();
  const Matrix z = logits_batch(p, inputs, exec);
  Matrix delta(z.rows(), z.cols());
  LogRegLossGrad out{0.0, Matrix(p.weights.rows(), p.weights.cols())};
  for (std::size_t b = 0; b < z.rows(); ++b) {
    const auto mask = positive_mask(p, positives[b]);
    for (std::size_t e = 0; e < z.cols(); ++e) {
      out.loss += mask[e] ? softplus(-z(b, e)) : softplus(z(b, e));
      delta(b, e) = sigmoid(z(b, e)) - (mask[e] ? 1.0 : 0.0);
    }
  }
  if (!std::isfinite(out.loss)) throw NumericError("non-finite batch loss");

  Matrix gw(p.entity_count(), dim);
  kernels::gemm_tn(exec, delta, inputs, gw);
  Vector gb(p.entity_count(), 0.0);
  kernels::col_sums(exec, delta, gb);
  for (std::size_t e = 0; e < p.entity_count(); ++e) {
    for (std::size_t d = 0; d < dim; ++d) out.grad(e, d) = gw(e, d);
    out.grad(e, dim) = gb[e];
  }
  add_regularizer(p, out);
  return out;
}

Matrix lr_predict_batch(const LogRegParams& p, const Matrix& inputs, Exec exec) {
  Matrix z = logits_batch(p, inputs, exec);
  for (double& v : z.values()) v = sigmoid(v);
  return z;
}

}  // namespace hli
