#include "hli/binn.hpp"

#include <cmath>
#include <random>
#include <string>

#include "hli/error.hpp"
#include "hli/kernels.hpp"

namespace hli {
namespace {

void check_labels(const BinnParams& params, const LayerLabels& labels) {
  if (labels.size() != params.layer_count())
    throw DataError("expected labels for " + std::to_string(params.layer_count()) + " layers, got " +
                    std::to_string(labels.size()));
  for (std::size_t t = 0; t < labels.size(); ++t)
    for (LabelIndex y : labels[t])
      if (y >= params.layer_size(t))
        throw DataError("label " + std::to_string(y) + " out of range for layer " + std::to_string(t));
}

void check_input(const BinnParams& params, std::size_t dim) {
  if (dim != params.input_dim())
    throw DataError("input dimension " + std::to_string(dim) + " does not match model dimension " +
                    std::to_string(params.input_dim()));
}

void check_finite(std::span<const double> v, std::size_t t, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite ") + what + " at layer " + std::to_string(t));
}

// Multi-hot target matrix for layer t.
Matrix targets(std::span<const LayerLabels> labels, std::size_t t, std::size_t n) {
  Matrix y(labels.size(), n);
  for (std::size_t b = 0; b < labels.size(); ++b)
    for (LabelIndex l : labels[b][t]) y(b, l) = 1.0;
  return y;
}

void add_row_bias(Matrix& m, std::span<const double> bias) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
}

void outer_add(std::span<const double> u, std::span<const double> v, Matrix& m) {
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) m(i, j) += u[i] * v[j];
}

struct BatchActs {
  std::vector<Matrix> x, f, g, a;
};

BatchActs forward_batch(const BinnParams& p, const Matrix& in, Exec exec) {
  check_input(p, in.cols());
  const std::size_t m = p.layer_count();
  const std::size_t batch = in.rows();
  BatchActs acts;
  acts.x.resize(m);
  acts.f.resize(m);
  acts.g.resize(m);
  acts.a.resize(m);
  for (std::size_t t = 0; t < m; ++t) {
    acts.x[t] = Matrix(batch, p.layer_size(t));
    kernels::gemm_nt(exec, in, p.proj_W[t], acts.x[t]);
    add_row_bias(acts.x[t], p.proj_b[t]);
  }
  for (std::size_t t = 0; t < m; ++t) {
    auto& f = acts.f[t] = Matrix(batch, p.layer_size(t));
    if (t > 0) kernels::gemm_nt(exec, acts.f[t - 1], p.fwd_V[t], f);
    kernels::gemm_nt(exec, acts.x[t], p.fwd_H[t], f);
    add_row_bias(f, p.fwd_b[t]);
  }
  for (std::size_t t = m; t-- > 0;) {
    auto& g = acts.g[t] = Matrix(batch, p.layer_size(t));
    if (t + 1 < m) kernels::gemm_nt(exec, acts.g[t + 1], p.bwd_V[t], g);
    kernels::gemm_nt(exec, acts.x[t], p.bwd_H[t], g);
    add_row_bias(g, p.bwd_b[t]);
  }
  for (std::size_t t = 0; t < m; ++t) {
    auto& a = acts.a[t] = Matrix(batch, p.layer_size(t));
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < a.cols(); ++j)
        a(b, j) = p.agg_fwd_U[t][j] * acts.f[t](b, j) + p.agg_bwd_U[t][j] * acts.g[t](b, j) + p.agg_b[t][j];
    check_finite(a.values(), t, "activation");
  }
  return acts;
}

}  // namespace

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

BinnParams BinnParams::zeros(std::span<const std::size_t> sizes, std::size_t input_dim) {
  BinnParams p;
  const std::size_t m = sizes.size();
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t n = sizes[t];
    p.proj_W.emplace_back(n, input_dim);
    p.proj_b.emplace_back(n, 0.0);
    p.fwd_V.push_back(t > 0 ? Matrix(n, sizes[t - 1]) : Matrix());
    p.fwd_H.emplace_back(n, n);
    p.fwd_b.emplace_back(n, 0.0);
    p.bwd_V.push_back(t + 1 < m ? Matrix(n, sizes[t + 1]) : Matrix());
    p.bwd_H.emplace_back(n, n);
    p.bwd_b.emplace_back(n, 0.0);
    p.agg_fwd_U.emplace_back(n, 0.0);
    p.agg_bwd_U.emplace_back(n, 0.0);
    p.agg_b.emplace_back(n, 0.0);
  }
  return p;
}

std::vector<std::size_t> BinnParams::layer_sizes() const {
  std::vector<std::size_t> n;
  for (const auto& b : proj_b) n.push_back(b.size());
  return n;
}

std::vector<TensorView> BinnParams::tensors() {
  std::vector<TensorView> out;
  auto mat = [&](const char* name, std::vector<Matrix>& v) {
    for (std::size_t t = 0; t < v.size(); ++t)
      if (!v[t].empty()) out.push_back({std::string(name) + "." + std::to_string(t), v[t].rows(), v[t].cols(), v[t].values()});
  };
  auto vec = [&](const char* name, std::vector<Vector>& v) {
    for (std::size_t t = 0; t < v.size(); ++t)
      out.push_back({std::string(name) + "." + std::to_string(t), 1, v[t].size(), v[t]});
  };
  mat("proj_W", proj_W);
  vec("proj_b", proj_b);
  mat("fwd_V", fwd_V);
  mat("fwd_H", fwd_H);
  vec("fwd_b", fwd_b);
  mat("bwd_V", bwd_V);
  mat("bwd_H", bwd_H);
  vec("bwd_b", bwd_b);
  vec("agg_fwd_U", agg_fwd_U);
  vec("agg_bwd_U", agg_bwd_U);
  vec("agg_b", agg_b);
  return out;
}

std::size_t BinnParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& v : const_cast<BinnParams*>(this)->tensors()) n += v.values.size();
  return n;
}

BinnParams init_params(std::span<const std::size_t> sizes, std::size_t input_dim, std::uint64_t seed) {
  if (input_dim == 0) throw DataError("input dimension must be >= 1");
  BinnParams p = BinnParams::zeros(sizes, input_dim);
  std::mt19937_64 rng(seed);
  auto glorot = [&](Matrix& w) {
    if (w.empty()) return;
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : w.values()) v = u(rng);
  };
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    glorot(p.proj_W[t]);
    glorot(p.fwd_V[t]);
    glorot(p.fwd_H[t]);
    glorot(p.bwd_V[t]);
    glorot(p.bwd_H[t]);
    std::fill(p.agg_fwd_U[t].begin(), p.agg_fwd_U[t].end(), 0.5);
    std::fill(p.agg_bwd_U[t].begin(), p.agg_bwd_U[t].end(), 0.5);
  }
  return p;
}

BinnParams init_params(const LabelHierarchy& h, std::size_t input_dim, std::uint64_t seed) {
  const auto sizes = h.layer_sizes();
  return init_params(sizes, input_dim, seed);
}

Vector project(const BinnParams& params, std::span<const double> x, std::size_t t) {
  check_input(params, x.size());
  Vector out = params.proj_b.at(t);
  kernels::gemv(params.proj_W[t], x, out);
  return out;
}

BinnActivations forward(const BinnParams& params, std::span<const double> x) {
  check_input(params, x.size());
  const std::size_t m = params.layer_count();
  BinnActivations acts;
  acts.x.resize(m);
  acts.fwd_a.resize(m);
  acts.bwd_a.resize(m);
  acts.a.resize(m);
  acts.p.resize(m);
  for (std::size_t t = 0; t < m; ++t) acts.x[t] = project(params, x, t);
  for (std::size_t t = 0; t < m; ++t) {
    Vector f = params.fwd_b[t];
    if (t > 0) kernels::gemv(params.fwd_V[t], acts.fwd_a[t - 1], f);
    kernels::gemv(params.fwd_H[t], acts.x[t], f);
    acts.fwd_a[t] = std::move(f);
  }
  for (std::size_t t = m; t-- > 0;) {
    Vector g = params.bwd_b[t];
    if (t + 1 < m) kernels::gemv(params.bwd_V[t], acts.bwd_a[t + 1], g);
    kernels::gemv(params.bwd_H[t], acts.x[t], g);
    acts.bwd_a[t] = std::move(g);
  }
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t n = params.layer_size(t);
    acts.a[t].resize(n);
    acts.p[t].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      acts.a[t][j] = params.agg_fwd_U[t][j] * acts.fwd_a[t][j] + params.agg_bwd_U[t][j] * acts.bwd_a[t][j] +
                     params.agg_b[t][j];
      acts.p[t][j] = sigmoid(acts.a[t][j]);
    }
    check_finite(acts.a[t], t, "activation");
  }
  return acts;
}

double loss(const BinnActivations& acts, const LayerLabels& labels) {
  if (labels.size() != acts.a.size()) throw DataError("label layer count mismatch");
  double e = 0.0;
  for (std::size_t t = 0; t < acts.a.size(); ++t) {
    const auto& a = acts.a[t];
    std::vector<bool> positive(a.size(), false);
    for (LabelIndex y : labels[t]) {
      if (y >= a.size()) throw DataError("label " + std::to_string(y) + " out of range for layer " + std::to_string(t));
      positive[y] = true;
    }
    // -log sigmoid(a) = softplus(-a);  -log(1 - sigmoid(a)) = softplus(a)
    for (std::size_t j = 0; j < a.size(); ++j) e += positive[j] ? softplus(-a[j]) : softplus(a[j]);
  }
  return e;
}

BinnLossGrad backward(const BinnParams& params, std::span<const double> x, const LayerLabels& labels) {
  check_labels(params, labels);
  const BinnActivations acts = forward(params, x);
  const std::size_t m = params.layer_count();

  BinnLossGrad out;
  out.loss = loss(acts, labels);
  auto& g = out.grads.params;
  g = BinnParams::zeros(params.layer_sizes(), params.input_dim());
  out.grads.x.assign(params.input_dim(), 0.0);

  std::vector<Vector> d_a(m), d_f(m), d_g(m);
  for (std::size_t t = 0; t < m; ++t) {
    d_a[t] = acts.p[t];
    for (LabelIndex y : labels[t]) d_a[t][y] -= 1.0;
    for (std::size_t j = 0; j < d_a[t].size(); ++j) {
      g.agg_fwd_U[t][j] = d_a[t][j] * acts.fwd_a[t][j];
      g.agg_bwd_U[t][j] = d_a[t][j] * acts.bwd_a[t][j];
      g.agg_b[t][j] = d_a[t][j];
    }
  }
  // Top-down states feed finer layers, so their errors flow fine to coarse.
  for (std::size_t t = m; t-- > 0;) {
    d_f[t].resize(params.layer_size(t));
    for (std::size_t j = 0; j < d_f[t].size(); ++j) d_f[t][j] = params.agg_fwd_U[t][j] * d_a[t][j];
    if (t + 1 < m) kernels::gemv_t(params.fwd_V[t + 1], d_f[t + 1], d_f[t]);
  }
  for (std::size_t t = 0; t < m; ++t) {
    d_g[t].resize(params.layer_size(t));
    for (std::size_t j = 0; j < d_g[t].size(); ++j) d_g[t][j] = params.agg_bwd_U[t][j] * d_a[t][j];
    if (t > 0) kernels::gemv_t(params.bwd_V[t - 1], d_g[t - 1], d_g[t]);
  }
  for (std::size_t t = 0; t < m; ++t) {
    if (t > 0) outer_add(d_f[t], acts.fwd_a[t - 1], g.fwd_V[t]);
    outer_add(d_f[t], acts.x[t], g.fwd_H[t]);
    g.fwd_b[t] = d_f[t];
    if (t + 1 < m) outer_add(d_g[t], acts.bwd_a[t + 1], g.bwd_V[t]);
    outer_add(d_g[t], acts.x[t], g.bwd_H[t]);
    g.bwd_b[t] = d_g[t];

    Vector d_xt(params.layer_size(t), 0.0);
    kernels::gemv_t(params.fwd_H[t], d_f[t], d_xt);
    kernels::gemv_t(params.bwd_H[t], d_g[t], d_xt);
    outer_add(d_xt, x, g.proj_W[t]);
    g.proj_b[t] = d_xt;
    kernels::gemv_t(params.proj_W[t], d_xt, out.grads.x);
  }
  for (auto& view : g.tensors()) check_finite(view.values, 0, ("gradient " + view.name).c_str());
  return out;
}

std::vector<Vector> predict(const BinnParams& params, std::span<const double> x) {
  return forward(params, x).p;
}

BinnBatchResult batch_loss_grad(const BinnParams& params, const Matrix& inputs, std::span<const LayerLabels> labels,
                                Exec exec) {
  if (labels.size() != inputs.rows()) throw DataError("batch label count does not match input rows");
  for (const auto& l : labels) check_labels(params, l);
  const std::size_t m = params.layer_count();
  const std::size_t batch = inputs.rows();
  const BatchActs acts = forward_batch(params, inputs, exec);

  BinnBatchResult out;
  out.grads = BinnParams::zeros(params.layer_sizes(), params.input_dim());
  auto& g = out.grads;

  std::vector<Matrix> d_a(m), d_f(m), d_g(m);
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t n = params.layer_size(t);
    const Matrix y = targets(labels, t, n);
    d_a[t] = Matrix(batch, n);
    Matrix fu(batch, n), gu(batch, n);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t j = 0; j < n; ++j) {
        const double a = acts.a[t](b, j);
        out.loss += y(b, j) != 0.0 ? softplus(-a) : softplus(a);
        const double d = sigmoid(a) - y(b, j);
        d_a[t](b, j) = d;
        fu(b, j) = d * acts.f[t](b, j);
        gu(b, j) = d * acts.g[t](b, j);
      }
    }
    kernels::col_sums(exec, fu, g.agg_fwd_U[t]);
    kernels::col_sums(exec, gu, g.agg_bwd_U[t]);
    kernels::col_sums(exec, d_a[t], g.agg_b[t]);
  }
  if (!std::isfinite(out.loss)) throw NumericError("non-finite batch loss");

  for (std::size_t t = m; t-- > 0;) {
    const std::size_t n = params.layer_size(t);
    d_f[t] = Matrix(batch, n);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < n; ++j) d_f[t](b, j) = params.agg_fwd_U[t][j] * d_a[t](b, j);
    if (t + 1 < m) kernels::gemm_nn(exec, d_f[t + 1], params.fwd_V[t + 1], d_f[t]);
  }
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t n = params.layer_size(t);
    d_g[t] = Matrix(batch, n);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < n; ++j) d_g[t](b, j) = params.agg_bwd_U[t][j] * d_a[t](b, j);
    if (t > 0) kernels::gemm_nn(exec, d_g[t - 1], params.bwd_V[t - 1], d_g[t]);
  }
  for (std::size_t t = 0; t < m; ++t) {
    if (t > 0) kernels::gemm_tn(exec, d_f[t], acts.f[t - 1], g.fwd_V[t]);
    kernels::gemm_tn(exec, d_f[t], acts.x[t], g.fwd_H[t]);
    kernels::col_sums(exec, d_f[t], g.fwd_b[t]);
    if (t + 1 < m) kernels::gemm_tn(exec, d_g[t], acts.g[t + 1], g.bwd_V[t]);
    kernels::gemm_tn(exec, d_g[t], acts.x[t], g.bwd_H[t]);
    kernels::col_sums(exec, d_g[t], g.bwd_b[t]);

    Matrix d_x(batch, params.layer_size(t));
    kernels::gemm_nn(exec, d_f[t], params.fwd_H[t], d_x);
    kernels::gemm_nn(exec, d_g[t], params.bwd_H[t], d_x);
    kernels::gemm_tn(exec, d_x, inputs, g.proj_W[t]);
    kernels::col_sums(exec, d_x, g.proj_b[t]);
  }
  return out;
}

std::vector<Matrix> predict_batch(const BinnParams& params, const Matrix& inputs, Exec exec) {
  BatchActs acts = forward_batch(params, inputs, exec);
  for (auto& a : acts.a)
    for (double& v : a.values()) v = sigmoid(v);
  return std::move(acts.a);
}

}  // namespace hli
