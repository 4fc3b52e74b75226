#include "hli/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cstdint>

namespace hli::kernels {
namespace {

// One output row of C += A * B, k ascending.
inline void nn_row(const double* a_row, const Matrix& b, double* c_row) {
  const std::size_t k_dim = b.rows();
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < k_dim; ++k) {
    const double aik = a_row[k];
    const double* b_row = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) c_row[j] += aik * b_row[j];
  }
}

// One output row i of C += A^T * B, k ascending.
inline void tn_row(const Matrix& a, std::size_t i, const Matrix& b, double* c_row) {
  const std::size_t k_dim = a.rows();
  const std::size_t m = a.cols();
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < k_dim; ++k) {
    const double aki = a.data()[k * m + i];
    const double* b_row = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) c_row[j] += aki * b_row[j];
  }
}

Matrix transpose(const Matrix& b) {
  Matrix t(b.cols(), b.rows());
  for (std::size_t r = 0; r < b.rows(); ++r)
    for (std::size_t c = 0; c < b.cols(); ++c) t(c, r) = b(r, c);
  return t;
}

constexpr std::size_t kColBlock = 64;

}  // namespace

namespace serial {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) nn_row(a.data() + i * a.cols(), b, c.data() + i * c.cols());
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows());
  gemm_nn(a, transpose(b), c);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) tn_row(a, i, b, c.data() + i * c.cols());
}

void col_sums(const Matrix& a, std::span<double> out) {
  assert(out.size() == a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* r = a.data() + i * a.cols();
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += r[j];
  }
}

}  // namespace serial

namespace omp {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols());
  const auto rows = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    nn_row(a.data() + i * a.cols(), b, c.data() + i * c.cols());
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows());
  gemm_nn(a, transpose(b), c);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols());
  const auto rows = static_cast<std::int64_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    tn_row(a, static_cast<std::size_t>(i), b, c.data() + i * c.cols());
  }
}

void col_sums(const Matrix& a, std::span<double> out) {
  assert(out.size() == a.cols());
  const auto blocks = static_cast<std::int64_t>((a.cols() + kColBlock - 1) / kColBlock);
#pragma omp parallel for schedule(static)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::size_t j0 = static_cast<std::size_t>(blk) * kColBlock;
    const std::size_t j1 = std::min(a.cols(), j0 + kColBlock);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double* r = a.data() + i * a.cols();
      for (std::size_t j = j0; j < j1; ++j) out[j] += r[j];
    }
  }
}

}  // namespace omp

void gemm_nt(Exec e, const Matrix& a, const Matrix& b, Matrix& c) {
  e == Exec::kParallel ? omp::gemm_nt(a, b, c) : serial::gemm_nt(a, b, c);
}
void gemm_tn(Exec e, const Matrix& a, const Matrix& b, Matrix& c) {
  e == Exec::kParallel ? omp::gemm_tn(a, b, c) : serial::gemm_tn(a, b, c);
}
void gemm_nn(Exec e, const Matrix& a, const Matrix& b, Matrix& c) {
  e == Exec::kParallel ? omp::gemm_nn(a, b, c) : serial::gemm_nn(a, b, c);
}
void col_sums(Exec e, const Matrix& a, std::span<double> out) {
  e == Exec::kParallel ? omp::col_sums(a, out) : serial::col_sums(a, out);
}

void gemv(const Matrix& a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == a.cols() && y.size() == a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* r = a.data() + i * a.cols();
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += r[j] * x[j];
    y[i] += acc;
  }
}

void gemv_t(const Matrix& a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == a.rows() && y.size() == a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* r = a.data() + i * a.cols();
    const double xi = x[i];
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xi * r[j];
  }
}

}  // namespace hli::kernels
