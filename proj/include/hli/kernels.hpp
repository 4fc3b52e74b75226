#pragma once

// Dense kernels used by the batched training and fitting paths.
//
// Every kernel exists twice: `serial` is the reference implementation and
// `omp` splits the output rows across OpenMP threads. Both visit the
// reduction index in the same ascending order for every output element, so
// the two variants produce bitwise-identical results for any thread count.

#include <cstddef>
#include <span>

#include "hli/tensor.hpp"

namespace hli {

namespace kernels {

namespace serial {

// C(MxN) += A(MxK) * B(NxK)^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
// C(MxN) += A(KxM)^T * B(KxN)
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
// C(MxN) += A(MxK) * B(KxN)
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
// out[j] += sum_i A(i, j)
void col_sums(const Matrix& a, std::span<double> out);

}  // namespace serial

namespace omp {

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void col_sums(const Matrix& a, std::span<double> out);

}  // namespace omp

// Dispatch on an execution policy.
void gemm_nt(Exec e, const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(Exec e, const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nn(Exec e, const Matrix& a, const Matrix& b, Matrix& c);
void col_sums(Exec e, const Matrix& a, std::span<double> out);

// y += A x
void gemv(const Matrix& a, std::span<const double> x, std::span<double> y);
// y += A^T x
void gemv_t(const Matrix& a, std::span<const double> x, std::span<double> y);

}  // namespace kernels
}  // namespace hli
