#include "hli/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "hli/error.hpp"
#include "hli/kernels.hpp"

namespace hli {
namespace {

void check_samples(std::span<const VideoFeature> data) {
  if (data.size() < 2) throw DataError("normalizer fit needs at least 2 samples, got " + std::to_string(data.size()));
  const std::size_t d = data.front().size();
  if (d == 0) throw DataError("normalizer fit on zero-dimensional features");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].size() != d)
      throw DataError("sample " + std::to_string(i) + " has dimension " + std::to_string(data[i].size()) +
                      ", expected " + std::to_string(d));
  }
}

constexpr std::size_t kCovChunk = 256;

}  // namespace

VideoFeature mean_pool(const FrameFeatures& f) {
  const std::size_t t = f.frame_count();
  if (t == 0 || f.dim() == 0) throw DataError("mean_pool: empty frame matrix");
  if (t > kMaxFrames) throw DataError("mean_pool: " + std::to_string(t) + " frames exceeds " + std::to_string(kMaxFrames));
  VideoFeature out(f.dim(), 0.0);
  for (std::size_t r = 0; r < t; ++r) {
    const auto row = f.frames.row(r);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += row[d];
  }
  const double inv = 1.0 / static_cast<double>(t);
  for (double& v : out) v *= inv;
  return out;
}

VideoFeature concat_audio(std::span<const double> rgb, std::span<const double> audio) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(rgb.begin(), rgb.end(), finite) || !std::all_of(audio.begin(), audio.end(), finite))
    throw DataError("concat_audio: non-finite feature value");
  VideoFeature out;
  out.reserve(rgb.size() + audio.size());
  out.insert(out.end(), rgb.begin(), rgb.end());
  out.insert(out.end(), audio.begin(), audio.end());
  return out;
}

NormalizerStats fit_znorm(std::span<const VideoFeature> data, double epsilon, bool l2_after, Exec exec) {
  check_samples(data);
  const std::size_t dim = data.front().size();
  NormalizerStats s;
  s.kind = NormKind::kZNorm;
  s.epsilon = epsilon;
  s.l2_after = l2_after;
  s.mean.assign(dim, 0.0);
  s.scale.assign(dim, 0.0);

  // Welford per dimension; dimensions are independent so the parallel split
  // does not change any per-dimension update order.
  const auto dims = static_cast<std::int64_t>(dim);
#pragma omp parallel for schedule(static) if (exec == Exec::kParallel)
  for (std::int64_t d = 0; d < dims; ++d) {
    double mean = 0.0, m2 = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
      const double x = data[n][d];
      const double delta = x - mean;
      mean += delta / static_cast<double>(n + 1);
      m2 += delta * (x - mean);
    }
    s.mean[d] = mean;
    s.scale[d] = std::max(std::sqrt(m2 / static_cast<double>(data.size())), epsilon);
  }
  return s;
}

SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tol, int max_sweeps) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) throw DataError("jacobi_eigen: matrix is not square");
  Matrix a = symmetric;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  SymmetricEigen out;
  for (int sweep = 0;; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a(i, i) * a(i, i);
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) off += a(i, j) * a(i, j);
    }
    if (!std::isfinite(off) || !std::isfinite(diag)) throw NumericError("jacobi_eigen: non-finite matrix entries");
    if (off == 0.0 || std::sqrt(off) < tol * std::sqrt(diag)) {
      out.sweeps = sweep;
      break;
    }
    if (sweep == max_sweeps)
      throw NumericError("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) + " sweeps");

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = a(p, k) = c * akp - s * akq;
          a(k, q) = a(q, k) = s * akp + c * akq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
  }
  return out;
}

NormalizerStats fit_pca_whitening(std::span<const VideoFeature> data, double epsilon, bool l2_after, Exec exec) {
  check_samples(data);
  const std::size_t dim = data.front().size();
  const double inv_n = 1.0 / static_cast<double>(data.size());

  NormalizerStats s;
  s.kind = NormKind::kPcaWhitening;
  s.epsilon = epsilon;
  s.l2_after = l2_after;
  s.mean.assign(dim, 0.0);
  for (const auto& x : data)
    for (std::size_t d = 0; d < dim; ++d) s.mean[d] += x[d];
  for (double& m : s.mean) m *= inv_n;

  Matrix cov(dim, dim);
  for (std::size_t start = 0; start < data.size(); start += kCovChunk) {
    const std::size_t rows = std::min(kCovChunk, data.size() - start);
    Matrix centered(rows, dim);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t d = 0; d < dim; ++d) centered(r, d) = data[start + r][d] - s.mean[d];
    kernels::gemm_tn(exec, centered, centered, cov);
  }
  for (double& c : cov.values()) c *= inv_n;
  // Symmetrize exactly so Jacobi sees a symmetric input.
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i + 1; j < dim; ++j) cov(j, i) = cov(i, j);

  SymmetricEigen eig = jacobi_eigen(cov);
  s.eigenvalues = eig.values;
  s.transform = Matrix(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double k = 1.0 / std::sqrt(std::max(eig.values[i], 0.0) + epsilon);
    for (std::size_t d = 0; d < dim; ++d) s.transform(i, d) = eig.vectors(d, i) * k;
  }
  return s;
}

VideoFeature apply_normalizer(const NormalizerStats& s, std::span<const double> x) {
  if (x.size() != s.dim())
    throw DataError("normalizer expects dimension " + std::to_string(s.dim()) + ", got " + std::to_string(x.size()));
  VideoFeature out(x.size());
  if (s.kind == NormKind::kZNorm) {
    for (std::size_t d = 0; d < x.size(); ++d) out[d] = (x[d] - s.mean[d]) / s.scale[d];
  } else {
    Vector centered(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) centered[d] = x[d] - s.mean[d];
    std::fill(out.begin(), out.end(), 0.0);
    kernels::gemv(s.transform, centered, out);
  }
  if (s.l2_after) out = l2_normalize(out).values;
  return out;
}

L2Result l2_normalize(std::span<const double> x) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  const double norm = std::sqrt(sq);
  L2Result r;
  r.values.assign(x.begin(), x.end());
  if (!(norm > 1e-12)) {
    r.degenerate = true;
    return r;
  }
  for (double& v : r.values) v /= norm;
  return r;
}

}  // namespace hli
