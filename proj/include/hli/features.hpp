#pragma once

#include <cstddef>
#include <span>

#include "hli/tensor.hpp"

namespace hli {

// Video-level feature vector x in R^D.
using VideoFeature = Vector;

inline constexpr std::size_t kMaxFrames = 360;
inline constexpr double kDefaultNormEpsilon = 1e-6;

// T x D matrix of per-frame activations, one row per frame.
struct FrameFeatures {
  Matrix frames;

  std::size_t frame_count() const noexcept { return frames.rows(); }
  std::size_t dim() const noexcept { return frames.cols(); }
};

// Throws DataError on an empty frame matrix or more than kMaxFrames frames.
VideoFeature mean_pool(const FrameFeatures& f);

// rgb entries first, then audio. Throws DataError on non-finite input.
VideoFeature concat_audio(std::span<const double> rgb, std::span<const double> audio);

enum class NormKind { kZNorm, kPcaWhitening };

struct NormalizerStats {
  NormKind kind = NormKind::kZNorm;
  Vector mean;
  Vector scale;      // z-norm: per-dimension stddev, clamped to >= epsilon
  Matrix transform;  // whitening: D x D, row i = eigenvector_i / sqrt(lambda_i + epsilon)
  Vector eigenvalues;  // whitening only, descending
  double epsilon = kDefaultNormEpsilon;
  bool l2_after = true;

  std::size_t dim() const noexcept { return mean.size(); }
};

// Population (1/N) statistics via a single streaming Welford pass.
// Throws DataError with fewer than 2 samples or ragged input.
NormalizerStats fit_znorm(std::span<const VideoFeature> data, double epsilon = kDefaultNormEpsilon,
                          bool l2_after = true, Exec exec = Exec::kParallel);

// Throws NumericError if the eigensolver does not converge.
NormalizerStats fit_pca_whitening(std::span<const VideoFeature> data, double epsilon = kDefaultNormEpsilon,
                                  bool l2_after = true, Exec exec = Exec::kParallel);

// Throws DataError on a dimension mismatch.
VideoFeature apply_normalizer(const NormalizerStats& s, std::span<const double> x);

struct L2Result {
  VideoFeature values;
  bool degenerate = false;  // input norm <= 1e-12; values returned unchanged
};

L2Result l2_normalize(std::span<const double> x);

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // column j is the eigenvector for values[j]
  int sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
// `tol` times the diagonal norm. Throws NumericError after `max_sweeps`.
SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tol = 1e-10, int max_sweeps = 100);

}  // namespace hli
