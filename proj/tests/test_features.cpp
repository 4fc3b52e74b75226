#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hli/error.hpp"
#include "hli/features.hpp"
#include "oracles.hpp"

namespace hli {
namespace {

std::vector<VideoFeature> gaussian_samples(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  // Correlated columns with different scales and offsets.
  std::vector<VideoFeature> out(n, VideoFeature(d));
  for (auto& x : out) {
    double prev = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double z = g(rng);
      x[i] = 3.0 + static_cast<double>(i) + (0.5 + static_cast<double>(i)) * z + 0.6 * prev;
      prev = z;
    }
  }
  return out;
}

double max_identity_deviation(const Matrix& c) {
  double worst = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) worst = std::max(worst, std::abs(c(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

TEST(FeaturesTest, MeanPoolBasics) {
  FrameFeatures same{Matrix(5, 3)};
  for (std::size_t r = 0; r < 5; ++r) {
    same.frames(r, 0) = 1.5;
    same.frames(r, 1) = -2.0;
    same.frames(r, 2) = 7.25;
  }
  EXPECT_EQ(mean_pool(same), (VideoFeature{1.5, -2.0, 7.25}));

  FrameFeatures two{Matrix(2, 2)};
  two.frames(0, 0) = 1;
  two.frames(0, 1) = 3;
  two.frames(1, 0) = 3;
  two.frames(1, 1) = 5;
  EXPECT_EQ(mean_pool(two), (VideoFeature{2, 4}));

  EXPECT_THROW(mean_pool(FrameFeatures{}), DataError);
  EXPECT_THROW(mean_pool(FrameFeatures{Matrix(361, 2)}), DataError);
}

TEST(FeaturesTest, MeanPoolMatchesCompensatedSum) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  FrameFeatures f{Matrix(360, 1024)};
  for (double& v : f.frames.values()) v = g(rng);
  const auto pooled = mean_pool(f);
  for (std::size_t d = 0; d < 1024; ++d) {
    Vector col(360);
    for (std::size_t r = 0; r < 360; ++r) col[r] = f.frames(r, d);
    const double want = oracle::neumaier_sum(col) / 360.0;
    EXPECT_LE(std::abs(pooled[d] - want), 1e-6 * std::max(1.0, std::abs(want)));
  }
}

TEST(FeaturesTest, MeanPoolIgnoresFrameOrder) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> small(-8, 8);
  // Small integers keep every partial sum exact, so permutation equality is exact.
  FrameFeatures f{Matrix(40, 6)};
  for (double& v : f.frames.values()) v = small(rng);
  std::vector<std::size_t> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  FrameFeatures g{Matrix(40, 6)};
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t c = 0; c < 6; ++c) g.frames(r, c) = f.frames(perm[r], c);
  EXPECT_EQ(mean_pool(f), mean_pool(g));
}

TEST(FeaturesTest, ConcatAudio) {
  EXPECT_EQ(concat_audio(Vector{1, 2}, Vector{9}), (Vector{1, 2, 9}));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Vector rgb(1024), audio(128);
  for (auto& v : rgb) v = g(rng);
  for (auto& v : audio) v = g(rng);
  const auto out = concat_audio(rgb, audio);
  ASSERT_EQ(out.size(), 1152u);
  EXPECT_EQ(out[1023], rgb[1023]);
  EXPECT_EQ(out[1024], audio[0]);
  EXPECT_EQ(out[1151], audio[127]);
  EXPECT_THROW(concat_audio(Vector{std::nan("")}, Vector{1}), DataError);
}

TEST(FeaturesTest, ZNormHandArithmetic) {
  const std::vector<VideoFeature> data{{0.0}, {2.0}};
  const auto s = fit_znorm(data, kDefaultNormEpsilon, false);
  EXPECT_DOUBLE_EQ(s.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(s.scale[0], 1.0);
  EXPECT_EQ(apply_normalizer(s, Vector{3.0}), (Vector{2.0}));
  EXPECT_THROW(fit_znorm(std::vector<VideoFeature>{{1.0}}), DataError);
  EXPECT_THROW(apply_normalizer(s, Vector{1.0, 2.0}), DataError);
}

TEST(FeaturesTest, ZNormClampsConstantColumn) {
  const std::vector<VideoFeature> data{{5.0, 1.0}, {5.0, 2.0}, {5.0, 3.0}};
  const auto s = fit_znorm(data, 1e-3, false);
  EXPECT_EQ(s.scale[0], 1e-3);
  EXPECT_EQ(apply_normalizer(s, Vector{5.0, 2.0})[0], 0.0);
}

TEST(FeaturesTest, ZNormMatchesTwoPassOracle) {
  const auto data = gaussian_samples(1000, 12, 4);
  const auto s = fit_znorm(data, kDefaultNormEpsilon, false);
  for (std::size_t d = 0; d < 12; ++d) {
    double mean = 0.0;
    for (const auto& x : data) mean += x[d];
    mean /= 1000.0;
    double var = 0.0;
    for (const auto& x : data) var += (x[d] - mean) * (x[d] - mean);
    var /= 1000.0;
    EXPECT_NEAR(s.mean[d], mean, 1e-6);
    EXPECT_NEAR(s.scale[d], std::sqrt(var), 1e-6);
  }
  const auto serial = fit_znorm(data, kDefaultNormEpsilon, false, Exec::kSerial);
  EXPECT_EQ(serial.mean, s.mean);
  EXPECT_EQ(serial.scale, s.scale);
}

TEST(FeaturesTest, ZNormOutputIsStandardized) {
  const auto data = gaussian_samples(2000, 16, 5);
  const auto s = fit_znorm(data, kDefaultNormEpsilon, false);
  std::vector<Vector> out;
  for (const auto& x : data) out.push_back(apply_normalizer(s, x));
  for (std::size_t d = 0; d < 16; ++d) {
    double mean = 0.0, var = 0.0;
    for (const auto& y : out) mean += y[d];
    mean /= static_cast<double>(out.size());
    for (const auto& y : out) var += (y[d] - mean) * (y[d] - mean);
    var /= static_cast<double>(out.size());
    EXPECT_LT(std::abs(mean), 1e-6);
    EXPECT_LT(std::abs(var - 1.0), 1e-4);
  }
}

TEST(FeaturesTest, JacobiDiagonalizes) {
  Matrix a(3, 3);
  const double vals[3][3] = {{4, 1, 2}, {1, 3, 0.5}, {2, 0.5, 5}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = vals[i][j];
  const auto eig = jacobi_eigen(a);
  EXPECT_GE(eig.values[0], eig.values[1]);
  EXPECT_GE(eig.values[1], eig.values[2]);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      double av = 0.0;
      for (std::size_t j = 0; j < 3; ++j) av += a(i, j) * eig.vectors(j, k);
      EXPECT_NEAR(av, eig.values[k] * eig.vectors(i, k), 1e-9);
    }
  }
  EXPECT_NEAR(eig.values[0] + eig.values[1] + eig.values[2], 12.0, 1e-12);
}

TEST(FeaturesTest, WhiteningDiagonalCovariance) {
  // Four points with exact covariance diag(4, 1).
  const std::vector<VideoFeature> data{{2, 1}, {2, -1}, {-2, 1}, {-2, -1}};
  const auto s = fit_pca_whitening(data, kDefaultNormEpsilon, false);
  std::vector<Vector> out;
  for (const auto& x : data) out.push_back(apply_normalizer(s, x));
  EXPECT_LE(max_identity_deviation(oracle::covariance(out)), 1e-6);
}

TEST(FeaturesTest, WhiteningAlreadyWhiteIsOrthogonal) {
  const std::vector<VideoFeature> data{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  const auto s = fit_pca_whitening(data, kDefaultNormEpsilon, false);
  // W W^T = diag(1 / (1 + eps)), i.e. orthogonal up to the stabilizer.
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < 2; ++k) dot += s.transform(i, k) * s.transform(j, k);
      EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-5);
    }
  std::vector<Vector> out;
  for (const auto& x : data) out.push_back(apply_normalizer(s, x));
  EXPECT_LE(max_identity_deviation(oracle::covariance(out)), 1e-5);
}

TEST(FeaturesTest, WhiteningRankDeficientStaysFinite) {
  std::vector<VideoFeature> data;
  for (int i = 0; i < 20; ++i) data.push_back({static_cast<double>(i), 2.0 * i});
  const auto s = fit_pca_whitening(data);
  EXPECT_LT(std::abs(s.eigenvalues[1]), 1e-9);
  for (const auto& x : data)
    for (double v : apply_normalizer(s, x)) EXPECT_TRUE(std::isfinite(v));
}

TEST(FeaturesTest, WhiteningCorrelatedDataIsIdentity) {
  const auto data = gaussian_samples(3000, 24, 6);
  const auto s = fit_pca_whitening(data, kDefaultNormEpsilon, false);
  std::vector<Vector> out;
  for (const auto& x : data) out.push_back(apply_normalizer(s, x));
  EXPECT_LT(max_identity_deviation(oracle::covariance(out)), 1e-4);

  const auto serial = fit_pca_whitening(data, kDefaultNormEpsilon, false, Exec::kSerial);
  EXPECT_EQ(serial.transform, s.transform);
}

TEST(FeaturesTest, L2Normalize) {
  const auto r = l2_normalize(Vector{3, 4});
  EXPECT_FALSE(r.degenerate);
  EXPECT_DOUBLE_EQ(r.values[0], 0.6);
  EXPECT_DOUBLE_EQ(r.values[1], 0.8);

  const auto z = l2_normalize(Vector{0, 0});
  EXPECT_TRUE(z.degenerate);
  EXPECT_EQ(z.values, (Vector{0, 0}));

  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vector x(1 + trial % 37);
    for (auto& v : x) v = g(rng);
    const auto once = l2_normalize(x).values;
    double sq = 0.0;
    for (double v : once) sq += v * v;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-9);
    const auto twice = l2_normalize(once).values;
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(twice[i], once[i], 1e-15);
  }
}

TEST(FeaturesTest, ApplyWithL2GivesUnitNorm) {
  const auto data = gaussian_samples(100, 8, 9);
  for (auto kind : {NormKind::kZNorm, NormKind::kPcaWhitening}) {
    const auto s = kind == NormKind::kZNorm ? fit_znorm(data) : fit_pca_whitening(data);
    for (const auto& x : data) {
      const auto y = apply_normalizer(s, x);
      double sq = 0.0;
      for (double v : y) sq += v * v;
      EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-9);
    }
  }
}

}  // namespace
}  // namespace hli
