#include "cassandra/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cassandra {

KeepBitmap KeepBitmap::all_ones(std::size_t n) {
  KeepBitmap b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, true);
  return b;
}

KeepBitmap KeepBitmap::from_bytes(std::vector<std::uint8_t> bytes, std::size_t n) {
  if (bytes.size() != (n + 7) / 8) throw std::invalid_argument("bitmap byte count mismatch");
  KeepBitmap b;
  b.size_ = n;
  b.bytes_ = std::move(bytes);
  for (std::size_t i = 0; i < n; ++i)
    if (b.get(i)) ++b.kept_;
  return b;
}

void KeepBitmap::set(std::size_t i, bool v) {
  bool cur = get(i);
  if (cur == v) return;
  std::uint8_t mask = static_cast<std::uint8_t>(0x80u >> (i % 8));
  if (v) {
    bytes_[i / 8] |= mask;
    ++kept_;
  } else {
    bytes_[i / 8] &= static_cast<std::uint8_t>(~mask);
    --kept_;
  }
}

CalibrationNorms calibration_norms(const MatrixF& activations) {
  if (activations.rows == 0 || activations.cols == 0)
    throw std::invalid_argument("empty calibration set");
  CalibrationNorms norms(activations.cols, 0.0f);
  for (std::size_t s = 0; s < activations.rows; ++s)
    for (std::size_t j = 0; j < activations.cols; ++j) {
      float a = activations.at(s, j);
      norms[j] += a * a;
    }
  for (float& n : norms) n = std::sqrt(n);
  return norms;
}

MatrixF wanda_scores_serial(const MatrixF& weights, const CalibrationNorms& norms) {
  if (weights.cols != norms.size())
    throw std::invalid_argument("norms length does not match weight columns");
  MatrixF scores(weights.rows, weights.cols);
  for (std::size_t i = 0; i < weights.rows; ++i)
    for (std::size_t j = 0; j < weights.cols; ++j)
      scores.at(i, j) = std::fabs(weights.at(i, j)) * norms[j];
  return scores;
}

MatrixF wanda_scores(const MatrixF& weights, const CalibrationNorms& norms) {
  if (weights.cols != norms.size())
    throw std::invalid_argument("norms length does not match weight columns");
  MatrixF scores(weights.rows, weights.cols);
#pragma omp parallel for schedule(static) if (weights.rows * weights.cols > 4096)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(weights.rows); ++i)
    for (std::size_t j = 0; j < weights.cols; ++j)
      scores.at(static_cast<std::size_t>(i), j) =
          std::fabs(weights.at(static_cast<std::size_t>(i), j)) * norms[j];
  return scores;
}

std::size_t kept_count_for(std::size_t length, double keep_fraction) {
  // round-half-up, deterministic across platforms
  return static_cast<std::size_t>(
      std::floor(keep_fraction * static_cast<double>(length) + 0.5));
}

namespace {

void select_row(std::span<const float> scores, std::size_t k, KeepBitmap& out,
                std::size_t base) {
  std::vector<std::uint32_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0u);
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // tie: lowest index wins
  };
  if (k < idx.size())
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                     idx.end(), better);
  for (std::size_t r = 0; r < k; ++r) out.set(base + idx[r], true);
}

}  // namespace

KeepBitmap select_topk_per_row(const MatrixF& scores, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw std::invalid_argument("keep_fraction must be in (0, 1]");
  KeepBitmap bm(scores.rows * scores.cols);
  std::size_t k = kept_count_for(scores.cols, keep_fraction);
  for (std::size_t i = 0; i < scores.rows; ++i)
    select_row(scores.row(i), k, bm, i * scores.cols);
  return bm;
}

KeepBitmap kv_select_per_token(std::span<const float> token_vector,
                               double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw std::invalid_argument("keep_fraction must be in (0, 1]");
  std::vector<float> mags(token_vector.size());
  for (std::size_t i = 0; i < mags.size(); ++i) mags[i] = std::fabs(token_vector[i]);
  KeepBitmap bm(mags.size());
  select_row(mags, kept_count_for(mags.size(), keep_fraction), bm, 0);
  return bm;
}

}  // namespace cassandra
