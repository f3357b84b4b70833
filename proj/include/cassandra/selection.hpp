#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cassandra {

// Dense row-major float matrix, just enough for scoring and the toy model.
struct MatrixF {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  MatrixF() = default;
  MatrixF(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

  float& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  float at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const float> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
};

// One bit per tensor element in row-major order: 1 = speculation, 0 = pruned
// into verification. Bits are MSB-first within bytes, matching the .cass
// bitmap section.
class KeepBitmap {
 public:
  KeepBitmap() = default;
  explicit KeepBitmap(std::size_t n) : size_(n), bytes_((n + 7) / 8, 0) {}

  static KeepBitmap all_ones(std::size_t n);
  static KeepBitmap from_bytes(std::vector<std::uint8_t> bytes, std::size_t n);

  bool get(std::size_t i) const { return (bytes_[i / 8] >> (7 - i % 8)) & 1u; }
  void set(std::size_t i, bool v);

  std::size_t size() const { return size_; }
  std::size_t kept_count() const { return kept_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::size_t size_ = 0;
  std::size_t kept_ = 0;
  std::vector<std::uint8_t> bytes_;
};

using CalibrationNorms = std::vector<float>;

// norms[j] = sqrt(sum_s activations[s][j]^2); throws on an empty sample set.
CalibrationNorms calibration_norms(const MatrixF& activations);

// score[i][j] = |W[i][j]| * norms[j]
MatrixF wanda_scores(const MatrixF& weights, const CalibrationNorms& norms);
MatrixF wanda_scores_serial(const MatrixF& weights, const CalibrationNorms& norms);

// Per row, keeps the k = round(keep_fraction * cols) highest-scoring entries
// (round-half-up; ties broken by lower column index).
KeepBitmap select_topk_per_row(const MatrixF& scores, double keep_fraction);

// Top-k by |value| within one token vector, same rounding and tie rule.
KeepBitmap kv_select_per_token(std::span<const float> token_vector,
                               double keep_fraction);

// rounded kept count for one comparison group
std::size_t kept_count_for(std::size_t length, double keep_fraction);

}  // namespace cassandra
