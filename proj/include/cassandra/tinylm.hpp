#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cassandra/bf16.hpp"
#include "cassandra/selection.hpp"

namespace cassandra {

struct TinyLmConfig {
  int vocab = 64;
  int d_model = 64;
  int layers = 2;
  int ffn_mult = 4;
  int max_seq = 512;
};

struct MatrixBf16 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Bf16> data;

  MatrixBf16() = default;
  MatrixBf16(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}
  Bf16& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  Bf16 at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Single-head decoder-only toy transformer: per-layer QKV/output projections,
// ReLU feed-forward, RMS normalization, tied output head. Weights are
// BF16-rounded splitmix64 draws in [-0.1, 0.1]; inference widens to float.
struct TinyLmLayer {
  MatrixBf16 wq, wk, wv, wo;  // d x d
  MatrixBf16 w1;              // ffn_mult*d x d
  MatrixBf16 w2;              // d x ffn_mult*d
  std::vector<Bf16> attn_norm_gain, ffn_norm_gain;  // d
};

struct TinyLm {
  TinyLmConfig cfg;
  std::uint64_t seed = 0;
  MatrixBf16 embedding;  // vocab x d, also the tied output head
  std::vector<TinyLmLayer> layers;
  std::vector<Bf16> final_norm_gain;
};

TinyLm init_tiny_lm(std::uint64_t seed, const TinyLmConfig& cfg = {});

// Widened weights actually used by forward(); built once per view.
struct LayerViewF {
  MatrixF wq, wk, wv, wo, w1, w2;
  std::vector<float> attn_norm_gain, ffn_norm_gain;
};

struct ModelViewF {
  TinyLmConfig cfg;
  MatrixF embedding;
  std::vector<LayerViewF> layers;
  std::vector<float> final_norm_gain;
};

ModelViewF widen(const TinyLm& model);

// Committed KV entries for one layer; rows are BF16-rounded at append time
// and stored widened (every value is exactly BF16-representable).
struct LayerKv {
  std::vector<std::vector<float>> keys;
  std::vector<std::vector<float>> values;
};

struct KvView {
  std::vector<LayerKv> layers;

  explicit KvView(int num_layers = 0) : layers(num_layers) {}
  std::size_t length() const { return layers.empty() ? 0 : layers[0].keys.size(); }
};

struct ForwardResult {
  // one row of logits per input position
  std::vector<std::vector<float>> logits;
  // BF16-rounded K/V rows computed for the input positions, per layer
  std::vector<LayerKv> new_kv;
};

// Causal incremental forward over `tokens` given the committed cache; new K/V
// rows go to the result, not the cache. Tokens are processed sequentially so
// batched and token-by-token calls are bit-identical.
ForwardResult forward(const ModelViewF& view, const KvView& cache,
                      std::span<const int> tokens);

// y = M x (rows x cols times cols), OpenMP kernel plus serial reference
void matvec(const MatrixF& m, std::span<const float> x, std::span<float> y);
void matvec_serial(const MatrixF& m, std::span<const float> x, std::span<float> y);

std::vector<double> softmax(std::span<const float> logits);
int argmax_token(std::span<const float> logits);

}  // namespace cassandra
