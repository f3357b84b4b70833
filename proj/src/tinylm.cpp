#include "cassandra/tinylm.hpp"

#include <cmath>
#include <stdexcept>

#include "cassandra/rng.hpp"

namespace cassandra {

namespace {

constexpr float kNormEps = 1e-5f;

// BF16 draw honoring the documented [-0.1, 0.1] bound: rounding a draw near
// the edge can overshoot by half an ulp, so step the magnitude back down.
Bf16 draw_weight(SplitMix64& rng) {
  Bf16 b = round_f32_to_bf16(static_cast<float>(rng.uniform(-0.1, 0.1)));
  if (std::fabs(to_float(b)) > 0.1f) b.bits -= 1;
  return b;
}

void fill_matrix(MatrixBf16& m, SplitMix64& rng) {
  for (Bf16& b : m.data) b = draw_weight(rng);
}

void fill_gain(std::vector<Bf16>& g, std::size_t n, SplitMix64& rng) {
  g.resize(n);
  for (Bf16& b : g) b = draw_weight(rng);
}

std::vector<float> widen_vec(const std::vector<Bf16>& v) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = to_float(v[i]);
  return out;
}

MatrixF widen_matrix(const MatrixBf16& m) {
  MatrixF out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) out.data[i] = to_float(m.data[i]);
  return out;
}

void rms_norm(std::span<const float> x, std::span<const float> gain,
              std::span<float> out) {
  float ss = 0.0f;
  for (float v : x) ss += v * v;
  float inv = 1.0f / std::sqrt(ss / static_cast<float>(x.size()) + kNormEps);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * gain[i];
}

}  // namespace

TinyLm init_tiny_lm(std::uint64_t seed, const TinyLmConfig& cfg) {
  if (cfg.vocab <= 0 || cfg.d_model <= 0 || cfg.layers <= 0 || cfg.ffn_mult <= 0)
    throw std::invalid_argument("model dimensions must be positive");
  TinyLm m;
  m.cfg = cfg;
  m.seed = seed;
  SplitMix64 rng(seed);
  std::size_t d = static_cast<std::size_t>(cfg.d_model);
  std::size_t h = d * static_cast<std::size_t>(cfg.ffn_mult);
  m.embedding = MatrixBf16(static_cast<std::size_t>(cfg.vocab), d);
  fill_matrix(m.embedding, rng);
  m.layers.resize(static_cast<std::size_t>(cfg.layers));
  for (TinyLmLayer& L : m.layers) {
    L.wq = MatrixBf16(d, d);
    L.wk = MatrixBf16(d, d);
    L.wv = MatrixBf16(d, d);
    L.wo = MatrixBf16(d, d);
    L.w1 = MatrixBf16(h, d);
    L.w2 = MatrixBf16(d, h);
    fill_matrix(L.wq, rng);
    fill_matrix(L.wk, rng);
    fill_matrix(L.wv, rng);
    fill_matrix(L.wo, rng);
    fill_matrix(L.w1, rng);
    fill_matrix(L.w2, rng);
    fill_gain(L.attn_norm_gain, d, rng);
    fill_gain(L.ffn_norm_gain, d, rng);
  }
  fill_gain(m.final_norm_gain, d, rng);
  return m;
}

ModelViewF widen(const TinyLm& model) {
  ModelViewF v;
  v.cfg = model.cfg;
  v.embedding = widen_matrix(model.embedding);
  for (const TinyLmLayer& L : model.layers) {
    LayerViewF lv;
    lv.wq = widen_matrix(L.wq);
    lv.wk = widen_matrix(L.wk);
    lv.wv = widen_matrix(L.wv);
    lv.wo = widen_matrix(L.wo);
    lv.w1 = widen_matrix(L.w1);
    lv.w2 = widen_matrix(L.w2);
    lv.attn_norm_gain = widen_vec(L.attn_norm_gain);
    lv.ffn_norm_gain = widen_vec(L.ffn_norm_gain);
    v.layers.push_back(std::move(lv));
  }
  v.final_norm_gain = widen_vec(model.final_norm_gain);
  return v;
}

void matvec_serial(const MatrixF& m, std::span<const float> x, std::span<float> y) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    float acc = 0.0f;
    const float* row = m.data.data() + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void matvec(const MatrixF& m, std::span<const float> x, std::span<float> y) {
#pragma omp parallel for schedule(static) if (m.rows * m.cols > 65536)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m.rows); ++i) {
    float acc = 0.0f;
    const float* row = m.data.data() + static_cast<std::size_t>(i) * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * x[j];
    y[static_cast<std::size_t>(i)] = acc;
  }
}

std::vector<double> softmax(std::span<const float> logits) {
  float mx = logits[0];
  for (float v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits[i] - mx));
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

int argmax_token(std::span<const float> logits) {
  int best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  return best;
}

ForwardResult forward(const ModelViewF& view, const KvView& cache,
                      std::span<const int> tokens) {
  std::size_t d = static_cast<std::size_t>(view.cfg.d_model);
  std::size_t h = d * static_cast<std::size_t>(view.cfg.ffn_mult);
  std::size_t nl = view.layers.size();
  if (cache.layers.size() != nl) throw std::invalid_argument("cache layer mismatch");
  if (cache.length() + tokens.size() > static_cast<std::size_t>(view.cfg.max_seq))
    throw std::runtime_error("context overflow");

  ForwardResult res;
  res.new_kv.resize(nl);
  float scale = 1.0f / std::sqrt(static_cast<float>(d));

  std::vector<float> x(d), normed(d), q(d), k(d), v(d), attn_out(d), proj(d);
  std::vector<float> ffn_hidden(h), ffn_out(d);

  for (int tok : tokens) {
    if (tok < 0 || tok >= view.cfg.vocab) throw std::invalid_argument("token out of range");
    for (std::size_t j = 0; j < d; ++j) x[j] = view.embedding.at(static_cast<std::size_t>(tok), j);

    for (std::size_t li = 0; li < nl; ++li) {
      const LayerViewF& L = view.layers[li];
      rms_norm(x, L.attn_norm_gain, normed);
      matvec(L.wq, normed, q);
      matvec(L.wk, normed, k);
      matvec(L.wv, normed, v);

      // round new K/V to bf16 before they are attended, matching what the
      // committed cache holds
      for (std::size_t j = 0; j < d; ++j) {
        k[j] = to_float(round_f32_to_bf16(k[j]));
        v[j] = to_float(round_f32_to_bf16(v[j]));
      }
      res.new_kv[li].keys.push_back(k);
      res.new_kv[li].values.push_back(v);

      const auto& ck = cache.layers[li].keys;
      const auto& cv = cache.layers[li].values;
      std::size_t ctx = ck.size() + res.new_kv[li].keys.size();
      std::vector<float> scores(ctx);
      for (std::size_t p = 0; p < ctx; ++p) {
        const std::vector<float>& kp =
            p < ck.size() ? ck[p] : res.new_kv[li].keys[p - ck.size()];
        float dot = 0.0f;
        for (std::size_t j = 0; j < d; ++j) dot += q[j] * kp[j];
        scores[p] = dot * scale;
      }
      std::vector<double> w = softmax(scores);
      std::fill(attn_out.begin(), attn_out.end(), 0.0f);
      for (std::size_t p = 0; p < ctx; ++p) {
        const std::vector<float>& vp =
            p < cv.size() ? cv[p] : res.new_kv[li].values[p - cv.size()];
        float wp = static_cast<float>(w[p]);
        for (std::size_t j = 0; j < d; ++j) attn_out[j] += wp * vp[j];
      }
      matvec(L.wo, attn_out, proj);
      for (std::size_t j = 0; j < d; ++j) x[j] += proj[j];

      rms_norm(x, L.ffn_norm_gain, normed);
      matvec(L.w1, normed, ffn_hidden);
      for (float& fv : ffn_hidden) fv = fv > 0.0f ? fv : 0.0f;  // ReLU
      matvec(L.w2, ffn_hidden, ffn_out);
      for (std::size_t j = 0; j < d; ++j) x[j] += ffn_out[j];
    }

    rms_norm(x, view.final_norm_gain, normed);
    std::vector<float> logits(static_cast<std::size_t>(view.cfg.vocab));
    matvec(view.embedding, normed, logits);  // tied output head
    res.logits.push_back(std::move(logits));
  }
  return res;
}

}  // namespace cassandra
