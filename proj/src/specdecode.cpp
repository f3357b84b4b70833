#include "cassandra/specdecode.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace cassandra {

namespace {

constexpr std::size_t kCalibrationSamples = 128;

struct EncodedMatrix {
  MatrixF draft;
  MatrixF target;
  std::uint64_t spec_bits = 0;
  std::uint64_t total_bits = 0;
};

MatrixF widen_to_matrix(const std::vector<Bf16>& v, std::size_t rows, std::size_t cols) {
  MatrixF m(rows, cols);
  for (std::size_t i = 0; i < v.size(); ++i) m.data[i] = to_float(v[i]);
  return m;
}

EncodedMatrix transform_weight(const MatrixBf16& w, const DraftConfig& cfg,
                               SplitMix64 rng) {
  MatrixF wf(w.rows, w.cols);
  for (std::size_t i = 0; i < w.data.size(); ++i) wf.data[i] = to_float(w.data[i]);

  MatrixF acts(kCalibrationSamples, w.cols);
  for (float& a : acts.data) a = static_cast<float>(rng.uniform(-1.0, 1.0));
  CalibrationNorms norms = calibration_norms(acts);
  MatrixF scores = wanda_scores(wf, norms);
  KeepBitmap bm = select_topk_per_row(scores, 1.0 - cfg.w_p);

  CassandraTensor t = encode_tensor(
      w.data, bm, cfg.mode, cfg.w_t,
      {static_cast<std::uint32_t>(w.rows), static_cast<std::uint32_t>(w.cols)});
  CompressionStats cs = compression_stats(t);
  EncodedMatrix out;
  out.draft = widen_to_matrix(decode_draft(t), w.rows, w.cols);
  out.target = widen_to_matrix(decode_target(t), w.rows, w.cols);
  out.spec_bits = cs.spec_bits;
  out.total_bits = cs.spec_bits + cs.verify_bits;
  return out;
}

}  // namespace

DraftModel build_draft_model(const TinyLm& model, const DraftConfig& cfg) {
  cfg.validate();
  DraftModel dm;
  dm.draft_view.cfg = model.cfg;
  dm.target_view.cfg = model.cfg;

  // embedding and norm gains stay untransformed in both views
  ModelViewF raw = widen(model);
  dm.draft_view.embedding = raw.embedding;
  dm.target_view.embedding = raw.embedding;
  dm.draft_view.final_norm_gain = raw.final_norm_gain;
  dm.target_view.final_norm_gain = raw.final_norm_gain;

  double untransformed_elems =
      static_cast<double>(model.embedding.data.size() + model.final_norm_gain.size());
  std::uint64_t spec_bits = 0, total_bits = 0;
  double transformed_elems = 0.0;

  SplitMix64 base(model.seed ^ 0xc0ffee1234abcdull);
  std::uint64_t salt = 0;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const TinyLmLayer& L = model.layers[li];
    LayerViewF dv, tv;
    const MatrixBf16* mats[6] = {&L.wq, &L.wk, &L.wv, &L.wo, &L.w1, &L.w2};
    MatrixF* dsts_d[6] = {&dv.wq, &dv.wk, &dv.wv, &dv.wo, &dv.w1, &dv.w2};
    MatrixF* dsts_t[6] = {&tv.wq, &tv.wk, &tv.wv, &tv.wo, &tv.w1, &tv.w2};
    for (int m = 0; m < 6; ++m) {
      EncodedMatrix enc = transform_weight(*mats[m], cfg, base.fork(salt++));
      *dsts_d[m] = std::move(enc.draft);
      *dsts_t[m] = std::move(enc.target);
      spec_bits += enc.spec_bits;
      total_bits += enc.total_bits;
      transformed_elems += static_cast<double>(mats[m]->data.size());
    }
    dv.attn_norm_gain = raw.layers[li].attn_norm_gain;
    dv.ffn_norm_gain = raw.layers[li].ffn_norm_gain;
    tv.attn_norm_gain = dv.attn_norm_gain;
    tv.ffn_norm_gain = dv.ffn_norm_gain;
    untransformed_elems += static_cast<double>(dv.attn_norm_gain.size() +
                                               dv.ffn_norm_gain.size());
    dm.draft_view.layers.push_back(std::move(dv));
    dm.target_view.layers.push_back(std::move(tv));
  }

  dm.weight_spec_bytes = spec_bits / 8.0 + untransformed_elems * 2.0;
  dm.weight_total_bytes = total_bits / 8.0 + untransformed_elems * 2.0;
  dm.weight_raw_bytes = (transformed_elems + untransformed_elems) * 2.0;
  return dm;
}

void SpecKvStore::commit(const std::vector<LayerKv>& new_kv, std::size_t pos) {
  for (std::size_t li = 0; li < target_.layers.size(); ++li) {
    for (int which = 0; which < 2; ++which) {
      const std::vector<float>& row =
          which == 0 ? new_kv[li].keys[pos] : new_kv[li].values[pos];
      std::vector<Bf16> row16(row.size());
      for (std::size_t j = 0; j < row.size(); ++j) row16[j] = round_f32_to_bf16(row[j]);

      KeepBitmap bm = kv_select_per_token(row, 1.0 - cfg_.kv_p);
      CassandraTensor t = encode_tensor(row16, bm, cfg_.mode, cfg_.kv_t);
      CompressionStats cs = compression_stats(t);
      kv_spec_bits_ += static_cast<double>(cs.spec_bits);
      kv_total_bits_ += static_cast<double>(cs.spec_bits + cs.verify_bits);
      raw_elements_ += static_cast<double>(row.size());

      std::vector<Bf16> draft_row = decode_draft(t);
      std::vector<float> draft_f(row.size());
      for (std::size_t j = 0; j < row.size(); ++j) draft_f[j] = to_float(draft_row[j]);

      auto& tgt = which == 0 ? target_.layers[li].keys : target_.layers[li].values;
      auto& drf = which == 0 ? draft_.layers[li].keys : draft_.layers[li].values;
      tgt.push_back(row);
      drf.push_back(std::move(draft_f));
    }
  }
}

DraftOutput draft_generate(const ModelViewF& draft_view, const KvView& draft_kv,
                           int last_token, int gamma, DecodeMode mode,
                           SplitMix64& rng) {
  if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
  KvView working = draft_kv;
  DraftOutput out;
  out.scratch_kv.resize(draft_view.layers.size());
  int tok = last_token;
  for (int step = 0; step < gamma; ++step) {
    int t[1] = {tok};
    ForwardResult fr = forward(draft_view, working, t);
    for (std::size_t li = 0; li < working.layers.size(); ++li) {
      working.layers[li].keys.push_back(fr.new_kv[li].keys[0]);
      working.layers[li].values.push_back(fr.new_kv[li].values[0]);
      out.scratch_kv[li].keys.push_back(std::move(fr.new_kv[li].keys[0]));
      out.scratch_kv[li].values.push_back(std::move(fr.new_kv[li].values[0]));
    }
    std::vector<double> q = softmax(fr.logits[0]);
    tok = mode == DecodeMode::greedy ? argmax_token(fr.logits[0]) : sample_from(q, rng);
    out.drafted.push_back(tok);
    out.q.push_back(std::move(q));
  }
  return out;
}

int sample_from(std::span<const double> dist, SplitMix64& rng) {
  double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    cum += dist[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(dist.size()) - 1;
}

AcceptResult verify_and_accept(const std::vector<std::vector<double>>& p,
                               const std::vector<std::vector<double>>& q,
                               std::span<const int> drafted, SplitMix64& rng) {
  std::size_t gamma = drafted.size();
  if (q.size() != gamma || p.size() != gamma + 1)
    throw std::invalid_argument("distribution count mismatch");
  for (std::size_t i = 0; i < gamma; ++i) {
    int x = drafted[i];
    double qx = q[i][static_cast<std::size_t>(x)];
    assert(qx > 0.0 && "drafted token must have nonzero draft probability");
    double ratio = p[i][static_cast<std::size_t>(x)] / qx;
    if (rng.uniform() > ratio) {
      // residual resampling keeps the output distribution equal to p
      std::vector<double> residual(p[i].size());
      double sum = 0.0;
      for (std::size_t v = 0; v < residual.size(); ++v) {
        residual[v] = std::max(0.0, p[i][v] - q[i][v]);
        sum += residual[v];
      }
      AcceptResult r;
      r.accepted = static_cast<int>(i);
      if (sum <= 0.0) {
        r.next_token = sample_from(p[i], rng);  // p == q, cannot actually reject
      } else {
        for (double& v : residual) v /= sum;
        r.next_token = sample_from(residual, rng);
      }
      return r;
    }
  }
  return {static_cast<int>(gamma), sample_from(p[gamma], rng)};
}

AcceptResult greedy_verify(std::span<const int> target_argmaxes,
                           std::span<const int> drafted) {
  std::size_t n = 0;
  while (n < drafted.size() && drafted[n] == target_argmaxes[n]) ++n;
  return {static_cast<int>(n), target_argmaxes[n]};
}

std::vector<int> run_autoregressive(const TinyLm& model, std::span<const int> prompt,
                                    int max_tokens, DecodeMode mode,
                                    std::uint64_t seed) {
  if (prompt.empty()) throw std::invalid_argument("empty prompt");
  ModelViewF view = widen(model);
  KvView cache(model.cfg.layers);
  std::vector<int> seq(prompt.begin(), prompt.end());
  SplitMix64 rng(seed);

  auto commit = [&](const ForwardResult& fr, std::size_t pos) {
    for (std::size_t li = 0; li < cache.layers.size(); ++li) {
      cache.layers[li].keys.push_back(fr.new_kv[li].keys[pos]);
      cache.layers[li].values.push_back(fr.new_kv[li].values[pos]);
    }
  };

  if (prompt.size() > 1) {
    ForwardResult fr = forward(view, cache, prompt.subspan(0, prompt.size() - 1));
    for (std::size_t p = 0; p + 1 < prompt.size(); ++p) commit(fr, p);
  }
  for (int g = 0; g < max_tokens; ++g) {
    int t[1] = {seq.back()};
    ForwardResult fr = forward(view, cache, t);
    commit(fr, 0);
    int next;
    if (mode == DecodeMode::greedy) {
      next = argmax_token(fr.logits[0]);
    } else {
      std::vector<double> p = softmax(fr.logits[0]);
      next = sample_from(p, rng);
    }
    seq.push_back(next);
  }
  return seq;
}

SpecRunResult run_speculative(const TinyLm& model, const DraftConfig& cfg,
                              std::span<const int> prompt, int max_tokens,
                              DecodeMode mode, std::uint64_t seed) {
  cfg.validate();
  if (prompt.empty()) throw std::invalid_argument("empty prompt");
  DraftModel dm = build_draft_model(model, cfg);
  SpecKvStore kv(model.cfg.layers, cfg);
  std::vector<int> seq(prompt.begin(), prompt.end());
  SplitMix64 rng(seed);

  if (prompt.size() > 1) {
    ForwardResult fr = forward(dm.target_view, kv.target(), prompt.subspan(0, prompt.size() - 1));
    for (std::size_t p = 0; p + 1 < prompt.size(); ++p) kv.commit(fr.new_kv, p);
  }

  SpecRunStats stats;
  stats.accepted_histogram.assign(static_cast<std::size_t>(cfg.gamma) + 1, 0);
  std::uint64_t total_accepted = 0;
  double draft_bytes_sum = 0.0, target_bytes_sum = 0.0;

  int generated = 0;
  while (generated < max_tokens) {
    double kv_spec_before = kv.spec_bytes();
    double kv_total_before = kv.total_bytes();

    DraftOutput d = draft_generate(dm.draft_view, kv.draft(), seq.back(), cfg.gamma,
                                   mode, rng);

    std::vector<int> batch;
    batch.push_back(seq.back());
    batch.insert(batch.end(), d.drafted.begin(), d.drafted.end());
    ForwardResult fr = forward(dm.target_view, kv.target(), batch);

    AcceptResult acc;
    if (mode == DecodeMode::greedy) {
      std::vector<int> argmaxes;
      for (const auto& row : fr.logits) argmaxes.push_back(argmax_token(row));
      acc = greedy_verify(argmaxes, d.drafted);
    } else {
      std::vector<std::vector<double>> p;
      for (const auto& row : fr.logits) p.push_back(softmax(row));
      acc = verify_and_accept(p, d.q, d.drafted, rng);
    }

    // commit target K/V for the input position and every accepted draft
    for (int pos = 0; pos <= acc.accepted; ++pos)
      kv.commit(fr.new_kv, static_cast<std::size_t>(pos));
    for (int i = 0; i < acc.accepted; ++i) seq.push_back(d.drafted[static_cast<std::size_t>(i)]);
    seq.push_back(acc.next_token);

    generated += acc.accepted + 1;
    total_accepted += static_cast<std::uint64_t>(acc.accepted);
    ++stats.accepted_histogram[static_cast<std::size_t>(acc.accepted)];
    ++stats.rounds;
    draft_bytes_sum += cfg.gamma * (dm.weight_spec_bytes + kv_spec_before);
    target_bytes_sum += dm.weight_total_bytes + kv_total_before;
  }

  if (generated > max_tokens)
    seq.resize(prompt.size() + static_cast<std::size_t>(max_tokens));

  stats.tokens_generated = static_cast<std::uint64_t>(max_tokens);
  stats.alpha = stats.rounds == 0
                    ? 0.0
                    : static_cast<double>(total_accepted) /
                          (static_cast<double>(stats.rounds) * cfg.gamma);
  if (stats.rounds > 0) {
    stats.bytes_draft_per_round = draft_bytes_sum / static_cast<double>(stats.rounds);
    stats.bytes_target_per_round = target_bytes_sum / static_cast<double>(stats.rounds);
  }
  stats.weight_spec_bytes = dm.weight_spec_bytes;
  stats.weight_total_bytes = dm.weight_total_bytes;
  stats.kv_spec_bytes_final = kv.spec_bytes();
  stats.kv_total_bytes_final = kv.total_bytes();
  return {std::move(seq), std::move(stats)};
}

std::vector<TradeoffRow> sweep_tradeoff(const TinyLm& model,
                                        std::span<const DraftConfig> configs,
                                        const std::vector<std::vector<int>>& prompts,
                                        int max_tokens, DecodeMode mode,
                                        std::uint64_t seed) {
  std::vector<TradeoffRow> rows(configs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(configs.size()); ++c) {
    const DraftConfig& cfg = configs[static_cast<std::size_t>(c)];
    double alpha_sum = 0.0;
    double spec_bytes = 0.0, raw_bytes = 0.0;
    for (std::size_t pi = 0; pi < prompts.size(); ++pi) {
      SpecRunResult r = run_speculative(model, cfg, prompts[pi], max_tokens, mode,
                                        seed + pi);
      alpha_sum += r.stats.alpha;
      spec_bytes += r.stats.weight_spec_bytes + r.stats.kv_spec_bytes_final;
      raw_bytes += r.stats.weight_total_bytes + r.stats.kv_total_bytes_final;
    }
    TradeoffRow row;
    row.cfg = cfg;
    row.alpha = prompts.empty() ? 0.0 : alpha_sum / static_cast<double>(prompts.size());
    row.compression_ratio = spec_bytes > 0.0 ? raw_bytes / spec_bytes : 0.0;
    rows[static_cast<std::size_t>(c)] = std::move(row);
  }
  return rows;
}

}  // namespace cassandra
