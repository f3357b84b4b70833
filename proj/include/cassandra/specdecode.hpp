#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cassandra/container.hpp"
#include "cassandra/rng.hpp"
#include "cassandra/tinylm.hpp"

namespace cassandra {

enum class DecodeMode { greedy, sampled };

// Per-run measurements: acceptance rate alpha = mean accepted per round / gamma,
// the accepted-token histogram over {0..gamma}, and the byte traffic feeding
// the performance model.
struct SpecRunStats {
  double alpha = 0.0;
  std::vector<std::uint64_t> accepted_histogram;  // gamma + 1 bins
  std::uint64_t rounds = 0;
  std::uint64_t tokens_generated = 0;
  double bytes_draft_per_round = 0.0;   // gamma draft passes, speculation data only
  double bytes_target_per_round = 0.0;  // one full verification pass
  double weight_spec_bytes = 0.0;
  double weight_total_bytes = 0.0;
  double kv_spec_bytes_final = 0.0;
  double kv_total_bytes_final = 0.0;
};

struct SpecRunResult {
  std::vector<int> tokens;  // prompt + generated
  SpecRunStats stats;
};

// Weight tensors transformed through the container: draft view zero-padded,
// target view fully reconstructed. Calibration norms come from 128 synthetic
// activation samples drawn from the model seed.
struct DraftModel {
  ModelViewF draft_view;
  ModelViewF target_view;
  double weight_spec_bytes = 0.0;
  double weight_total_bytes = 0.0;
  double weight_raw_bytes = 0.0;
};

DraftModel build_draft_model(const TinyLm& model, const DraftConfig& cfg);

// Dual KV store: exact target rows plus the per-token encoded draft rows.
class SpecKvStore {
 public:
  SpecKvStore(int num_layers, const DraftConfig& cfg)
      : cfg_(cfg), target_(num_layers), draft_(num_layers) {}

  // Commits one position's K/V rows per layer (target-exact rows); the draft
  // rows are re-encoded online with the per-token bitmap.
  void commit(const std::vector<LayerKv>& new_kv, std::size_t position_in_batch);

  const KvView& target() const { return target_; }
  const KvView& draft() const { return draft_; }
  std::size_t length() const { return target_.length(); }

  double spec_bytes() const { return kv_spec_bits_ / 8.0; }
  double total_bytes() const { return kv_total_bits_ / 8.0; }
  double raw_bytes() const { return raw_elements_ * 2.0; }

 private:
  DraftConfig cfg_;
  KvView target_;
  KvView draft_;
  double kv_spec_bits_ = 0.0;
  double kv_total_bits_ = 0.0;
  double raw_elements_ = 0.0;
};

struct DraftOutput {
  std::vector<int> drafted;                   // gamma tokens
  std::vector<std::vector<double>> q;         // gamma per-step distributions
  std::vector<LayerKv> scratch_kv;            // uncommitted draft-side K/V
};

// gamma autoregressive steps over the draft view and draft KV, starting from
// the last committed token.
DraftOutput draft_generate(const ModelViewF& draft_view, const KvView& draft_kv,
                           int last_token, int gamma, DecodeMode mode,
                           SplitMix64& rng);

struct AcceptResult {
  int accepted = 0;  // n
  int next_token = 0;
};

// Rejection sampling: n = min({i-1 | r_i > p_i(x_i)/q_i(x_i)} U {gamma}); on
// rejection the next token comes from norm(max(0, p_{n+1} - q_{n+1})),
// otherwise from p_{gamma+1}.
AcceptResult verify_and_accept(const std::vector<std::vector<double>>& p,
                               const std::vector<std::vector<double>>& q,
                               std::span<const int> drafted, SplitMix64& rng);

// Greedy rule: longest matching prefix, next token from the target argmax at
// the first mismatch (or the bonus position).
AcceptResult greedy_verify(std::span<const int> target_argmaxes,
                           std::span<const int> drafted);

std::vector<int> run_autoregressive(const TinyLm& model, std::span<const int> prompt,
                                    int max_tokens, DecodeMode mode,
                                    std::uint64_t seed);

SpecRunResult run_speculative(const TinyLm& model, const DraftConfig& cfg,
                              std::span<const int> prompt, int max_tokens,
                              DecodeMode mode, std::uint64_t seed);

struct TradeoffRow {
  DraftConfig cfg;
  double compression_ratio = 0.0;  // speculation bits vs 16-bit baseline
  double alpha = 0.0;
};

std::vector<TradeoffRow> sweep_tradeoff(const TinyLm& model,
                                        std::span<const DraftConfig> configs,
                                        const std::vector<std::vector<int>>& prompts,
                                        int max_tokens, DecodeMode mode,
                                        std::uint64_t seed);

int sample_from(std::span<const double> dist, SplitMix64& rng);

}  // namespace cassandra
