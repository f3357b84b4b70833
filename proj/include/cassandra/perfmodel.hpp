#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cassandra/specdecode.hpp"

namespace cassandra {

struct HardwareProfile {
  double memory_bandwidth = 273e9;  // bytes/sec
  std::string label = "generic";
};

// J = alpha / (S_w (1-w_p)(B-w_t) + S_kv (1-kv_p)(B-kv_t)), the printed
// objective over pre-compression bit widths. Sizes are in bytes.
double objective_j(double alpha, double s_w_bytes, double s_kv_bytes,
                   const DraftConfig& cfg, int bits = 16);

// measured-bits variant: same shape, but the denominator uses the actual
// speculation stream size in bits (informative, not the printed formula)
double objective_j_measured(double alpha, double spec_bits);

struct GridRow {
  DraftConfig cfg;
  double alpha = 0.0;
  double objective = 0.0;
  double spec_bytes = 0.0;   // weights + KV speculation traffic
  double total_bytes = 0.0;
};

struct GridSearchResult {
  DraftConfig best;
  std::vector<GridRow> table;
};

struct GridSearchOptions {
  int max_tokens = 32;
  DecodeMode mode = DecodeMode::greedy;
  std::uint64_t seed = 1;
};

// prune ratios 30%..60% in 10% steps, truncation 0..5 bits in 1-bit steps,
// applied to weights and KV independently; includes the 40%/4-bit default
std::vector<DraftConfig> standard_grid(int mode, int gamma);

// Measures alpha per config on the dev prompts, evaluates J, returns the
// argmax; ties go to the smaller total compressed size.
GridSearchResult grid_search(const TinyLm& model,
                             const std::vector<std::vector<int>>& dev_prompts,
                             std::span<const DraftConfig> grid,
                             const GridSearchOptions& opts = {});

// Memory-bound round model: expected tokens per round over the time
// gamma*t_draft + t_target*(1+overhead), against one baseline token per
// t_target_baseline.
double speedup_estimate(double bytes_draft_per_token, double bytes_target_pass,
                        const HardwareProfile& hw,
                        std::span<const std::uint64_t> accepted_histogram, int gamma,
                        double overhead_fraction = 0.05);

struct EntropyRow {
  std::string name;
  std::size_t elements = 0;
  double shannon_bits = 0.0;
  double avg_unary_bits = 0.0;
};

struct EntropyReport {
  std::vector<EntropyRow> rows;
  double aggregate_shannon = 0.0;    // element-weighted
  double aggregate_unary = 0.0;
};

struct NamedTensor {
  std::string name;
  std::vector<Bf16> values;
};

EntropyReport entropy_report(std::span<const NamedTensor> tensors);

}  // namespace cassandra
