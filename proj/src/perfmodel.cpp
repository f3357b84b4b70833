#include "cassandra/perfmodel.hpp"

#include <algorithm>
#include <stdexcept>

#include "cassandra/expcodec.hpp"

namespace cassandra {

double objective_j(double alpha, double s_w_bytes, double s_kv_bytes,
                   const DraftConfig& cfg, int bits) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha outside [0, 1]");
  double denom = s_w_bytes * (1.0 - cfg.w_p) * (bits - cfg.w_t) +
                 s_kv_bytes * (1.0 - cfg.kv_p) * (bits - cfg.kv_t);
  if (denom <= 0.0) throw std::invalid_argument("zero objective denominator");
  return alpha / denom;
}

double objective_j_measured(double alpha, double spec_bits) {
  if (spec_bits <= 0.0) throw std::invalid_argument("zero objective denominator");
  return alpha / spec_bits;
}

std::vector<DraftConfig> standard_grid(int mode, int gamma) {
  std::vector<DraftConfig> grid;
  for (int wp = 30; wp <= 60; wp += 10)
    for (int wt = 0; wt <= 5; ++wt)
      for (int kvp = 30; kvp <= 60; kvp += 10)
        for (int kvt = 0; kvt <= 5; ++kvt) {
          DraftConfig c;
          c.mode = mode;
          c.w_p = wp / 100.0;
          c.kv_p = kvp / 100.0;
          c.w_t = wt;
          c.kv_t = kvt;
          c.gamma = gamma;
          grid.push_back(c);
        }
  return grid;
}

GridSearchResult grid_search(const TinyLm& model,
                             const std::vector<std::vector<int>>& dev_prompts,
                             std::span<const DraftConfig> grid,
                             const GridSearchOptions& opts) {
  if (grid.empty()) throw std::invalid_argument("empty grid");
  if (dev_prompts.empty()) throw std::invalid_argument("empty dev set");

  std::vector<GridRow> table(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(grid.size()); ++c) {
    const DraftConfig& cfg = grid[static_cast<std::size_t>(c)];
    double alpha_sum = 0.0, spec = 0.0, total = 0.0, s_w = 0.0, s_kv = 0.0;
    for (std::size_t pi = 0; pi < dev_prompts.size(); ++pi) {
      SpecRunResult r = run_speculative(model, cfg, dev_prompts[pi], opts.max_tokens,
                                        opts.mode, opts.seed + pi);
      alpha_sum += r.stats.alpha;
      spec += r.stats.weight_spec_bytes + r.stats.kv_spec_bytes_final;
      total += r.stats.weight_total_bytes + r.stats.kv_total_bytes_final;
      s_w += r.stats.weight_total_bytes;
      s_kv += r.stats.kv_total_bytes_final;
    }
    double np = static_cast<double>(dev_prompts.size());
    GridRow row;
    row.cfg = cfg;
    row.alpha = alpha_sum / np;
    row.spec_bytes = spec / np;
    row.total_bytes = total / np;
    row.objective = objective_j(row.alpha, s_w / np, s_kv / np, cfg);
    table[static_cast<std::size_t>(c)] = row;
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i].objective > table[best].objective ||
        (table[i].objective == table[best].objective &&
         table[i].total_bytes < table[best].total_bytes))
      best = i;
  }
  return {table[best].cfg, std::move(table)};
}

double speedup_estimate(double bytes_draft_per_token, double bytes_target_pass,
                        const HardwareProfile& hw,
                        std::span<const std::uint64_t> accepted_histogram, int gamma,
                        double overhead_fraction) {
  if (hw.memory_bandwidth <= 0.0) throw std::invalid_argument("bandwidth must be > 0");
  if (accepted_histogram.size() != static_cast<std::size_t>(gamma) + 1)
    throw std::invalid_argument("histogram must have gamma + 1 bins");
  std::uint64_t rounds = 0, accepted = 0;
  for (std::size_t n = 0; n < accepted_histogram.size(); ++n) {
    rounds += accepted_histogram[n];
    accepted += n * accepted_histogram[n];
  }
  if (rounds == 0) throw std::invalid_argument("empty histogram");
  double expected_n = static_cast<double>(accepted) / static_cast<double>(rounds);

  double t_draft = bytes_draft_per_token / hw.memory_bandwidth;
  double t_target = bytes_target_pass / hw.memory_bandwidth;
  double t_baseline = bytes_target_pass / hw.memory_bandwidth;
  double round_time = gamma * t_draft + t_target * (1.0 + overhead_fraction);
  return (expected_n + 1.0) * t_baseline / round_time;
}

EntropyReport entropy_report(std::span<const NamedTensor> tensors) {
  EntropyReport rep;
  double total_elems = 0.0;
  for (const NamedTensor& t : tensors) {
    if (t.values.empty()) continue;
    std::vector<std::uint8_t> exps;
    exps.reserve(t.values.size());
    for (Bf16 v : t.values) exps.push_back(decompose(flush_denormal(v)).exponent);
    UnaryCodebook cb = UnaryCodebook::build(exps);
    EntropyRow row;
    row.name = t.name;
    row.elements = t.values.size();
    row.shannon_bits = shannon_entropy(exps);
    row.avg_unary_bits = avg_unary_bits(exps, cb);
    double n = static_cast<double>(row.elements);
    rep.aggregate_shannon += row.shannon_bits * n;
    rep.aggregate_unary += row.avg_unary_bits * n;
    total_elems += n;
    rep.rows.push_back(std::move(row));
  }
  if (total_elems > 0.0) {
    rep.aggregate_shannon /= total_elems;
    rep.aggregate_unary /= total_elems;
  }
  return rep;
}

}  // namespace cassandra
