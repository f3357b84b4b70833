// End-to-end acceptance checks. Each numbered criterion prints exactly one
// pass/fail line; the process exits non-zero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "cassandra/container.hpp"
#include "cassandra/decoder_sim.hpp"
#include "cassandra/perfmodel.hpp"
#include "cassandra/rng.hpp"
#include "cassandra/specdecode.hpp"
#include "cassandra/superblock.hpp"
#include "test_util.hpp"

using namespace cassandra;
using namespace cassandra::testutil;

namespace {

int failures = 0;

void report(int num, const char* name, bool ok, const std::string& detail = "") {
  std::printf("criterion %2d %-34s %s%s%s\n", num, name, ok ? "PASS" : "FAIL",
              detail.empty() ? "" : "  ", detail.c_str());
  if (!ok) ++failures;
}

// --- 1: mode-1 losslessness on random tensors ------------------------------

void criterion1() {
  SplitMix64 rng(1001);
  bool ok = true;
  for (int t = 0; t < 1000 && ok; ++t) {
    // log-uniform sizes in [1, 65536]
    std::size_t n = 1ull << rng.below(17);
    n = 1 + rng.below(n);
    auto vals = random_values(rng, n, 1, 254);
    auto bm = random_bitmap(rng, n);
    auto enc = encode_tensor(vals, bm, 1, static_cast<int>(rng.below(8)));
    ok = decode_target(enc) == vals;
  }
  report(1, "mode-1 losslessness", ok);
}

// --- 2: greedy speculative == greedy autoregressive ------------------------

void criterion2() {
  // mode 1 only: the lossless contract does not extend to lossy MX coding
  auto grid = standard_grid(1, 4);

  std::vector<std::vector<int>> prompts;
  SplitMix64 prng(2002);
  for (int p = 0; p < 10; ++p) {
    std::vector<int> prompt;
    for (int i = 0; i < 6; ++i) prompt.push_back(static_cast<int>(prng.below(64)));
    prompts.push_back(prompt);
  }

  // every grid config runs once at full length, cycling through the
  // 20 model seeds and 10 prompts
  std::size_t checked = 0, matched = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::uint64_t seed = 1 + i % 20;
    auto model = init_tiny_lm(seed);
    const auto& prompt = prompts[i % 10];
    auto spec = run_speculative(model, grid[i], prompt, 256, DecodeMode::greedy, seed);
    auto ar = run_autoregressive(model, prompt, 256, DecodeMode::greedy, seed);
    ++checked;
    if (spec.tokens == ar) ++matched;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%zu/%zu configs x 256 tokens identical)", matched,
                checked);
  report(2, "greedy end-to-end losslessness", matched == checked, buf);
}

// --- 3: rejection sampling preserves the target distribution ---------------

void criterion3() {
  auto model = init_tiny_lm(7);
  DraftConfig cfg;
  cfg.gamma = 1;
  auto dm = build_draft_model(model, cfg);

  // fixed context through both views (empty KV caches)
  std::vector<int> ctx{5, 42, 17, 3};
  auto pt = forward(dm.target_view, KvView(model.cfg.layers), ctx);
  auto qt = forward(dm.draft_view, KvView(model.cfg.layers), ctx);
  auto p1 = softmax(pt.logits.back());
  auto q1 = softmax(qt.logits.back());
  std::vector<std::vector<double>> p{p1, p1};  // bonus distribution unused
  std::vector<std::vector<double>> q{q1};

  const int trials = 500000;
  std::vector<double> freq(p1.size(), 0.0);
  SplitMix64 rng(3003);
  for (int t = 0; t < trials; ++t) {
    std::vector<int> drafted{sample_from(q1, rng)};
    auto r = verify_and_accept(p, q, drafted, rng);
    int tok = r.accepted >= 1 ? drafted[0] : r.next_token;
    freq[static_cast<std::size_t>(tok)] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i)
    tv += std::fabs(freq[i] / trials - p1[i]);
  tv /= 2.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "(TV distance %.4f over %d draws)", tv, trials);
  report(3, "rejection-sampling correctness", tv < 0.02, buf);
}

// --- 4: parallel unary decoder vs sequential oracle ------------------------

void criterion4() {
  SplitMix64 rng(4004);
  bool ok = true;
  for (int t = 0; t < 10000 && ok; ++t) {
    std::size_t nsyms = 1 + rng.below(30);  // ranks up to 29: spans chunks
    std::vector<std::uint8_t> ranked;
    for (std::size_t i = 0; i < nsyms; ++i) ranked.push_back(static_cast<std::uint8_t>(i));
    auto cb = UnaryCodebook::from_ranked(ranked);
    std::size_t count = 1 + rng.below(200);
    std::vector<std::uint8_t> symbols;
    for (std::size_t i = 0; i < count; ++i)
      symbols.push_back(static_cast<std::uint8_t>(rng.below(nsyms)));
    auto bits = unary_encode(symbols, cb);
    ok = parallel_unary_decode(bits, cb, count) ==
         unary_decode_sequential(bits, cb, count);
  }
  report(4, "parallel decode oracle equivalence", ok);
}

// --- 5 & 6: coding bound and memory accounting on Gaussian weights ---------

std::vector<std::vector<Bf16>> gaussian_corpus() {
  std::mt19937_64 gen(5005);
  std::normal_distribution<float> dist(0.0f, 0.02f);
  std::vector<std::vector<Bf16>> corpus;
  for (int t = 0; t < 20; ++t) {
    std::vector<Bf16> w(8192);
    for (auto& b : w) b = flush_denormal(round_f32_to_bf16(dist(gen)));
    corpus.push_back(std::move(w));
  }
  return corpus;
}

void criterion5(const std::vector<std::vector<Bf16>>& corpus) {
  bool bound_ok = true;
  double worst = 0.0;
  for (const auto& w : corpus) {
    std::vector<std::uint8_t> exps;
    for (Bf16 v : w) exps.push_back(decompose(v).exponent);
    auto cb = UnaryCodebook::build(exps);
    double avg = avg_unary_bits(exps, cb);
    double h = shannon_entropy(exps);
    if (avg < h - 1e-12) bound_ok = false;
    worst = std::max(worst, avg);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "(max avg unary bits %.3f)", worst);
  report(5, "unary coding bound", bound_ok && worst <= 4.5, buf);
}

void criterion6(const std::vector<std::vector<Bf16>>& corpus) {
  SplitMix64 rng(6006);
  bool ok = true;
  for (const auto& w : corpus) {
    std::vector<std::uint8_t> exps;
    for (Bf16 v : w) exps.push_back(decompose(v).exponent);
    double h = shannon_entropy(exps);

    auto bm = random_bitmap(rng, w.size());
    auto t = encode_tensor(w, bm, 1, 4);
    auto s = compression_stats(t);

    // exact accounting identity over the container invariants
    std::uint64_t n = t.element_count, k = t.kept_count;
    bool identity = s.spec_bits == n + k + t.spec_exponents.bit_size() +
                                       k * t.high_bits_per_elem() &&
                    s.verify_bits == k * t.low_bits_per_elem() + (n - k) * 16 &&
                    t.spec_signs.bit_size() == k &&
                    t.verify_pruned.size() == (n - k) * 2;
    bool smaller = h >= 6.5 || s.spec_bits + s.verify_bits < 16 * n;
    if (!identity || !smaller) ok = false;
  }
  report(6, "memory accounting", ok);
}

// --- 7: superblock round trip and streaming no-stall -----------------------

void criterion7() {
  SplitMix64 rng(7007);
  bool ok = true;
  std::size_t worst_buffer = 0;
  for (int t = 0; t < 500 && ok; ++t) {
    std::size_t n = 1 + rng.below(4000);
    auto vals = random_values(rng, n, 1, 254);
    auto bm = random_bitmap(rng, n);
    int mode = 1 + static_cast<int>(rng.below(2));
    auto enc = encode_tensor(vals, bm, mode, static_cast<int>(rng.below(6)));
    View view = rng.below(2) ? View::target : View::draft;

    auto sbs = pack(enc, view);
    ok = unpack(sbs, stream_lengths(enc, view)) == container_streams(enc, view);
    if (!ok) break;

    auto res = streaming_decode(sbs, StreamingHeader::from_container(enc, view));
    auto expect = view == View::target ? decode_target(enc) : decode_draft(enc);
    ok = res.values == expect && res.max_buffered_bytes <= 256;
    worst_buffer = std::max(worst_buffer, res.max_buffered_bytes);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "(max per-type buffer %zu bytes)", worst_buffer);
  report(7, "superblock round trip + no-stall", ok, buf);
}

// --- 8: Eq. 2 objective and grid-search argmax -----------------------------

void criterion8() {
  DraftConfig def;
  double j = objective_j(0.8, 100.0, 20.0, def);
  bool hand_ok = std::fabs(j - 0.8 / 864.0) / (0.8 / 864.0) < 1e-12;

  auto model = init_tiny_lm(11);
  auto grid = standard_grid(1, 4);
  GridSearchOptions opts;
  opts.max_tokens = 8;
  opts.seed = 11;
  std::vector<std::vector<int>> prompts{{3, 14, 15, 9}};
  auto res = grid_search(model, prompts, grid, opts);

  // exhaustive argmax over the returned table, same tie rule
  std::size_t best = 0;
  for (std::size_t i = 1; i < res.table.size(); ++i) {
    if (res.table[i].objective > res.table[best].objective ||
        (res.table[i].objective == res.table[best].objective &&
         res.table[i].total_bytes < res.table[best].total_bytes))
      best = i;
  }
  const DraftConfig& b = res.table[best].cfg;
  bool argmax_ok = b.w_p == res.best.w_p && b.w_t == res.best.w_t &&
                   b.kv_p == res.best.kv_p && b.kv_t == res.best.kv_t;
  report(8, "Eq. 2 objective + grid argmax", hand_ok && argmax_ok);
}

// --- 9: trade-off sweep shape ----------------------------------------------

void criterion9() {
  auto model = init_tiny_lm(13);
  std::vector<DraftConfig> configs;
  DraftConfig zero;
  zero.w_p = zero.kv_p = 0.0;
  zero.w_t = zero.kv_t = 0;
  configs.push_back(zero);
  for (int p = 30; p <= 60; p += 10)
    for (int t = 0; t <= 5; ++t) {
      DraftConfig c;
      c.w_p = c.kv_p = p / 100.0;
      c.w_t = c.kv_t = t;
      configs.push_back(c);
    }

  std::vector<std::vector<int>> prompts{{1, 2, 3}, {30, 20, 10}};
  auto rows = sweep_tradeoff(model, configs, prompts, 24, DecodeMode::greedy, 13);

  bool ok = rows.size() == configs.size();
  if (ok) {
    ok = std::fabs(rows[0].alpha - 1.0) < 1e-12 &&
         std::fabs(rows[0].compression_ratio - 1.0) < 0.05;
    for (const auto& r : rows)
      if (!(r.alpha >= 0.0 && r.alpha <= 1.0 && r.compression_ratio > 0.0)) ok = false;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "(%zu rows, zero-compression alpha %.3f)", rows.size(),
                rows.empty() ? -1.0 : rows[0].alpha);
  report(9, "trade-off sweep shape", ok, buf);
}

// --- 10: speedup model limits ----------------------------------------------

void criterion10() {
  HardwareProfile hw{1e9, "acc"};
  std::vector<std::uint64_t> all{0, 0, 0, 0, 25};
  bool limit_ok =
      std::fabs(speedup_estimate(0.0, 1e6, hw, all, 4, 0.0) - 5.0) < 1e-9;

  SplitMix64 rng(1010);
  bool mono_ok = true;
  for (int t = 0; t < 1000 && mono_ok; ++t) {
    int gamma = 1 + static_cast<int>(rng.below(7));
    double bd = rng.uniform(1.0, 1e7);
    double bt = rng.uniform(1.0, 1e7);
    double ov = rng.uniform(0.0, 0.5);
    int lo = static_cast<int>(rng.below(gamma));
    std::vector<std::uint64_t> ha(gamma + 1, 0), hb(gamma + 1, 0);
    ha[lo] = 3;
    hb[lo + 1] = 3;
    mono_ok = speedup_estimate(bd, bt, hw, hb, gamma, ov) >
              speedup_estimate(bd, bt, hw, ha, gamma, ov);
  }
  report(10, "speedup model limits", limit_ok && mono_ok);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  auto corpus = gaussian_corpus();
  criterion5(corpus);
  criterion6(corpus);
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  std::printf("%s\n", failures == 0 ? "ALL CRITERIA PASSED" : "CRITERIA FAILED");
  return failures == 0 ? 0 : 1;
}
