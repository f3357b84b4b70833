#include <doctest.h>

#include "cassandra/perfmodel.hpp"
#include "cassandra/rng.hpp"

using namespace cassandra;

TEST_CASE("objective J hand example") {
  DraftConfig cfg;  // 40% / 4 bits everywhere
  double j = objective_j(0.8, 100.0, 20.0, cfg);
  CHECK(std::fabs(j - 0.8 / 864.0) / (0.8 / 864.0) < 1e-12);

  CHECK(objective_j(0.0, 100.0, 20.0, cfg) == 0.0);

  // homogeneity: doubling both sizes halves J
  double half = objective_j(0.8, 200.0, 40.0, cfg);
  CHECK(half == doctest::Approx(j / 2.0).epsilon(1e-12));
}

TEST_CASE("objective J input validation") {
  DraftConfig cfg;
  CHECK_THROWS_AS(objective_j(1.5, 1.0, 1.0, cfg), std::invalid_argument);
  CHECK_THROWS_AS(objective_j(-0.1, 1.0, 1.0, cfg), std::invalid_argument);
  DraftConfig full;
  full.w_p = full.kv_p = 0.999999;  // denominator collapses with zero sizes
  CHECK_THROWS_AS(objective_j(0.5, 0.0, 0.0, full), std::invalid_argument);
}

TEST_CASE("standard grid enumerates prune x truncation for weights and kv") {
  auto grid = standard_grid(1, 4);
  CHECK(grid.size() == 4 * 6 * 4 * 6);
  bool has_default = false;
  for (const auto& c : grid) {
    CHECK(c.mode == 1);
    CHECK(c.gamma == 4);
    CHECK(c.w_p >= 0.3);
    CHECK(c.w_p <= 0.6);
    CHECK(c.w_t >= 0);
    CHECK(c.w_t <= 5);
    if (c.w_p == 0.4 && c.w_t == 4 && c.kv_p == 0.4 && c.kv_t == 4) has_default = true;
  }
  CHECK(has_default);
}

TEST_CASE("speedup model limiting cases") {
  std::vector<std::uint64_t> all_accepted{0, 0, 0, 0, 10};
  HardwareProfile hw{1e9, "test"};
  // free drafts, zero overhead, everything accepted: gain = gamma + 1
  CHECK(speedup_estimate(0.0, 1e6, hw, all_accepted, 4, 0.0) ==
        doctest::Approx(5.0).epsilon(1e-9));

  // nothing ever accepted, draft as expensive as target: gain = 1/(gamma+1)
  std::vector<std::uint64_t> none{10, 0, 0, 0, 0};
  CHECK(speedup_estimate(1e6, 1e6, hw, none, 4, 0.0) ==
        doctest::Approx(1.0 / 5.0).epsilon(1e-9));
}

TEST_CASE("speedup is monotone in expected accepted tokens") {
  SplitMix64 rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    int gamma = 1 + static_cast<int>(rng.below(6));
    double bd = rng.uniform(1.0, 1e6);
    double bt = rng.uniform(1.0, 1e6);
    double ov = rng.uniform(0.0, 0.3);
    HardwareProfile hw{rng.uniform(1e6, 1e12), "rand"};
    int lo = static_cast<int>(rng.below(gamma));  // E[n] = lo vs lo + 1
    std::vector<std::uint64_t> ha(gamma + 1, 0), hb(gamma + 1, 0);
    ha[lo] = 1;
    hb[lo + 1] = 1;
    CHECK(speedup_estimate(bd, bt, hw, hb, gamma, ov) >
          speedup_estimate(bd, bt, hw, ha, gamma, ov));
  }
}

TEST_CASE("speedup validates its inputs") {
  HardwareProfile hw{1e9, "t"};
  std::vector<std::uint64_t> h{1, 1, 1};
  CHECK_THROWS_AS(speedup_estimate(1, 1, hw, h, 4, 0.0), std::invalid_argument);
  HardwareProfile bad{0.0, "t"};
  std::vector<std::uint64_t> ok{1, 1, 1, 1, 1};
  CHECK_THROWS_AS(speedup_estimate(1, 1, bad, ok, 4, 0.0), std::invalid_argument);
}

TEST_CASE("entropy report basics") {
  std::vector<NamedTensor> ts;
  ts.push_back({"const", std::vector<Bf16>(100, Bf16{0x3F80})});
  auto rep = entropy_report(ts);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].shannon_bits == doctest::Approx(0.0));
  CHECK(rep.rows[0].avg_unary_bits == doctest::Approx(1.0));

  // aggregate is element-weighted: 100 elems at H=0 + 100 at H=1
  std::vector<Bf16> two;
  for (int i = 0; i < 50; ++i) {
    two.push_back(Bf16{0x3F80});
    two.push_back(Bf16{0x4000});
  }
  ts.push_back({"two", two});
  rep = entropy_report(ts);
  CHECK(rep.rows[1].shannon_bits == doctest::Approx(1.0));
  CHECK(rep.aggregate_shannon == doctest::Approx(0.5));
  for (const auto& r : rep.rows) CHECK(r.avg_unary_bits >= r.shannon_bits - 1e-12);
}

TEST_CASE("grid search returns the table argmax") {
  auto model = init_tiny_lm(88);
  std::vector<std::vector<int>> prompts{{1, 2, 3, 4}};
  GridSearchOptions opts;
  opts.max_tokens = 8;

  std::vector<DraftConfig> single(1);
  auto res = grid_search(model, prompts, single, opts);
  CHECK(res.best.w_p == single[0].w_p);
  CHECK(res.table.size() == 1);

  std::vector<DraftConfig> small;
  for (int wt : {0, 2, 4}) {
    DraftConfig c;
    c.w_t = wt;
    small.push_back(c);
  }
  res = grid_search(model, prompts, small, opts);
  REQUIRE(res.table.size() == 3);
  std::size_t best = 0;
  for (std::size_t i = 1; i < res.table.size(); ++i)
    if (res.table[i].objective > res.table[best].objective) best = i;
  CHECK(res.best.w_t == res.table[best].cfg.w_t);
}
