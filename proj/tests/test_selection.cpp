#include <doctest.h>

#include <stdexcept>

#include "cassandra/rng.hpp"
#include "cassandra/selection.hpp"

using namespace cassandra;

namespace {

MatrixF make(std::size_t r, std::size_t c, std::initializer_list<float> vals) {
  MatrixF m(r, c);
  std::copy(vals.begin(), vals.end(), m.data.begin());
  return m;
}

}  // namespace

TEST_CASE("calibration norms") {
  auto n = calibration_norms(make(2, 2, {3, 0, 4, 0}));
  CHECK(n[0] == doctest::Approx(5.0));
  CHECK(n[1] == 0.0f);

  n = calibration_norms(make(1, 2, {1, 1}));
  CHECK(n[0] == doctest::Approx(1.0));
  CHECK(n[1] == doctest::Approx(1.0));

  n = calibration_norms(make(3, 2, {0, 0, 0, 0, 0, 0}));
  CHECK(n[0] == 0.0f);
  CHECK(n[1] == 0.0f);

  CHECK_THROWS_AS(calibration_norms(MatrixF(0, 3)), std::invalid_argument);
}

TEST_CASE("wanda scores") {
  auto s = wanda_scores(make(1, 3, {1.0f, -2.0f, 0.5f}), {1, 1, 3});
  CHECK(s.at(0, 0) == doctest::Approx(1.0));
  CHECK(s.at(0, 1) == doctest::Approx(2.0));
  CHECK(s.at(0, 2) == doctest::Approx(1.5));

  // unit norms degenerate to magnitude pruning
  auto m = wanda_scores(make(1, 3, {-4, 2, 0}), {1, 1, 1});
  CHECK(m.at(0, 0) == 4.0f);
  CHECK(m.at(0, 1) == 2.0f);
  CHECK(m.at(0, 2) == 0.0f);

  auto z = wanda_scores(make(2, 2, {0, 0, 0, 0}), {1, 2});
  for (float v : z.data) CHECK(v == 0.0f);
}

TEST_CASE("wanda serial matches parallel kernel") {
  SplitMix64 rng(11);
  MatrixF w(130, 70);
  CalibrationNorms norms(70);
  for (auto& v : w.data) v = static_cast<float>(rng.uniform(-2, 2));
  for (auto& v : norms) v = static_cast<float>(rng.uniform(0, 3));
  auto a = wanda_scores(w, norms);
  auto b = wanda_scores_serial(w, norms);
  CHECK(a.data == b.data);
}

TEST_CASE("top-k per row") {
  auto bm = select_topk_per_row(make(1, 3, {1.0f, 2.0f, 1.5f}), 2.0 / 3.0);
  CHECK(!bm.get(0));
  CHECK(bm.get(1));
  CHECK(bm.get(2));
  CHECK(bm.kept_count() == 2);

  bm = select_topk_per_row(make(2, 3, {1, 2, 3, 4, 5, 6}), 1.0);
  CHECK(bm.kept_count() == 6);

  // tie rule: lowest column index wins
  bm = select_topk_per_row(make(1, 3, {5, 5, 5}), 1.0 / 3.0);
  CHECK(bm.get(0));
  CHECK(!bm.get(1));
  CHECK(!bm.get(2));
}

TEST_CASE("kv top-k per token") {
  std::vector<float> v{0.1f, -0.9f, 0.5f, 0.2f};
  auto bm = kv_select_per_token(v, 0.5);
  CHECK(!bm.get(0));
  CHECK(bm.get(1));
  CHECK(bm.get(2));
  CHECK(!bm.get(3));

  bm = kv_select_per_token(v, 1.0);
  CHECK(bm.kept_count() == 4);

  std::vector<float> eq{2, 2, 2, 2};
  bm = kv_select_per_token(eq, 0.25);
  CHECK(bm.get(0));
  CHECK(bm.kept_count() == 1);
}

TEST_CASE("kept count rounding is half-up") {
  CHECK(kept_count_for(4, 0.5) == 2);
  CHECK(kept_count_for(3, 0.5) == 2);   // 1.5 rounds up
  CHECK(kept_count_for(5, 0.3) == 2);   // 1.5 rounds up
  CHECK(kept_count_for(4, 0.6) == 2);   // 2.4 rounds down
  CHECK(kept_count_for(10, 1.0) == 10);
}

TEST_CASE("bitmap bit order and byte layout") {
  KeepBitmap bm(10);
  bm.set(0, true);
  bm.set(9, true);
  CHECK(bm.bytes()[0] == 0x80);  // MSB-first
  CHECK(bm.bytes()[1] == 0x40);
  CHECK(bm.kept_count() == 2);

  auto rt = KeepBitmap::from_bytes(bm.bytes(), 10);
  CHECK(rt.kept_count() == 2);
  CHECK(rt.get(0));
  CHECK(rt.get(9));
  CHECK(!rt.get(5));
}
