#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "evtip/extremes.hpp"
#include "evtip/gev.hpp"

using namespace evtip;

namespace {

// Double-loop reference: skip the burn-in, then scan each full bin.
std::vector<double> naive_extremes(const std::vector<double>& v, std::size_t m, Tail tail,
                                   double burn_in) {
  const std::size_t n = v.size();
  std::size_t kept = static_cast<std::size_t>(std::floor((1.0 - burn_in) * static_cast<double>(n)));
  if (kept > n) kept = n;
  const std::size_t start = n - kept;
  std::vector<double> out;
  for (std::size_t b = 0; start + (b + 1) * m <= n; ++b) {
    double best = v[start + b * m];
    for (std::size_t j = 1; j < m; ++j) {
      const double x = v[start + b * m + j];
      if (tail == Tail::Maxima ? x > best : x < best) best = x;
    }
    out.push_back(tail == Tail::Maxima ? best : -best);
  }
  return out;
}

TimeSeries make_series(std::vector<double> v) {
  TimeSeries ts;
  ts.values = std::move(v);
  return ts;
}

}  // namespace

TEST_CASE("block extremes examples", "[extremes]") {
  const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6};
  CHECK(block_extremes(v, {4, Tail::Maxima, 0.0}) == std::vector<double>{4, 9});
  CHECK(block_extremes(v, {4, Tail::Minima, 0.0}) == std::vector<double>{-1, -2});

  std::vector<double> ten;
  for (int i = 1; i <= 10; ++i) ten.push_back(i);
  CHECK(block_extremes(ten, {3, Tail::Maxima, 0.0}) == std::vector<double>{3, 6, 9});
}

TEST_CASE("burn-in drops leading samples", "[extremes]") {
  std::vector<double> v;
  for (int i = 0; i < 20; ++i) v.push_back(i);
  // floor(0.9 * 20) = 18 kept: samples 2..19, bins [2..7], [8..13], [14..19].
  CHECK(block_extremes(v, {6, Tail::Maxima, 0.1}) == std::vector<double>{7, 13, 19});
  CHECK(complete_bins(20, {6, Tail::Maxima, 0.1}) == 3);
}

TEST_CASE("block extremes errors", "[extremes]") {
  const std::vector<double> v{1, 2, 3};
  try {
    (void)block_extremes(v, {4, Tail::Maxima, 0.0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoCompleteBins);
  }
  const std::vector<double> bad{1, std::numeric_limits<double>::infinity(), 3};
  try {
    (void)block_extremes(bad, {1, Tail::Maxima, 0.0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteValue);
  }
  CHECK_THROWS_AS(block_extremes(v, {0, Tail::Maxima, 0.0}), Error);
  CHECK_THROWS_AS(block_extremes(v, {1, Tail::Maxima, 1.0}), Error);
}

TEST_CASE("block extremes agree with the naive reference", "[extremes][property]") {
  std::mt19937_64 gen(2718);
  std::uniform_int_distribution<std::size_t> len(1, 400), bin(1, 60);
  std::uniform_real_distribution<double> burn(0.0, 0.5);
  std::normal_distribution<double> noise;
  std::size_t checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(len(gen));
    for (auto& x : v) x = noise(gen);
    if (trial % 7 == 0)
      for (auto& x : v) x = std::round(x);  // ties
    const std::size_t m = bin(gen);
    const double b = trial % 3 == 0 ? 0.0 : burn(gen);
    for (Tail tail : {Tail::Maxima, Tail::Minima}) {
      const auto expected = naive_extremes(v, m, tail, b);
      if (expected.empty()) {
        CHECK_THROWS_AS(block_extremes(v, {m, tail, b}), Error);
      } else {
        REQUIRE(block_extremes(v, {m, tail, b}) == expected);
        ++checked;
      }
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("minima are negated maxima of the negated series", "[extremes][property]") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> noise;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(500), neg(500);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = noise(gen);
      neg[i] = -v[i];
    }
    const auto mins = block_extremes(v, {17, Tail::Minima, 0.1});
    const auto maxs = block_extremes(neg, {17, Tail::Maxima, 0.1});
    REQUIRE(mins == maxs);
  }
}

TEST_CASE("doubling the bin merges adjacent maxima", "[extremes][property]") {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> noise;
  for (std::size_t m : {1u, 3u, 10u, 25u}) {
    std::vector<double> v(1000);
    for (auto& x : v) x = noise(gen);
    const auto fine = block_extremes(v, {m, Tail::Maxima, 0.0});
    const auto coarse = block_extremes(v, {2 * m, Tail::Maxima, 0.0});
    for (std::size_t i = 0; i < coarse.size(); ++i)
      REQUIRE(coarse[i] == std::max(fine[2 * i], fine[2 * i + 1]));
  }
}

TEST_CASE("streaming accumulator matches batch extraction", "[extremes]") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> noise;
  std::vector<double> v(1234);
  for (auto& x : v) x = noise(gen);
  const BlockSpec spec{50, Tail::Maxima, 0.1};
  BlockExtremaAccumulator acc(50, burn_in_count(v.size(), 0.1));
  for (double x : v) acc.push(x);
  CHECK(acc.maxima() == block_extremes(v, spec));
  CHECK(acc.negated_minima() == block_extremes(v, {50, Tail::Minima, 0.1}));
}

TEST_CASE("bin-length sensitivity", "[extremes]") {
  TimeSeries ts = make_series(gev_sample({0.0, 1.0, -0.2}, 400000, 12));
  const BlockSpec spec{1000, Tail::Maxima, 0.0};

  SECTION("iid series gives overlapping shape intervals") {
    const std::vector<std::size_t> grid{500, 1000, 2000};
    const auto rows = bin_length_sensitivity(ts, spec, grid);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) REQUIRE(r.fit);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = i + 1; j < rows.size(); ++j) {
        const auto& a = rows[i].fit->ci95[2];
        const auto& b = rows[j].fit->ci95[2];
        CHECK(a.low <= b.high);
        CHECK(b.low <= a.high);
      }
  }

  SECTION("an oversized bin errors on its row only") {
    const std::vector<std::size_t> grid{1000, 1000000};
    const auto rows = bin_length_sensitivity(ts, spec, grid);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].fit);
    CHECK_FALSE(rows[1].fit);
    CHECK_FALSE(rows[1].error.empty());
  }

  SECTION("empty grid") {
    CHECK(bin_length_sensitivity(ts, spec, {}).empty());
  }

  SECTION("all rows failing is an error") {
    const std::vector<std::size_t> grid{1000000};
    CHECK_THROWS_AS(bin_length_sensitivity(ts, spec, grid), Error);
  }
}
