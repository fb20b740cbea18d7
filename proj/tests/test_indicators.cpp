#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "evtip/indicators.hpp"

using namespace evtip;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Two-pass textbook formulas in long double.
BulkStats two_pass(const std::vector<double>& v) {
  const long double n = static_cast<long double>(v.size());
  long double mean = 0;
  for (double x : v) mean += x;
  mean /= n;
  long double m2 = 0, m3 = 0, cross = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const long double d = v[i] - mean;
    m2 += d * d;
    m3 += d * d * d;
    if (i + 1 < v.size()) cross += d * (v[i + 1] - mean);
  }
  BulkStats s;
  s.mean = static_cast<double>(mean);
  s.variance = static_cast<double>(m2 / (n - 1));
  s.skewness = static_cast<double>((m3 / n) / std::pow(m2 / n, 1.5L));
  s.lag1_autocorr = static_cast<double>(cross / m2);
  s.n_samples = v.size();
  return s;
}

std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::gamma_distribution<double> shock(2.0, 1.0);  // skewed innovations
  std::vector<double> v(n);
  double x = 0.0;
  for (auto& y : v) y = x = phi * x + shock(gen);
  return v;
}

}  // namespace

TEST_CASE("bulk statistics examples", "[indicators]") {
  const std::vector<double> triple{1, 2, 3};
  const BulkStats s = bulk_stats(triple, 0.0);
  CHECK_THAT(s.mean, WithinAbs(2.0, 1e-15));
  CHECK_THAT(s.variance, WithinAbs(1.0, 1e-15));
  CHECK_THAT(s.skewness, WithinAbs(0.0, 1e-15));
  CHECK(s.n_samples == 3);

  const std::vector<double> zeros(4, 0.0);
  const BulkStats z = bulk_stats(zeros, 0.0);
  CHECK(z.variance == 0.0);
  CHECK(z.skewness == 0.0);
  CHECK(z.lag1_autocorr == 0.0);

  const std::vector<double> big_constant(100, 1e12);
  CHECK(bulk_stats(big_constant, 0.0).variance == 0.0);
}

TEST_CASE("white noise has no skewness or memory", "[indicators]") {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> noise;
  std::vector<double> v(100000);
  for (auto& x : v) x = noise(gen);
  const BulkStats s = bulk_stats(v, 0.0);
  CHECK(std::abs(s.skewness) < 0.03);
  CHECK(std::abs(s.lag1_autocorr) < 0.01);
  CHECK_THAT(s.variance, WithinAbs(1.0, 0.02));
}

TEST_CASE("streaming moments match the two-pass reference", "[indicators]") {
  for (double phi : {0.0, 0.5, 0.95}) {
    const auto v = ar1(20000, phi, 3);
    const BulkStats s = bulk_stats(v, 0.0);
    const BulkStats r = two_pass(v);
    CHECK_THAT(s.mean, WithinRel(r.mean, 1e-12));
    CHECK_THAT(s.variance, WithinRel(r.variance, 1e-10));
    CHECK_THAT(s.skewness, WithinRel(r.skewness, 1e-9));
    CHECK_THAT(s.lag1_autocorr, WithinAbs(r.lag1_autocorr, 1e-10));
  }
}

TEST_CASE("burn-in is applied before the moments", "[indicators]") {
  const auto v = ar1(1000, 0.3, 4);
  const std::vector<double> tail(v.begin() + 200, v.end());
  const BulkStats s = bulk_stats(v, 0.2);
  const BulkStats r = two_pass(tail);
  CHECK(s.n_samples == 800);
  CHECK_THAT(s.variance, WithinRel(r.variance, 1e-10));
}

TEST_CASE("shift, scale and sign behaviour", "[indicators][property]") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto v = ar1(5000, 0.7, seed);
    const BulkStats base = bulk_stats(v, 0.0);

    std::vector<double> shifted(v), scaled(v), negated(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
      shifted[i] += 1234.5;
      scaled[i] *= 3.5;
      negated[i] = -v[i];
    }
    const BulkStats sh = bulk_stats(shifted, 0.0);
    CHECK_THAT(sh.variance, WithinRel(base.variance, 1e-10));
    CHECK_THAT(sh.skewness, WithinRel(base.skewness, 1e-10));
    CHECK_THAT(sh.lag1_autocorr, WithinRel(base.lag1_autocorr, 1e-10));

    const BulkStats sc = bulk_stats(scaled, 0.0);
    CHECK_THAT(sc.variance, WithinRel(3.5 * 3.5 * base.variance, 1e-12));
    CHECK_THAT(sc.skewness, WithinRel(base.skewness, 1e-12));
    CHECK_THAT(sc.lag1_autocorr, WithinRel(base.lag1_autocorr, 1e-12));

    const BulkStats ng = bulk_stats(negated, 0.0);
    CHECK(ng.skewness == -base.skewness);
    CHECK(ng.variance == base.variance);
  }
}

TEST_CASE("autocorrelation stays in range", "[indicators][property]") {
  const std::vector<double> alternating{1, -1, 1, -1, 1, -1, 1, -1};
  const BulkStats s = bulk_stats(alternating, 0.0);
  CHECK(s.lag1_autocorr >= -1.0);
  CHECK(s.lag1_autocorr <= 1.0);
  CHECK(s.lag1_autocorr < -0.8);

  std::vector<double> ramp;
  for (int i = 0; i < 1000; ++i) ramp.push_back(i);
  const BulkStats r = bulk_stats(ramp, 0.0);
  CHECK(r.lag1_autocorr <= 1.0);
  CHECK(r.lag1_autocorr > 0.99);
}

TEST_CASE("bulk statistics errors", "[indicators]") {
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(bulk_stats(one, 0.0), Error);
  const std::vector<double> bad{1.0, std::nan(""), 2.0};
  CHECK_THROWS_AS(bulk_stats(bad, 0.0), Error);
  const std::vector<double> ok{1.0, 2.0};
  CHECK_THROWS_AS(bulk_stats(ok, 1.0), Error);
}
