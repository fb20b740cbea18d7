#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "evtip/indicators.hpp"
#include "evtip/sde_models.hpp"

using namespace evtip;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Classical RK4 for the noise-free shear equations, used as a reference.
ShearState rk4_shear(ShearState s, double mu, double nu, double t_end, double h) {
  auto f = [&](const ShearState& q) {
    return std::array<double, 2>{-mu * q.x + q.y * q.y, -nu * q.y + q.x - q.x * q.y};
  };
  const auto steps = static_cast<std::size_t>(std::llround(t_end / h));
  for (std::size_t i = 0; i < steps; ++i) {
    const auto k1 = f(s);
    const auto k2 = f({s.x + 0.5 * h * k1[0], s.y + 0.5 * h * k1[1]});
    const auto k3 = f({s.x + 0.5 * h * k2[0], s.y + 0.5 * h * k2[1]});
    const auto k4 = f({s.x + h * k3[0], s.y + h * k3[1]});
    s.x += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    s.y += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
  }
  return s;
}

double rk4_doublewell(double x, double a, double lambda, double t_end, double h) {
  auto f = [&](double q) { return -(q * q * q - 2 * a * q + lambda); };
  const auto steps = static_cast<std::size_t>(std::llround(t_end / h));
  for (std::size_t i = 0; i < steps; ++i) {
    const double k1 = f(x), k2 = f(x + 0.5 * h * k1), k3 = f(x + 0.5 * h * k2), k4 = f(x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

// Least-squares slope of log(err) against log(dt).
double loglog_slope(const std::vector<double>& dts, const std::vector<double>& errs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const double x = std::log(dts[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("shear fixed points", "[sde][shear]") {
  const auto fp = shear_fixed_points(1.0, 0.2475);
  CHECK_THAT(fp.stable.x, WithinAbs(0.3025, 1e-12));
  CHECK_THAT(fp.stable.y, WithinAbs(0.55, 1e-12));
  CHECK_THAT(fp.unstable.x, WithinAbs(0.2025, 1e-12));
  CHECK_THAT(fp.unstable.y, WithinAbs(0.45, 1e-12));
  CHECK(fp.trivial.x == 0.0);
  CHECK(fp.trivial.y == 0.0);

  for (double mu : {0.3, 1.0, 2.5}) {
    for (double frac : {0.01, 0.3, 0.7, 0.999}) {
      const double nu = 0.25 * frac / mu;
      const auto p = shear_fixed_points(mu, nu);
      for (const auto& s : {p.stable, p.unstable}) {
        const ShearDrift d = shear_drift(s, mu, nu);
        CHECK(std::abs(d.dx()) < 1e-12);
        CHECK(std::abs(d.dy()) < 1e-12);
      }
      CHECK(p.stable.y > p.unstable.y);
    }
  }
}

TEST_CASE("shear fixed points merge at the saddle-node", "[sde][shear]") {
  const auto p = shear_fixed_points(1.0, 0.25 - 1e-9);
  CHECK(std::abs(p.stable.y - 0.5) < 5e-5);
  CHECK(std::abs(p.unstable.y - 0.5) < 5e-5);

  for (double nu : {0.25, 0.3}) {
    try {
      (void)shear_fixed_points(1.0, nu);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoNontrivialFixedPoints);
    }
  }
}

TEST_CASE("quadratic terms conserve energy", "[sde][shear][property]") {
  // Dyadic values: every product is exact, so the cancellation is exact.
  for (double x : {0.5, -0.75, 1.25, 3.0})
    for (double y : {0.25, -1.5, 2.0}) {
      const ShearDrift d = shear_drift({x, y}, 1.0, 0.2475);
      CHECK(x * d.nonlinear_x + y * d.nonlinear_y == 0.0);
    }
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const ShearState s{u(gen), u(gen)};
    const ShearDrift d = shear_drift(s, 1.0, 0.2475);
    CHECK(std::abs(s.x * d.nonlinear_x + s.y * d.nonlinear_y) < 1e-14);
  }
}

TEST_CASE("noise-free shear stays at its fixed point", "[sde][shear]") {
  CoupledShearSpec spec;
  const auto run = simulate_shear(spec, 10000);
  const double e0 = shear_energy(shear_fixed_points(spec.mu, spec.nu).stable);
  REQUIRE(run.series.size() == 10000);
  for (double e : run.series.values) REQUIRE(std::abs(e - e0) < 1e-6);
  CHECK(run.n_transitions == 0);
  CHECK(run.series.dt == spec.dt);
}

TEST_CASE("shear trajectory from near the unstable point", "[sde][shear]") {
  CoupledShearSpec spec;
  spec.dt = 1e-4;
  const ShearState start{0.21, 0.46};
  const double t_end = 400.0;
  const auto n = static_cast<std::size_t>(t_end / spec.dt);
  const auto stats = integrate_shear(spec, n, [](double e) { REQUIRE(std::isfinite(e)); }, start);
  const ShearState ref = rk4_shear(start, spec.mu, spec.nu, t_end, 1e-3);
  const auto fp = shear_fixed_points(spec.mu, spec.nu);
  const bool to_stable = std::hypot(ref.x - fp.stable.x, ref.y - fp.stable.y) < 1e-3;
  const bool to_origin = std::hypot(ref.x, ref.y) < 1e-2;
  CHECK((to_stable || to_origin));
  CHECK(std::hypot(stats.final_state.x - ref.x, stats.final_state.y - ref.y) < 1e-3);
}

TEST_CASE("shear transitions need noise", "[sde][shear]") {
  CoupledShearSpec spec;
  spec.nu = 0.2487;
  spec.seed = 3;
  spec.noise_u = 0.3;
  const auto noisy = simulate_shear(spec, 1000000);
  CHECK(noisy.n_transitions > 0);

  // Every transition shows up as one sub-threshold sample.
  std::size_t below = 0;
  for (double e : noisy.series.values) below += e < spec.laminar_threshold ? 1 : 0;
  CHECK(below == noisy.n_transitions);

  spec.noise_u = 0.0;
  CHECK(simulate_shear(spec, 1000000).n_transitions == 0);
}

TEST_CASE("shear validation and blow-up", "[sde][shear]") {
  CoupledShearSpec spec;
  spec.dt = 0.1;
  CHECK_THROWS_AS(simulate_shear(spec, 10), Error);
  spec = {};
  spec.noise_u = -1.0;
  CHECK_THROWS_AS(simulate_shear(spec, 10), Error);
  spec = {};
  spec.laminar_threshold = 0.0;
  CHECK_THROWS_AS(simulate_shear(spec, 10), Error);

  spec = {};
  try {
    (void)integrate_shear(spec, 1000, [](double) {}, ShearState{0.0, 5000.0});
    FAIL("expected blow-up");
  } catch (const BlowUpError& e) {
    CHECK(e.code() == ErrorCode::NumericalBlowUp);
    CHECK(e.step() < 1000);
  }
}

TEST_CASE("seeded runs are reproducible", "[sde][property]") {
  CoupledShearSpec shear;
  shear.noise_u = 0.1;
  shear.seed = 17;
  CHECK(simulate_shear(shear, 5000).series.values == simulate_shear(shear, 5000).series.values);
  auto other = shear;
  other.seed = 18;
  CHECK(simulate_shear(shear, 5000).series.values != simulate_shear(other, 5000).series.values);

  DoubleWellSpec dw;
  dw.seed = 5;
  CHECK(simulate_doublewell(dw, 5000, true).series.values ==
        simulate_doublewell(dw, 5000, true).series.values);
}

TEST_CASE("integration converges at first order in dt", "[sde][property]") {
  const std::vector<double> dts{0.01, 0.005, 0.0025};
  const double t_end = 5.0;

  std::vector<double> shear_err, dw_err;
  const ShearState start{0.4, 0.6};
  const ShearState ref = rk4_shear(start, 1.0, 0.2475, t_end, 1e-4);
  const double dw_ref = rk4_doublewell(0.3, 1.0, 0.2, t_end, 1e-4);
  for (double dt : dts) {
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    CoupledShearSpec s;
    s.dt = dt;
    const ShearState end = integrate_shear(s, n, [](double) {}, start).final_state;
    shear_err.push_back(std::hypot(end.x - ref.x, end.y - ref.y));

    DoubleWellSpec d;
    d.lambda = 0.2;
    d.epsilon = 0.0;
    d.dt = dt;
    dw_err.push_back(std::abs(integrate_doublewell(d, n, false, [](double) {}, 0.3).final_x - dw_ref));
  }
  CHECK(loglog_slope(dts, shear_err) >= 0.9);
  CHECK(loglog_slope(dts, dw_err) >= 0.9);
}

TEST_CASE("double-well critical points", "[sde][doublewell]") {
  const auto sym = doublewell_critical_points(1.0, 0.0);
  CHECK_THAT(sym.x1, WithinAbs(-std::numbers::sqrt2, 1e-14));
  CHECK_THAT(sym.x_saddle, WithinAbs(0.0, 1e-14));
  CHECK_THAT(sym.x2, WithinAbs(std::numbers::sqrt2, 1e-14));

  for (double lambda : {-1.0, -0.3, 0.5, 1.0, 1.08}) {
    const auto cp = doublewell_critical_points(1.0, lambda);
    CHECK(cp.x1 < cp.x_saddle);
    CHECK(cp.x_saddle < cp.x2);
    for (double x : {cp.x1, cp.x_saddle, cp.x2})
      CHECK(std::abs(doublewell_force(x, 1.0, lambda)) < 1e-10);
  }

  try {
    (void)doublewell_critical_points(1.0, 2.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Monostable);
  }
  CHECK_THROWS_AS(doublewell_critical_points(-1.0, 0.0), Error);
}

TEST_CASE("barrier heights", "[sde][doublewell]") {
  CHECK_THAT(barrier_height(1.0, 0.0, Well::Left), WithinAbs(1.0, 1e-14));
  CHECK_THAT(barrier_height(1.0, 0.0, Well::Right), WithinAbs(1.0, 1e-14));
  CHECK(barrier_height(1.0, 0.1, Well::Right) < barrier_height(1.0, 0.1, Well::Left));
  CHECK(barrier_height(1.0, 0.9, Well::Right) > 0.0);
  CHECK(std::abs(barrier_height(1.0, 1e-8, Well::Left) - barrier_height(1.0, 1e-8, Well::Right)) <
        1e-7);
}

TEST_CASE("noise-free double well sits at its minimum", "[sde][doublewell]") {
  DoubleWellSpec spec;
  spec.epsilon = 0.0;
  spec.lambda = 0.4;
  const double x2 = doublewell_critical_points(spec.a, spec.lambda).x2;
  const auto run = simulate_doublewell(spec, 10000, false);
  double prev = x2;
  for (double x : run.series.values) {
    REQUIRE(std::abs(x - prev) < 1e-12);
    prev = x;
  }
}

TEST_CASE("linearized noise variance", "[sde][doublewell]") {
  DoubleWellSpec spec;
  spec.epsilon = 0.1;
  spec.seed = 21;
  const auto cp = doublewell_critical_points(spec.a, spec.lambda);
  const double curvature = 3 * cp.x2 * cp.x2 - 2 * spec.a;
  const auto run = simulate_doublewell(spec, 2000000, false);
  const double expected = spec.epsilon * spec.epsilon / (2 * curvature);
  CHECK_THAT(bulk_stats(run.series, 0.1).variance, WithinRel(expected, 0.05));
}

TEST_CASE("escape times", "[sde][doublewell]") {
  SECTION("mean escape time has the barrier-crossing magnitude") {
    DoubleWellSpec spec;
    spec.epsilon = 0.5;
    spec.seed = 31;
    const auto run = simulate_doublewell(spec, 10000000, true);
    REQUIRE(run.escape_times.size() >= 10);
    REQUIRE(run.escape_times.size() == run.n_transitions);
    double mean = 0;
    for (double t : run.escape_times) {
      CHECK(t > 0.0);
      mean += t;
    }
    mean /= static_cast<double>(run.escape_times.size());
    // Mean first-passage time to the saddle: pi / sqrt(V''(min) |V''(saddle)|) e^{2 dV / eps^2}.
    const double kramers = std::numbers::pi / std::sqrt(4.0 * 2.0) *
                           std::exp(2.0 * 1.0 / (spec.epsilon * spec.epsilon));
    CHECK(mean > kramers / 3);
    CHECK(mean < kramers * 3);
  }

  SECTION("weak noise never escapes") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      DoubleWellSpec spec;
      spec.epsilon = 0.2;
      spec.seed = seed;
      const auto run = simulate_doublewell(spec, 100000, true);
      CHECK(run.n_transitions == 0);
      CHECK(run.escape_times.empty());
    }
  }

  SECTION("without resets escapes are not counted") {
    DoubleWellSpec spec;
    spec.epsilon = 0.6;
    const auto run = simulate_doublewell(spec, 200000, false);
    CHECK(run.n_transitions == 0);
    CHECK(run.escape_times.empty());
  }
}

TEST_CASE("double-well validation", "[sde][doublewell]") {
  DoubleWellSpec spec;
  spec.epsilon = -0.1;
  CHECK_THROWS_AS(simulate_doublewell(spec, 10, false), Error);
  spec = {};
  spec.dt = 0.0;
  CHECK_THROWS_AS(simulate_doublewell(spec, 10, false), Error);
  spec = {};
  spec.lambda = 3.0;
  CHECK_THROWS_AS(simulate_doublewell(spec, 10, false), Error);
}
