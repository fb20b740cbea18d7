#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace evtip::optimize {

struct NelderMeadOptions {
  int max_iterations = 10'000;
  /// Simplex collapse threshold, per coordinate, relative to max(|x|, 1).
  double relative_tolerance = 1e-8;
};

template <std::size_t N>
struct NelderMeadResult {
  std::array<double, N> x{};
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). The objective
/// may return +inf to mark infeasible points.
template <std::size_t N, class Objective>
NelderMeadResult<N> nelder_mead(Objective&& objective, const std::array<double, N>& start,
                                const std::array<double, N>& step,
                                const NelderMeadOptions& options = {}) {
  using Point = std::array<double, N>;
  std::array<Point, N + 1> simplex;
  std::array<double, N + 1> values;

  simplex[0] = start;
  for (std::size_t i = 0; i < N; ++i) {
    simplex[i + 1] = start;
    simplex[i + 1][i] += step[i];
  }
  for (std::size_t i = 0; i <= N; ++i) values[i] = objective(simplex[i]);

  auto blend = [](const Point& a, const Point& b, double t) {
    Point out;
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i] + t * (b[i] - a[i]);
    return out;
  };

  NelderMeadResult<N> result;
  std::array<std::size_t, N + 1> order;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    for (std::size_t i = 0; i <= N; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order[0];
    const std::size_t worst = order[N];
    const std::size_t second_worst = order[N - 1];

    bool collapsed = std::isfinite(values[best]);
    for (std::size_t v = 0; v <= N && collapsed; ++v) {
      for (std::size_t i = 0; i < N; ++i) {
        const double scale = std::max(std::abs(simplex[best][i]), 1.0);
        if (std::abs(simplex[v][i] - simplex[best][i]) > options.relative_tolerance * scale) {
          collapsed = false;
          break;
        }
      }
    }
    result.iterations = iter;
    if (collapsed) {
      result.converged = true;
      break;
    }

    Point centroid{};
    for (std::size_t v = 0; v <= N; ++v) {
      if (v == worst) continue;
      for (std::size_t i = 0; i < N; ++i) centroid[i] += simplex[v][i] / static_cast<double>(N);
    }

    const Point reflected = blend(centroid, simplex[worst], -1.0);
    const double f_reflected = objective(reflected);
    if (f_reflected < values[best]) {
      const Point expanded = blend(centroid, simplex[worst], -2.0);
      const double f_expanded = objective(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second_worst]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }

    const bool outside = f_reflected < values[worst];
    const Point contracted =
        outside ? blend(centroid, reflected, 0.5) : blend(centroid, simplex[worst], 0.5);
    const double f_contracted = objective(contracted);
    if (f_contracted < (outside ? f_reflected : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }

    for (std::size_t v = 0; v <= N; ++v) {
      if (v == best) continue;
      simplex[v] = blend(simplex[best], simplex[v], 0.5);
      values[v] = objective(simplex[v]);
    }
  }

  const auto best_it = std::min_element(values.begin(), values.end());
  result.x = simplex[static_cast<std::size_t>(best_it - values.begin())];
  result.value = *best_it;
  return result;
}

}  // namespace evtip::optimize
