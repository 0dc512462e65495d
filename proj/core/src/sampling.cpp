#include <cmath>
#include <random>

#include "mkv/manifold.hpp"

namespace mkv {

std::vector<std::vector<double>> sample_points(const ManifoldSpec& spec, int grid_per_axis) {
  const int n = spec.dim;
  std::vector<double> lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    const auto [a, b] = spec.domain[static_cast<size_t>(i)];
    const double margin = 0.05 * (b - a);
    lo[static_cast<size_t>(i)] = a + margin;
    hi[static_cast<size_t>(i)] = b - margin;
  }

  int per_axis = std::max(1, grid_per_axis);
  while (std::pow(static_cast<double>(per_axis), n) > 1e5 && per_axis > 1) --per_axis;

  std::vector<std::vector<double>> points;
  std::vector<int> idx(static_cast<size_t>(n), 0);
  while (true) {
    std::vector<double> p(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double t = per_axis == 1 ? 0.5
                                     : static_cast<double>(idx[static_cast<size_t>(i)]) /
                                           static_cast<double>(per_axis - 1);
      p[static_cast<size_t>(i)] =
          lo[static_cast<size_t>(i)] + t * (hi[static_cast<size_t>(i)] - lo[static_cast<size_t>(i)]);
    }
    points.push_back(std::move(p));
    int axis = n - 1;
    while (axis >= 0 && ++idx[static_cast<size_t>(axis)] == per_axis) {
      idx[static_cast<size_t>(axis)] = 0;
      --axis;
    }
    if (axis < 0) break;
  }

  std::mt19937 rng(kSampleSeed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < kRandomSamples; ++k) {
    std::vector<double> p(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      p[static_cast<size_t>(i)] = lo[static_cast<size_t>(i)] +
                                  unit(rng) * (hi[static_cast<size_t>(i)] - lo[static_cast<size_t>(i)]);
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace mkv
