#include "noisyrd/grids.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace noisyrd {

namespace {

Vector trapezoid_weights(const Vector& z) {
  const Index n = z.size();
  Vector w(n);
  if (n == 1) {
    w[0] = 0.0;
    return w;
  }
  w[0] = 0.5 * (z[1] - z[0]);
  w[n - 1] = 0.5 * (z[n - 1] - z[n - 2]);
  for (Index k = 1; k + 1 < n; ++k) w[k] = 0.5 * (z[k + 1] - z[k - 1]);
  return w;
}

}  // namespace

RunningGrid build_running_grid(const NoiseModel& model, const Interval& window,
                               double cutoff, int resolution) {
  if (!(window.lower < window.upper))
    throw std::invalid_argument("build_running_grid: empty window");

  RunningGrid grid;
  grid.window = window;
  grid.cutoff = cutoff;

  if (model.is_gaussian()) {
    if (resolution < 2)
      throw std::invalid_argument("build_running_grid: resolution must be >= 2");
    std::vector<double> pts(resolution);
    double step = window.length() / (resolution - 1);
    for (int k = 0; k < resolution; ++k) pts[k] = window.lower + step * k;
    pts.back() = window.upper;
    // insert the cutoff as a grid point unless it already (numerically) is one
    bool present = false;
    for (double z : pts)
      if (std::abs(z - cutoff) <= 1e-12 * std::max(1.0, std::abs(cutoff))) {
        present = true;
        break;
      }
    if (!present && cutoff > window.lower && cutoff < window.upper)
      pts.push_back(cutoff);
    std::sort(pts.begin(), pts.end());
    grid.points = Eigen::Map<Vector>(pts.data(), static_cast<Index>(pts.size()));
    grid.lambda_weights = trapezoid_weights(grid.points);
  } else {
    int lo = static_cast<int>(std::ceil(window.lower));
    int hi = static_cast<int>(std::floor(window.upper));
    lo = std::max(lo, 0);
    hi = std::min(hi, model.trials());
    if (lo > hi)
      throw std::invalid_argument("build_running_grid: window holds no integers");
    grid.points = Vector::LinSpaced(hi - lo + 1, lo, hi);
    grid.lambda_weights = Vector::Ones(grid.points.size());
  }

  Index ci = 0;
  while (ci < grid.points.size() && grid.points[ci] < cutoff) ++ci;
  // snap: a point within rounding distance of the cutoff belongs to the plus side
  if (ci > 0 && std::abs(grid.points[ci - 1] - cutoff) <=
                    1e-12 * std::max(1.0, std::abs(cutoff)))
    --ci;
  grid.cutoff_index = ci;
  if (ci == 0 || ci == grid.points.size())
    throw std::invalid_argument(
        "build_running_grid: window lies entirely on one side of the cutoff");
  return grid;
}

LatentGrid build_latent_grid(const NoiseModel& model, double cutoff,
                             int resolution, double span_nu) {
  if (resolution < 2)
    throw std::invalid_argument("build_latent_grid: resolution must be >= 2");
  LatentGrid grid;
  if (model.is_gaussian()) {
    double half = span_nu * model.nu();
    grid.points = Vector::LinSpaced(resolution, cutoff - half, cutoff + half);
  } else {
    constexpr double eps = 1e-4;
    double n = model.trials();
    double half = 2.0 * std::sqrt(n);
    double lo = std::max(eps, (cutoff - half) / n);
    double hi = std::min(1.0 - eps, (cutoff + half) / n);
    if (!(lo < hi))
      throw std::invalid_argument("build_latent_grid: degenerate latent span");
    grid.points = Vector::LinSpaced(resolution, lo, hi);
  }
  return grid;
}

GridPair build_grids(const NoiseModel& model, const Interval& window,
                     double cutoff, const GridOptions& opt) {
  GridPair pair;
  pair.running = build_running_grid(model, window, cutoff, opt.z_points);
  pair.latent = build_latent_grid(model, cutoff, opt.u_points, opt.u_span_nu);
  return pair;
}

}  // namespace noisyrd
