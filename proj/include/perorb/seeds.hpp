#ifndef PERORB_SEEDS_HPP
#define PERORB_SEEDS_HPP

// Initial loops for descents and witness searches: constant loops, circles
// and axis-aligned rectangles at several scales, random smooth loops, and
// the period that minimizes the action of a fixed shape.

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "perorb/action.hpp"
#include "perorb/geometry.hpp"

namespace perorb {

/// Closed polygon through `vertices` (lift coordinates, row-major, implicitly
/// closed with the given winding), sampled uniformly in arclength.
inline DiscreteLoop polygon_loop(int dim, const std::vector<double>& vertices, std::vector<int> winding,
                                 int samples, double period = 1.0) {
  const int nv = static_cast<int>(vertices.size()) / dim;
  std::vector<double> cum(nv + 1, 0.0);
  auto vert = [&](int i, int a) {
    const int wrap = i / nv;
    return vertices[static_cast<std::size_t>(i % nv) * dim + a] + wrap * winding[a];
  };
  for (int i = 0; i < nv; ++i) {
    double g2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double d = vert(i + 1, a) - vert(i, a);
      g2 += d * d;
    }
    cum[i + 1] = cum[i] + std::sqrt(g2);
  }
  const double total = cum[nv];
  std::vector<double> q(static_cast<std::size_t>(samples) * dim);
  int seg = 0;
  for (int j = 0; j < samples; ++j) {
    const double s = total * j / samples;
    while (seg < nv - 1 && cum[seg + 1] <= s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? (s - cum[seg]) / len : 0.0;
    for (int a = 0; a < dim; ++a) {
      q[static_cast<std::size_t>(j) * dim + a] = (1.0 - t) * vert(seg, a) + t * vert(seg + 1, a);
    }
  }
  return DiscreteLoop::from_lift(dim, std::move(q), std::move(winding), period);
}

inline DiscreteLoop circle_seed(int dim, int ax, int ay, std::span<const double> center, double radius,
                                bool counterclockwise, int samples) {
  std::vector<double> q(static_cast<std::size_t>(samples) * dim);
  const double sign = counterclockwise ? 1.0 : -1.0;
  for (int i = 0; i < samples; ++i) {
    const double ph = 2.0 * std::numbers::pi * i / samples;
    for (int a = 0; a < dim; ++a) q[static_cast<std::size_t>(i) * dim + a] = center[a];
    q[static_cast<std::size_t>(i) * dim + ax] += radius * std::cos(ph);
    q[static_cast<std::size_t>(i) * dim + ay] += sign * radius * std::sin(ph);
  }
  return DiscreteLoop::from_lift(dim, std::move(q), std::vector<int>(dim, 0), 1.0);
}

/// Rectangle with side `width` along axis `aw` and `height` along `ah`.
inline DiscreteLoop rectangle_seed(int dim, int aw, int ah, std::span<const double> center, double width,
                                   double height, bool counterclockwise, int samples) {
  const double sw[4] = {-0.5, 0.5, 0.5, -0.5};
  const double sh[4] = {-0.5, -0.5, 0.5, 0.5};
  std::vector<double> v;
  for (int c = 0; c < 4; ++c) {
    const int k = counterclockwise ? c : (4 - c) % 4;
    for (int a = 0; a < dim; ++a) {
      double x = center[a];
      if (a == aw) x += sw[k] * width;
      if (a == ah) x += sh[k] * height;
      v.push_back(x);
    }
  }
  return polygon_loop(dim, v, std::vector<int>(dim, 0), samples);
}

/// Random smooth contractible loop: a few Fourier modes around a random
/// center.
inline DiscreteLoop random_contractible_seed(std::mt19937_64& rng, int dim, int samples, double amplitude,
                                             int modes = 3) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> center(dim);
  for (double& c : center) c = unit(rng);
  std::vector<double> coef(static_cast<std::size_t>(dim) * modes * 2);
  for (std::size_t i = 0; i < coef.size(); ++i) coef[i] = amplitude * nd(rng) / (1 + i / (2 * dim));
  std::vector<double> q(static_cast<std::size_t>(samples) * dim);
  for (int i = 0; i < samples; ++i) {
    const double s = static_cast<double>(i) / samples;
    for (int a = 0; a < dim; ++a) {
      double x = center[a];
      for (int m = 1; m <= modes; ++m) {
        const std::size_t b = (static_cast<std::size_t>(m - 1) * dim + a) * 2;
        x += coef[b] * std::cos(2 * std::numbers::pi * m * s) + coef[b + 1] * std::sin(2 * std::numbers::pi * m * s);
      }
      q[static_cast<std::size_t>(i) * dim + a] = x;
    }
  }
  // Resample finely enough if the amplitude made the gaps large.
  double max_gap = 0.0;
  for (int i = 0; i < samples; ++i) {
    double g2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double d = q[static_cast<std::size_t>((i + 1) % samples) * dim + a] - q[static_cast<std::size_t>(i) * dim + a];
      g2 += d * d;
    }
    max_gap = std::max(max_gap, std::sqrt(g2));
  }
  if (max_gap >= kMaxGap) {
    throw Error(ErrorCode::BadParameters, "random seed amplitude too large for the sample count");
  }
  return DiscreteLoop::from_lift(dim, std::move(q), std::vector<int>(dim, 0), 1.0);
}

/// Scales the lift by `factor` along `axis` about the loop's mean position.
inline DiscreteLoop stretch_loop(const DiscreteLoop& loop, int axis, double factor, int samples) {
  const int n = loop.size();
  const int dim = loop.dim();
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += loop.coord(i, axis);
  mean /= n;
  std::vector<double> v = loop.lift();
  for (int i = 0; i < n; ++i) {
    double& x = v[static_cast<std::size_t>(i) * dim + axis];
    x = mean + factor * (x - mean);
  }
  std::vector<int> k = loop.winding();
  if (k[axis] != 0) throw Error(ErrorCode::BadParameters, "cannot stretch along a winding axis");
  return polygon_loop(dim, v, k, samples, loop.period());
}

/// For a fixed shape the action is A/T + B + C·T; this returns the loop at
/// the minimizing period (or at a period where the action is already
/// negative when C ≤ 0), clamped to [T_min, T_max].
inline DiscreteLoop with_optimal_period(const FunctionalContext& ctx, const DiscreteLoop& loop,
                                        double T_min = 1e-3, double T_max = 1e4) {
  const int n = loop.size();
  const double nn = n;
  double a = 0.0, b = 0.0, vbar = 0.0;
  Vec th{};
  for (int i = 0; i < n; ++i) {
    const auto s = detail::segment(loop, i);
    ctx.model.theta_at(s.mid, th);
    for (int c = 0; c < loop.dim(); ++c) {
      a += s.d[c] * s.d[c] / (2.0 * nn);
      b += th[c] * s.d[c] / nn;
    }
    vbar += ctx.model.potential_at(s.mid) / nn;
  }
  const double c = ctx.kappa - vbar;
  double t;
  if (c > 0.0) {
    t = a > 0.0 ? std::sqrt(a / c) : T_min;
  } else if (a == 0.0) {
    t = 1.0;
  } else {
    t = 10.0 * (a + std::abs(b) + 1.0) / std::max(std::abs(c), 1e-3);
  }
  return loop.with_period(std::clamp(t, T_min, T_max));
}

struct SeedOptions {
  int samples = 256;
  int random_seeds = 8;
  std::vector<double> radii{0.05, 0.1, 0.2, 0.3};
  std::vector<double> widths{0.25, 0.5};
  std::vector<double> heights{1.0, 2.0, 4.0, 8.0};
  int centers_per_axis = 8;
};

/// Contractible seeds at several scales (periods still unset).
inline std::vector<DiscreteLoop> contractible_seeds(const TonelliModel& model, std::span<const double> vmax_point,
                                                    const SeedOptions& opts, std::mt19937_64& rng) {
  const int dim = model.dim();
  std::vector<DiscreteLoop> out;
  out.push_back(constant_loop(vmax_point, opts.samples, 1.0));
  std::vector<double> center(vmax_point.begin(), vmax_point.end());
  const int cpa = std::max(1, opts.centers_per_axis);
  for (int ax = 0; ax < dim; ++ax) {
    for (int ay = 0; ay < dim; ++ay) {
      if (ax == ay) continue;
      for (int ci = 0; ci < cpa; ++ci) {
        std::vector<double> c = center;
        c[ax] = static_cast<double>(ci) / cpa;
        for (bool ccw : {true, false}) {
          if (ax < ay) {
            for (double r : opts.radii) {
              c[ay] = center[ay];
              out.push_back(circle_seed(dim, ax, ay, c, r, ccw, opts.samples));
            }
          }
          for (double w : opts.widths) {
            for (double h : opts.heights) {
              out.push_back(rectangle_seed(dim, ax, ay, c, w, h, ccw, opts.samples));
            }
          }
        }
      }
    }
  }
  for (int i = 0; i < opts.random_seeds; ++i) {
    out.push_back(random_contractible_seed(rng, dim, opts.samples, 0.05));
  }
  return out;
}

}  // namespace perorb

#endif  // PERORB_SEEDS_HPP
