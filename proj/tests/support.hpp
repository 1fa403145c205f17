#pragma once

// Hand-rolled generators shared by the unit tests and the acceptance run.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "perorb/geometry.hpp"

namespace perorb::fixtures {

struct LoopGen {
  int dim = 2;
  int samples = 64;
  int max_winding = 1;
  int modes = 4;
  double amplitude = 0.08;
  double T_min = 0.3;
  double T_max = 3.0;
  bool contractible = false;
};

/// Random lift x(s) = c + k s + Σ_m (a_m cos 2πms + b_m sin 2πms).
inline DiscreteLoop random_loop(std::mt19937_64& rng, const LoopGen& g) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_int_distribution<int> wind(-g.max_winding, g.max_winding);
  std::vector<int> k(g.dim, 0);
  if (!g.contractible) {
    for (int& v : k) v = wind(rng);
  }
  std::vector<double> c(g.dim);
  for (double& v : c) v = unit(rng);
  std::vector<double> coef(static_cast<std::size_t>(g.dim) * g.modes * 2);
  for (std::size_t i = 0; i < coef.size(); ++i) {
    const int m = static_cast<int>(i / 2) % g.modes + 1;
    coef[i] = g.amplitude * sym(rng) / m;
  }
  std::vector<double> q(static_cast<std::size_t>(g.dim) * g.samples);
  for (int i = 0; i < g.samples; ++i) {
    const double s = static_cast<double>(i) / g.samples;
    for (int a = 0; a < g.dim; ++a) {
      double x = c[a] + k[a] * s;
      for (int m = 1; m <= g.modes; ++m) {
        const std::size_t base = (static_cast<std::size_t>(a) * g.modes + (m - 1)) * 2;
        const double ph = 2.0 * std::numbers::pi * m * s;
        x += coef[base] * std::cos(ph) + coef[base + 1] * std::sin(ph);
      }
      q[static_cast<std::size_t>(i) * g.dim + a] = x;
    }
  }
  const double t = g.T_min + (g.T_max - g.T_min) * unit(rng);
  return DiscreteLoop::from_lift(g.dim, std::move(q), std::move(k), t);
}

inline TangentVector random_tangent(std::mt19937_64& rng, int dim, int samples) {
  std::normal_distribution<double> nd(0.0, 1.0);
  TangentVector v(dim, samples);
  for (double& x : v.xi) x = nd(rng);
  v.tau = nd(rng);
  return v;
}

inline Covector random_covector(std::mt19937_64& rng, int dim, int samples) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Covector v(dim, samples);
  for (double& x : v.xi) x = nd(rng);
  v.tau = nd(rng);
  return v;
}

/// Circle of radius r around c, sampled at N points.
inline DiscreteLoop circle_loop(double cx, double cy, double r, int samples, double period = 1.0) {
  std::vector<double> q(2 * static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double ph = 2.0 * std::numbers::pi * i / samples;
    q[2 * i] = cx + r * std::cos(ph);
    q[2 * i + 1] = cy + r * std::sin(ph);
  }
  return DiscreteLoop::from_lift(2, std::move(q), {0, 0}, period);
}

}  // namespace perorb::fixtures
