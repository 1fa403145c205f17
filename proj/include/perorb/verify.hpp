#ifndef PERORB_VERIFY_HPP
#define PERORB_VERIFY_HPP

// Candidate checks that do not reuse the variational discretization: the
// Euler-Lagrange ODE is integrated with classical RK4 from data read off the
// loop, and the stationarity identities are evaluated on the loop itself.

#include <cmath>
#include <vector>

#include "perorb/action.hpp"
#include "perorb/geometry.hpp"
#include "perorb/lagrangian.hpp"

namespace perorb {

struct Trajectory {
  Vec x_end{};
  Vec v_end{};
  std::vector<double> energies;
  double energy_drift = 0.0;
  int steps = 0;
  double dt = 0.0;
};

/// RK4 on x' = v, v' = el_rhs(x, v) over [0, T].
inline Trajectory integrate_el(const TonelliModel& m, std::span<const double> x0, std::span<const double> v0,
                               double T, int steps) {
  if (steps < 100) throw Error(ErrorCode::BadParameters, "need at least 100 steps", "steps");
  if (!(T > 0.0)) throw Error(ErrorCode::NonPositivePeriod, "integration time must be positive");
  const int n = m.dim();
  if (static_cast<int>(x0.size()) != n || static_cast<int>(v0.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "initial data dimension");
  }
  Trajectory tr;
  tr.steps = steps;
  tr.dt = T / steps;
  Vec x{}, v{};
  for (int a = 0; a < n; ++a) {
    x[a] = x0[a];
    v[a] = v0[a];
  }
  auto sp = [n](const Vec& a) { return std::span<const double>(a.data(), static_cast<std::size_t>(n)); };
  tr.energies.reserve(static_cast<std::size_t>(steps) + 1);
  const double e0 = eval_E(m, sp(x), sp(v));
  tr.energies.push_back(e0);
  const double h = tr.dt;
  Vec xt{}, vt{};
  for (int s = 0; s < steps; ++s) {
    const Vec a1 = el_rhs(m, sp(x), sp(v));
    const Vec k1x = v;
    for (int a = 0; a < n; ++a) {
      xt[a] = x[a] + 0.5 * h * k1x[a];
      vt[a] = v[a] + 0.5 * h * a1[a];
    }
    const Vec k2x = vt;
    const Vec a2 = el_rhs(m, sp(xt), sp(vt));
    for (int a = 0; a < n; ++a) {
      xt[a] = x[a] + 0.5 * h * k2x[a];
      vt[a] = v[a] + 0.5 * h * a2[a];
    }
    const Vec k3x = vt;
    const Vec a3 = el_rhs(m, sp(xt), sp(vt));
    for (int a = 0; a < n; ++a) {
      xt[a] = x[a] + h * k3x[a];
      vt[a] = v[a] + h * a3[a];
    }
    const Vec k4x = vt;
    const Vec a4 = el_rhs(m, sp(xt), sp(vt));
    for (int a = 0; a < n; ++a) {
      x[a] += h / 6.0 * (k1x[a] + 2.0 * k2x[a] + 2.0 * k3x[a] + k4x[a]);
      v[a] += h / 6.0 * (a1[a] + 2.0 * a2[a] + 2.0 * a3[a] + a4[a]);
    }
    const double e = eval_E(m, sp(x), sp(v));
    tr.energies.push_back(e);
    tr.energy_drift = std::max(tr.energy_drift, std::abs(e - e0));
  }
  tr.x_end = x;
  tr.v_end = v;
  return tr;
}

struct VerifyTolerances {
  double closure = 1e-3;
  double energy = 1e-3;
  double el = 1e-3;
  double dT = 1e-3;
  /// Integrator step; the step count is ceil(T / dt), at least 100.
  double dt = 1e-3;
};

struct VerificationReport {
  double closure_error = 0.0;
  double energy_mean = 0.0;
  double energy_std = 0.0;
  double energy_error = 0.0;  // |energy_mean − κ|
  double el_residual = 0.0;
  double dT_residual = 0.0;
  /// |mean(κ − E) − period part of the differential|.
  double dT_identity_gap = 0.0;
  double energy_drift = 0.0;
  bool passed = false;
};

/// Initial position and velocity of γ(t) = x(t/T) from 4th-order central
/// differences of the lift at sample 0.
inline std::pair<Vec, Vec> initial_data(const DiscreteLoop& loop) {
  const int n = loop.size();
  const double nn = n;
  Vec x{}, v{};
  for (int a = 0; a < loop.dim(); ++a) {
    x[a] = loop.coord(0, a);
    const double d = -loop.lifted(2, a) + 8.0 * loop.lifted(1, a) - 8.0 * loop.lifted(-1, a) + loop.lifted(-2, a);
    v[a] = nn * d / 12.0 / loop.period();
  }
  return {x, v};
}

inline VerificationReport verify_orbit(const TonelliModel& model, const DiscreteLoop& loop, double kappa,
                                       const VerifyTolerances& tol = {}) {
  VerificationReport r;
  const int dim = loop.dim();
  const double T = loop.period();
  const auto [x0, v0] = initial_data(loop);
  const int steps = std::max(100, static_cast<int>(std::ceil(T / tol.dt)));
  const auto sp = [dim](const Vec& a) { return std::span<const double>(a.data(), static_cast<std::size_t>(dim)); };
  const Trajectory tr = integrate_el(model, sp(x0), sp(v0), T, steps);
  double dx2 = 0.0, dv2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    const double dx = tr.x_end[a] - (x0[a] + loop.winding()[a]);
    const double dv = tr.v_end[a] - v0[a];
    dx2 += dx * dx;
    dv2 += dv * dv;
  }
  r.closure_error = std::sqrt(dx2) + std::sqrt(dv2);

  // Time average over the trajectory (trapezoid on the uniform grid).
  const auto& e = tr.energies;
  double mean = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double w = (i == 0 || i + 1 == e.size()) ? 0.5 : 1.0;
    mean += w * e[i];
  }
  mean /= static_cast<double>(e.size() - 1);
  double var = 0.0;
  for (double v : e) var += (v - mean) * (v - mean);
  r.energy_mean = mean;
  r.energy_std = std::sqrt(var / static_cast<double>(e.size()));
  r.energy_error = std::abs(mean - kappa);
  r.energy_drift = tr.energy_drift;

  const FunctionalContext ctx(model, kappa, BoundsEstimate{});
  const Evaluation ev = evaluate(ctx, loop);
  for (int i = 0; i < loop.size(); ++i) {
    double c2 = 0.0;
    for (int a = 0; a < dim; ++a) c2 += ev.differential.at(i, a) * ev.differential.at(i, a);
    r.el_residual = std::max(r.el_residual, std::sqrt(c2));
  }
  const double mke = mean_kappa_minus_energy(ctx, loop);
  r.dT_residual = std::abs(mke);
  r.dT_identity_gap = std::abs(mke - ev.differential.tau);
  r.passed = r.closure_error < tol.closure && r.energy_error < tol.energy && r.el_residual < tol.el &&
             r.dT_residual < tol.dT;
  return r;
}

/// Observed convergence order of integrate_el from the endpoint error at
/// step h against a reference run at h/8: log₂(e(h)/e(h/2)).
inline double rk4_order(const TonelliModel& m, std::span<const double> x0, std::span<const double> v0, double T,
                        int steps) {
  const auto ref = integrate_el(m, x0, v0, T, steps * 8);
  auto err = [&](int s) {
    const auto tr = integrate_el(m, x0, v0, T, s);
    double e2 = 0.0;
    for (int a = 0; a < m.dim(); ++a) {
      e2 += (tr.x_end[a] - ref.x_end[a]) * (tr.x_end[a] - ref.x_end[a]) +
            (tr.v_end[a] - ref.v_end[a]) * (tr.v_end[a] - ref.v_end[a]);
    }
    return std::sqrt(e2);
  };
  return std::log2(err(steps) / err(2 * steps));
}

}  // namespace perorb

#endif  // PERORB_VERIFY_HPP
