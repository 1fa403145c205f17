#ifndef PERORB_ACTION_HPP
#define PERORB_ACTION_HPP

// The free-period action S_κ(x, T) = T ∫ (L(x, x'/T) + κ) ds on discrete
// loops (midpoint rule, forward differences), its exact discrete
// differential, the Sobolev gradient and a line-searched descent flow.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perorb/error.hpp"
#include "perorb/geometry.hpp"
#include "perorb/lagrangian.hpp"

namespace perorb {

struct FunctionalContext {
  TonelliModel model;
  double kappa = 0.0;
  BoundsEstimate bounds;
  std::optional<double> trunc_level;
  double T_floor = 1e-6;

  FunctionalContext() = default;
  FunctionalContext(TonelliModel m, double k, BoundsEstimate b,
                    std::optional<double> trunc = std::nullopt, double floor = 1e-6)
      : model(std::move(m)), kappa(k), bounds(b), trunc_level(trunc), T_floor(floor) {
    if (!std::isfinite(kappa)) throw Error(ErrorCode::BadParameters, "kappa must be finite", "kappa");
    if (!(T_floor > 0.0)) throw Error(ErrorCode::BadParameters, "T_floor must be positive", "T_floor");
  }

  FunctionalContext with_kappa(double k) const {
    FunctionalContext c = *this;
    c.kappa = k;
    return c;
  }
  FunctionalContext with_truncation(std::optional<double> b) const {
    FunctionalContext c = *this;
    c.trunc_level = b;
    return c;
  }
};

namespace detail {

struct Segment {
  Vec d{};    // N (q_{i+1} - q_i)
  Vec mid{};  // midpoint of the lift segment
};

inline Segment segment(const DiscreteLoop& loop, int i) {
  Segment s;
  const double nn = loop.size();
  for (int a = 0; a < loop.dim(); ++a) {
    const double q0 = loop.lifted(i, a);
    const double q1 = loop.lifted(i + 1, a);
    s.d[a] = nn * (q1 - q0);
    s.mid[a] = 0.5 * (q0 + q1);
  }
  return s;
}

/// Action without the κT term.
inline double action_without_kappa(const TonelliModel& model, const DiscreteLoop& loop) {
  const int n = loop.size();
  const int dim = loop.dim();
  const double nn = n;
  const double t = loop.period();
  double total = 0.0;
  Vec th{};
  for (int i = 0; i < n; ++i) {
    const Segment s = segment(loop, i);
    model.theta_at(s.mid, th);
    double kin = 0.0;
    double mag = 0.0;
    for (int a = 0; a < dim; ++a) {
      kin += s.d[a] * s.d[a];
      mag += th[a] * s.d[a];
    }
    total += kin / (2.0 * t * nn) + mag / nn - t / nn * model.potential_at(s.mid);
  }
  return total;
}

}  // namespace detail

inline double action(const FunctionalContext& ctx, const DiscreteLoop& loop) {
  if (loop.dim() != ctx.model.dim()) throw Error(ErrorCode::DimensionMismatch, "loop/model dimension");
  return detail::action_without_kappa(ctx.model, loop) + ctx.kappa * loop.period();
}

struct Evaluation {
  double action = 0.0;
  Covector differential;
};

/// Action and its differential in one pass. The loop part is stored as a
/// density (N times the partial derivatives in the samples) so that
/// pairing() gives the directional derivative; the period slot is ∂S/∂T.
inline Evaluation evaluate(const FunctionalContext& ctx, const DiscreteLoop& loop) {
  const TonelliModel& model = ctx.model;
  if (loop.dim() != model.dim()) throw Error(ErrorCode::DimensionMismatch, "loop/model dimension");
  const int n = loop.size();
  const int dim = loop.dim();
  const double nn = n;
  const double t = loop.period();

  // Per-segment partials of g_i with respect to d_i and m_i.
  std::vector<double> gd(static_cast<std::size_t>(n) * dim);
  std::vector<double> gm(static_cast<std::size_t>(n) * dim);
  double s0 = 0.0;
  double dT = 0.0;
  Vec th{};
  Vec gv{};
  std::array<double, kMaxDim * kMaxDim> jac{};
  for (int i = 0; i < n; ++i) {
    const detail::Segment s = detail::segment(loop, i);
    model.theta_and_jacobian(s.mid, th, jac);
    const double v = model.potential_and_gradient(s.mid, gv);
    double kin = 0.0;
    double mag = 0.0;
    for (int a = 0; a < dim; ++a) {
      kin += s.d[a] * s.d[a];
      mag += th[a] * s.d[a];
    }
    s0 += kin / (2.0 * t * nn) + mag / nn - t / nn * v;
    dT += -kin / (2.0 * t * t * nn) - (v - ctx.kappa) / nn;
    for (int a = 0; a < dim; ++a) {
      const std::size_t idx = static_cast<std::size_t>(i) * dim + a;
      gd[idx] = s.d[a] / (t * nn) + th[a] / nn;
      double dm = 0.0;
      for (int j = 0; j < dim; ++j) dm += jac[j * dim + a] * s.d[j];
      gm[idx] = dm / nn - t / nn * gv[a];
    }
  }

  Evaluation out;
  out.action = s0 + ctx.kappa * t;
  out.differential = Covector(dim, n);
  for (int j = 0; j < n; ++j) {
    const int jm = (j + n - 1) % n;
    for (int a = 0; a < dim; ++a) {
      const std::size_t cur = static_cast<std::size_t>(j) * dim + a;
      const std::size_t prev = static_cast<std::size_t>(jm) * dim + a;
      const double partial = -nn * gd[cur] + 0.5 * gm[cur] + nn * gd[prev] + 0.5 * gm[prev];
      out.differential.at(j, a) = nn * partial;
    }
  }
  out.differential.tau = dT;
  return out;
}

inline Covector differential(const FunctionalContext& ctx, const DiscreteLoop& loop) {
  return evaluate(ctx, loop).differential;
}

/// Discrete mean of κ − E(m_i, d_i/T), computed through eval_E.
inline double mean_kappa_minus_energy(const FunctionalContext& ctx, const DiscreteLoop& loop) {
  const int n = loop.size();
  double s = 0.0;
  Vec v{};
  for (int i = 0; i < n; ++i) {
    const detail::Segment seg = detail::segment(loop, i);
    for (int a = 0; a < loop.dim(); ++a) v[a] = seg.d[a] / loop.period();
    s += ctx.kappa - eval_E(ctx.model, seg.mid, v);
  }
  return s / n;
}

/// Mean and standard deviation of the segment energies.
inline std::pair<double, double> loop_energy_stats(const TonelliModel& model, const DiscreteLoop& loop) {
  const int n = loop.size();
  std::vector<double> e(n);
  Vec v{};
  for (int i = 0; i < n; ++i) {
    const detail::Segment seg = detail::segment(loop, i);
    for (int a = 0; a < loop.dim(); ++a) v[a] = seg.d[a] / loop.period();
    e[i] = eval_E(model, seg.mid, v);
  }
  double mean = 0.0;
  for (double x : e) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : e) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / n)};
}

inline TangentVector gradient(const FunctionalContext& ctx, const DiscreteLoop& loop) {
  return precondition(loop, differential(ctx, loop));
}

/// L0 ℓ²/T − (L1 − κ)T, a lower bound for the discrete action.
inline double action_lower_bound(const FunctionalContext& ctx, const DiscreteLoop& loop) {
  const double l = loop_length(loop);
  const double t = loop.period();
  return ctx.bounds.L0 * l * l / t - (ctx.bounds.L1 - ctx.kappa) * t;
}

// ---------------------------------------------------------------------------
// Descent.

enum class Termination { CriticalPoint, ShrankToPoint, PeriodDiverged, Truncated, MaxIters, ReachedTarget };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::CriticalPoint: return "CriticalPoint";
    case Termination::ShrankToPoint: return "ShrankToPoint";
    case Termination::PeriodDiverged: return "PeriodDiverged";
    case Termination::Truncated: return "Truncated";
    case Termination::MaxIters: return "MaxIters";
    case Termination::ReachedTarget: return "ReachedTarget";
  }
  return "Unknown";
}

enum class StepRule { Armijo, FixedEuler };

struct DescentOptions {
  int max_iters = 5000;
  double grad_tol = 1e-8;
  StepRule rule = StepRule::Armijo;
  double initial_step = 0.1;
  double max_step = 1e6;
  double fixed_step = 1e-2;
  double armijo_c = 1e-4;
  double T_ceiling = 1e4;
  /// Normalize the field as −g/√(‖g‖²+1).
  bool normalized = true;
  /// Stop as soon as the action drops below this value.
  std::optional<double> target_action;
};

struct DescentResult {
  DiscreteLoop loop;
  int iterations = 0;
  Termination termination = Termination::MaxIters;
  std::vector<double> action_trace;
  std::vector<double> grad_norm_trace;
  std::vector<double> period_trace;
  double grad_norm = 0.0;
  /// Set when the loop reached the period floor with |S| ≥ 1e-3, which the
  /// shrinking-loop asymptotics rule out.
  bool shrink_violation = false;
};

/// Roundoff allowance used by the Armijo tests.
inline double roundoff_slack(double s) { return 1e-14 * std::max(1.0, std::abs(s)); }

inline DescentResult descend(const FunctionalContext& ctx, const DiscreteLoop& start,
                             const DescentOptions& opts = {}) {
  if (!(opts.grad_tol > 0.0)) throw Error(ErrorCode::BadParameters, "grad_tol must be positive", "grad_tol");
  DescentResult res;
  DiscreteLoop loop = start;
  Evaluation ev = evaluate(ctx, loop);
  double h = opts.initial_step;

  for (int it = 0;; ++it) {
    const TangentVector g = precondition(loop, ev.differential);
    const double gn = sobolev_norm(loop, g);
    res.action_trace.push_back(ev.action);
    res.grad_norm_trace.push_back(gn);
    res.period_trace.push_back(loop.period());
    res.iterations = it;
    res.grad_norm = gn;

    auto finish = [&](Termination t) {
      res.termination = t;
      res.loop = loop;
      return res;
    };
    if (gn < opts.grad_tol) return finish(Termination::CriticalPoint);
    // At the floor the period is frozen and the loop keeps contracting.
    const bool at_floor = loop.period() <= 10.0 * ctx.T_floor;
    if (at_floor && (std::abs(ev.action) < 1e-3 || it >= opts.max_iters)) {
      res.shrink_violation = std::abs(ev.action) >= 1e-3;
      return finish(Termination::ShrankToPoint);
    }
    if (loop.period() > opts.T_ceiling) return finish(Termination::PeriodDiverged);
    if (ctx.trunc_level && ev.action <= *ctx.trunc_level) return finish(Termination::Truncated);
    if (opts.target_action && ev.action < *opts.target_action) return finish(Termination::ReachedTarget);
    if (it >= opts.max_iters) return finish(Termination::MaxIters);

    const double scale = opts.normalized ? 1.0 / std::sqrt(gn * gn + 1.0) : 1.0;
    TangentVector w = (-scale) * g;
    double slope = -scale * gn * gn;
    if (at_floor && w.tau < 0.0) {
      slope = -scale * std::max(0.0, gn * gn - g.tau * g.tau);
      w.tau = 0.0;
    }

    if (opts.rule == StepRule::FixedEuler) {
      auto next = displace(loop, w, opts.fixed_step, ctx.T_floor);
      if (!next) throw Error(ErrorCode::LineSearchStall, "fixed step leaves the loop chart");
      loop = *std::move(next);
      ev = evaluate(ctx, loop);
      continue;
    }

    h = std::min(opts.max_step, 2.0 * h);
    bool accepted = false;
    while (h > 1e-18) {
      auto next = displace(loop, w, h, ctx.T_floor);
      if (next) {
        Evaluation trial = evaluate(ctx, *next);
        if (std::isfinite(trial.action) &&
            trial.action <= ev.action + opts.armijo_c * h * slope + roundoff_slack(ev.action)) {
          loop = *std::move(next);
          ev = std::move(trial);
          accepted = true;
          break;
        }
      }
      h *= 0.5;
    }
    if (!accepted) {
      throw Error(ErrorCode::LineSearchStall,
                  "no decrease at machine step (gradient norm " + std::to_string(gn) + ")");
    }
  }
}

// ---------------------------------------------------------------------------
// Palais-Smale diagnostics on a trajectory tail.

struct TailSample {
  double T = 1.0;
  double action = 0.0;
  double grad_norm = 0.0;
};

enum class PSDiagnosis { CompactCandidate, ShrinkingFamily, EscapingPeriods };

inline std::string_view to_string(PSDiagnosis d) {
  switch (d) {
    case PSDiagnosis::CompactCandidate: return "CompactCandidate";
    case PSDiagnosis::ShrinkingFamily: return "ShrinkingFamily";
    case PSDiagnosis::EscapingPeriods: return "EscapingPeriods";
  }
  return "Unknown";
}

struct PSReport {
  PSDiagnosis diagnosis = PSDiagnosis::CompactCandidate;
  /// False when the tail contradicts what compactness theory allows.
  bool consistent = true;
  double T_min = 0.0;
  double T_max = 0.0;
  std::string note;
};

inline std::vector<TailSample> tail_of(const DescentResult& r, std::size_t count) {
  const std::size_t n = r.action_trace.size();
  const std::size_t first = n > count ? n - count : 0;
  std::vector<TailSample> out;
  for (std::size_t i = first; i < n; ++i) {
    out.push_back({r.period_trace[i], r.action_trace[i], r.grad_norm_trace[i]});
  }
  return out;
}

/// `cu_upper`: upper end of the c_u bracket if known; escaping periods are
/// only admissible at or below it.
inline PSReport ps_classify(const FunctionalContext& ctx, std::span<const TailSample> tail,
                            std::optional<double> cu_upper = std::nullopt, double tol = 1e-3) {
  if (tail.size() < 10) throw Error(ErrorCode::InsufficientTail, "need at least 10 samples");
  PSReport r;
  r.T_min = std::numeric_limits<double>::infinity();
  r.T_max = 0.0;
  bool increasing = true;
  bool decreasing = true;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    r.T_min = std::min(r.T_min, tail[i].T);
    r.T_max = std::max(r.T_max, tail[i].T);
    if (i > 0) {
      if (!(tail[i].T > tail[i - 1].T)) increasing = false;
      if (!(tail[i].T < tail[i - 1].T)) decreasing = false;
    }
  }
  const double ratio = tail.back().T / tail.front().T;
  if (ratio <= 0.1 || (decreasing && ratio <= 1.0 / 1.5)) {
    r.diagnosis = PSDiagnosis::ShrinkingFamily;
    const double last = std::abs(tail.back().action);
    r.consistent = last < tol && last <= std::abs(tail.front().action) + tol;
    r.note = r.consistent ? "levels tend to zero with the period"
                          : "period tends to zero at a nonzero level";
    return r;
  }
  if (ratio >= 10.0 || (increasing && ratio >= 1.5)) {
    r.diagnosis = PSDiagnosis::EscapingPeriods;
    if (cu_upper) {
      r.consistent = ctx.kappa <= *cu_upper + tol;
      r.note = r.consistent ? "periods escape at an energy not above c_u"
                            : "periods escape above the c_u estimate";
    } else {
      r.note = "periods escape; no c_u estimate supplied";
    }
    return r;
  }
  r.diagnosis = PSDiagnosis::CompactCandidate;
  r.note = "periods stay in [" + std::to_string(r.T_min) + ", " + std::to_string(r.T_max) + "]";
  return r;
}

}  // namespace perorb

#endif  // PERORB_ACTION_HPP
