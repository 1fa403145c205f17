#ifndef PERORB_ORBITS_HPP
#define PERORB_ORBITS_HPP

// Periodic-orbit solvers on loop space: minimization in a winding class,
// the mountain pass between a constant loop and a negative-action loop, the
// a-priori level bound and the length/isoperimetric checks behind it, and
// the κ-sweep and two-Lyapunov bindings of the minimax engine.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "perorb/action.hpp"
#include "perorb/critical_values.hpp"
#include "perorb/geometry.hpp"
#include "perorb/lagrangian.hpp"
#include "perorb/minimax.hpp"
#include "perorb/parallel.hpp"
#include "perorb/seeds.hpp"
#include "perorb/verify.hpp"

namespace perorb {

/// Loops with the discrete W^{1,2}×R metric and the preconditioned
/// gradient of S_κ.
class LoopSpace {
 public:
  using point_type = DiscreteLoop;
  using tangent_type = TangentVector;

  explicit LoopSpace(FunctionalContext ctx) : ctx_(std::move(ctx)) {}

  const FunctionalContext& context() const { return ctx_; }

  std::pair<double, TangentVector> evaluate(const DiscreteLoop& p) const {
    Evaluation ev = perorb::evaluate(ctx_, p);
    return {ev.action, precondition(p, ev.differential)};
  }
  double value(const DiscreteLoop& p) const { return action(ctx_, p); }
  double inner(const DiscreteLoop& p, const TangentVector& a, const TangentVector& b) const {
    return sobolev_inner(p, a, b);
  }
  TangentVector combine(double a, const TangentVector& u, double b, const TangentVector& w) const {
    TangentVector r = u;
    for (std::size_t i = 0; i < r.xi.size(); ++i) r.xi[i] = a * u.xi[i] + b * w.xi[i];
    r.tau = a * u.tau + b * w.tau;
    return r;
  }
  std::optional<DiscreteLoop> step(const DiscreteLoop& p, const TangentVector& v, double h) const {
    return displace(p, v, h, ctx_.T_floor);
  }
  TangentVector difference(const DiscreteLoop& from, const DiscreteLoop& to) const {
    return loop_difference(from, to);
  }
  DiscreteLoop interpolate(const DiscreteLoop& a, const DiscreteLoop& b, double t) const {
    return interpolate_loops(a, b, t);
  }

 private:
  FunctionalContext ctx_;
};

static_assert(MinimaxSpace<LoopSpace>);

enum class Provenance { ClassMin, MountainPass, StruweSweep, TwoLyapunov };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::ClassMin: return "ClassMin";
    case Provenance::MountainPass: return "MountainPass";
    case Provenance::StruweSweep: return "StruweSweep";
    case Provenance::TwoLyapunov: return "TwoLyapunov";
  }
  return "Unknown";
}

struct OrbitCandidate {
  DiscreteLoop loop;
  double kappa = 0.0;
  double action = 0.0;
  double grad_norm = 0.0;
  double grad_tol = 0.0;
  Provenance provenance = Provenance::ClassMin;
};

inline OrbitCandidate make_candidate(const FunctionalContext& ctx, const DiscreteLoop& loop, Provenance prov,
                                     double grad_tol) {
  const Evaluation ev = evaluate(ctx, loop);
  return {loop, ctx.kappa, ev.action, sobolev_norm(loop, precondition(loop, ev.differential)), grad_tol, prov};
}

// ---------------------------------------------------------------------------
// Minimization in a non-trivial winding class.

inline DescentOptions class_min_descent() {
  DescentOptions d;
  d.max_iters = 5000;
  d.grad_tol = 1e-6;
  return d;
}

struct ClassMinOptions {
  int samples = 256;
  int seeds = 8;
  double amplitude = 0.05;
  int modes = 3;
  DescentOptions descent = class_min_descent();
  /// Newton polish after the descent.
  double grad_tol = 1e-10;
  std::uint64_t seed = 11;
  /// Upper end of the c_u bracket, if known.
  std::optional<double> cu_upper;
  int workers = 0;
};

struct ClassMinResult {
  OrbitCandidate candidate;
  std::vector<double> seed_actions;
  std::vector<Termination> terminations;
  /// Spread of the final actions over the converged seeds.
  double spread = 0.0;
};

/// Straight lift in class k plus a few random Fourier modes.
inline DiscreteLoop perturbed_straight_loop(std::mt19937_64& rng, const std::vector<int>& k, int samples,
                                            double amplitude, int modes) {
  const int dim = static_cast<int>(k.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::vector<double> start(dim), coef(static_cast<std::size_t>(dim) * modes * 2);
  for (double& s : start) s = unit(rng);
  for (std::size_t i = 0; i < coef.size(); ++i) coef[i] = amplitude * sym(rng) / (1 + i / (2 * dim));
  std::vector<double> q(static_cast<std::size_t>(samples) * dim);
  for (int i = 0; i < samples; ++i) {
    const double s = static_cast<double>(i) / samples;
    for (int a = 0; a < dim; ++a) {
      double x = start[a] + k[a] * s;
      for (int m = 1; m <= modes; ++m) {
        const std::size_t b = (static_cast<std::size_t>(m - 1) * dim + a) * 2;
        x += coef[b] * std::cos(2 * std::numbers::pi * m * s) + coef[b + 1] * std::sin(2 * std::numbers::pi * m * s);
      }
      q[static_cast<std::size_t>(i) * dim + a] = x;
    }
  }
  return DiscreteLoop::from_lift(dim, std::move(q), k, 1.0);
}

inline ClassMinResult minimize_in_class(const TonelliModel& model, double kappa, const std::vector<int>& k,
                                        const ClassMinOptions& opts = {}) {
  if (static_cast<int>(k.size()) != model.dim()) throw Error(ErrorCode::DimensionMismatch, "winding dimension");
  if (std::all_of(k.begin(), k.end(), [](int v) { return v == 0; })) {
    throw Error(ErrorCode::ZeroWinding, "class minimization needs a non-zero winding", "winding");
  }
  if (opts.seeds < 1) throw Error(ErrorCode::BadParameters, "need at least one seed", "seeds");
  const FunctionalContext ctx(model, kappa, estimate_bounds(model, 64));
  std::mt19937_64 rng(opts.seed);
  std::vector<DiscreteLoop> starts;
  starts.push_back(with_optimal_period(ctx, straight_loop(k, opts.samples, 1.0)));
  while (static_cast<int>(starts.size()) < opts.seeds) {
    starts.push_back(
        with_optimal_period(ctx, perturbed_straight_loop(rng, k, opts.samples, opts.amplitude, opts.modes)));
  }
  const LoopSpace space(ctx);
  SaddleOptions po;
  po.grad_tol = opts.grad_tol;
  po.max_iters = 50;
  auto results = parallel_map(
      starts.size(),
      [&](std::size_t i) {
        auto r = descend(ctx, starts[i], opts.descent);
        if (r.termination == Termination::CriticalPoint || r.termination == Termination::MaxIters) {
          auto p = newton_polish(space, r.loop, po);
          if (p.grad_norm < r.grad_norm) {
            r.loop = std::move(p.point);
            r.grad_norm = p.grad_norm;
          }
        }
        return r;
      },
      opts.workers > 0 ? opts.workers : worker_count());

  ClassMinResult out;
  std::optional<std::size_t> best;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  bool diverged = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const double s = action(ctx, r.loop);
    out.seed_actions.push_back(s);
    out.terminations.push_back(r.termination);
    if (r.termination == Termination::PeriodDiverged) {
      diverged = true;
      continue;
    }
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    if (!best || s < out.seed_actions[*best]) best = i;
  }
  if (diverged && (!opts.cu_upper || kappa <= *opts.cu_upper)) {
    throw Error(ErrorCode::DivergenceBelowCu, "periods exceeded the ceiling; kappa is likely below c_u");
  }
  if (!best) throw Error(ErrorCode::DivergenceBelowCu, "every seed diverged");
  out.spread = hi - lo;
  out.candidate = make_candidate(ctx, results[*best].loop, Provenance::ClassMin,
                                 std::max(opts.grad_tol, results[*best].grad_norm));
  return out;
}

// ---------------------------------------------------------------------------
// Level bound and the checks behind it.

struct LevelBound {
  double r1 = 0.0;
  double r = 0.0;
  double a = 0.0;
};

/// r₁ = min(r₀, √(L0(κ−e0))/Θ) and a = r(√(L0(κ−e0)) − Θr).
inline double critical_radius(const BoundsEstimate& b, double kappa, double e0, double r0 = 0.4) {
  if (!(kappa > e0)) throw Error(ErrorCode::PreconditionFailed, "need kappa > e0", "kappa");
  if (!(r0 > 0.0 && r0 < 0.5)) throw Error(ErrorCode::BadParameters, "chart radius must lie in (0, 1/2)", "r0");
  const double s = std::sqrt(b.L0 * (kappa - e0));
  return b.Theta > 0.0 ? std::min(r0, s / b.Theta) : r0;
}

inline LevelBound lower_bound_a(const BoundsEstimate& b, double kappa, double e0, double r, double r0 = 0.4) {
  const double r1 = critical_radius(b, kappa, e0, r0);
  if (!(r > 0.0)) throw Error(ErrorCode::BadParameters, "radius must be positive", "r");
  if (r >= r1) throw Error(ErrorCode::RadiusTooLarge, "radius must be below r1", "r");
  const double s = std::sqrt(b.L0 * (kappa - e0));
  return {r1, r, r * (s - b.Theta * r)};
}

struct LengthCheck {
  double length = 0.0;
  double r1 = 0.0;
  double margin = 0.0;
  double action = 0.0;
};

/// A negative-action contractible loop must be longer than r₁.
inline LengthCheck negative_length_check(const FunctionalContext& ctx, const DiscreteLoop& loop, double e0,
                                         double r0 = 0.4) {
  LengthCheck c;
  c.action = action(ctx, loop);
  if (!(c.action < 0.0)) throw Error(ErrorCode::PreconditionFailed, "loop action is not negative");
  if (!loop.is_contractible()) throw Error(ErrorCode::PreconditionFailed, "loop is not contractible");
  c.r1 = critical_radius(ctx.bounds, ctx.kappa, e0, r0);
  c.length = loop_length(loop);
  c.margin = c.length - c.r1;
  if (!(c.margin > 0.0)) {
    throw Error(ErrorCode::ClaimViolated, "negative-action loop of length " + std::to_string(c.length) +
                                              " not above r1 = " + std::to_string(c.r1));
  }
  return c;
}

struct IsoperimetricCheck {
  double integral = 0.0;
  double bound = 0.0;
  double length = 0.0;
  double slack = 0.0;
};

/// Midpoint line integral Σ θ(m_i)·Δq_i of θ along the polygon.
inline double theta_line_integral(const TonelliModel& m, const DiscreteLoop& loop) {
  const int n = loop.size();
  double s = 0.0;
  Vec th{};
  for (int i = 0; i < n; ++i) {
    const auto seg = detail::segment(loop, i);
    m.theta_at(seg.mid, th);
    for (int a = 0; a < loop.dim(); ++a) s += th[a] * seg.d[a] / n;
  }
  return s;
}

/// |∫ x*θ| ≤ Θ ℓ² (+10 N⁻² quadrature slack) for loops inside a chart ball
/// around their centroid; Θ is taken from `theta_const`.
inline IsoperimetricCheck isoperimetric_check(const TonelliModel& m, double theta_const, const DiscreteLoop& loop,
                                              double chart_radius = 0.4) {
  if (!(chart_radius > 0.0 && chart_radius < 0.5)) {
    throw Error(ErrorCode::BadParameters, "chart radius must lie in (0, 1/2)", "chart_radius");
  }
  if (!loop.is_contractible()) throw Error(ErrorCode::LoopLeavesChart, "loop winds around the torus");
  const int n = loop.size();
  const int dim = loop.dim();
  std::vector<double> c(dim, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) c[a] += loop.coord(i, a) / n;
  }
  for (int i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) r2 += (loop.coord(i, a) - c[a]) * (loop.coord(i, a) - c[a]);
    if (std::sqrt(r2) >= chart_radius) throw Error(ErrorCode::LoopLeavesChart, "loop leaves the chart ball");
  }
  IsoperimetricCheck r;
  r.integral = theta_line_integral(m, loop);
  r.length = loop_length(loop);
  r.slack = 10.0 / (static_cast<double>(n) * n);
  r.bound = theta_const * r.length * r.length + r.slack;
  if (std::abs(r.integral) > r.bound) {
    throw Error(ErrorCode::ClaimViolated, "isoperimetric bound fails: |" + std::to_string(r.integral) +
                                              "| > " + std::to_string(r.bound));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Mountain pass between a constant loop and a negative-action loop.

inline MountainPassOptions<DiscreteLoop> loop_minimax_defaults() {
  MountainPassOptions<DiscreteLoop> o;
  o.max_sweeps = 3000;
  o.rel_tol = 1e-9;
  o.patience = 50;
  o.grad_tol = 1e-6;
  o.escape_grad_tol = 1e-3;
  o.refine = true;
  return o;
}

inline SaddleOptions polish_defaults() {
  SaddleOptions o;
  o.max_iters = 3000;
  o.grad_tol = 1e-9;
  return o;
}

struct MountainPassOrbitOptions {
  int samples = 64;
  int nodes = 17;
  double r0 = 0.4;
  /// r = radius_fraction · r₁.
  double radius_fraction = 0.5;
  int bounds_resolution = 64;
  int e0_resolution = 128;
  std::optional<Witness> witness;
  WitnessOptions witness_opts;
  MountainPassOptions<DiscreteLoop> minimax = loop_minimax_defaults();
  /// Escape monitor: period at the path maximum above this cap.
  double T_cap = 1e3;
  /// Candidates are resampled to this many samples and refined again before
  /// verification (0 keeps the path resolution).
  int polish_samples = 256;
  SaddleOptions polish = polish_defaults();
  bool verify = true;
  VerifyTolerances tolerances;
};

struct OrbitVerdict {
  OrbitCandidate candidate;
  VerificationReport verification;
};

struct MountainPassOrbitResult {
  MinimaxReport<DiscreteLoop> report;
  std::optional<OrbitVerdict> orbit;
  LevelBound level;
  double e0 = 0.0;
  double b = 0.0;
  double T0 = 0.0;
  Witness witness;
  /// c_estimate ≥ a − 1e-6.
  bool level_bound_holds = false;
};

namespace detail {

/// Endpoint 0 of the path class: a constant loop whose action T(κ − E)
/// stays below a quarter of the level bound.
inline double frozen_period(double a, double kappa, double e_at_point) {
  return std::min(0.05, a / (4.0 * std::max(kappa - e_at_point, 1e-12)));
}

inline DiscreteLoop witness_at_samples(const FunctionalContext& ctx, const DiscreteLoop& w, int samples) {
  DiscreteLoop r = w.size() == samples ? w : resample(w, samples);
  if (action(ctx, r) < 0.0) return r;
  DescentOptions o;
  o.max_iters = 2000;
  o.target_action = -1e-9 * std::max(1.0, r.period());
  const auto d = descend(ctx, r, o);
  if (!(action(ctx, d.loop) < 0.0)) {
    throw Error(ErrorCode::NoWitness, "witness loses its negative action at the path resolution");
  }
  return d.loop;
}

/// Straight chain from the constant loop to the witness; interior shapes are
/// scaled copies of the witness about the constant point, each at its
/// optimal period.
inline std::vector<DiscreteLoop> z0_nodes(const FunctionalContext& ctx, std::span<const double> x0, double T0,
                                          const DiscreteLoop& w, int count) {
  const int dim = w.dim();
  const int n = w.size();
  std::vector<double> c(dim, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < dim; ++a) c[a] += w.coord(i, a) / n;
  }
  std::vector<double> p(dim);
  for (int a = 0; a < dim; ++a) p[a] = x0[a] + std::round(c[a] - x0[a]);
  const DiscreteLoop base = constant_loop(p, n, T0);
  std::vector<DiscreteLoop> nodes;
  nodes.push_back(base);
  for (int j = 1; j + 1 < count; ++j) {
    const double t = static_cast<double>(j) / (count - 1);
    const DiscreteLoop shape = interpolate_loops(base, w, t);
    nodes.push_back(with_optimal_period(ctx, shape, T0, std::max(2.0 * w.period(), 1.0)));
  }
  nodes.push_back(w);
  return nodes;
}

inline MinimaxPath<DiscreteLoop> z0_path(std::vector<DiscreteLoop> nodes) {
  const DiscreteLoop w = nodes.back();
  const DiscreteLoop c = nodes.front();
  const int dim = c.dim();
  auto is_constant = [dim](const DiscreteLoop& l) {
    for (int i = 1; i < l.size(); ++i) {
      for (int a = 0; a < dim; ++a) {
        if (l.coord(i, a) != l.coord(0, a)) return false;
      }
    }
    return true;
  };
  auto start = EndpointPolicy<DiscreteLoop>::fixed(is_constant, [c](const DiscreteLoop&) { return c; });
  auto end = EndpointPolicy<DiscreteLoop>::pinned(w);
  return MinimaxPath<DiscreteLoop>(std::move(nodes), std::move(start), std::move(end));
}

}  // namespace detail

struct Z0Setup {
  FunctionalContext ctx;
  double e0 = 0.0;
  double e_at_point = 0.0;
  std::vector<double> x0;
  LevelBound level;
  double b = 0.0;
  double T0 = 0.0;
  Witness witness;
  DiscreteLoop witness_loop;
};

inline Z0Setup z0_setup(const TonelliModel& model, double kappa, const MountainPassOrbitOptions& opts,
                        std::optional<double> e0_hint = std::nullopt) {
  const BoundsEstimate bounds = estimate_bounds(model, opts.bounds_resolution);
  const FunctionalContext ctx(model, kappa, bounds);
  Z0Setup s;
  s.ctx = ctx;
  s.e0 = e0_hint ? *e0_hint : estimate_e0(model, opts.e0_resolution).value;
  if (!(kappa > s.e0)) throw Error(ErrorCode::PreconditionFailed, "mountain pass needs kappa > e0", "kappa");
  std::optional<Witness> w = opts.witness;
  if (w) {
    w->kappa = kappa;
    w->action = action(ctx, w->loop);
    if (!(w->action < 0.0)) w.reset();
  }
  if (!w) w = witness_negative_action(ctx, opts.witness_opts);
  if (!w) throw Error(ErrorCode::NoWitness, "no negative-action contractible loop found");
  s.witness = *w;
  s.witness_loop = detail::witness_at_samples(ctx, w->loop, opts.samples);

  const double r1 = critical_radius(bounds, kappa, s.e0, opts.r0);
  s.level = lower_bound_a(bounds, kappa, s.e0, opts.radius_fraction * r1, opts.r0);
  s.b = 0.5 * s.level.a;
  const GridMax vmax = potential_max(model, 64);
  s.x0.assign(vmax.argmax.begin(), vmax.argmax.begin() + model.dim());
  s.e_at_point = model.potential_at(s.x0);
  s.T0 = detail::frozen_period(s.level.a, kappa, s.e_at_point);
  return s;
}

inline void check_endpoints(const Z0Setup& s, const MinimaxPath<DiscreteLoop>& path) {
  const double s0 = action(s.ctx, path.nodes.front());
  const double s1 = action(s.ctx, path.nodes.back());
  if (!(s0 < s.b) || !(s1 < s.b)) {
    throw Error(ErrorCode::TruncationInfeasible, "endpoint actions are not below the truncation level");
  }
}

inline MountainPassOptions<DiscreteLoop> z0_minimax_options(const Z0Setup& s, const MountainPassOrbitOptions& opts) {
  MountainPassOptions<DiscreteLoop> mp = opts.minimax;
  mp.trunc_level = s.b;
  mp.escape_metric = [](const DiscreteLoop& l) { return l.period(); };
  mp.escape_threshold = opts.T_cap;
  if (mp.deform.ramp_width <= 0.0) mp.deform.ramp_width = 0.5 * s.b;
  if (mp.deform.workers <= 0) mp.deform.workers = 1;
  // Nodes sliding along the path shrink to constant loops and open gaps the
  // redistribution cannot close without raising the maximum.
  mp.deform.perpendicular = true;
  return mp;
}

inline std::optional<OrbitVerdict> verdict_for(const Z0Setup& s, const MinimaxReport<DiscreteLoop>& rep,
                                               Provenance prov, const MountainPassOrbitOptions& opts) {
  if (rep.ps_flag != PSFlag::CandidateFound) return std::nullopt;
  DiscreteLoop loop = rep.argmax;
  double tol = opts.minimax.grad_tol;
  const auto& nodes = rep.path.nodes;
  const std::size_t i = rep.argmax_index;
  if (opts.polish_samples > loop.size() && i > 0 && i + 1 < nodes.size()) {
    const int ns = opts.polish_samples;
    const LoopSpace fine(s.ctx);
    const auto mode = loop_difference(resample(nodes[i - 1], ns), resample(nodes[i + 1], ns));
    auto sad = refine_saddle(fine, resample(loop, ns), mode, opts.polish);
    loop = sad.point;
    tol = std::max(opts.polish.grad_tol, sad.grad_norm);
  }
  OrbitVerdict v{make_candidate(s.ctx, loop, prov, tol), verify_orbit(s.ctx.model, loop, s.ctx.kappa, opts.tolerances)};
  return v;
}

inline MountainPassOrbitResult mountain_pass_orbit(const TonelliModel& model, double kappa,
                                                   const MountainPassOrbitOptions& opts = {}) {
  const Z0Setup s = z0_setup(model, kappa, opts);
  auto path = detail::z0_path(detail::z0_nodes(s.ctx, s.x0, s.T0, s.witness_loop, opts.nodes));
  check_endpoints(s, path);
  const LoopSpace space(s.ctx);
  MountainPassOrbitResult out;
  out.report = mountain_pass(space, std::move(path), z0_minimax_options(s, opts));
  out.level = s.level;
  out.e0 = s.e0;
  out.b = s.b;
  out.T0 = s.T0;
  out.witness = s.witness;
  out.level_bound_holds = out.report.c_estimate >= s.level.a - 1e-6;
  if (opts.verify) out.orbit = verdict_for(s, out.report, Provenance::MountainPass, opts);
  return out;
}

// ---------------------------------------------------------------------------
// κ-sweep over (e₀, c_u).

struct LoopSweepOptions {
  int grid = 16;
  double M = 50.0;
  double monotone_tol = 1e-6;
  MountainPassOrbitOptions mp;
  /// Sweep budget per grid point before the refined run at κ̄.
  int sweeps_per_kappa = 600;
};

struct LoopSweepResult {
  SweepResult<DiscreteLoop> sweep;
  std::vector<LevelBound> levels;  // per grid point
  double e0 = 0.0;
  double cu_lo = 0.0;
  double kappa_bar = 0.0;
  bool all_positive = false;
  bool levels_hold = false;
  std::optional<OrbitVerdict> orbit;
};

/// `witness` must have negative action at `cu_lo` (it then does at every
/// smaller κ).
inline LoopSweepResult loop_struwe_sweep(const TonelliModel& model, double e0, double cu_lo, const Witness& witness,
                                         const LoopSweepOptions& opts = {}) {
  if (!(e0 < cu_lo)) throw Error(ErrorCode::EmptyInterval, "(e0, c_u) is empty");
  if (opts.grid < 2) throw Error(ErrorCode::BadParameters, "grid needs at least two points", "grid");
  LoopSweepResult out;
  out.e0 = e0;
  out.cu_lo = cu_lo;
  std::vector<double> grid;
  for (int j = 1; j <= opts.grid; ++j) grid.push_back(e0 + (cu_lo - e0) * j / (opts.grid + 1));

  MountainPassOrbitOptions mpo = opts.mp;
  mpo.witness = witness;
  std::vector<Z0Setup> setups;
  for (double k : grid) setups.push_back(z0_setup(model, k, mpo, e0));
  auto at = [&](double k) -> const Z0Setup& {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] == k) return setups[i];
    }
    throw Error(ErrorCode::BadParameters, "kappa off the grid");
  };
  auto space_at = [&](double k) { return LoopSpace(at(k).ctx); };
  auto path_at = [&](double k, const std::optional<MinimaxPath<DiscreteLoop>>& warm) {
    const Z0Setup& s = at(k);
    MinimaxPath<DiscreteLoop> p;
    if (warm) {
      auto nodes = warm->nodes;
      nodes.front() = nodes.front().with_period(s.T0);
      p = detail::z0_path(std::move(nodes));
    } else {
      p = detail::z0_path(detail::z0_nodes(s.ctx, s.x0, s.T0, s.witness_loop, mpo.nodes));
    }
    check_endpoints(s, p);
    return p;
  };
  auto options_at = [&](double k, bool refined) {
    auto o = z0_minimax_options(at(k), mpo);
    if (!refined) {
      o.max_sweeps = opts.sweeps_per_kappa;
      o.refine = false;
    } else {
      o.refine = true;
    }
    return o;
  };
  SweepOptions so;
  so.M = opts.M;
  so.monotone_tol = opts.monotone_tol;
  out.sweep = struwe_sweep(space_at, path_at, options_at, grid, so);
  out.all_positive = true;
  out.levels_hold = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.levels.push_back(setups[i].level);
    out.all_positive = out.all_positive && out.sweep.rows[i].c_estimate > 0.0;
    out.levels_hold = out.levels_hold && out.sweep.rows[i].c_estimate >= setups[i].level.a - 1e-6;
  }
  out.kappa_bar = out.sweep.rows[out.sweep.selected].kappa;
  if (out.sweep.refined) {
    out.orbit = verdict_for(setups[out.sweep.selected], *out.sweep.refined, Provenance::StruweSweep, mpo);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-Lyapunov flow on loops.

struct LoopTwoLyapunovResult {
  std::vector<TwoLyapunovResult<DiscreteLoop>> trajectories;
  std::vector<OrbitVerdict> candidates;
  int violations = 0;
};

inline LoopTwoLyapunovResult loop_two_lyapunov(const TonelliModel& model, const BoundsEstimate& bounds,
                                               const std::vector<DiscreteLoop>& seeds, const TwoLyapunovOptions& opts,
                                               const VerifyTolerances& tol = {}, int workers = 0) {
  const FunctionalContext bar_ctx(model, opts.kappa_bar, bounds);
  const LoopSpace bar(bar_ctx);
  const LoopSpace star(bar_ctx.with_kappa(opts.kappa_star));
  const std::function<double(const DiscreteLoop&)> period = [](const DiscreteLoop& l) { return l.period(); };
  LoopTwoLyapunovResult out;
  out.trajectories = parallel_map(
      seeds.size(), [&](std::size_t i) { return two_lyapunov_flow(bar, star, period, seeds[i], opts); },
      workers > 0 ? workers : worker_count());
  for (const auto& t : out.trajectories) {
    if (t.outcome == TwoLyapunovOutcome::Violation) ++out.violations;
    if (t.outcome == TwoLyapunovOutcome::CandidateFound) {
      out.candidates.push_back({make_candidate(bar_ctx, t.final_point, Provenance::TwoLyapunov, opts.grad_tol),
                                verify_orbit(model, t.final_point, opts.kappa_bar, tol)});
    }
  }
  return out;
}

}  // namespace perorb

#endif  // PERORB_ORBITS_HPP
