// Acceptance run: every criterion prints one [PASS]/[FAIL] line with the
// measured numbers. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "perorb/perorb.hpp"
#include "support.hpp"

using namespace perorb;

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kPi = std::numbers::pi;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Line {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Line()>& body) {
  const auto t0 = Clock::now();
  Line l{false, ""};
  try {
    l = body();
  } catch (const std::exception& e) {
    l = {false, std::string("exception: ") + e.what()};
  }
  std::printf("[%s] %2d %-28s %s (%.2f s)\n", l.pass ? "PASS" : "FAIL", id, name, l.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
  if (!l.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

FunctionalContext context(const TonelliModel& m, double kappa) {
  return FunctionalContext(m, kappa, estimate_bounds(m, 64));
}

// Max-norm relative error of the analytic partials against central
// differences, over every sample coordinate and the period.
double fd_relative_error(const FunctionalContext& ctx, const DiscreteLoop& loop) {
  const Covector d = differential(ctx, loop);
  const int n = loop.size();
  const double h = 1e-6;
  double err = 0.0;
  double scale = std::abs(d.tau);
  for (double v : d.xi) scale = std::max(scale, std::abs(v) / n);
  auto at = [&](std::vector<double> q) {
    return action(ctx, DiscreteLoop::from_lift(loop.dim(), std::move(q), loop.winding(), loop.period()));
  };
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < loop.dim(); ++a) {
      const std::size_t idx = static_cast<std::size_t>(i) * loop.dim() + a;
      auto q = loop.lift();
      q[idx] += h;
      const double sp = at(q);
      q[idx] -= 2 * h;
      const double sm = at(q);
      err = std::max(err, std::abs((sp - sm) / (2 * h) - d.at(i, a) / n));
    }
  }
  const double tp = action(ctx, loop.with_period(loop.period() + h));
  const double tm = action(ctx, loop.with_period(loop.period() - h));
  err = std::max(err, std::abs((tp - tm) / (2 * h) - d.tau));
  return err / std::max(scale, 1e-300);
}

std::vector<DiscreteLoop> random_loops(std::uint64_t seed, int count, int samples) {
  std::mt19937_64 rng(seed);
  fixtures::LoopGen g;
  g.samples = samples;
  std::vector<DiscreteLoop> out;
  for (int i = 0; i < count; ++i) out.push_back(fixtures::random_loop(rng, g));
  return out;
}

// Shared between criteria 5, 8, 9 and 10.
struct Shared {
  std::vector<std::pair<std::string, CriticalValueEstimates>> estimates;
  std::optional<LoopSweepResult> sweep;
};
Shared shared;

const CriticalValueEstimates& estimates_for(const std::string& name) {
  for (const auto& [n, e] : shared.estimates) {
    if (n == name) return e;
  }
  for (const auto& nm : models::suite()) {
    if (nm.name == name) {
      shared.estimates.emplace_back(name, estimate_critical_values(nm.model));
      return shared.estimates.back().second;
    }
  }
  throw Error(ErrorCode::BadParameters, "unknown model " + name);
}

Line gradient_check() {
  const auto t0 = Clock::now();
  double fd = 0.0, adj = 0.0;
  std::mt19937_64 rng(77);
  for (const auto& nm : models::suite()) {
    const auto ctx = context(nm.model, 0.3);
    for (const auto& loop : random_loops(1001, 50, 64)) {
      fd = std::max(fd, fd_relative_error(ctx, loop));
      const Covector d = differential(ctx, loop);
      const TangentVector g = precondition(loop, d);
      for (int k = 0; k < 4; ++k) {
        const auto eta = fixtures::random_tangent(rng, 2, loop.size());
        const double p = pairing(loop, d, eta);
        adj = std::max(adj, std::abs(sobolev_inner(loop, g, eta) - p) / std::max(1.0, std::abs(p)));
      }
    }
  }
  const double t = seconds_since(t0);
  return {fd < 1e-6 && adj < 1e-10 && t < 10.0,
          fmt("150 loops: max FD rel err %.2e (<1e-6), adjoint gap %.2e (<1e-10), %.1f s (<10)", fd, adj, t)};
}

Line period_identity() {
  double gap = 0.0;
  int count = 0;
  for (const auto& nm : models::suite()) {
    for (double kappa : {-0.2, 0.05, 0.3, 1.0}) {
      const auto ctx = context(nm.model, kappa);
      for (const auto& loop : random_loops(2002, 50, 64)) {
        gap = std::max(gap, std::abs(differential(ctx, loop).tau - mean_kappa_minus_energy(ctx, loop)));
        ++count;
      }
    }
  }
  return {gap < 1e-12, fmt("%d loops: max |dS/dT - mean(kappa-E)| = %.2e (<1e-12)", count, gap)};
}

Line class_min() {
  const auto t0 = Clock::now();
  const auto m = models::pure_kinetic();
  ClassMinOptions o;
  o.samples = 256;
  const auto a = minimize_in_class(m, 0.5, {1, 0}, o);
  const auto b = minimize_in_class(m, 2.0, {1, 1}, o);
  const double t = seconds_since(t0);
  const double ea = std::abs(a.candidate.action - 1.0), eT = std::abs(a.candidate.loop.period() - 1.0);
  const double eb = std::abs(b.candidate.action - 2.0 * std::sqrt(2.0));
  return {ea < 1e-3 && eT < 1e-3 && eb < 1e-3 && t < 30.0,
          fmt("S=%.6f T=%.6f (k=(1,0)), S=%.6f vs 2sqrt2 (k=(1,1)), %.1f s (<30)", a.candidate.action,
              a.candidate.loop.period(), b.candidate.action, t)};
}

Line concordance() {
  const auto t0 = Clock::now();
  const auto& e = estimates_for("cosine_potential");
  const double t = seconds_since(t0);
  const double width = e.cu_hi - e.cu_lo;
  const bool bracket = width <= 1e-3 && e.cu_lo >= 0.3 - 5e-3 && e.cu_hi <= 0.3 + 5e-3;
  return {std::abs(e.e0 - 0.3) < 1e-6 && bracket && e.c0_upper <= 0.301 && t < 300.0,
          fmt("e0=%.9f, c_u in [%.6f, %.6f] (width %.2e), c0 upper %.6f, %.1f s (<300)", e.e0, e.cu_lo, e.cu_hi,
              width, e.c0_upper, t)};
}

Line ordering() {
  std::string d;
  bool ok = true;
  for (const auto& nm : models::suite()) {
    const auto& e = estimates_for(nm.name);
    const bool h = ordering_chain_holds(e, 1e-3);
    ok = ok && h;
    d += fmt("%s %.4f<=%.4f<=%.4f<=%.4f%s; ", nm.name.c_str(), e.min_E, e.e0, e.cu_hi, e.c0_upper, h ? "" : " BROKEN");
  }
  return {ok, d};
}

Line exp_escape() {
  const auto t0 = Clock::now();
  using Pt = std::vector<double>;
  const EuclideanSpace sp([](const Pt& p) { return std::exp(p[0]) - p[1] * p[1]; },
                          [](const Pt& p) { return Pt{std::exp(p[0]), -2.0 * p[1]}; });
  auto path = straight_path(sp, Pt{0.0, -2.0}, Pt{0.0, 2.0}, 21, EndpointPolicy<Pt>::pinned({0.0, -2.0}),
                            EndpointPolicy<Pt>::pinned({0.0, 2.0}));
  MountainPassOptions<Pt> o;
  o.trunc_level = -1.0;
  o.escape_metric = [](const Pt& p) { return -p[0]; };
  o.escape_threshold = 5.0;
  o.max_sweeps = 20000;
  o.deform.max_step = 4.0;
  const auto r = mountain_pass(sp, path, o);
  const double t = seconds_since(t0);
  const bool ok = r.c_estimate >= 0.0 && r.c_estimate <= 1e-2 && r.min_grad_norm_at_max < 1e-2 &&
                  r.ps_flag == PSFlag::PSEscape && r.argmax[0] < -5.0 && t < 5.0;
  return {ok, fmt("c=%.2e, min grad at max %.2e, flag %s, argmax x=%.2f, %d sweeps, %.2f s (<5)", r.c_estimate,
                  r.min_grad_norm_at_max, std::string(to_string(r.ps_flag)).c_str(), r.argmax[0], r.sweeps, t)};
}

Line isoperimetric() {
  const auto m = models::magnetic_strip();
  const double theta_const = estimate_bounds(m, 64).Theta;
  std::mt19937_64 rng(3003);
  fixtures::LoopGen g;
  g.contractible = true;
  g.amplitude = 0.05;
  double worst = 0.0;  // max |∫θ| / bound
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    g.samples = (i % 3 == 0) ? 128 : 64;
    const auto l = fixtures::random_loop(rng, g);
    try {
      const auto c = isoperimetric_check(m, theta_const, l);
      worst = std::max(worst, std::abs(c.integral) / c.bound);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ClaimViolated) throw;
      ++violations;
    }
  }
  // Small circles against πr²·dθ(center).
  double stokes = 0.0;
  for (double cx : {0.0, 0.25, 0.5, 0.8}) {
    const double r = 0.03;
    const std::vector<double> c{cx, 0.3};
    const double b = magnetic_matrix(m, c)[1];
    const auto rec = isoperimetric_check(m, theta_const, fixtures::circle_loop(cx, 0.3, r, 256));
    stokes = std::max(stokes, std::abs(rec.integral - kPi * r * r * b));
  }
  return {violations == 0 && stokes < 1e-4,
          fmt("1000 chart loops: %d violations, max |int theta|/bound %.3f; circle r=0.03 Stokes gap %.2e (<1e-4)",
              violations, worst, stokes)};
}

Line negative_length() {
  const auto m = models::magnetic_strip();
  const auto& est = estimates_for("magnetic_strip");
  const auto bounds = estimate_bounds(m, 64);
  std::vector<Witness> ws;
  for (const auto& w : est.cu.witnesses) {
    if (w.kappa > est.e0 && w.kappa < est.cu_hi) ws.push_back(w);
  }
  for (int j = 1; j <= 5; ++j) {
    const double k = est.e0 + (est.cu_lo - est.e0) * j / 6.0;
    if (auto w = witness_negative_action(FunctionalContext(m, k, bounds))) ws.push_back(*w);
  }
  int bad = 0;
  double min_margin = 1e300;
  for (const auto& w : ws) {
    const FunctionalContext ctx(m, w.kappa, bounds);
    try {
      min_margin = std::min(min_margin, negative_length_check(ctx, w.loop, est.e0).margin);
    } catch (const Error&) {
      ++bad;
    }
  }
  // Negative control: a short clockwise circle checked against an inflated L0.
  FunctionalContext bogus(m, 0.0002, bounds);
  std::vector<double> q;
  for (int i = 0; i < 128; ++i) {
    const double ph = -2.0 * kPi * i / 128;
    q.push_back(0.06 * std::cos(ph));
    q.push_back(0.3 + 0.06 * std::sin(ph));
  }
  const auto circle = with_optimal_period(bogus, DiscreteLoop::from_lift(2, q, {0, 0}, 1.0));
  bogus.bounds.L0 = 1e6;
  bool control_failed = false;
  try {
    negative_length_check(bogus, circle, 0.0);
  } catch (const Error& e) {
    control_failed = e.code() == ErrorCode::ClaimViolated;
  }
  return {!ws.empty() && bad == 0 && control_failed,
          fmt("%zu witnesses, %d below r1, min margin %.4f; injected control %s", ws.size(), bad, min_margin,
              control_failed ? "rejected" : "ACCEPTED")};
}

Line struwe() {
  const auto t0 = Clock::now();
  const auto m = models::magnetic_strip();
  const auto& est = estimates_for("magnetic_strip");
  if (!est.cu.lo_witness) return {false, "no certified witness at the lower c_u bracket"};
  LoopSweepOptions o;
  o.grid = 16;
  shared.sweep = loop_struwe_sweep(m, est.e0, est.cu_lo, *est.cu.lo_witness, o);
  const auto& r = *shared.sweep;
  const double t = seconds_since(t0);
  double closure = 1e300, egap = 1e300;
  if (r.orbit) {
    closure = r.orbit->verification.closure_error;
    egap = std::abs(r.orbit->verification.energy_mean - r.kappa_bar);
  }
  const bool ok = r.sweep.rows.size() == 16 && r.all_positive && r.sweep.monotone && closure < 1e-3 &&
                  egap < 1e-3 && t < 900.0;
  return {ok, fmt("16 points in (%.4f, %.6f): positive %d, monotone %d (defect %.1e), kbar=%.6f, closure %.2e, "
                  "|E-kbar| %.2e, %.1f s (<900)",
                  est.e0, est.cu_lo, r.all_positive, r.sweep.monotone, r.sweep.max_monotonicity_defect, r.kappa_bar,
                  closure, egap, t)};
}

Line two_lyapunov() {
  if (!shared.sweep) return {false, "sweep unavailable"};
  const auto m = models::magnetic_strip();
  const auto& s = shared.sweep->sweep;
  const std::size_t sel = s.selected;
  const std::size_t up = sel + 1 < s.rows.size() ? sel + 1 : sel;
  const auto& nodes = s.paths[sel].nodes;
  std::vector<DiscreteLoop> seeds(nodes.begin() + 1, nodes.end() - 1);
  TwoLyapunovOptions o;
  o.kappa_bar = s.rows[sel].kappa;
  o.kappa_star = up != sel ? s.rows[up].kappa : s.rows[sel].kappa * 1.1;
  o.T_star = 1.5 * s.rows[sel].argmax.period();
  o.a = s.rows[sel].c_estimate;
  o.d = 2.0 * s.rows[sel].c_estimate;
  o.rho_level = 0.5 * shared.sweep->levels[sel].a;
  o.max_iters = 400;
  const auto r = loop_two_lyapunov(m, estimate_bounds(m, 64), seeds, o);
  double inc = 0.0, tmax = 0.0, bound = 0.0;
  bool ok = r.violations == 0;
  int in_a = 0, trapped = 0;
  for (const auto& t : r.trajectories) {
    inc = std::max(inc, t.max_star_increase_in_A);
    tmax = std::max(tmax, t.max_T_in_trap);
    bound = t.period_bound;
    ok = ok && t.max_star_increase_in_A <= 1e-10 && t.max_T_in_trap <= t.period_bound;
    bool a = false, tr = false;
    for (const auto& x : t.trace) {
      a = a || x.in_A;
      tr = tr || x.s_star < o.d;
    }
    in_a += a;
    trapped += tr;
  }
  return {ok, fmt("%zu trajectories (%d entered A, %d trapped): max S* increase in A %.1e (<=1e-10), max T in trap "
                  "%.3f <= %.3f",
                  r.trajectories.size(), in_a, trapped, inc, tmax, bound)};
}

Line shrink_to_point() {
  int floor_hits = 0, bad = 0, total = 0;
  double worst = 0.0;
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& nm : models::suite()) {
    const double e0 = estimate_e0(nm.model, 128).value;
    for (double dk : {0.05, 0.3}) {
      const auto ctx = context(nm.model, e0 + dk);
      std::vector<DiscreteLoop> starts;
      for (int i = 0; i < 4; ++i) {
        const std::vector<double> x{u(rng), u(rng)};
        starts.push_back(constant_loop(x, 64, 0.2 + u(rng)));
        starts.push_back(fixtures::circle_loop(x[0], x[1], 0.02 + 0.05 * u(rng), 64, 0.1 + u(rng)));
      }
      for (const auto& s : starts) {
        const auto r = descend(ctx, s);
        ++total;
        if (r.loop.period() <= 10 * ctx.T_floor || r.termination == Termination::ShrankToPoint) {
          ++floor_hits;
          worst = std::max(worst, std::abs(r.action_trace.back()));
          if (std::abs(r.action_trace.back()) >= 1e-3 || r.shrink_violation) ++bad;
        }
      }
    }
  }
  return {floor_hits > 0 && bad == 0,
          fmt("%d descents, %d ended at the period floor, max |S| there %.2e (<1e-3), %d violations", total,
              floor_hits, worst, bad)};
}

Line verifier() {
  double lo = 1e300, hi = -1e300, drift = 0.0;
  std::string d;
  for (const auto& nm : models::suite()) {
    ClassMinOptions o;
    o.samples = 128;
    const auto c = minimize_in_class(nm.model, 0.5, {1, 0}, o);
    const auto [x0, v0] = initial_data(c.candidate.loop);
    const std::span<const double> x(x0.data(), 2), v(v0.data(), 2);
    const double T = c.candidate.loop.period();
    const auto tr = integrate_el(nm.model, x, v, T, static_cast<int>(std::ceil(T / 1e-3)));
    drift = std::max(drift, tr.energy_drift);
    // Free motion is integrated exactly, so it has no measurable order.
    if (nm.model.has_magnetic_term() || !nm.model.potential().is_zero()) {
      const std::vector<double> xs{0.1, 0.2}, vs{0.9, 0.4};
      const double ord = rk4_order(nm.model, xs, vs, 1.0, 100);
      lo = std::min(lo, ord);
      hi = std::max(hi, ord);
      d += fmt("%s order %.3f; ", nm.name.c_str(), ord);
    } else {
      const std::vector<double> xs{0.1, 0.2}, vs{0.9, 0.4};
      const auto a = integrate_el(nm.model, xs, vs, 1.0, 100);
      d += fmt("%s exact (end error %.1e); ", nm.name.c_str(), std::abs(a.x_end[0] - 1.0));
    }
  }
  return {lo >= 3.7 && hi <= 4.3 && drift < 1e-9, d + fmt("max drift over one period at h=1e-3 %.2e (<1e-9)", drift)};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  report(1, "gradient vs finite diff", gradient_check);
  report(2, "period-derivative identity", period_identity);
  report(3, "class minimization oracle", class_min);
  report(4, "critical-value concordance", concordance);
  report(5, "ordering chain", ordering);
  report(6, "exp(x)-y^2 escape", exp_escape);
  report(7, "isoperimetric bound", isoperimetric);
  report(8, "negative-action length", negative_length);
  report(9, "Struwe sweep", struwe);
  report(10, "two-Lyapunov flow", two_lyapunov);
  report(11, "shrink-to-point", shrink_to_point);
  report(12, "verifier independence", verifier);
  std::printf("%d of 12 criteria failed (%.1f s total)\n", failures, seconds_since(t0));
  return failures;
}
