#ifndef PERORB_CRITICAL_VALUES_HPP
#define PERORB_CRITICAL_VALUES_HPP

// Estimates of the energy values e₀ = max E(·,0), c_u (sign threshold of the
// action on contractible loops) and c₀ = inf over closed one-forms α of
// max_x H(x, α(x)).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "perorb/action.hpp"
#include "perorb/geometry.hpp"
#include "perorb/lagrangian.hpp"
#include "perorb/parallel.hpp"
#include "perorb/seeds.hpp"

namespace perorb {

struct E0Estimate {
  double value = 0.0;
  /// Bound on how far the true maximum can exceed `value`.
  double error_bound = 0.0;
  std::vector<double> argmax;
};

inline E0Estimate estimate_e0(const TonelliModel& model, int resolution) {
  if (resolution < 64) throw Error(ErrorCode::BadParameters, "resolution must be at least 64", "resolution");
  const GridMax gm = potential_max(model, resolution);
  E0Estimate e;
  e.value = gm.value;
  e.argmax = gm.argmax;
  // The maximizer is within δ of a grid point, where the gradient vanishes
  // at the maximizer itself: V(x*) − V(g) ≤ ½ M₂ δ².
  const double delta = std::sqrt(static_cast<double>(model.dim())) / (2.0 * resolution);
  e.error_bound = 0.5 * model.potential().hessian_sup_bound() * delta * delta;
  return e;
}

// ---------------------------------------------------------------------------
// Negative-action witnesses.

struct WitnessOptions {
  SeedOptions seeds;
  int descents = 6;
  int descent_iters = 300;
  int subdivision = 4;
  bool amplify = true;
  std::vector<double> stretch_factors{2.0, 3.0, 4.0};
  double T_ceiling = 1e4;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: worker_count()
};

struct Witness {
  DiscreteLoop loop;
  double kappa = 0.0;
  double action = 0.0;
  /// Action of the same polygon resolved `subdivision` times finer.
  double refined_action = 0.0;
  std::string origin;
};

inline bool certify_negative(const FunctionalContext& ctx, const DiscreteLoop& loop, int subdivision,
                             double* refined) {
  if (!loop.is_contractible()) return false;
  const double s = action(ctx, loop);
  if (!(s < 0.0)) return false;
  const double r = action(ctx, subdivide(loop, subdivision));
  if (refined) *refined = r;
  return r < 0.0;
}

/// Searches for a contractible loop with negative action. A returned loop
/// certifies κ < c_u; an empty result is inconclusive.
inline std::optional<Witness> witness_negative_action(const FunctionalContext& ctx_in,
                                                      const WitnessOptions& opts = {}) {
  const FunctionalContext ctx = ctx_in.with_truncation(std::nullopt);
  const TonelliModel& model = ctx.model;
  std::mt19937_64 rng(opts.seed);
  const GridMax vmax = potential_max(model, 64);
  auto shapes = contractible_seeds(model, vmax.argmax, opts.seeds, rng);

  struct Scored {
    double action;
    std::size_t index;
    DiscreteLoop loop;
  };
  std::vector<Scored> scored;
  scored.reserve(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    DiscreteLoop l = with_optimal_period(ctx, shapes[i], 1e-3, opts.T_ceiling);
    scored.push_back({action(ctx, l), i, std::move(l)});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.action < b.action; });

  auto make = [&](const DiscreteLoop& l, const std::string& origin) -> std::optional<Witness> {
    double refined = 0.0;
    if (!certify_negative(ctx, l, opts.subdivision, &refined)) return std::nullopt;
    return Witness{l, ctx.kappa, action(ctx, l), refined, origin};
  };

  // Seeds are tried in generation order (simplest shapes first).
  std::vector<const Scored*> by_index(scored.size());
  for (const auto& s : scored) by_index[s.index] = &s;
  for (const Scored* s : by_index) {
    if (s->action < 0.0) {
      if (auto w = make(s->loop, "seed")) return w;
    }
  }

  DescentOptions dopts;
  dopts.max_iters = opts.descent_iters;
  dopts.T_ceiling = opts.T_ceiling;
  dopts.grad_tol = 1e-10;
  auto run_descents = [&](const std::vector<DiscreteLoop>& starts) {
    return parallel_map(
        starts.size(),
        [&](std::size_t i) -> std::optional<DescentResult> {
          DescentOptions o = dopts;
          // Stop slightly below zero so that refinement keeps the sign.
          o.target_action = -1e-6 * std::max(1.0, starts[i].period());
          try {
            return descend(ctx, starts[i], o);
          } catch (const Error&) {
            return std::nullopt;
          }
        },
        opts.workers > 0 ? opts.workers : worker_count());
  };

  std::vector<DiscreteLoop> starts;
  for (std::size_t i = 0; i < scored.size() && static_cast<int>(starts.size()) < opts.descents; ++i) {
    starts.push_back(scored[i].loop);
  }
  auto results = run_descents(starts);
  std::vector<DiscreteLoop> finished;
  for (const auto& r : results) {
    if (!r) continue;
    if (auto w = make(r->loop, "descent")) return w;
    if (r->termination != Termination::ShrankToPoint) finished.push_back(r->loop);
  }

  if (!opts.amplify) return std::nullopt;
  // Near-negative shapes are stretched along each axis: for loops whose
  // negative contribution grows with their extent this wins over length.
  std::vector<std::pair<double, DiscreteLoop>> pool;
  for (const auto& l : finished) pool.emplace_back(action(ctx, l), l);
  for (std::size_t i = 0; i < std::min<std::size_t>(scored.size(), 2); ++i) pool.emplace_back(scored[i].action, scored[i].loop);
  std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (pool.size() > 2) pool.resize(2);
  std::vector<DiscreteLoop> stretched;
  for (const auto& [s, l] : pool) {
    if (loop_length(l) == 0.0) continue;
    for (int axis = 0; axis < model.dim(); ++axis) {
      for (double f : opts.stretch_factors) {
        const int samples = static_cast<int>(std::ceil(l.size() * f));
        DiscreteLoop st = with_optimal_period(ctx, stretch_loop(l, axis, f, samples), 1e-3, opts.T_ceiling);
        if (auto w = make(st, "stretch")) return w;
        stretched.push_back(std::move(st));
      }
    }
  }
  std::stable_sort(stretched.begin(), stretched.end(),
                   [&](const DiscreteLoop& a, const DiscreteLoop& b) { return action(ctx, a) < action(ctx, b); });
  if (static_cast<int>(stretched.size()) > opts.descents) stretched.resize(opts.descents);
  for (const auto& r : run_descents(stretched)) {
    if (!r) continue;
    if (auto w = make(r->loop, "stretch+descent")) return w;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// c_u by bisection on the witness predicate.

struct CuOptions {
  double tol = 1e-3;
  int max_bisections = 80;
  WitnessOptions witness;
};

struct BisectionStep {
  double kappa = 0.0;
  bool witness = false;
  double action = 0.0;
};

struct CuBracket {
  double lo = 0.0;
  double hi = 0.0;
  std::optional<Witness> lo_witness;
  std::vector<Witness> witnesses;
  std::vector<BisectionStep> history;
};

inline CuBracket estimate_cu(const TonelliModel& model, const BoundsEstimate& bounds, double kappa_lo,
                             double kappa_hi, const CuOptions& opts = {}) {
  if (!(opts.tol > 0.0)) throw Error(ErrorCode::BadParameters, "tol must be positive", "tol");
  if (!(kappa_lo < kappa_hi)) throw Error(ErrorCode::BadBracket, "need kappa_lo < kappa_hi");
  const FunctionalContext base(model, kappa_lo, bounds);
  CuBracket out;
  auto probe = [&](double k) {
    auto w = witness_negative_action(base.with_kappa(k), opts.witness);
    out.history.push_back({k, w.has_value(), w ? w->action : 0.0});
    if (w) out.witnesses.push_back(*w);
    return w;
  };
  auto lo_w = probe(kappa_lo);
  if (!lo_w) throw Error(ErrorCode::BadBracket, "no witness at the lower end of the bracket");
  if (probe(kappa_hi)) throw Error(ErrorCode::BadBracket, "witness found at the upper end of the bracket");
  double lo = kappa_lo, hi = kappa_hi;
  out.lo_witness = lo_w;
  for (int it = 0; it < opts.max_bisections && hi - lo > opts.tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (auto w = probe(mid)) {
      lo = mid;
      out.lo_witness = w;
    } else {
      hi = mid;
    }
  }
  out.lo = lo;
  out.hi = hi;
  return out;
}

// ---------------------------------------------------------------------------
// c₀ over closed one-forms α = p·dx + df.

struct C0Options {
  int opt_resolution = 32;
  int cert_resolution = 256;
  int max_mode = 4;
  int iterations = 300;
  int restarts = 2;
  std::vector<double> temperatures{30.0, 100.0, 300.0, 1000.0, 3000.0};
  std::uint64_t seed = 7;
};

struct C0Estimate {
  double upper = 0.0;
  double estimate = 0.0;
  double grid_max = 0.0;
  double slack = 0.0;
  std::vector<double> harmonic;  // p
  std::vector<FourierTerm> exact_part;  // terms of f
  int max_mode = 0;
};

namespace detail {

/// H(x, α(x)) − V as a function of the parameters, in a form that evaluates
/// all grid points at once.
class ClosedFormProblem {
 public:
  ClosedFormProblem(const TonelliModel& model, int resolution, int max_mode)
      : dim_(model.dim()), res_(resolution) {
    std::vector<int> m(dim_, -max_mode);
    for (;;) {
      // Keep one mode of each ± pair: the first nonzero entry positive.
      int first = 0;
      for (int v : m) {
        if (v != 0) {
          first = v;
          break;
        }
      }
      if (first > 0) modes_.push_back(m);
      int a = 0;
      while (a < dim_ && ++m[a] > max_mode) m[a++] = -max_mode;
      if (a == dim_) break;
    }
    const std::size_t g = detail::grid_size(dim_, res_);
    beta0_.resize(g * dim_);
    vals_.resize(g);
    cs_.resize(g * modes_.size() * 2);
    Vec x{};
    Vec th{};
    for (std::size_t i = 0; i < g; ++i) {
      detail::grid_point(i, dim_, res_, x);
      model.theta_at(x, th);
      for (int a = 0; a < dim_; ++a) {
        beta0_[i * dim_ + a] = -th[a];
      }
      vals_[i] = model.potential_at(x);
      for (std::size_t k = 0; k < modes_.size(); ++k) {
        double ph = 0.0;
        for (int a = 0; a < dim_; ++a) ph += modes_[k][a] * x[a];
        ph *= 2.0 * std::numbers::pi;
        cs_[(i * modes_.size() + k) * 2] = std::cos(ph);
        cs_[(i * modes_.size() + k) * 2 + 1] = std::sin(ph);
      }
    }
  }

  std::size_t parameter_count() const { return dim_ + 2 * modes_.size(); }
  std::size_t grid_count() const { return vals_.size(); }
  const std::vector<std::vector<int>>& modes() const { return modes_; }

  /// Values h_g and, when `jac` is non-null, accumulates Σ_g w_g ∂h_g/∂z
  /// into `grad` using weights `w`.
  void values(const std::vector<double>& z, std::vector<double>& h) const {
    const std::size_t g = vals_.size();
    h.resize(g);
    std::vector<double> beta(dim_);
    for (std::size_t i = 0; i < g; ++i) {
      beta_at(z, i, beta);
      double s = 0.0;
      for (int a = 0; a < dim_; ++a) s += beta[a] * beta[a];
      h[i] = 0.5 * s + vals_[i];
    }
  }

  void weighted_gradient(const std::vector<double>& z, const std::vector<double>& w,
                         std::vector<double>& grad) const {
    grad.assign(parameter_count(), 0.0);
    std::vector<double> beta(dim_);
    const double tp = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < vals_.size(); ++i) {
      if (w[i] == 0.0) continue;
      beta_at(z, i, beta);
      for (int a = 0; a < dim_; ++a) grad[a] += w[i] * beta[a];
      for (std::size_t k = 0; k < modes_.size(); ++k) {
        const double c = cs_[(i * modes_.size() + k) * 2];
        const double s = cs_[(i * modes_.size() + k) * 2 + 1];
        double mb = 0.0;
        for (int a = 0; a < dim_; ++a) mb += modes_[k][a] * beta[a];
        grad[dim_ + 2 * k] += w[i] * (-tp * s) * mb;
        grad[dim_ + 2 * k + 1] += w[i] * (tp * c) * mb;
      }
    }
  }

  /// f as a trigonometric series.
  std::vector<FourierTerm> exact_terms(const std::vector<double>& z) const {
    std::vector<FourierTerm> out;
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      if (z[dim_ + 2 * k] != 0.0 || z[dim_ + 2 * k + 1] != 0.0) {
        out.push_back({modes_[k], z[dim_ + 2 * k], z[dim_ + 2 * k + 1]});
      }
    }
    return out;
  }

 private:
  void beta_at(const std::vector<double>& z, std::size_t i, std::vector<double>& beta) const {
    const double tp = 2.0 * std::numbers::pi;
    for (int a = 0; a < dim_; ++a) beta[a] = z[a] + beta0_[i * dim_ + a];
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      const double ca = z[dim_ + 2 * k];
      const double sb = z[dim_ + 2 * k + 1];
      if (ca == 0.0 && sb == 0.0) continue;
      const double c = cs_[(i * modes_.size() + k) * 2];
      const double s = cs_[(i * modes_.size() + k) * 2 + 1];
      const double amp = tp * (sb * c - ca * s);
      for (int a = 0; a < dim_; ++a) beta[a] += amp * modes_[k][a];
    }
  }

  int dim_;
  int res_;
  std::vector<std::vector<int>> modes_;
  std::vector<double> beta0_;
  std::vector<double> vals_;
  std::vector<double> cs_;
};

struct SmoothedMax {
  double value;
  double hard_max;
};

inline SmoothedMax smoothed_max(const std::vector<double>& h, double beta, std::vector<double>* weights) {
  const double hmax = *std::max_element(h.begin(), h.end());
  double s = 0.0;
  if (weights) weights->resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double e = std::exp(beta * (h[i] - hmax));
    s += e;
    if (weights) (*weights)[i] = e;
  }
  if (weights) {
    for (double& e : *weights) e /= s;
  }
  return {hmax + std::log(s / h.size()) / beta, hmax};
}

}  // namespace detail

/// Hard maximum of H(x, α(x)) over a fine grid plus a Taylor slack from
/// coefficient-sum bounds; a valid upper bound for max_x H(x, α(x)).
inline double certified_closed_form_bound(const TonelliModel& model, std::span<const double> p,
                                          const std::vector<FourierTerm>& f, int resolution,
                                          double* grid_max_out = nullptr, double* slack_out = nullptr) {
  const int dim = model.dim();
  const TrigSeries fs(dim, f);
  std::vector<TrigSeries> beta;
  for (int j = 0; j < dim; ++j) {
    TrigSeries b = fs.derivative(j);
    b.add({std::vector<int>(dim, 0), p[j], 0.0});
    if (model.has_magnetic_term()) {
      for (const auto& t : model.theta()[j].terms()) b.add({t.mode, -t.cos_coef, -t.sin_coef});
    }
    beta.push_back(std::move(b));
  }
  double m2 = model.potential().hessian_sup_bound();
  for (const auto& b : beta) {
    const double g = b.gradient_sup_bound();
    m2 += g * g + b.sup_bound() * b.hessian_sup_bound();
  }
  const double delta = std::sqrt(static_cast<double>(dim)) / (2.0 * resolution);
  const std::size_t total = detail::grid_size(dim, resolution);
  double best = -std::numeric_limits<double>::infinity();
  double gmax = best;
  Vec x{};
  Vec gv{};
  std::vector<Vec> gb(dim);
  for (std::size_t i = 0; i < total; ++i) {
    detail::grid_point(i, dim, resolution, x);
    double h = model.potential_and_gradient(x, gv);
    Vec grad = gv;
    for (int j = 0; j < dim; ++j) {
      const double bj = beta[j].value_and_gradient(x, gb[j]);
      h += 0.5 * bj * bj;
      for (int a = 0; a < dim; ++a) grad[a] += bj * gb[j][a];
    }
    const double gnorm = std::sqrt(dot(grad, grad, dim));
    gmax = std::max(gmax, h);
    best = std::max(best, h + gnorm * delta + 0.5 * m2 * delta * delta);
  }
  if (grid_max_out) *grid_max_out = gmax;
  if (slack_out) *slack_out = best - gmax;
  return best;
}

inline C0Estimate estimate_c0(const TonelliModel& model, const C0Options& opts = {}) {
  const int dim = model.dim();
  detail::ClosedFormProblem prob(model, opts.opt_resolution, opts.max_mode);
  const std::size_t np = prob.parameter_count();

  C0Estimate best;
  best.max_mode = opts.max_mode;
  best.upper = std::numeric_limits<double>::infinity();
  best.estimate = std::numeric_limits<double>::infinity();
  auto certify = [&](const std::vector<double>& z, double smoothed) {
    std::vector<double> p(z.begin(), z.begin() + dim);
    const auto f = prob.exact_terms(z);
    double gm = 0.0, slack = 0.0;
    const double ub = certified_closed_form_bound(model, p, f, opts.cert_resolution, &gm, &slack);
    if (ub < best.upper) {
      best.upper = ub;
      best.grid_max = gm;
      best.slack = slack;
      best.harmonic = p;
      best.exact_part = f;
    }
    best.estimate = std::min(best.estimate, smoothed);
  };

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> h, w, grad;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    std::vector<double> z(np, 0.0);
    if (r > 0) {
      for (double& v : z) v = 0.02 * nd(rng);
    }
    prob.values(z, h);
    if (r == 0) certify(z, *std::max_element(h.begin(), h.end()));
    for (double beta_scale : opts.temperatures) {
      // Temperature relative to the current spread of values.
      const double spread = std::max(1e-4, *std::max_element(h.begin(), h.end()) - *std::min_element(h.begin(), h.end()));
      const double beta = beta_scale / spread;
      double step = 1.0;
      prob.values(z, h);
      double fval = detail::smoothed_max(h, beta, &w).value;
      for (int it = 0; it < opts.iterations; ++it) {
        prob.weighted_gradient(z, w, grad);
        double gn2 = 0.0;
        for (double g : grad) gn2 += g * g;
        if (gn2 < 1e-26) break;
        bool moved = false;
        step = std::min(1e3, step * 2.0);
        while (step > 1e-14) {
          std::vector<double> zt(np);
          for (std::size_t i = 0; i < np; ++i) zt[i] = z[i] - step * grad[i];
          std::vector<double> ht, wt;
          prob.values(zt, ht);
          const double ft = detail::smoothed_max(ht, beta, &wt).value;
          if (ft <= fval - 1e-4 * step * gn2) {
            z = std::move(zt);
            h = std::move(ht);
            w = std::move(wt);
            fval = ft;
            moved = true;
            break;
          }
          step *= 0.5;
        }
        if (!moved) break;
      }
      certify(z, fval);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

struct CriticalValueOptions {
  int e0_resolution = 128;
  C0Options c0;
  CuOptions cu;
  /// Bracket override for the bisection; defaults to [e₀ − 1, c₀ + 0.05].
  std::optional<double> cu_lo;
  std::optional<double> cu_hi;
};

struct CriticalValueEstimates {
  double min_E = 0.0;
  double e0 = 0.0;
  double e0_error = 0.0;
  double cu_lo = 0.0;
  double cu_hi = 0.0;
  double c0_upper = 0.0;
  double c0_estimate = 0.0;
  BoundsEstimate bounds;
  CuBracket cu;
  C0Estimate c0;
  bool ordering_holds = false;
};

inline bool ordering_chain_holds(const CriticalValueEstimates& e, double tol) {
  return e.min_E <= e.e0 + tol && e.e0 <= e.cu_hi + tol && e.cu_lo <= e.cu_hi &&
         e.cu_hi <= e.c0_upper + tol;
}

inline CriticalValueEstimates estimate_critical_values(const TonelliModel& model,
                                                       const CriticalValueOptions& opts = {}) {
  CriticalValueEstimates out;
  out.bounds = estimate_bounds(model, std::max(64, opts.e0_resolution / 2));
  const E0Estimate e0 = estimate_e0(model, opts.e0_resolution);
  out.e0 = e0.value;
  out.e0_error = e0.error_bound;
  out.min_E = potential_min(model, opts.e0_resolution).value;
  out.c0 = estimate_c0(model, opts.c0);
  out.c0_upper = out.c0.upper;
  out.c0_estimate = out.c0.estimate;
  const double lo = opts.cu_lo.value_or(out.e0 - 1.0);
  const double hi = opts.cu_hi.value_or(out.c0_upper + 0.05);
  out.cu = estimate_cu(model, out.bounds, lo, hi, opts.cu);
  out.cu_lo = out.cu.lo;
  out.cu_hi = out.cu.hi;
  out.ordering_holds = ordering_chain_holds(out, opts.cu.tol);
  return out;
}

}  // namespace perorb

#endif  // PERORB_CRITICAL_VALUES_HPP
