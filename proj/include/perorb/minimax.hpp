#ifndef PERORB_MINIMAX_HPP
#define PERORB_MINIMAX_HPP

// Discretized-path minimax over any space with a gradient oracle: truncated
// normalized deformation of a chain of points, the mountain-pass driver with
// an escape monitor, min-mode saddle refinement, the κ-sweep with warm
// starts, and the two-Lyapunov pseudo-gradient flow.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perorb/error.hpp"
#include "perorb/parallel.hpp"

namespace perorb {

template <class S>
concept MinimaxSpace = requires(const S& s, const typename S::point_type& p,
                                const typename S::tangent_type& v, double h) {
  { s.evaluate(p) } -> std::same_as<std::pair<double, typename S::tangent_type>>;
  { s.value(p) } -> std::convertible_to<double>;
  { s.inner(p, v, v) } -> std::convertible_to<double>;
  { s.combine(h, v, h, v) } -> std::same_as<typename S::tangent_type>;
  { s.step(p, v, h) } -> std::same_as<std::optional<typename S::point_type>>;
  { s.difference(p, p) } -> std::same_as<typename S::tangent_type>;
  { s.interpolate(p, p, h) } -> std::same_as<typename S::point_type>;
};

/// R^n with the Euclidean metric, for explicit objectives.
class EuclideanSpace {
 public:
  using point_type = std::vector<double>;
  using tangent_type = std::vector<double>;
  using Objective = std::function<double(const point_type&)>;
  using Gradient = std::function<tangent_type(const point_type&)>;

  EuclideanSpace(Objective f, Gradient g) : f_(std::move(f)), g_(std::move(g)) {}

  std::pair<double, tangent_type> evaluate(const point_type& p) const { return {f_(p), g_(p)}; }
  double value(const point_type& p) const { return f_(p); }
  double inner(const point_type&, const tangent_type& a, const tangent_type& b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }
  tangent_type combine(double a, const tangent_type& u, double b, const tangent_type& w) const {
    tangent_type r(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) r[i] = a * u[i] + b * w[i];
    return r;
  }
  std::optional<point_type> step(const point_type& p, const tangent_type& v, double h) const {
    point_type r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = p[i] + h * v[i];
    return r;
  }
  tangent_type difference(const point_type& from, const point_type& to) const {
    tangent_type r(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) r[i] = to[i] - from[i];
    return r;
  }
  point_type interpolate(const point_type& a, const point_type& b, double t) const {
    point_type r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = (1.0 - t) * a[i] + t * b[i];
    return r;
  }

 private:
  Objective f_;
  Gradient g_;
};

/// 0 below 0, 1 above 1, C¹ smoothstep in between.
inline double smooth_ramp(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

template <class P>
struct EndpointPolicy {
  enum class Kind { Free, FixedSet };
  Kind kind = Kind::Free;
  std::function<bool(const P&)> predicate;
  std::function<P(const P&)> projection;

  static EndpointPolicy free_end() { return {}; }
  static EndpointPolicy fixed(std::function<bool(const P&)> pred, std::function<P(const P&)> proj) {
    return {Kind::FixedSet, std::move(pred), std::move(proj)};
  }
  /// FixedSet whose set is the single point `p`.
  static EndpointPolicy pinned(P p) {
    auto shared = std::make_shared<P>(std::move(p));
    return fixed([](const P&) { return false; }, [shared](const P&) { return *shared; });
  }

  bool holds(const P& p) const { return kind == Kind::Free || !predicate || predicate(p) || !projection; }
};

template <class P>
struct MinimaxPath {
  std::vector<P> nodes;
  EndpointPolicy<P> start;
  EndpointPolicy<P> end;
  /// Maximum over the nodes after each sweep.
  std::vector<double> history;
  /// Per-node line-search memory.
  std::vector<double> step_sizes;

  MinimaxPath() = default;
  MinimaxPath(std::vector<P> n, EndpointPolicy<P> s, EndpointPolicy<P> e)
      : nodes(std::move(n)), start(std::move(s)), end(std::move(e)) {}
};

/// Straight chain of `count` nodes from a to b.
template <MinimaxSpace S>
MinimaxPath<typename S::point_type> straight_path(const S& space, const typename S::point_type& a,
                                                  const typename S::point_type& b, int count,
                                                  EndpointPolicy<typename S::point_type> start,
                                                  EndpointPolicy<typename S::point_type> end) {
  if (count < 3) throw Error(ErrorCode::BadParameters, "a path needs at least 3 nodes");
  std::vector<typename S::point_type> nodes;
  for (int i = 0; i < count; ++i) nodes.push_back(space.interpolate(a, b, static_cast<double>(i) / (count - 1)));
  return MinimaxPath<typename S::point_type>(std::move(nodes), std::move(start), std::move(end));
}

struct DeformOptions {
  int sweeps = 1;
  double max_step = 1.0;
  double initial_step = 0.1;
  double armijo_c = 0.3;
  bool normalized = true;
  /// ρ rises from 0 at f = b to 1 at f = b + ramp_width.
  double ramp_width = 0.0;
  /// A node moves at most this fraction of the distance to its nearest
  /// neighbour per sweep.
  double max_move_fraction = 0.5;
  /// Interior nodes drop the gradient component along the path tangent.
  bool perpendicular = false;
  bool redistribute = true;
  int redistribute_every = 1;
  int workers = 1;
};

namespace detail {

template <MinimaxSpace S>
double path_max(const S& space, const std::vector<typename S::point_type>& nodes, std::size_t* arg = nullptr) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double v = space.value(nodes[i]);
    if (v > m) {
      m = v;
      if (arg) *arg = i;
    }
  }
  return m;
}

/// Nodes placed uniformly in arclength along the current polyline; endpoints
/// untouched.
template <MinimaxSpace S>
std::vector<typename S::point_type> redistributed(const S& space, const std::vector<typename S::point_type>& nodes) {
  const std::size_t n = nodes.size();
  std::vector<double> cum(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const auto d = space.difference(nodes[i - 1], nodes[i]);
    cum[i] = cum[i - 1] + std::sqrt(std::max(0.0, space.inner(nodes[i - 1], d, d)));
  }
  std::vector<typename S::point_type> out;
  out.reserve(n);
  out.push_back(nodes.front());
  if (!(cum.back() > 0.0)) return nodes;
  std::size_t seg = 0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double s = cum.back() * static_cast<double>(j) / static_cast<double>(n - 1);
    while (seg + 2 < n && cum[seg + 1] < s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
    out.push_back(space.interpolate(nodes[seg], nodes[seg + 1], t));
  }
  out.push_back(nodes.back());
  return out;
}

}  // namespace detail

/// Truncated normalized gradient deformation: each node with f > b moves
/// along −ρ(f)∇f/√(‖∇f‖²+1) with an Armijo line search; nodes in {f ≤ b}
/// stay put. Endpoints with a FixedSet policy are projected back onto their
/// set. Redistribution is kept only when the maximum stays at or below its
/// value from before the sweep. A path already inside {f ≤ b} is returned
/// unchanged.
template <MinimaxSpace S>
MinimaxPath<typename S::point_type> deform(const S& space, MinimaxPath<typename S::point_type> path, double b,
                                           const DeformOptions& opts = {}) {
  using P = typename S::point_type;
  auto& nodes = path.nodes;
  const std::size_t n = nodes.size();
  if (path.step_sizes.size() != n) path.step_sizes.assign(n, opts.initial_step);

  auto dist = [&](std::size_t i, std::size_t j) {
    const auto d = space.difference(nodes[i], nodes[j]);
    return std::sqrt(std::max(0.0, space.inner(nodes[i], d, d)));
  };
  for (int sweep = 0; sweep < opts.sweeps; ++sweep) {
    const double before = detail::path_max(space, nodes);
    if (before <= b) break;
    std::vector<double> reach(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double d = dist(i, i + 1);
      reach[i] = std::min(reach[i], d);
      reach[i + 1] = std::min(reach[i + 1], d);
    }
    const double width = opts.ramp_width > 0.0 ? opts.ramp_width
                                               : std::max(1e-12, 1e-3 * std::abs(before - b));
    auto moved = parallel_map(
        n,
        [&](std::size_t i) -> std::pair<P, double> {
          const P& p = nodes[i];
          double h = path.step_sizes[i];
          auto [f, g] = space.evaluate(p);
          P result = p;
          if (f > b && opts.perpendicular && i > 0 && i + 1 < n) {
            auto t = space.difference(nodes[i - 1], nodes[i + 1]);
            const double tn2 = space.inner(p, t, t);
            if (tn2 > 0.0) g = space.combine(1.0, g, -space.inner(p, g, t) / tn2, t);
          }
          if (f > b) {
            const double rho = smooth_ramp((f - b) / width);
            const double gn2 = space.inner(p, g, g);
            const double scale = rho / (opts.normalized ? std::sqrt(gn2 + 1.0) : 1.0);
            const double slope = -scale * gn2;
            h = std::min(opts.max_step, 2.0 * h);
            if (opts.max_move_fraction > 0.0 && scale * std::sqrt(gn2) > 0.0) {
              h = std::min(h, opts.max_move_fraction * reach[i] / (scale * std::sqrt(gn2)));
            }
            while (scale > 0.0 && gn2 > 0.0 && h > 1e-16) {
              auto trial = space.step(p, g, -scale * h);
              if (trial) {
                const double ft = space.value(*trial);
                if (ft <= f + opts.armijo_c * h * slope) {
                  result = *std::move(trial);
                  break;
                }
              }
              h *= 0.5;
            }
          }
          return {std::move(result), std::max(h, 1e-12)};
        },
        opts.workers);
    for (std::size_t i = 0; i < n; ++i) {
      nodes[i] = std::move(moved[i].first);
      path.step_sizes[i] = moved[i].second;
    }
    auto apply_policy = [](const EndpointPolicy<P>& pol, P& p) {
      if (pol.kind == EndpointPolicy<P>::Kind::FixedSet && pol.projection && !(pol.predicate && pol.predicate(p))) {
        p = pol.projection(p);
      }
    };
    apply_policy(path.start, nodes.front());
    apply_policy(path.end, nodes.back());

    double current = detail::path_max(space, nodes);
    const bool redistribute_now =
        opts.redistribute && opts.redistribute_every > 0 &&
        (static_cast<int>(path.history.size()) + 1) % opts.redistribute_every == 0;
    if (redistribute_now && n > 2) {
      auto candidate = detail::redistributed(space, nodes);
      const double m = detail::path_max(space, candidate);
      if (m <= before + 1e-12 * std::max(1.0, std::abs(before))) {
        nodes = std::move(candidate);
        current = m;
      }
    }
    path.history.push_back(current);
  }
  return path;
}

// ---------------------------------------------------------------------------
// Saddle refinement by min-mode following.

struct SaddleOptions {
  int max_iters = 2000;
  double grad_tol = 1e-9;
  double fd_eps = 1e-5;
  double initial_step = 0.05;
  double max_step = 2.0;
  int rotations = 2;
  /// Newton steps (GMRES on finite-difference Hessian products) are tried
  /// first when the gradient norm is below newton_below; 0 disables them.
  int krylov_dim = 60;
  double newton_below = 1e-3;
};

template <class P>
struct SaddleResult {
  P point;
  double value = 0.0;
  double grad_norm = 0.0;
  double curvature = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

template <MinimaxSpace S>
std::optional<typename S::tangent_type> hessian_vector(const S& space, const typename S::point_type& p,
                                                       const typename S::tangent_type& v, double eps) {
  for (int tries = 0; tries < 8; ++tries, eps *= 0.25) {
    auto plus = space.step(p, v, eps);
    auto minus = space.step(p, v, -eps);
    if (!plus || !minus) continue;
    const auto gp = space.evaluate(*plus).second;
    const auto gm = space.evaluate(*minus).second;
    return space.combine(0.5 / eps, gp, -0.5 / eps, gm);
  }
  return std::nullopt;
}

/// GMRES for H d = rhs in the space's inner product at p, started from 0.
template <MinimaxSpace S>
std::optional<typename S::tangent_type> gmres_hessian(const S& space, const typename S::point_type& p,
                                                      const typename S::tangent_type& rhs, int m, double rtol,
                                                      double eps) {
  using T = typename S::tangent_type;
  const double beta = std::sqrt(std::max(0.0, space.inner(p, rhs, rhs)));
  if (!(beta > 0.0)) return std::nullopt;
  std::vector<T> V;
  V.push_back(space.combine(1.0 / beta, rhs, 0.0, rhs));
  std::vector<std::vector<double>> H(m + 1, std::vector<double>(m, 0.0));
  std::vector<double> cs(m), sn(m), e(m + 1, 0.0);
  e[0] = beta;
  int k = 0;
  for (; k < m; ++k) {
    auto w = hessian_vector(space, p, V[k], eps);
    if (!w) return std::nullopt;
    for (int j = 0; j <= k; ++j) {
      H[j][k] = space.inner(p, *w, V[j]);
      *w = space.combine(1.0, *w, -H[j][k], V[j]);
    }
    H[k + 1][k] = std::sqrt(std::max(0.0, space.inner(p, *w, *w)));
    for (int j = 0; j < k; ++j) {
      const double t = cs[j] * H[j][k] + sn[j] * H[j + 1][k];
      H[j + 1][k] = -sn[j] * H[j][k] + cs[j] * H[j + 1][k];
      H[j][k] = t;
    }
    const double r = std::hypot(H[k][k], H[k + 1][k]);
    const double next = H[k + 1][k];
    if (r == 0.0) break;
    cs[k] = H[k][k] / r;
    sn[k] = next / r;
    H[k][k] = r;
    H[k + 1][k] = 0.0;
    e[k + 1] = -sn[k] * e[k];
    e[k] = cs[k] * e[k];
    if (std::abs(e[k + 1]) < rtol * beta || next < 1e-14 * beta) {
      ++k;
      break;
    }
    V.push_back(space.combine(1.0 / next, *w, 0.0, *w));
  }
  std::vector<double> y(k, 0.0);
  for (int i = k - 1; i >= 0; --i) {
    double t = e[i];
    for (int j = i + 1; j < k; ++j) t -= H[i][j] * y[j];
    y[i] = t / H[i][i];
  }
  T d = space.combine(0.0, V[0], 0.0, V[0]);
  for (int i = 0; i < k; ++i) d = space.combine(1.0, d, y[i], V[i]);
  return d;
}

/// One damped Newton step on the gradient, accepted when ‖∇f‖ drops.
template <MinimaxSpace S, class Opts>
bool newton_step(const S& space, typename S::point_type& p, double& f, typename S::tangent_type& g, double& gn,
                 const Opts& opts) {
  auto d = gmres_hessian(space, p, space.combine(-1.0, g, 0.0, g), opts.krylov_dim, 1e-3, opts.fd_eps);
  for (double t = 1.0; d && t > 1e-3; t *= 0.5) {
    auto trial = space.step(p, *d, t);
    if (!trial) continue;
    auto [ft, gt] = space.evaluate(*trial);
    const double gnt = std::sqrt(std::max(0.0, space.inner(*trial, gt, gt)));
    if (gnt < (1.0 - 1e-4 * t) * gn) {
      p = *std::move(trial);
      f = ft;
      g = std::move(gt);
      gn = gnt;
      return true;
    }
  }
  return false;
}

}  // namespace detail

template <class P>
struct PolishResult {
  P point;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Newton iterations toward the nearest critical point; stops when a step
/// no longer reduces the gradient norm.
template <MinimaxSpace S>
PolishResult<typename S::point_type> newton_polish(const S& space, typename S::point_type start,
                                                   const SaddleOptions& opts = {}) {
  PolishResult<typename S::point_type> r{std::move(start)};
  auto [f, g] = space.evaluate(r.point);
  double gn = std::sqrt(std::max(0.0, space.inner(r.point, g, g)));
  for (; r.iterations < opts.max_iters && gn >= opts.grad_tol; ++r.iterations) {
    if (!detail::newton_step(space, r.point, f, g, gn, opts)) break;
  }
  r.value = f;
  r.grad_norm = gn;
  r.converged = gn < opts.grad_tol;
  return r;
}

/// Converges to an index-one critical point near `start`, following the
/// lowest curvature mode (initial guess `mode`, e.g. the path tangent).
template <MinimaxSpace S>
SaddleResult<typename S::point_type> refine_saddle(const S& space, typename S::point_type start,
                                                   typename S::tangent_type mode, const SaddleOptions& opts = {}) {
  using T = typename S::tangent_type;
  SaddleResult<typename S::point_type> res{std::move(start)};
  auto normalize = [&](const typename S::point_type& p, T& v) {
    const double nv = std::sqrt(std::max(0.0, space.inner(p, v, v)));
    if (nv > 0.0) v = space.combine(1.0 / nv, v, 0.0, v);
    return nv;
  };
  auto& p = res.point;
  auto [f, g] = space.evaluate(p);
  double gn = std::sqrt(std::max(0.0, space.inner(p, g, g)));
  if (normalize(p, mode) == 0.0) mode = g, normalize(p, mode);
  double alpha = opts.initial_step;
  double lambda = 0.0;
  // Rayleigh-Ritz on span{v, residual}.
  auto rotate = [&](int rotations) {
    auto hv = detail::hessian_vector(space, p, mode, opts.fd_eps);
    if (!hv) return false;
    lambda = space.inner(p, mode, *hv);
    for (int r = 0; r < rotations; ++r) {
      T res_v = space.combine(1.0, *hv, -lambda, mode);
      const double proj = space.inner(p, res_v, mode);
      res_v = space.combine(1.0, res_v, -proj, mode);
      if (normalize(p, res_v) < 1e-14) break;
      auto hr = detail::hessian_vector(space, p, res_v, opts.fd_eps);
      if (!hr) break;
      const double a11 = lambda;
      const double a12 = 0.5 * (space.inner(p, mode, *hr) + space.inner(p, res_v, *hv));
      const double a22 = space.inner(p, res_v, *hr);
      const double mean = 0.5 * (a11 + a22);
      const double rad = std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + a12 * a12);
      const double low = mean - rad;
      // Eigenvector of the 2x2 block for the lower eigenvalue.
      double c1 = a12, c2 = low - a11;
      if (std::abs(c1) + std::abs(c2) < 1e-300) {
        c1 = 1.0;
        c2 = 0.0;
      }
      const double nc = std::hypot(c1, c2);
      c1 /= nc;
      c2 /= nc;
      mode = space.combine(c1, mode, c2, res_v);
      *hv = space.combine(c1, *hv, c2, *hr);
      normalize(p, mode);
      lambda = low;
    }
    return true;
  };
  for (int it = 0; it < opts.max_iters; ++it) {
    res.iterations = it;
    if (gn < opts.grad_tol) {
      res.converged = true;
      break;
    }
    if (opts.krylov_dim > 0 && gn < opts.newton_below && detail::newton_step(space, p, f, g, gn, opts)) continue;
    if (!rotate(opts.rotations)) break;
    res.curvature = lambda;
    const double gv = space.inner(p, g, mode);
    // Reverse the force along the lowest mode; with positive curvature only
    // climb along it.
    T force = lambda < 0.0 ? space.combine(-1.0, g, 2.0 * gv, mode) : space.combine(-gv, mode, 0.0, mode);
    bool accepted = false;
    for (int tries = 0; tries < 40; ++tries) {
      auto trial = space.step(p, force, alpha);
      if (trial) {
        auto [ft, gt] = space.evaluate(*trial);
        const double gnt = std::sqrt(std::max(0.0, space.inner(*trial, gt, gt)));
        if (gnt < gn) {
          p = *std::move(trial);
          f = ft;
          g = std::move(gt);
          gn = gnt;
          alpha = std::min(opts.max_step, alpha * 1.5);
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  rotate(4 * opts.rotations + 8);
  res.value = f;
  res.grad_norm = gn;
  res.curvature = lambda;
  if (gn < opts.grad_tol) res.converged = true;
  return res;
}

// ---------------------------------------------------------------------------
// Mountain pass.

enum class PSFlag { CandidateFound, PSEscape, Inconclusive };

inline std::string_view to_string(PSFlag f) {
  switch (f) {
    case PSFlag::CandidateFound: return "CandidateFound";
    case PSFlag::PSEscape: return "PSEscape";
    case PSFlag::Inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

template <class P>
struct MountainPassOptions {
  double trunc_level = -std::numeric_limits<double>::infinity();
  int max_sweeps = 2000;
  double rel_tol = 1e-7;
  int patience = 25;
  double grad_tol = 1e-6;
  double escape_grad_tol = 1e-2;
  /// Scalar escape coordinate (e.g. −x or the period); escape is flagged
  /// when it exceeds `escape_threshold` at the path maximum.
  std::function<double(const P&)> escape_metric;
  double escape_threshold = std::numeric_limits<double>::infinity();
  bool stop_on_escape = true;
  DeformOptions deform;
  bool refine = false;
  SaddleOptions saddle;
};

struct EscapeSample {
  int sweep = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  double metric = 0.0;
};

template <class P>
struct MinimaxReport {
  double c_estimate = 0.0;
  std::size_t argmax_index = 0;
  P argmax;
  double grad_norm = 0.0;
  double min_grad_norm_at_max = std::numeric_limits<double>::infinity();
  PSFlag ps_flag = PSFlag::Inconclusive;
  std::vector<EscapeSample> escape_trace;
  MinimaxPath<P> path;
  int sweeps = 0;
  std::optional<SaddleResult<P>> saddle;
};

template <MinimaxSpace S>
MinimaxReport<typename S::point_type> mountain_pass(const S& space, MinimaxPath<typename S::point_type> path,
                                                    const MountainPassOptions<typename S::point_type>& opts) {
  using P = typename S::point_type;
  if (path.nodes.size() < 3) throw Error(ErrorCode::BadParameters, "a path needs at least 3 nodes");
  const double f0 = space.value(path.nodes.front());
  const double f1 = space.value(path.nodes.back());
  std::size_t arg = 0;
  const double initial_max = detail::path_max(space, path.nodes, &arg);
  if (!(f0 < initial_max && f1 < initial_max)) {
    throw Error(ErrorCode::PreconditionFailed, "endpoints must lie strictly below the path maximum");
  }
  if (opts.trunc_level >= initial_max) {
    throw Error(ErrorCode::TruncationAboveMax, "truncation level is not below the path maximum");
  }

  MinimaxReport<P> rep;
  DeformOptions dopts = opts.deform;
  dopts.sweeps = 1;
  auto metric_of = [&](const P& p) { return opts.escape_metric ? opts.escape_metric(p) : 0.0; };
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    path = deform(space, std::move(path), opts.trunc_level, dopts);
    rep.sweeps = sweep + 1;
    const double m = detail::path_max(space, path.nodes, &arg);
    const auto [fv, g] = space.evaluate(path.nodes[arg]);
    const double gn = std::sqrt(std::max(0.0, space.inner(path.nodes[arg], g, g)));
    rep.min_grad_norm_at_max = std::min(rep.min_grad_norm_at_max, gn);
    rep.escape_trace.push_back({sweep, m, gn, metric_of(path.nodes[arg])});
    if (opts.stop_on_escape && opts.escape_metric && metric_of(path.nodes[arg]) > opts.escape_threshold &&
        gn < opts.escape_grad_tol) {
      break;
    }
    const auto& h = path.history;
    if (static_cast<int>(h.size()) > opts.patience) {
      const double old = h[h.size() - 1 - opts.patience];
      if (std::abs(old - m) <= opts.rel_tol * std::max(std::abs(m), 1e-12) && gn < opts.grad_tol) break;
      if (std::abs(old - m) <= 0.1 * opts.rel_tol * std::max(std::abs(m), 1e-12)) break;
    }
  }
  rep.c_estimate = detail::path_max(space, path.nodes, &arg);
  rep.argmax_index = arg;
  rep.argmax = path.nodes[arg];
  {
    const auto g = space.evaluate(rep.argmax).second;
    rep.grad_norm = std::sqrt(std::max(0.0, space.inner(rep.argmax, g, g)));
  }
  if (opts.refine && rep.grad_norm >= opts.grad_tol && arg > 0 && arg + 1 < path.nodes.size()) {
    auto tangent = space.difference(path.nodes[arg - 1], path.nodes[arg + 1]);
    auto sad = refine_saddle(space, rep.argmax, tangent, opts.saddle);
    if (sad.grad_norm < rep.grad_norm) {
      rep.argmax = sad.point;
      rep.grad_norm = sad.grad_norm;
      rep.c_estimate = std::max(rep.c_estimate, sad.value);
    }
    rep.saddle = std::move(sad);
  }
  rep.min_grad_norm_at_max = std::min(rep.min_grad_norm_at_max, rep.grad_norm);
  const bool escaping = opts.escape_metric && metric_of(rep.argmax) > opts.escape_threshold;
  if (escaping && rep.min_grad_norm_at_max < opts.escape_grad_tol) {
    rep.ps_flag = PSFlag::PSEscape;
  } else if (!escaping && rep.grad_norm < opts.grad_tol) {
    rep.ps_flag = PSFlag::CandidateFound;
  } else {
    rep.ps_flag = PSFlag::Inconclusive;
  }
  rep.path = std::move(path);
  return rep;
}

// ---------------------------------------------------------------------------
// κ-sweep.

template <class P>
struct SweepRow {
  double kappa = 0.0;
  double c_estimate = 0.0;
  P argmax;
  double grad_norm = 0.0;
  PSFlag ps_flag = PSFlag::Inconclusive;
};

template <class P>
struct SweepResult {
  std::vector<SweepRow<P>> rows;  // ascending κ
  bool monotone = true;
  double max_monotonicity_defect = 0.0;
  std::size_t selected = 0;
  double selected_quotient = 0.0;
  /// True when some forward quotient was within the configured bound.
  bool selection_within_bound = false;
  std::optional<MinimaxReport<P>> refined;
  std::vector<MinimaxPath<P>> paths;  // per row, for warm starts and snapshots
};

struct SweepOptions {
  double M = 50.0;
  double monotone_tol = 1e-6;
  bool refine_selected = true;
};

/// `space_at(κ)` builds the objective, `path_at(κ, warm)` the initial path
/// (warm is the deformed path from the next larger κ, if any) and
/// `options_at(κ)` the mountain-pass options. The grid is processed from
/// the top down so that each path starts below the level of its neighbour.
template <class SpaceFactory, class PathFactory, class OptionsFactory>
auto struwe_sweep(SpaceFactory&& space_at, PathFactory&& path_at, OptionsFactory&& options_at,
                  std::vector<double> kappas, const SweepOptions& opts = {}) {
  using Space = std::decay_t<decltype(space_at(0.0))>;
  static_assert(MinimaxSpace<Space>);
  using P = typename Space::point_type;
  if (kappas.size() < 2) throw Error(ErrorCode::BadParameters, "sweep needs at least two grid points");
  std::sort(kappas.begin(), kappas.end());
  SweepResult<P> out;
  out.rows.resize(kappas.size());
  out.paths.resize(kappas.size());
  std::optional<MinimaxPath<P>> warm;
  for (std::size_t j = kappas.size(); j-- > 0;) {
    const double k = kappas[j];
    const auto space = space_at(k);
    auto path = path_at(k, warm);
    auto opt = options_at(k, false);
    auto rep = mountain_pass(space, std::move(path), opt);
    out.rows[j] = {k, rep.c_estimate, rep.argmax, rep.grad_norm, rep.ps_flag};
    out.paths[j] = rep.path;
    warm = rep.path;
  }
  for (std::size_t j = 0; j + 1 < out.rows.size(); ++j) {
    const double defect = out.rows[j].c_estimate - out.rows[j + 1].c_estimate;
    out.max_monotonicity_defect = std::max(out.max_monotonicity_defect, defect);
    if (defect > opts.monotone_tol) out.monotone = false;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < out.rows.size(); ++j) {
    const double q = (out.rows[j + 1].c_estimate - out.rows[j].c_estimate) / (out.rows[j + 1].kappa - out.rows[j].kappa);
    if (q < best) {
      best = q;
      out.selected = j;
    }
  }
  out.selected_quotient = best;
  out.selection_within_bound = best <= opts.M;
  if (opts.refine_selected) {
    const double k = out.rows[out.selected].kappa;
    const auto space = space_at(k);
    auto opt = options_at(k, true);
    // Period-type cap from the difference quotient.
    opt.escape_threshold = std::min(opt.escape_threshold, std::max(best, 0.0) + 2.0);
    out.refined = mountain_pass(space, out.paths[out.selected], opt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-Lyapunov pseudo-gradient flow.

enum class TwoLyapunovOutcome { CandidateFound, PeriodBoundCertified, Inert, Violation };

inline std::string_view to_string(TwoLyapunovOutcome o) {
  switch (o) {
    case TwoLyapunovOutcome::CandidateFound: return "CandidateFound";
    case TwoLyapunovOutcome::PeriodBoundCertified: return "PeriodBoundCertified";
    case TwoLyapunovOutcome::Inert: return "Inert";
    case TwoLyapunovOutcome::Violation: return "Violation";
  }
  return "Unknown";
}

struct TwoLyapunovOptions {
  double kappa_bar = 0.0;
  double kappa_star = 0.0;
  double T_star = 1.0;
  /// Upper edge of A in S_κ̄.
  double a = 1.0;
  /// Trap level for S_κ*.
  double d = 1.0;
  /// ρ rises from 0 at S_κ̄ = 0 to 1 at S_κ̄ = rho_level.
  double rho_level = 1e-3;
  double chi_margin = 0.1;
  int max_iters = 2000;
  double grad_tol = 1e-6;
  double max_step = 1.0;
  double initial_step = 0.1;
  double armijo_c = 1e-4;
  double monotone_tol = 1e-10;
};

struct TwoLyapunovSample {
  int iter = 0;
  double s_bar = 0.0;
  double s_star = 0.0;
  double T = 0.0;
  double grad_norm = 0.0;
  bool in_A = false;
  bool in_trap = false;
};

template <class P>
struct TwoLyapunovResult {
  TwoLyapunovOutcome outcome = TwoLyapunovOutcome::Inert;
  P final_point;
  std::vector<TwoLyapunovSample> trace;
  int monotonicity_violations = 0;
  double max_star_increase_in_A = 0.0;
  double max_T_in_trap = 0.0;
  double period_bound = 0.0;
  bool period_bound_holds = true;
  std::string note;
};

/// Flows one seed along W = −ρ(S̄)(ḡ + χ·(‖ḡ‖/‖g*‖)g*)/√(‖·‖²+1); `period`
/// reads T off a point.
template <MinimaxSpace S>
TwoLyapunovResult<typename S::point_type> two_lyapunov_flow(const S& bar, const S& star,
                                                            const std::function<double(const typename S::point_type&)>& period,
                                                            typename S::point_type seed, const TwoLyapunovOptions& opts) {
  using P = typename S::point_type;
  if (!(opts.kappa_star > opts.kappa_bar)) throw Error(ErrorCode::BadParameters, "need kappa_star > kappa_bar");
  if (!(opts.T_star > 0.0)) throw Error(ErrorCode::BadParameters, "T_star must be positive");
  TwoLyapunovResult<P> res;
  res.period_bound = opts.d / (opts.kappa_star - opts.kappa_bar) + 1.0;
  P p = std::move(seed);
  auto in_A = [&](double sb, double t) { return t > opts.T_star && sb > 0.0 && sb < opts.a; };
  auto chi = [&](double sb, double t) {
    const double ct = smooth_ramp((t - (1.0 - opts.chi_margin) * opts.T_star) / (opts.chi_margin * opts.T_star));
    const double cs = sb <= opts.a ? 1.0 : smooth_ramp(((1.0 + opts.chi_margin) * opts.a - sb) / (opts.chi_margin * opts.a));
    return ct * cs;
  };
  double h = opts.initial_step;
  bool entered_trap = false;
  for (int it = 0;; ++it) {
    auto [sb, gb] = bar.evaluate(p);
    auto [ss, gs] = star.evaluate(p);
    const double t = period(p);
    const double nb = std::sqrt(std::max(0.0, bar.inner(p, gb, gb)));
    const double ns = std::sqrt(std::max(0.0, star.inner(p, gs, gs)));
    const bool a_now = in_A(sb, t);
    const bool trap_now = sb > 0.0 && ss < opts.d;
    entered_trap = entered_trap || trap_now;
    res.trace.push_back({it, sb, ss, t, nb, a_now, trap_now});
    if (trap_now) res.max_T_in_trap = std::max(res.max_T_in_trap, t);
    res.final_point = p;
    if (sb <= 0.0) {
      res.outcome = it == 0 ? TwoLyapunovOutcome::Inert : TwoLyapunovOutcome::PeriodBoundCertified;
      res.note = "reached {S_bar <= 0}, where the field vanishes";
      break;
    }
    if (nb < opts.grad_tol) {
      res.outcome = TwoLyapunovOutcome::CandidateFound;
      res.note = "gradient below tolerance";
      break;
    }
    if (it >= opts.max_iters) {
      res.outcome = TwoLyapunovOutcome::PeriodBoundCertified;
      res.note = "iteration cap";
      break;
    }
    const double rho = smooth_ramp(sb / opts.rho_level);
    const double c = chi(sb, t);
    auto dir = bar.combine(1.0, gb, ns > 0.0 ? c * nb / ns : 0.0, gs);
    const double nd = std::sqrt(std::max(0.0, bar.inner(p, dir, dir)));
    const double scale = rho / std::sqrt(nd * nd + 1.0);
    const double slope = -scale * bar.inner(p, gb, dir);
    if (scale == 0.0 || !(slope < 0.0)) {
      res.outcome = TwoLyapunovOutcome::Violation;
      res.note = "pseudo-gradient is not a descent direction";
      break;
    }
    h = std::min(opts.max_step, 2.0 * h);
    bool accepted = false;
    while (h > 1e-16) {
      auto trial = bar.step(p, dir, -scale * h);
      if (trial) {
        const double sbt = bar.value(*trial);
        const double sst = star.value(*trial);
        const bool ok_bar = sbt <= sb + opts.armijo_c * h * slope;
        const bool ok_star = !a_now || sst <= ss + opts.monotone_tol;
        const bool ok_trap = !trap_now || sbt <= 0.0 || sst < opts.d;
        if (ok_bar && ok_star && ok_trap) {
          p = *std::move(trial);
          accepted = true;
          break;
        }
      }
      h *= 0.5;
    }
    if (!accepted) {
      res.outcome = TwoLyapunovOutcome::CandidateFound;
      res.note = "line search exhausted; stationary to working precision";
      break;
    }
  }
  // Post-hoc checks on the recorded trace.
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    if (res.trace[i - 1].in_A) {
      const double inc = res.trace[i].s_star - res.trace[i - 1].s_star;
      res.max_star_increase_in_A = std::max(res.max_star_increase_in_A, inc);
      if (inc > opts.monotone_tol) ++res.monotonicity_violations;
    }
  }
  res.period_bound_holds = res.max_T_in_trap <= res.period_bound;
  if (res.monotonicity_violations > 0 || !res.period_bound_holds) {
    res.outcome = TwoLyapunovOutcome::Violation;
    res.note = "Lyapunov property violated along the trajectory";
  }
  return res;
}

}  // namespace perorb

#endif  // PERORB_MINIMAX_HPP
