#ifndef PERORB_GEOMETRY_HPP
#define PERORB_GEOMETRY_HPP

// Closed loops on the flat torus R^n / Z^n, stored as a continuous lift to
// the universal cover together with the winding vector, and the discrete
// W^{1,2} x R metric on (loop, period) pairs.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perorb/circulant.hpp"
#include "perorb/error.hpp"

namespace perorb {

inline constexpr int kMaxDim = 8;
inline constexpr double kMaxGap = 0.5;

/// Reduce a displacement to its nearest lattice representative.
inline double nearest_rep(double d) { return d - std::round(d); }

class DiscreteLoop {
 public:
  DiscreteLoop() = default;

  /// Wraps an already-continuous lift. Checks every invariant and reports
  /// the first violation; returns nullopt instead of throwing when
  /// `message` is provided.
  static std::optional<DiscreteLoop> try_from_lift(int dim, std::vector<double> lift,
                                                   std::vector<int> winding, double period,
                                                   std::string* message = nullptr) {
    auto fail = [&](const std::string& m) -> std::optional<DiscreteLoop> {
      if (message) *message = m;
      return std::nullopt;
    };
    if (dim < 1 || dim > kMaxDim) return fail("dimension out of range");
    if (lift.empty() || lift.size() % static_cast<std::size_t>(dim) != 0) {
      return fail("lift size is not a multiple of the dimension");
    }
    if (winding.size() != static_cast<std::size_t>(dim)) return fail("winding has wrong length");
    if (!(period > 0.0) || !std::isfinite(period)) return fail("period must be positive");
    DiscreteLoop loop;
    loop.dim_ = dim;
    loop.q_ = std::move(lift);
    loop.k_ = std::move(winding);
    loop.period_ = period;
    const int n = loop.size();
    for (int i = 0; i < n; ++i) {
      double g2 = 0.0;
      for (int a = 0; a < dim; ++a) {
        const double d = loop.lifted(i + 1, a) - loop.lifted(i, a);
        if (!std::isfinite(d)) return fail("non-finite sample");
        g2 += d * d;
      }
      if (!(std::sqrt(g2) < kMaxGap)) {
        return fail("gap " + std::to_string(std::sqrt(g2)) + " at segment " + std::to_string(i) +
                    " is not below 1/2");
      }
    }
    return loop;
  }

  static DiscreteLoop from_lift(int dim, std::vector<double> lift, std::vector<int> winding,
                                double period) {
    if (!(period > 0.0)) throw Error(ErrorCode::NonPositivePeriod, "period must be positive");
    std::string message;
    auto loop = try_from_lift(dim, std::move(lift), std::move(winding), period, &message);
    if (!loop) {
      const bool gap = message.rfind("gap", 0) == 0;
      throw Error(gap ? ErrorCode::GapTooLarge : ErrorCode::DimensionMismatch, message);
    }
    return *std::move(loop);
  }

  int dim() const { return dim_; }
  int size() const { return dim_ == 0 ? 0 : static_cast<int>(q_.size()) / dim_; }
  double period() const { return period_; }
  const std::vector<double>& lift() const { return q_; }
  const std::vector<int>& winding() const { return k_; }

  std::span<const double> point(int i) const {
    return {q_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }
  double coord(int i, int a) const { return q_[static_cast<std::size_t>(i) * dim_ + a]; }

  /// Lift coordinate for an arbitrary integer index: q_{i+N} = q_i + k.
  double lifted(int i, int a) const {
    const int n = size();
    const int wrap = (i >= 0) ? i / n : -((-i + n - 1) / n);
    const int j = i - wrap * n;
    return coord(j, a) + static_cast<double>(wrap) * k_[a];
  }

  DiscreteLoop with_period(double period) const {
    if (!(period > 0.0)) throw Error(ErrorCode::NonPositivePeriod, "period must be positive");
    DiscreteLoop out = *this;
    out.period_ = period;
    return out;
  }

  bool is_contractible() const {
    return std::all_of(k_.begin(), k_.end(), [](int v) { return v == 0; });
  }

 private:
  int dim_ = 0;
  std::vector<double> q_;
  std::vector<int> k_;
  double period_ = 1.0;
};

/// Builds the continuous lift of N torus samples (row-major, any lattice
/// representative) and infers the winding vector.
inline DiscreteLoop make_loop(std::span<const double> samples, int dim, double period) {
  if (!(period > 0.0)) throw Error(ErrorCode::NonPositivePeriod, "period must be positive");
  if (dim < 1 || dim > kMaxDim || samples.size() % static_cast<std::size_t>(dim) != 0) {
    throw Error(ErrorCode::DimensionMismatch, "samples do not match dimension");
  }
  const int n = static_cast<int>(samples.size()) / dim;
  if (n < 8) throw Error(ErrorCode::DimensionMismatch, "need at least 8 samples");
  std::vector<double> lift(samples.size());
  std::copy_n(samples.begin(), dim, lift.begin());
  auto check_gap = [](double g2, int seg) {
    if (!(std::sqrt(g2) < kMaxGap)) {
      throw Error(ErrorCode::GapTooLarge,
                  "gap at segment " + std::to_string(seg) + " is not below 1/2");
    }
  };
  for (int i = 1; i < n; ++i) {
    double g2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      const std::size_t idx = static_cast<std::size_t>(i) * dim + a;
      const double d = nearest_rep(samples[idx] - samples[idx - dim]);
      lift[idx] = lift[idx - dim] + d;
      g2 += d * d;
    }
    check_gap(g2, i - 1);
  }
  std::vector<int> k(dim);
  double g2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    const std::size_t last = static_cast<std::size_t>(n - 1) * dim + a;
    const double d = nearest_rep(samples[a] - samples[last]);
    g2 += d * d;
    k[a] = static_cast<int>(std::lround(lift[last] + d - lift[a]));
  }
  check_gap(g2, n - 1);
  return DiscreteLoop::from_lift(dim, std::move(lift), std::move(k), period);
}

inline DiscreteLoop make_loop(const std::vector<std::vector<double>>& samples, double period) {
  if (samples.empty()) throw Error(ErrorCode::DimensionMismatch, "no samples");
  const int dim = static_cast<int>(samples.front().size());
  std::vector<double> flat;
  flat.reserve(samples.size() * static_cast<std::size_t>(dim));
  for (const auto& p : samples) {
    if (static_cast<int>(p.size()) != dim) {
      throw Error(ErrorCode::DimensionMismatch, "ragged sample array");
    }
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return make_loop(flat, dim, period);
}

inline DiscreteLoop constant_loop(std::span<const double> x, int samples, double period) {
  const int dim = static_cast<int>(x.size());
  std::vector<double> q;
  q.reserve(static_cast<std::size_t>(dim) * samples);
  for (int i = 0; i < samples; ++i) q.insert(q.end(), x.begin(), x.end());
  return DiscreteLoop::from_lift(dim, std::move(q), std::vector<int>(dim, 0), period);
}

/// Equispaced straight lift s ↦ start + k s.
inline DiscreteLoop straight_loop(std::vector<int> k, int samples, double period,
                                  std::span<const double> start = {}) {
  const int dim = static_cast<int>(k.size());
  std::vector<double> q(static_cast<std::size_t>(dim) * samples);
  for (int i = 0; i < samples; ++i) {
    for (int a = 0; a < dim; ++a) {
      const double x0 = start.empty() ? 0.0 : start[a];
      q[static_cast<std::size_t>(i) * dim + a] = x0 + k[a] * static_cast<double>(i) / samples;
    }
  }
  return DiscreteLoop::from_lift(dim, std::move(q), std::move(k), period);
}

/// Piecewise-linear length of the lift (independent of the period).
inline double loop_length(const DiscreteLoop& loop) {
  const int n = loop.size();
  const int dim = loop.dim();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double g2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double d = loop.lifted(i + 1, a) - loop.lifted(i, a);
      g2 += d * d;
    }
    total += std::sqrt(g2);
  }
  return total;
}

inline double winding_norm(const DiscreteLoop& loop) {
  double s = 0.0;
  for (int v : loop.winding()) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

// Tangent vectors and covectors share a layout: N periodic samples of R^n
// plus one scalar slot for the period. Distinct tags keep them apart.
template <class Tag>
struct LoopField {
  int dim = 0;
  std::vector<double> xi;
  double tau = 0.0;

  LoopField() = default;
  LoopField(int d, int samples) : dim(d), xi(static_cast<std::size_t>(d) * samples, 0.0) {}
  LoopField(int d, std::vector<double> values, double t) : dim(d), xi(std::move(values)), tau(t) {}

  int size() const { return dim == 0 ? 0 : static_cast<int>(xi.size()) / dim; }
  double& at(int i, int a) { return xi[static_cast<std::size_t>(i) * dim + a]; }
  double at(int i, int a) const { return xi[static_cast<std::size_t>(i) * dim + a]; }

  LoopField& operator+=(const LoopField& o) {
    for (std::size_t i = 0; i < xi.size(); ++i) xi[i] += o.xi[i];
    tau += o.tau;
    return *this;
  }
  LoopField& operator*=(double s) {
    for (double& v : xi) v *= s;
    tau *= s;
    return *this;
  }
  friend LoopField operator*(double s, LoopField v) { return v *= s; }
  friend LoopField operator+(LoopField a, const LoopField& b) { return a += b; }
  friend LoopField operator-(LoopField a, const LoopField& b) {
    for (std::size_t i = 0; i < a.xi.size(); ++i) a.xi[i] -= b.xi[i];
    a.tau -= b.tau;
    return a;
  }

  double max_abs() const {
    double m = std::abs(tau);
    for (double v : xi) m = std::max(m, std::abs(v));
    return m;
  }
};

struct TangentTag {};
struct CovectorTag {};
using TangentVector = LoopField<TangentTag>;
/// Dual data, stored as a density: pairing with a tangent η is
/// (1/N) Σ c_i·η_i + c_τ η_τ.
using Covector = LoopField<CovectorTag>;

namespace detail {
template <class A, class B>
void check_shape(const DiscreteLoop& loop, const A& a, const B& b) {
  if (a.dim != loop.dim() || b.dim != loop.dim() || a.size() != loop.size() ||
      b.size() != loop.size()) {
    throw Error(ErrorCode::DimensionMismatch, "field does not match loop shape");
  }
}
}  // namespace detail

inline double pairing(const DiscreteLoop& loop, const Covector& c, const TangentVector& eta) {
  detail::check_shape(loop, c, eta);
  double s = 0.0;
  for (std::size_t i = 0; i < c.xi.size(); ++i) s += c.xi[i] * eta.xi[i];
  return s / loop.size() + c.tau * eta.tau;
}

/// (1/N) Σ [ξ_i·η_i + Dξ_i·Dη_i] + τ_a τ_b with D the forward difference
/// scaled by N.
inline double sobolev_inner(const DiscreteLoop& loop, const TangentVector& a,
                            const TangentVector& b) {
  detail::check_shape(loop, a, b);
  const int n = loop.size();
  const int dim = loop.dim();
  const double nn = n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n;
    for (int c = 0; c < dim; ++c) {
      const double da = nn * (a.at(ip, c) - a.at(i, c));
      const double db = nn * (b.at(ip, c) - b.at(i, c));
      s += a.at(i, c) * b.at(i, c) + da * db;
    }
  }
  return s / nn + a.tau * b.tau;
}

inline double sobolev_norm(const DiscreteLoop& loop, const TangentVector& a) {
  return std::sqrt(std::max(0.0, sobolev_inner(loop, a, a)));
}

/// Riesz map of the discrete metric: solves (Id - Delta_h) ξ = c per
/// coordinate, identity on the period slot.
inline TangentVector precondition(const DiscreteLoop& loop, const Covector& dual) {
  const int n = loop.size();
  const int dim = loop.dim();
  if (dual.dim != dim || dual.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "dual data does not match loop shape");
  }
  TangentVector out(dim, n);
  std::vector<double> column(n);
  for (int a = 0; a < dim; ++a) {
    for (int i = 0; i < n; ++i) column[i] = dual.at(i, a);
    const auto sol = helmholtz_solve(column);
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(sol[i])) throw Error(ErrorCode::SolveFailure, "non-finite solution");
      out.at(i, a) = sol[i];
    }
  }
  out.tau = dual.tau;
  return out;
}

/// Tangent pointing from `from` to `to` (difference of lifts and periods).
inline TangentVector loop_difference(const DiscreteLoop& from, const DiscreteLoop& to) {
  if (from.dim() != to.dim() || from.size() != to.size() || from.winding() != to.winding()) {
    throw Error(ErrorCode::DimensionMismatch, "loops are not in the same class/shape");
  }
  TangentVector d(from.dim(), from.size());
  for (std::size_t i = 0; i < d.xi.size(); ++i) d.xi[i] = to.lift()[i] - from.lift()[i];
  d.tau = to.period() - from.period();
  return d;
}

/// Moves the lift and period along `v`; the period is clamped at `floor`.
/// Returns nullopt when the result violates the lift invariants.
inline std::optional<DiscreteLoop> displace(const DiscreteLoop& loop, const TangentVector& v,
                                            double h, double period_floor) {
  std::vector<double> q = loop.lift();
  for (std::size_t i = 0; i < q.size(); ++i) q[i] += h * v.xi[i];
  const double period = std::max(period_floor, loop.period() + h * v.tau);
  return DiscreteLoop::try_from_lift(loop.dim(), std::move(q), loop.winding(), period);
}

/// Straight-line interpolation of lifts and periods between loops of the
/// same class.
inline DiscreteLoop interpolate_loops(const DiscreteLoop& a, const DiscreteLoop& b, double t) {
  if (a.dim() != b.dim() || a.size() != b.size() || a.winding() != b.winding()) {
    throw Error(ErrorCode::DimensionMismatch, "cannot interpolate loops of different shape");
  }
  std::vector<double> q(a.lift().size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = (1.0 - t) * a.lift()[i] + t * b.lift()[i];
  const double period = (1.0 - t) * a.period() + t * b.period();
  return DiscreteLoop::from_lift(a.dim(), std::move(q), a.winding(), period);
}

/// Same torus loop sampled at `factor` times as many points (exact
/// piecewise-linear subdivision).
inline DiscreteLoop subdivide(const DiscreteLoop& loop, int factor) {
  const int n = loop.size();
  const int dim = loop.dim();
  std::vector<double> q;
  q.reserve(static_cast<std::size_t>(n) * factor * dim);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < factor; ++s) {
      const double t = static_cast<double>(s) / factor;
      for (int a = 0; a < dim; ++a) {
        q.push_back((1.0 - t) * loop.lifted(i, a) + t * loop.lifted(i + 1, a));
      }
    }
  }
  return DiscreteLoop::from_lift(dim, std::move(q), loop.winding(), loop.period());
}

/// Resamples a loop at `samples` points uniformly in parameter by linear
/// interpolation of the lift.
inline DiscreteLoop resample(const DiscreteLoop& loop, int samples) {
  const int n = loop.size();
  const int dim = loop.dim();
  std::vector<double> q(static_cast<std::size_t>(samples) * dim);
  for (int j = 0; j < samples; ++j) {
    const double s = static_cast<double>(j) * n / samples;
    const int i = static_cast<int>(std::floor(s));
    const double t = s - i;
    for (int a = 0; a < dim; ++a) {
      q[static_cast<std::size_t>(j) * dim + a] =
          (1.0 - t) * loop.lifted(i, a) + t * loop.lifted(i + 1, a);
    }
  }
  return DiscreteLoop::from_lift(dim, std::move(q), loop.winding(), loop.period());
}

}  // namespace perorb

#endif  // PERORB_GEOMETRY_HPP
