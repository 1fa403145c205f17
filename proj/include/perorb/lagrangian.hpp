#ifndef PERORB_LAGRANGIAN_HPP
#define PERORB_LAGRANGIAN_HPP

// Electromagnetic Tonelli Lagrangians on the flat torus,
//   L(x, v) = ½|v|² + θ(x)[v] − V(x),
// with θ and V given as trigonometric series.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "perorb/error.hpp"
#include "perorb/geometry.hpp"
#include "perorb/trig_series.hpp"

namespace perorb {

using Vec = std::array<double, kMaxDim>;

class TonelliModel {
 public:
  TonelliModel() = default;

  /// `theta` is either empty (no magnetic term) or has one series per axis.
  TonelliModel(int dim, std::vector<TrigSeries> theta, TrigSeries potential)
      : dim_(dim), theta_(std::move(theta)), potential_(std::move(potential)) {
    if (dim < 1 || dim > kMaxDim) throw Error(ErrorCode::InvalidModel, "dimension out of range", "n");
    if (!theta_.empty() && static_cast<int>(theta_.size()) != dim) {
      throw Error(ErrorCode::InvalidModel, "theta needs one component per axis", "theta");
    }
    for (const auto& t : theta_) {
      if (t.dim() != dim) throw Error(ErrorCode::InvalidModel, "theta component dimension", "theta");
    }
    if (potential_.dim() != dim) throw Error(ErrorCode::InvalidModel, "potential dimension", "V");
    magnetic_ = std::any_of(theta_.begin(), theta_.end(), [](const TrigSeries& s) { return !s.is_zero(); });
  }

  static TonelliModel kinetic(int dim) { return TonelliModel(dim, {}, TrigSeries(dim)); }

  int dim() const { return dim_; }
  const std::vector<TrigSeries>& theta() const { return theta_; }
  const TrigSeries& potential() const { return potential_; }
  bool has_magnetic_term() const { return magnetic_; }

  double potential_at(std::span<const double> x) const { return potential_.value(x); }
  double potential_and_gradient(std::span<const double> x, std::span<double> grad) const {
    return potential_.value_and_gradient(x, grad);
  }

  void theta_at(std::span<const double> x, std::span<double> out) const {
    for (int j = 0; j < dim_; ++j) out[j] = magnetic_ ? theta_[j].value(x) : 0.0;
  }

  /// Values θ_j and Jacobian jac[j*n + i] = ∂_i θ_j.
  void theta_and_jacobian(std::span<const double> x, std::span<double> val,
                          std::span<double> jac) const {
    for (int j = 0; j < dim_; ++j) {
      if (!magnetic_) {
        val[j] = 0.0;
        for (int i = 0; i < dim_; ++i) jac[j * dim_ + i] = 0.0;
        continue;
      }
      val[j] = theta_[j].value_and_gradient(x, jac.subspan(static_cast<std::size_t>(j) * dim_, dim_));
    }
  }

 private:
  int dim_ = 1;
  std::vector<TrigSeries> theta_;
  TrigSeries potential_{1};
  bool magnetic_ = false;
};

inline double dot(std::span<const double> a, std::span<const double> b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double eval_L(const TonelliModel& m, std::span<const double> x, std::span<const double> v) {
  Vec th{};
  m.theta_at(x, th);
  const int n = m.dim();
  return 0.5 * dot(v, v, n) + dot(th, v, n) - m.potential_at(x);
}

/// d_v L(x, v) = v + θ(x).
inline Vec fiber_derivative(const TonelliModel& m, std::span<const double> x,
                            std::span<const double> v) {
  Vec p{};
  m.theta_at(x, p);
  for (int i = 0; i < m.dim(); ++i) p[i] += v[i];
  return p;
}

/// Closed form ½|v|² + V(x).
inline double eval_E(const TonelliModel& m, std::span<const double> x, std::span<const double> v) {
  return 0.5 * dot(v, v, m.dim()) + m.potential_at(x);
}

/// Energy through its definition d_v L[v] − L.
inline double eval_E_from_definition(const TonelliModel& m, std::span<const double> x,
                                     std::span<const double> v) {
  const Vec p = fiber_derivative(m, x, v);
  return dot(p, v, m.dim()) - eval_L(m, x, v);
}

/// Legendre dual ½|p − θ(x)|² + V(x).
inline double legendre_H(const TonelliModel& m, std::span<const double> x,
                         std::span<const double> p) {
  Vec th{};
  m.theta_at(x, th);
  double s = 0.0;
  for (int i = 0; i < m.dim(); ++i) s += (p[i] - th[i]) * (p[i] - th[i]);
  return 0.5 * s + m.potential_at(x);
}

/// Inverse of the fiber derivative: the v with d_v L(x, v) = p.
inline Vec legendre_inverse(const TonelliModel& m, std::span<const double> x,
                            std::span<const double> p) {
  Vec v{};
  m.theta_at(x, v);
  for (int i = 0; i < m.dim(); ++i) v[i] = p[i] - v[i];
  return v;
}

/// Antisymmetric Lorentz matrix, B[j*n + i] = ∂_j θ_i − ∂_i θ_j.
inline std::array<double, kMaxDim * kMaxDim> magnetic_matrix(const TonelliModel& m,
                                                             std::span<const double> x) {
  const int n = m.dim();
  Vec val{};
  std::array<double, kMaxDim * kMaxDim> jac{};
  m.theta_and_jacobian(x, val, jac);
  std::array<double, kMaxDim * kMaxDim> b{};
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) b[j * n + i] = jac[i * n + j] - jac[j * n + i];
  }
  return b;
}

/// Acceleration solving the Euler-Lagrange equation: a = B(x) v − ∇V(x).
inline Vec el_rhs(const TonelliModel& m, std::span<const double> x, std::span<const double> v) {
  const int n = m.dim();
  Vec grad{};
  m.potential_and_gradient(x, grad);
  Vec a{};
  if (m.has_magnetic_term()) {
    const auto b = magnetic_matrix(m, x);
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += b[j * n + i] * v[i];
      a[j] = s;
    }
  }
  for (int j = 0; j < n; ++j) a[j] -= grad[j];
  return a;
}

/// Operator norm of the antisymmetric matrix B(x) (power iteration on BᵀB).
inline double magnetic_operator_norm(const TonelliModel& m, std::span<const double> x) {
  const int n = m.dim();
  const auto b = magnetic_matrix(m, x);
  if (n == 2) return std::abs(b[1]);
  double frob = 0.0;
  for (int i = 0; i < n * n; ++i) frob += b[i] * b[i];
  if (frob == 0.0) return 0.0;
  Vec u{};
  for (int i = 0; i < n; ++i) u[i] = 1.0 + 0.1 * i;
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vec w{};
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) w[j] += b[j * n + i] * u[i];
    }
    Vec z{};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) z[i] += b[j * n + i] * w[j];
    }
    double nz = std::sqrt(dot(z, z, n));
    if (nz == 0.0) return 0.0;
    const double next = std::sqrt(nz / std::sqrt(dot(u, u, n)));
    for (int i = 0; i < n; ++i) u[i] = z[i] / nz;
    if (std::abs(next - lambda) < 1e-15 * next) return next;
    lambda = next;
  }
  return lambda;
}

// ---------------------------------------------------------------------------
// Grid maxima with local refinement.

namespace detail {

inline std::size_t grid_size(int dim, int res) {
  double total = std::pow(static_cast<double>(res), dim);
  if (total > 4.0e6) throw Error(ErrorCode::BadParameters, "grid too large for this dimension");
  return static_cast<std::size_t>(total);
}

inline void grid_point(std::size_t idx, int dim, int res, std::span<double> x) {
  for (int a = 0; a < dim; ++a) {
    x[a] = static_cast<double>(idx % res) / res;
    idx /= res;
  }
}

/// Gradient ascent with backtracking from `x`.
inline double ascend(const std::function<double(std::span<const double>, std::span<double>)>& fg,
                     int dim, std::span<double> x) {
  Vec g{};
  double f = fg(x, g);
  double h = 1e-2;
  for (int it = 0; it < 500; ++it) {
    const double gn = std::sqrt(dot(g, g, dim));
    if (gn < 1e-14) break;
    bool moved = false;
    while (h > 1e-16) {
      Vec y{};
      for (int a = 0; a < dim; ++a) y[a] = x[a] + h * g[a];
      Vec gy{};
      const double fy = fg(y, gy);
      if (fy > f) {
        for (int a = 0; a < dim; ++a) x[a] = y[a];
        f = fy;
        g = gy;
        h *= 2.0;
        moved = true;
        break;
      }
      h *= 0.5;
    }
    if (!moved) break;
  }
  return f;
}

}  // namespace detail

struct GridMax {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<double> argmax;
};

/// Grid maximum of a smooth function, refined by local ascent from the
/// best few grid points.
inline GridMax refined_max(const std::function<double(std::span<const double>, std::span<double>)>& fg,
                           int dim, int res, int starts = 4) {
  const std::size_t total = detail::grid_size(dim, res);
  std::vector<std::pair<double, std::size_t>> best;
  Vec x{};
  Vec g{};
  for (std::size_t idx = 0; idx < total; ++idx) {
    detail::grid_point(idx, dim, res, x);
    const double f = fg(x, g);
    best.emplace_back(f, idx);
  }
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(starts), best.size());
  std::partial_sort(best.begin(), best.begin() + keep, best.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  GridMax out;
  for (std::size_t s = 0; s < keep; ++s) {
    detail::grid_point(best[s].second, dim, res, x);
    const double f = std::max(best[s].first, detail::ascend(fg, dim, x));
    if (f > out.value) {
      out.value = f;
      out.argmax.assign(x.begin(), x.begin() + dim);
    }
  }
  return out;
}

inline GridMax potential_max(const TonelliModel& m, int res) {
  return refined_max([&](std::span<const double> x, std::span<double> g) { return m.potential_and_gradient(x, g); },
                     m.dim(), res);
}

inline GridMax potential_min(const TonelliModel& m, int res) {
  auto r = refined_max(
      [&](std::span<const double> x, std::span<double> g) {
        const double v = m.potential_and_gradient(x, g);
        for (int a = 0; a < m.dim(); ++a) g[a] = -g[a];
        return -v;
      },
      m.dim(), res);
  r.value = -r.value;
  return r;
}

/// max_x |θ(x)|².
inline double theta_sq_max(const TonelliModel& m, int res) {
  if (!m.has_magnetic_term()) return 0.0;
  const int n = m.dim();
  return refined_max(
             [&](std::span<const double> x, std::span<double> g) {
               Vec val{};
               std::array<double, kMaxDim * kMaxDim> jac{};
               m.theta_and_jacobian(x, val, jac);
               for (int i = 0; i < n; ++i) {
                 g[i] = 0.0;
                 for (int j = 0; j < n; ++j) g[i] += 2.0 * val[j] * jac[j * n + i];
               }
               return dot(val, val, n);
             },
             n, res)
      .value;
}

/// Growth constants for L and E and the isoperimetric constant of θ.
struct BoundsEstimate {
  double L0 = 0.5;
  double L1 = 0.0;
  double L2 = 0.5;
  double L3 = 0.0;
  double E0 = 0.5;
  double E1 = 0.0;
  double Theta = 0.0;
  // Diagnostics: E ≥ C0·L − C1 derived from the constants above.
  double C0 = 1.0;
  double C1 = 0.0;
  double max_V = 0.0;
  double min_V = 0.0;
  double max_theta_sq = 0.0;
  int resolution = 0;
};

/// Closed-form constants for the electromagnetic form. With θ ≠ 0 the
/// lower bound completes the square: |θ||v| ≤ ¼|v|² + |θ|², giving
/// L0 = 1/4 and L1 = max V + max|θ|²; the upper bound uses
/// |θ||v| ≤ ½|v|² + ½|θ|².
inline BoundsEstimate estimate_bounds(const TonelliModel& m, int resolution) {
  if (resolution < 32) throw Error(ErrorCode::BadParameters, "resolution must be at least 32");
  BoundsEstimate b;
  b.resolution = resolution;
  b.max_V = potential_max(m, resolution).value;
  b.min_V = potential_min(m, resolution).value;
  b.max_theta_sq = theta_sq_max(m, resolution);
  if (m.has_magnetic_term()) {
    b.L0 = 0.25;
    b.L1 = b.max_V + b.max_theta_sq;
    b.L2 = 1.0;
    b.L3 = 0.5 * b.max_theta_sq - b.min_V;
  } else {
    b.L0 = 0.5;
    b.L1 = b.max_V;
    b.L2 = 0.5;
    b.L3 = -b.min_V;
  }
  b.E0 = 0.5;
  b.E1 = -b.min_V;
  b.C0 = b.E0 / b.L2;
  b.C1 = b.E1 + b.C0 * b.L3;

  double dtheta_max = 0.0;
  if (m.has_magnetic_term()) {
    // The norm is only piecewise smooth; a difference-quotient ascent from
    // the best grid points is enough to polish it.
    const int n = m.dim();
    dtheta_max = refined_max(
                     [&](std::span<const double> x, std::span<double> g) {
                       const double h = 1e-6;
                       Vec y{};
                       for (int a = 0; a < n; ++a) y[a] = x[a];
                       for (int a = 0; a < n; ++a) {
                         y[a] = x[a] + h;
                         const double fp = magnetic_operator_norm(m, y);
                         y[a] = x[a] - h;
                         const double fm = magnetic_operator_norm(m, y);
                         y[a] = x[a];
                         g[a] = (fp - fm) / (2.0 * h);
                       }
                       return magnetic_operator_norm(m, x);
                     },
                     n, resolution)
                     .value;
  }
  b.Theta = 0.25 * dtheta_max;
  return b;
}

}  // namespace perorb

#endif  // PERORB_LAGRANGIAN_HPP
