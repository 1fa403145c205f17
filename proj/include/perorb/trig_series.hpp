#ifndef PERORB_TRIG_SERIES_HPP
#define PERORB_TRIG_SERIES_HPP

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "perorb/error.hpp"

namespace perorb {

/// One term  c·cos(2π m·x) + s·sin(2π m·x).
struct FourierTerm {
  std::vector<int> mode;
  double cos_coef = 0.0;
  double sin_coef = 0.0;
};

/// Finite trigonometric series on R^n / Z^n with exact derivatives.
class TrigSeries {
 public:
  TrigSeries() = default;
  explicit TrigSeries(int dim, std::vector<FourierTerm> terms = {}) : dim_(dim) {
    if (dim < 1) throw Error(ErrorCode::InvalidModel, "series dimension must be positive");
    for (auto& t : terms) add(std::move(t));
  }

  static TrigSeries constant(int dim, double c) {
    return TrigSeries(dim, {FourierTerm{std::vector<int>(dim, 0), c, 0.0}});
  }

  void add(FourierTerm term) {
    if (static_cast<int>(term.mode.size()) != dim_) {
      throw Error(ErrorCode::InvalidModel, "mode length does not match dimension");
    }
    terms_.push_back(std::move(term));
  }

  int dim() const { return dim_; }
  const std::vector<FourierTerm>& terms() const { return terms_; }
  bool is_zero() const {
    for (const auto& t : terms_) {
      if (t.cos_coef != 0.0 || t.sin_coef != 0.0) return false;
    }
    return true;
  }
  /// True when every term with nonzero coefficients has mode 0.
  bool is_constant() const {
    for (const auto& t : terms_) {
      if (t.cos_coef == 0.0 && t.sin_coef == 0.0) continue;
      for (int m : t.mode) {
        if (m != 0) return false;
      }
    }
    return true;
  }

  double value(std::span<const double> x) const {
    double v = 0.0;
    for (const auto& t : terms_) {
      const double ph = phase(t, x);
      v += t.cos_coef * std::cos(ph) + t.sin_coef * std::sin(ph);
    }
    return v;
  }

  /// Returns the value and writes the gradient into `grad` (size dim).
  double value_and_gradient(std::span<const double> x, std::span<double> grad) const {
    for (int a = 0; a < dim_; ++a) grad[a] = 0.0;
    double v = 0.0;
    for (const auto& t : terms_) {
      const double ph = phase(t, x);
      const double c = std::cos(ph);
      const double s = std::sin(ph);
      v += t.cos_coef * c + t.sin_coef * s;
      const double dph = 2.0 * std::numbers::pi * (t.sin_coef * c - t.cos_coef * s);
      for (int a = 0; a < dim_; ++a) grad[a] += dph * t.mode[a];
    }
    return v;
  }

  /// Row-major dim x dim Hessian.
  void hessian(std::span<const double> x, std::span<double> hess) const {
    for (int i = 0; i < dim_ * dim_; ++i) hess[i] = 0.0;
    const double w2 = 4.0 * std::numbers::pi * std::numbers::pi;
    for (const auto& t : terms_) {
      const double ph = phase(t, x);
      const double v = t.cos_coef * std::cos(ph) + t.sin_coef * std::sin(ph);
      for (int a = 0; a < dim_; ++a) {
        for (int b = 0; b < dim_; ++b) hess[a * dim_ + b] -= w2 * v * t.mode[a] * t.mode[b];
      }
    }
  }

  TrigSeries derivative(int axis) const {
    TrigSeries out(dim_);
    for (const auto& t : terms_) {
      const double w = 2.0 * std::numbers::pi * t.mode[axis];
      if (w == 0.0) continue;
      out.terms_.push_back(FourierTerm{t.mode, w * t.sin_coef, -w * t.cos_coef});
    }
    return out;
  }

  // Coefficient-sum bounds valid on the whole torus.
  double sup_bound() const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::hypot(t.cos_coef, t.sin_coef);
    return s;
  }
  double gradient_sup_bound() const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::hypot(t.cos_coef, t.sin_coef) * 2.0 * std::numbers::pi * mode_norm(t);
    return s;
  }
  double hessian_sup_bound() const {
    double s = 0.0;
    const double w2 = 4.0 * std::numbers::pi * std::numbers::pi;
    for (const auto& t : terms_) {
      const double m = mode_norm(t);
      s += std::hypot(t.cos_coef, t.sin_coef) * w2 * m * m;
    }
    return s;
  }

 private:
  double phase(const FourierTerm& t, std::span<const double> x) const {
    double p = 0.0;
    for (int a = 0; a < dim_; ++a) p += t.mode[a] * x[a];
    return 2.0 * std::numbers::pi * p;
  }
  static double mode_norm(const FourierTerm& t) {
    double s = 0.0;
    for (int m : t.mode) s += static_cast<double>(m) * m;
    return std::sqrt(s);
  }

  int dim_ = 1;
  std::vector<FourierTerm> terms_;
};

}  // namespace perorb

#endif  // PERORB_TRIG_SERIES_HPP
