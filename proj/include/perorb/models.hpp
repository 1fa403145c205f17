#ifndef PERORB_MODELS_HPP
#define PERORB_MODELS_HPP

// Reference models on T² used by the self-test and the test suite.

#include <numbers>
#include <string>
#include <vector>

#include "perorb/lagrangian.hpp"

namespace perorb::models {

inline TonelliModel pure_kinetic(int dim = 2) { return TonelliModel::kinetic(dim); }

/// V(x) = amp·cos(2π x₁), θ = 0.
inline TonelliModel cosine_potential(double amp = 0.3) {
  TrigSeries v(2, {FourierTerm{{1, 0}, amp, 0.0}});
  return TonelliModel(2, {}, std::move(v));
}

/// V(x) = a·cos(2π x₁) + b·cos(2π x₂), θ = 0.
inline TonelliModel separable_potential(double a, double b) {
  TrigSeries v(2, {FourierTerm{{1, 0}, a, 0.0}, FourierTerm{{0, 1}, b, 0.0}});
  return TonelliModel(2, {}, std::move(v));
}

/// θ = (0, sin(2π x₁)/(2π)), V = 0, so dθ = cos(2π x₁) dx₁∧dx₂.
inline TonelliModel magnetic_strip() {
  std::vector<TrigSeries> theta{TrigSeries(2),
                                TrigSeries(2, {FourierTerm{{1, 0}, 0.0, 0.5 / std::numbers::pi}})};
  return TonelliModel(2, std::move(theta), TrigSeries(2));
}

/// θ = d(0.1 sin(2π x₁)) = (0.2π cos(2π x₁), 0) with the given potential.
inline TonelliModel exact_theta(TrigSeries potential) {
  std::vector<TrigSeries> theta{TrigSeries(2, {FourierTerm{{1, 0}, 0.2 * std::numbers::pi, 0.0}}),
                                TrigSeries(2)};
  return TonelliModel(2, std::move(theta), std::move(potential));
}

struct NamedModel {
  std::string name;
  TonelliModel model;
};

/// The three models every suite-level property runs on.
inline std::vector<NamedModel> suite() {
  return {{"pure_kinetic", pure_kinetic()},
          {"cosine_potential", cosine_potential()},
          {"magnetic_strip", magnetic_strip()}};
}

}  // namespace perorb::models

#endif  // PERORB_MODELS_HPP
