#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "perorb/lagrangian.hpp"
#include "perorb/models.hpp"

using namespace perorb;

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec2(double a, double b) {
  Vec v{};
  v[0] = a;
  v[1] = b;
  return v;
}

// Brute-force sup over v of p[v] - L(x, v), one axis at a time (the
// electromagnetic form separates), grid search refined by a parabola.
double brute_force_H(const TonelliModel& m, const Vec& x, const Vec& p) {
  Vec v{};
  for (int a = 0; a < m.dim(); ++a) {
    auto f = [&](double t) {
      Vec w = v;
      w[a] = t;
      return dot(p, w, m.dim()) - eval_L(m, x, w);
    };
    double best = -1e300;
    double arg = 0.0;
    const double h = 1e-3;
    for (double t = -10.0; t <= 10.0; t += h) {
      const double val = f(t);
      if (val > best) {
        best = val;
        arg = t;
      }
    }
    const double fm = f(arg - h), f0 = f(arg), fp = f(arg + h);
    const double denom = fm - 2.0 * f0 + fp;
    v[a] = denom != 0.0 ? arg - 0.5 * h * (fp - fm) / denom : arg;
  }
  return dot(p, v, m.dim()) - eval_L(m, x, v);
}

TonelliModel random_model(std::mt19937_64& rng, int dim) {
  std::uniform_real_distribution<double> sym(-0.3, 0.3);
  std::uniform_int_distribution<int> mode(-2, 2);
  auto series = [&](int terms) {
    TrigSeries s(dim);
    for (int t = 0; t < terms; ++t) {
      std::vector<int> m(dim);
      for (int& v : m) v = mode(rng);
      s.add({m, sym(rng), sym(rng)});
    }
    return s;
  };
  std::vector<TrigSeries> theta;
  for (int j = 0; j < dim; ++j) theta.push_back(series(3));
  return TonelliModel(dim, std::move(theta), series(3));
}

}  // namespace

TEST(EvalL, Examples) {
  const auto kin = models::pure_kinetic();
  EXPECT_DOUBLE_EQ(eval_L(kin, vec2(0.1, 0.2), vec2(1, 0)), 0.5);
  const auto cosv = models::cosine_potential();
  EXPECT_DOUBLE_EQ(eval_L(cosv, vec2(0, 0), vec2(0, 0)), -0.3);
  const auto mag = models::magnetic_strip();
  EXPECT_NEAR(eval_L(mag, vec2(0.25, 0), vec2(0, 1)), 0.5 + 1.0 / (2.0 * kPi), 1e-15);
  EXPECT_NEAR(eval_L(mag, vec2(0.25, 0), vec2(0, 1)), 0.659155, 1e-6);
}

TEST(EvalE, ExamplesAndDefinitionCrossCheck) {
  const auto kin = models::pure_kinetic();
  EXPECT_DOUBLE_EQ(eval_E(kin, vec2(0, 0), vec2(1, 0)), 0.5);
  const auto cosv = models::cosine_potential();
  EXPECT_DOUBLE_EQ(eval_E(cosv, vec2(0, 0), vec2(0, 0)), 0.3);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const auto mag = models::magnetic_strip();
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = vec2(u(rng), u(rng));
    const Vec v = vec2(u(rng), u(rng));
    for (const auto& nm : models::suite()) {
      EXPECT_NEAR(eval_E(nm.model, x, v), eval_E_from_definition(nm.model, x, v), 1e-14);
    }
    EXPECT_EQ(eval_E(kin, x, v), eval_E(mag, x, v));
  }
  const auto rnd = random_model(rng, 3);
  for (int trial = 0; trial < 100; ++trial) {
    Vec x{}, v{};
    for (int a = 0; a < 3; ++a) {
      x[a] = u(rng);
      v[a] = u(rng);
    }
    EXPECT_NEAR(eval_E(rnd, x, v), eval_E_from_definition(rnd, x, v), 1e-14);
  }
}

TEST(LegendreH, ClosedFormAndBruteForce) {
  const auto kin = models::pure_kinetic();
  EXPECT_DOUBLE_EQ(legendre_H(kin, vec2(0, 0), vec2(1, 0)), 0.5);
  const auto cosv = models::cosine_potential();
  EXPECT_DOUBLE_EQ(legendre_H(cosv, vec2(0, 0), vec2(0, 0)), 0.3);

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const auto mag = models::magnetic_strip();
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = vec2(u(rng), u(rng));
    const Vec p = vec2(u(rng), u(rng));
    EXPECT_NEAR(legendre_H(mag, x, p), brute_force_H(mag, x, p), 1e-6);
    EXPECT_NEAR(legendre_H(cosv, x, p), brute_force_H(cosv, x, p), 1e-6);
  }
}

TEST(LegendreH, InvolutionRecoversVelocity) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const auto model = random_model(rng, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec x = vec2(u(rng), u(rng));
    const Vec v = vec2(u(rng), u(rng));
    const Vec p = fiber_derivative(model, x, v);
    const Vec back = legendre_inverse(model, x, p);
    EXPECT_NEAR(back[0], v[0], 1e-12);
    EXPECT_NEAR(back[1], v[1], 1e-12);
    // Fenchel equality at the dual pair.
    EXPECT_NEAR(legendre_H(model, x, p), dot(p, v, 2) - eval_L(model, x, v), 1e-12);
  }
}

TEST(ElRhs, Examples) {
  const auto cosv = models::cosine_potential();
  const Vec a = el_rhs(cosv, vec2(0.25, 0), vec2(0.7, -1.1));
  EXPECT_NEAR(a[0], 0.6 * kPi, 1e-14);
  EXPECT_NEAR(a[0], 1.884956, 1e-6);
  EXPECT_NEAR(a[1], 0.0, 1e-15);

  const auto kin = models::pure_kinetic();
  const Vec z = el_rhs(kin, vec2(0.3, 0.1), vec2(2, 3));
  EXPECT_EQ(z[0], 0.0);
  EXPECT_EQ(z[1], 0.0);

  const TonelliModel closed(2, {TrigSeries::constant(2, 0.0), TrigSeries::constant(2, 0.8)}, TrigSeries(2));
  const Vec c = el_rhs(closed, vec2(0.3, 0.1), vec2(2, 3));
  EXPECT_EQ(c[0], 0.0);
  EXPECT_EQ(c[1], 0.0);
}

TEST(ElRhs, AgreesWithFiniteDifferenceEulerLagrange) {
  // d/dt(v + θ(x)) = ∂_x L gives a = ∂_x L − Dθ·v, with both derivatives
  // taken by central differences of eval_L and θ.
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int dim : {2, 3}) {
    const auto model = random_model(rng, dim);
    for (int trial = 0; trial < 30; ++trial) {
      Vec x{}, v{};
      for (int a = 0; a < dim; ++a) {
        x[a] = u(rng);
        v[a] = 2.0 * u(rng);
      }
      const double h = 1e-5;
      Vec dxl{};
      for (int a = 0; a < dim; ++a) {
        Vec xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        dxl[a] = (eval_L(model, xp, v) - eval_L(model, xm, v)) / (2 * h);
      }
      Vec xp = x, xm = x;
      for (int a = 0; a < dim; ++a) {
        xp[a] += h * v[a];
        xm[a] -= h * v[a];
      }
      Vec tp{}, tm{};
      model.theta_at(xp, tp);
      model.theta_at(xm, tm);
      const Vec acc = el_rhs(model, x, v);
      for (int a = 0; a < dim; ++a) {
        const double expected = dxl[a] - (tp[a] - tm[a]) / (2 * h);
        EXPECT_NEAR(acc[a], expected, 1e-6);
      }
    }
  }
}

TEST(Lagrangian, FiberHessianIsIdentity) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto model = random_model(rng, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = vec2(u(rng), u(rng));
    const Vec v = vec2(u(rng), u(rng));
    const double h = 1e-3;
    double hess[2][2];
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        auto f = [&](double sa, double sb) {
          Vec w = v;
          w[a] += sa;
          w[b] += sb;
          return eval_L(model, x, w);
        };
        hess[a][b] = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
      }
    }
    const double tr = hess[0][0] + hess[1][1];
    const double det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    EXPECT_NEAR(tr / 2 + disc, 1.0, 1e-6);
    EXPECT_NEAR(tr / 2 - disc, 1.0, 1e-6);
  }
}

TEST(MagneticNorm, PowerIterationMatchesAnalyticCase) {
  // θ = (0, 0, a sin 2πx₁ + b sin 2πx₂) has B with entries ∂_1θ_3, ∂_2θ_3 in
  // the third row/column; its norm is the length of that gradient.
  const double a = 0.3, b = -0.2;
  std::vector<TrigSeries> theta{TrigSeries(3), TrigSeries(3),
                                TrigSeries(3, {{{1, 0, 0}, 0.0, a}, {{0, 1, 0}, 0.0, b}})};
  const TonelliModel m(3, std::move(theta), TrigSeries(3));
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x{};
    for (int i = 0; i < 3; ++i) x[i] = u(rng);
    const double g1 = 2 * kPi * a * std::cos(2 * kPi * x[0]);
    const double g2 = 2 * kPi * b * std::cos(2 * kPi * x[1]);
    EXPECT_NEAR(magnetic_operator_norm(m, x), std::hypot(g1, g2), 1e-10);
  }
}

TEST(EstimateBounds, Examples) {
  const auto b0 = estimate_bounds(models::pure_kinetic(), 32);
  EXPECT_EQ(b0.L0, 0.5);
  EXPECT_EQ(b0.L1, 0.0);
  EXPECT_EQ(b0.E0, 0.5);
  EXPECT_EQ(b0.E1, 0.0);
  EXPECT_EQ(b0.Theta, 0.0);

  const auto b1 = estimate_bounds(models::cosine_potential(), 64);
  EXPECT_NEAR(b1.L1, 0.3, 1e-12);
  EXPECT_NEAR(b1.E1, 0.3, 1e-12);
  EXPECT_EQ(b1.E0, 0.5);

  const auto b2 = estimate_bounds(models::magnetic_strip(), 64);
  EXPECT_NEAR(b2.Theta, 0.25, 1e-12);
  EXPECT_EQ(b2.L0, 0.25);
  EXPECT_NEAR(b2.L1, 1.0 / (4 * kPi * kPi), 1e-10);

  EXPECT_THROW(estimate_bounds(models::pure_kinetic(), 16), Error);
}

TEST(EstimateBounds, InequalitiesHoldOnVerificationGrid) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<TonelliModel> ms;
  for (const auto& nm : models::suite()) ms.push_back(nm.model);
  ms.push_back(random_model(rng, 2));
  ms.push_back(random_model(rng, 2));
  for (const auto& m : ms) {
    const auto b = estimate_bounds(m, 48);
    double dtheta = 0.0;
    for (int i = 0; i < 97; ++i) {
      for (int j = 0; j < 97; ++j) {
        const Vec x = vec2(i / 97.0, j / 97.0);
        dtheta = std::max(dtheta, magnetic_operator_norm(m, x));
        for (int s = 0; s < 4; ++s) {
          const Vec v = vec2(u(rng), u(rng));
          const double l = eval_L(m, x, v);
          const double e = eval_E(m, x, v);
          const double v2 = dot(v, v, 2);
          EXPECT_GE(l + 1e-12, b.L0 * v2 - b.L1);
          EXPECT_LE(l - 1e-12, b.L2 * v2 + b.L3);
          EXPECT_GE(e + 1e-12, b.E0 * v2 - b.E1);
          EXPECT_GE(e + 1e-12, b.C0 * l - b.C1);
        }
      }
    }
    EXPECT_GE(b.Theta, 0.25 * dtheta - 1e-3 * dtheta);
    EXPECT_GE(b.L0, 0.25);
  }
}
