#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "perorb/action.hpp"
#include "perorb/models.hpp"
#include "support.hpp"

using namespace perorb;

namespace {

FunctionalContext make_ctx(const TonelliModel& m, double kappa) {
  return FunctionalContext(m, kappa, estimate_bounds(m, 64));
}

// Max-norm relative error between the analytic partials and central
// differences of action(), over every sample coordinate and the period.
double fd_relative_error(const FunctionalContext& ctx, const DiscreteLoop& loop) {
  const Covector d = differential(ctx, loop);
  const int n = loop.size();
  const double h = 1e-6;
  double err = 0.0;
  double scale = std::abs(d.tau);
  for (double v : d.xi) scale = std::max(scale, std::abs(v) / n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < loop.dim(); ++a) {
      auto q = loop.lift();
      q[static_cast<std::size_t>(i) * loop.dim() + a] += h;
      const double sp = action(ctx, DiscreteLoop::from_lift(loop.dim(), q, loop.winding(), loop.period()));
      q[static_cast<std::size_t>(i) * loop.dim() + a] -= 2 * h;
      const double sm = action(ctx, DiscreteLoop::from_lift(loop.dim(), q, loop.winding(), loop.period()));
      err = std::max(err, std::abs((sp - sm) / (2 * h) - d.at(i, a) / n));
    }
  }
  const double tp = action(ctx, loop.with_period(loop.period() + h));
  const double tm = action(ctx, loop.with_period(loop.period() - h));
  err = std::max(err, std::abs((tp - tm) / (2 * h) - d.tau));
  return err / std::max(scale, 1e-300);
}

}  // namespace

TEST(Action, Examples) {
  const auto cosv = make_ctx(models::cosine_potential(), 0.1);
  const std::vector<double> origin{0.0, 0.0};
  EXPECT_NEAR(action(cosv, constant_loop(origin, 64, 2.0)), -0.4, 1e-15);

  const auto kin0 = make_ctx(models::pure_kinetic(), 0.0);
  const auto line = straight_loop({1, 0}, 64, 1.0);
  EXPECT_NEAR(action(kin0, line), 0.5, 1e-14);
  EXPECT_NEAR(action(kin0.with_kappa(0.5), line), 1.0, 1e-14);
}

TEST(Action, ConstantLoopIsPeriodTimesEnergyGap) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& nm : models::suite()) {
    const auto ctx = make_ctx(nm.model, 0.17);
    for (int t = 0; t < 20; ++t) {
      const std::vector<double> x{u(rng), u(rng)};
      const double period = 0.1 + 3 * u(rng);
      const Vec zero{};
      const double expected = period * (0.17 - eval_E(nm.model, x, zero));
      EXPECT_NEAR(action(ctx, constant_loop(x, 32, period)), expected, 1e-14);
    }
  }
}

TEST(Differential, Examples) {
  const auto ctx = make_ctx(models::cosine_potential(), 0.3);
  const std::vector<double> origin{0.0, 0.0};
  const auto c = constant_loop(origin, 64, 1.5);
  const auto d = differential(ctx, c);
  EXPECT_NEAR(d.tau, 0.0, 1e-15);
  EXPECT_LT(d.max_abs(), 1e-14);  // ∇V vanishes at the maximum

  // Away from the maximum the loop part is −T∇V.
  const std::vector<double> x{0.1, 0.4};
  const auto c2 = constant_loop(x, 64, 1.5);
  const auto d2 = differential(ctx, c2);
  Vec g{};
  ctx.model.potential_and_gradient(x, g);
  for (int i = 0; i < 64; ++i) {
    EXPECT_NEAR(d2.at(i, 0), -1.5 * g[0], 1e-13);
    EXPECT_NEAR(d2.at(i, 1), -1.5 * g[1], 1e-13);
  }

  const auto kin = make_ctx(models::pure_kinetic(), 0.5);
  const auto d3 = differential(kin, straight_loop({1, 0}, 64, 1.0));
  EXPECT_LT(d3.max_abs(), 1e-12);
}

TEST(Differential, MatchesFiniteDifferences) {
  std::mt19937_64 rng(101);
  fixtures::LoopGen g;
  g.samples = 32;
  for (const auto& nm : models::suite()) {
    const auto ctx = make_ctx(nm.model, 0.2);
    for (int trial = 0; trial < 10; ++trial) {
      const auto loop = fixtures::random_loop(rng, g);
      EXPECT_LT(fd_relative_error(ctx, loop), 1e-6) << nm.name;
    }
  }
}

TEST(Differential, PeriodPartIsMeanEnergyGap) {
  std::mt19937_64 rng(103);
  fixtures::LoopGen g;
  for (const auto& nm : models::suite()) {
    const auto ctx = make_ctx(nm.model, 0.05);
    for (int trial = 0; trial < 50; ++trial) {
      const auto loop = fixtures::random_loop(rng, g);
      EXPECT_NEAR(differential(ctx, loop).tau, mean_kappa_minus_energy(ctx, loop), 1e-12);
    }
  }
}

TEST(Gradient, ExamplesAndAdjointIdentity) {
  const auto kin = make_ctx(models::pure_kinetic(), 0.5);
  const auto line = straight_loop({1, 0}, 64, 1.0);
  EXPECT_LT(gradient(kin, line).max_abs(), 1e-12);

  const auto ctx = make_ctx(models::cosine_potential(), 0.3);
  const std::vector<double> x{0.1, 0.4};
  const auto c = constant_loop(x, 64, 1.5);
  const auto gr = gradient(ctx, c);
  const auto d = differential(ctx, c);
  for (int i = 0; i < 64; ++i) {
    EXPECT_NEAR(gr.at(i, 0), d.at(0, 0), 1e-12);
    EXPECT_NEAR(gr.at(i, 1), d.at(0, 1), 1e-12);
  }
  EXPECT_EQ(gr.tau, d.tau);

  std::mt19937_64 rng(107);
  fixtures::LoopGen g;
  for (const auto& nm : models::suite()) {
    const auto cx = make_ctx(nm.model, 0.1);
    for (int trial = 0; trial < 5; ++trial) {
      const auto loop = fixtures::random_loop(rng, g);
      const auto dd = differential(cx, loop);
      const auto gg = precondition(loop, dd);
      for (int k = 0; k < 10; ++k) {
        const auto eta = fixtures::random_tangent(rng, 2, loop.size());
        const double p = pairing(loop, dd, eta);
        EXPECT_NEAR(sobolev_inner(loop, gg, eta), p, 1e-10 * std::max(1.0, std::abs(p)));
      }
    }
  }
}

TEST(Action, ScalingIdentityInKappa) {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  fixtures::LoopGen g;
  for (const auto& nm : models::suite()) {
    const auto ctx = make_ctx(nm.model, 0.0);
    for (int trial = 0; trial < 50; ++trial) {
      const auto loop = fixtures::random_loop(rng, g);
      const double k1 = u(rng), k2 = u(rng);
      const double lhs = action(ctx.with_kappa(k1), loop);
      const double rhs = action(ctx.with_kappa(k2), loop) + (k1 - k2) * loop.period();
      EXPECT_NEAR(lhs, rhs, 1e-14 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST(Action, LowerBoundByLengthAndPeriod) {
  std::mt19937_64 rng(113);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  fixtures::LoopGen g;
  g.max_winding = 2;
  g.amplitude = 0.15;
  g.T_min = 0.05;
  for (const auto& nm : models::suite()) {
    const auto ctx = make_ctx(nm.model, 0.0);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto loop = fixtures::random_loop(rng, g);
      const auto c = ctx.with_kappa(u(rng));
      EXPECT_GE(action(c, loop) + 1e-12, action_lower_bound(c, loop)) << nm.name;
    }
  }
}

TEST(Action, IntegerShiftInvariance) {
  std::mt19937_64 rng(127);
  fixtures::LoopGen g;
  for (const auto& nm : models::suite()) {
    const auto ctx = make_ctx(nm.model, 0.1);
    for (int trial = 0; trial < 10; ++trial) {
      const auto loop = fixtures::random_loop(rng, g);
      auto q = loop.lift();
      for (std::size_t i = 0; i < q.size(); ++i) q[i] += (i % 2 == 0) ? 2.0 : -1.0;
      const auto shifted = make_loop(q, 2, loop.period());
      const auto e1 = evaluate(ctx, loop);
      const auto e2 = evaluate(ctx, shifted);
      EXPECT_NEAR(e1.action, e2.action, 1e-14 * std::max(1.0, std::abs(e1.action)));
      const auto g1 = precondition(loop, e1.differential);
      const auto g2 = precondition(shifted, e2.differential);
      EXPECT_LT((g1 - g2).max_abs(), 1e-12 * std::max(1.0, g1.max_abs()));
    }
  }
}

TEST(Descend, StraightLineIsAlreadyCritical) {
  const auto ctx = make_ctx(models::pure_kinetic(), 0.5);
  const auto r = descend(ctx, straight_loop({1, 0}, 64, 1.0));
  EXPECT_EQ(r.termination, Termination::CriticalPoint);
  EXPECT_EQ(r.iterations, 0);
}

TEST(Descend, ConstantLoopShrinksAboveE0) {
  const auto ctx = make_ctx(models::cosine_potential(), 0.4);
  const std::vector<double> x{0.2, 0.5};
  const auto r = descend(ctx, constant_loop(x, 64, 1.0));
  EXPECT_EQ(r.termination, Termination::ShrankToPoint);
  EXPECT_LT(std::abs(r.action_trace.back()), 1e-3);
  EXPECT_FALSE(r.shrink_violation);
  EXPECT_LE(r.loop.period(), 10 * ctx.T_floor);
}

TEST(Descend, NegativeKappaDiverges) {
  const auto ctx = make_ctx(models::pure_kinetic(), -0.1);
  DescentOptions opts;
  opts.T_ceiling = 1e3;
  const auto r = descend(ctx, fixtures::circle_loop(0.5, 0.5, 0.1, 64, 1.0), opts);
  EXPECT_EQ(r.termination, Termination::PeriodDiverged);
  EXPECT_LT(r.action_trace.back(), -50.0);
}

TEST(Descend, TraceIsMonotoneAndTruncationStops) {
  std::mt19937_64 rng(131);
  fixtures::LoopGen g;
  g.samples = 64;
  g.max_winding = 1;
  for (const auto& nm : models::suite()) {
    const auto ctx = make_ctx(nm.model, 0.5);
    for (int trial = 0; trial < 4; ++trial) {
      const auto loop = fixtures::random_loop(rng, g);
      DescentOptions opts;
      opts.max_iters = 300;
      const auto r = descend(ctx, loop, opts);
      for (std::size_t i = 1; i < r.action_trace.size(); ++i) {
        EXPECT_LE(r.action_trace[i], r.action_trace[i - 1] + 1e-12);
      }
      if (r.termination == Termination::ShrankToPoint) {
        EXPECT_FALSE(r.shrink_violation);
      }
    }
  }
  const auto ctx = make_ctx(models::pure_kinetic(), 0.5).with_truncation(0.2);
  const auto r = descend(ctx, fixtures::circle_loop(0.5, 0.5, 0.2, 64, 1.0));
  EXPECT_EQ(r.termination, Termination::Truncated);
  EXPECT_LE(r.action_trace.back(), 0.2);
}

TEST(PsClassify, Examples) {
  const auto ctx = make_ctx(models::pure_kinetic(), 0.5);
  std::vector<TailSample> compact;
  for (int i = 0; i < 12; ++i) compact.push_back({0.9 + 0.2 * (i % 3) / 2.0, 1.0, std::pow(10.0, -i)});
  EXPECT_EQ(ps_classify(ctx, compact).diagnosis, PSDiagnosis::CompactCandidate);

  std::vector<TailSample> shrink;
  for (int j = 1; j <= 10; ++j) shrink.push_back({std::pow(10.0, -j), std::pow(10.0, -j), 1e-3});
  const auto s = ps_classify(ctx, shrink);
  EXPECT_EQ(s.diagnosis, PSDiagnosis::ShrinkingFamily);
  EXPECT_TRUE(s.consistent);

  std::vector<TailSample> bad_shrink = shrink;
  for (auto& t : bad_shrink) t.action = 0.5;
  EXPECT_FALSE(ps_classify(ctx, bad_shrink).consistent);

  std::vector<TailSample> escape;
  for (int j = 0; j < 10; ++j) escape.push_back({10.0 * (j + 1), -1.0, 1e-3});
  const auto e = ps_classify(ctx, escape, 0.0);
  EXPECT_EQ(e.diagnosis, PSDiagnosis::EscapingPeriods);
  EXPECT_FALSE(e.consistent);
  EXPECT_TRUE(ps_classify(ctx.with_kappa(-0.1), escape, 0.0).consistent);

  std::vector<TailSample> few(5);
  try {
    ps_classify(ctx, few);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::InsufficientTail);
  }
}
