#include <gtest/gtest.h>

#include <cmath>

#include "fracucp/errors.hpp"
#include "fracucp/geometry.hpp"
#include "fracucp/parallel.hpp"

using namespace fracucp;
using namespace fracucp::geometry;

namespace {

Vec random_vec(SampleRng& rng, int n, double lo, double hi) {
  Vec v(n);
  for (int j = 0; j < n; ++j) v[j] = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST(HolmgrenMap, Validation) {
  EXPECT_THROW(HolmgrenMap::make(Vec::Zero(2), 0.5, 0.1, 1.0), DomainError);
  EXPECT_THROW(HolmgrenMap::make(Vec::Zero(2), 1.0, 0.0, 1.0), DomainError);
  EXPECT_THROW(HolmgrenMap::make(Vec::Zero(2), 1.0, 0.1, 0.0), DomainError);
  EXPECT_THROW(HolmgrenMap::make(Vec::Zero(2), 1.0, 0.1, 1.0, 0), DomainError);
  Vec bad(2);
  bad << 0.1, 0.2;
  EXPECT_THROW(HolmgrenMap::make(bad, 1.0, 0.1, 1.0), DomainError);
}

TEST(HolmgrenMap, RoundTrip) {
  SampleRng rng(7, 0);
  for (int n = 1; n <= 3; ++n)
    for (int s = 1; s <= 5; ++s) {
      Vec yh = Vec::Zero(n);
      for (int j = 0; j + 1 < n; ++j) yh[j] = rng.uniform(-0.3, 0.3);
      const auto map = HolmgrenMap::make(yh, 1.5, 0.07, 2.0, s);
      for (int i = 0; i < 200; ++i) {
        const double t = rng.uniform(0.0, 2.0);
        const Vec y = random_vec(rng, n, -1.0, 1.0);
        const Vec back = holmgren_inverse(t, holmgren_forward(t, y, map), map);
        EXPECT_LT((back - y).cwiseAbs().maxCoeff(), 1e-14);
      }
    }
}

TEST(HolmgrenMap, StageIdentity) {
  SampleRng rng(11, 0);
  const double X = 0.05, T = 1.0;
  for (int i = 0; i < 500; ++i) {
    const double t = rng.uniform(0.0, T);
    const Vec y = random_vec(rng, 2, -0.5, 0.5);
    for (int s = 2; s <= 6; ++s) {
      const double xs = holmgren_forward(t, y, HolmgrenMap::make(Vec::Zero(2), 1.0, X, T, s))[1];
      const double xp = holmgren_forward(t, y, HolmgrenMap::make(Vec::Zero(2), 1.0, X, T, s - 1))[1];
      EXPECT_NEAR(xs, xp + X * t / T - X, 1e-15);
    }
  }
}

TEST(HolmgrenMap, ChainMatrixIsJacobian) {
  SampleRng rng(3, 0);
  const auto map = HolmgrenMap::make(Vec::Zero(3), 2.0, 0.1, 1.0, 2);
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const double t = rng.uniform(0.0, 1.0);
    const Vec y = random_vec(rng, 3, -0.5, 0.5);
    const Mat M = chain_matrix(holmgren_forward(t, y, map), map);
    for (int j = 0; j < 3; ++j) {
      Vec yp = y, ym = y;
      yp[j] += h;
      ym[j] -= h;
      const Vec dx = (holmgren_forward(t, yp, map) - holmgren_forward(t, ym, map)) / (2.0 * h);
      for (int p = 0; p < 3; ++p) EXPECT_NEAR(M(j, p), dx[p], 1e-8);
    }
  }
}

TEST(HolmgrenMap, ComposedDerivativesMatchFiniteDifferences) {
  const auto a = coeffs::rotating_anisotropic(2);
  const auto map = HolmgrenMap::make(Vec::Zero(2), 1.0, 0.1, 1.0, 3);
  const auto ax = compose_with_holmgren(a, map);
  SampleRng rng(5, 0);
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const double t = rng.uniform(0.1, 0.9);
    const Vec x = random_vec(rng, 2, -0.2, 0.2);
    const Mat dt = (ax.value(t + h, x) - ax.value(t - h, x)) / (2.0 * h);
    EXPECT_LT((ax.d_t(t, x) - dt).cwiseAbs().maxCoeff(), 1e-7);
    for (int k = 0; k < 2; ++k) {
      Vec xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const Mat dk = (ax.value(t, xp) - ax.value(t, xm)) / (2.0 * h);
      EXPECT_LT((ax.d_y(k, t, x) - dk).cwiseAbs().maxCoeff(), 1e-7);
    }
  }
}

TEST(HolmgrenOperator, EffectiveCoefficients) {
  Mat A(2, 2);
  A << 2.0, 0.3, 0.3, 1.0;
  const auto op = pushforward_operator(coeffs::constant(A), frac::MultiTermSpec::single(0.5),
                                       HolmgrenMap::make(Vec::Zero(2), 1.5, 0.1, 1.0, 2));
  Vec x(2);
  x << 0.2, 0.05;
  Mat M = Mat::Identity(2, 2);
  M(0, 1) = 2.0 * 1.5 * 0.2;
  EXPECT_LT((op.effective_matrix(0.3, x) - M.transpose() * A * M).cwiseAbs().maxCoeff(), 1e-14);
  const Vec b = op.first_order(0.3, x);
  EXPECT_DOUBLE_EQ(b[0], 0.0);
  EXPECT_DOUBLE_EQ(b[1], 2.0 * 1.5 * 2.0);
  EXPECT_DOUBLE_EQ(op.time_drift(), 0.2);
}

TEST(GlobalMap, RoundTripAndJacobian) {
  SampleRng rng(9, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vec y = random_vec(rng, 3, -0.999, 0.999);
    EXPECT_LT((global_inverse(global_forward(y)) - y).cwiseAbs().maxCoeff(), 1e-14);
    const Vec yt = random_vec(rng, 3, -50.0, 50.0);
    // y = y~ / sqrt(1 + y~^2) is rounded near 1, which costs a factor (1 + y~^2) on the way back
    const Vec back = global_forward(global_inverse(yt));
    for (int j = 0; j < 3; ++j) EXPECT_LE(std::abs(back[j] - yt[j]), 8e-16 * (1.0 + yt[j] * yt[j]) * (1.0 + std::abs(yt[j])));
  }
  const Vec y = Vec::Constant(2, 0.4);
  const double h = 1e-7;
  Vec yp = y;
  yp[0] += h;
  EXPECT_NEAR((global_forward(yp)[0] - global_forward(y)[0]) / h, global_jacobian(y)[0], 1e-5);
  EXPECT_NEAR(global_weights(global_forward(y))[1], global_jacobian(y)[1], 1e-12);
  EXPECT_THROW(global_forward(Vec::Constant(1, 1.0)), DomainError);
}

TEST(GlobalMap, TransformedFieldKeepsWeightedEllipticity) {
  const auto a = coeffs::rotating_anisotropic(2);
  const auto at = global_transform(a);
  SampleRng rng(12, 0);
  for (int i = 0; i < 200; ++i) {
    const Vec yt = random_vec(rng, 2, -5.0, 5.0);
    const Vec w = global_weights(yt);
    const Mat B = w.asDiagonal().inverse() * at.value(0.5, yt) * w.asDiagonal().inverse();
    const auto r = check_ellipticity(B, a.delta);
    EXPECT_TRUE(r.ok) << r.min_eigenvalue << " " << r.max_eigenvalue;
    EXPECT_LT((B - a.value(0.5, global_inverse(yt))).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Cutoffs, SmoothStep) {
  EXPECT_EQ(smooth_step(-0.1), 0.0);
  EXPECT_EQ(smooth_step(1.2), 1.0);
  double prev = 0.0;
  for (int i = 1; i < 100; ++i) {
    const double s = i / 100.0;
    if (s < 0.9) EXPECT_GT(smooth_step(s), prev);
    EXPECT_GE(smooth_step(s), prev);
    EXPECT_NEAR(smooth_step(s) + smooth_step(1.0 - s), 1.0, 1e-15);
    prev = smooth_step(s);
  }
}

TEST(Cutoffs, ChiAndKappa) {
  CutoffSpec c;
  c.X = 0.1;
  c.epsilon = 0.5;
  c.zeta = 2;
  c.l = 0.6;
  c.y_hat = Vec::Zero(2);
  EXPECT_EQ(chi(0.04, c), 1.0);
  EXPECT_EQ(chi(0.1, c), 0.0);
  EXPECT_GT(chi(0.07, c), 0.0);
  EXPECT_LT(chi(0.07, c), 1.0);
  SampleRng rng(2, 0);
  for (int i = 0; i < 2000; ++i) {
    Vec y(2);
    y << rng.uniform(-1.0, 1.0), rng.uniform(-0.6, 0.5);
    const double k = kappa(y, c);
    EXPECT_GE(k, 0.0);
    EXPECT_LE(k, 1.0);
    if (in_q(y, c)) EXPECT_EQ(k, 1.0);
    if (!in_q_tilde(y, c)) EXPECT_EQ(k, 0.0);
  }
}

TEST(Continuation, ScheduleIsNestedAndReached) {
  const double T = 1.0, X = 0.05;
  const auto sched = continuation_schedule(2, T, X, 5);
  ASSERT_EQ(sched.size(), 5u);
  SampleRng rng(4, 0);
  for (int i = 0; i < 5000; ++i) {
    const double t = rng.uniform(0.0, T);
    Vec y(2);
    y << rng.uniform(-0.3, 0.3), rng.uniform(-0.1, 0.3);
    for (std::size_t s = 0; s < sched.size(); ++s) {
      EXPECT_EQ(sched[s].region.stage, static_cast<int>(s) + 1);
      if (!sched[s].region.contains(t, y)) continue;
      EXPECT_TRUE(stage_reaches(sched[s], t, y));
      if (s + 1 < sched.size()) EXPECT_TRUE(sched[s + 1].region.contains(t, y));
    }
  }
  const auto j = to_json(sched);
  ASSERT_EQ(j["stages"].size(), 5u);
  EXPECT_EQ(j["stages"][4]["map"]["stage"], 5);
}
