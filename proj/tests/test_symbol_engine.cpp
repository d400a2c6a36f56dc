#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracucp/errors.hpp"
#include "fracucp/parallel.hpp"
#include "fracucp/symbol_engine.hpp"
#include "oracles.hpp"

using namespace fracucp;
using namespace fracucp::symbol;

namespace {

constexpr double pi = std::numbers::pi;

PhasePoint random_point(SampleRng& rng, int n, double X) {
  PhasePoint p;
  p.t = rng.uniform(0.05, 0.95);
  p.x = Vec(n);
  for (int j = 0; j + 1 < n; ++j) p.x[j] = rng.uniform(-std::sqrt(X), std::sqrt(X));
  p.x[n - 1] = rng.uniform(0.0, X);
  p.tau = rng.uniform(-4.0, 4.0);
  p.xi = Vec(n);
  for (int j = 0; j < n; ++j) p.xi[j] = rng.uniform(-3.0, 3.0);
  p.sigma = rng.uniform(0.2, 4.0);
  return p;
}

WeightedSymbol local(const frac::MultiTermSpec& spec, const EllipticCoeffField& a, double X, double c) {
  const auto map = geometry::HolmgrenMap::make(Vec::Zero(a.n), std::max(c, 1.0), X, 1.0, 1);
  return WeightedSymbol(spec, geometry::compose_with_holmgren(a, map), {X, 0.0}, c);
}

double rel(cplx got, cplx want, double scale) { return std::abs(got - want) / std::max(std::abs(want), scale); }

}  // namespace

TEST(Constants, CAlphaAndSharpBound) {
  EXPECT_NEAR(c_alpha(1.0), std::sqrt(2.0) / 2.0, 1e-15);
  EXPECT_NEAR(c_alpha(1.8), std::sin(pi * 0.1), 1e-15);
  EXPECT_THROW(c_alpha(0.0), DomainError);
  EXPECT_THROW(c_alpha(2.0), DomainError);
  // the stated constant exceeds the true infimum below order one: alpha = 1/2, tau = 1
  const cplx z = std::pow(cplx(1.0, 1.0), 0.5);
  EXPECT_NEAR(std::abs(z.imag()) / std::abs(z), std::sin(pi / 8.0), 1e-15);
  EXPECT_LT(std::sin(pi / 8.0), c_alpha(0.5));
  // the sharp constant is a lower bound everywhere on |tau| >= 1
  SampleRng rng(1, 0);
  for (int k = 1; k < 40; ++k) {
    const double a = k * 0.05;
    for (int i = 0; i < 500; ++i) {
      const double tau = std::pow(10.0, rng.uniform(0.0, 6.0)) * (i % 2 ? 1.0 : -1.0);
      const cplx w = std::pow(cplx(1.0, tau), a);
      EXPECT_GE(std::abs(w.imag()) / std::abs(w), c_alpha_sharp(a) * (1.0 - 1e-12));
    }
  }
}

TEST(Constants, EpsilonZeroBound) {
  SampleRng rng(2, 0);
  for (int k = 1; k < 40; ++k) {
    const double a = k * 0.05;
    for (int i = 0; i < 500; ++i) {
      const cplx w = std::pow(cplx(1.0, rng.uniform(-1.0, 1.0)), a);
      EXPECT_GE(w.real() / std::abs(w), epsilon0(a) * (1.0 - 1e-12));
    }
  }
}

TEST(Lambda, ReducesAtZeroFrequency) {
  Vec xi(2);
  xi << 0.3, -1.2;
  EXPECT_NEAR(std::abs(lambda_symbol(0.0, 0.7, 3.0, xi) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(lambda_symbol(2.0, 0.7, 0.0, xi) - (1.0 + xi.squaredNorm())), 0.0, 1e-12);
}

TEST(TimeSymbol, DerivativeMatchesFiniteDifference) {
  const auto spec = frac::MultiTermSpec::make({1.6, 0.9, 0.3}, {1.0, 0.4, 2.0});
  for (double tau : {-5.0, -0.3, 0.0, 0.7, 12.0}) {
    const cplx fd = oracle::fd5([&](double s) { return time_symbol(spec, s); }, tau, 1e-3);
    EXPECT_LT(rel(time_symbol_derivative(spec, tau), fd, 1e-12), 1e-9);
  }
}

TEST(WeightedSymbol, MatchesDirectEvaluation) {
  Mat A(3, 3);
  A << 1.5, 0.2, -0.1, 0.2, 1.0, 0.3, -0.1, 0.3, 0.8;
  const auto spec = frac::MultiTermSpec::make({1.3, 0.4}, {1.0, 0.6});
  const WeightedSymbol sym(spec, coeffs::constant(A), {0.05, 0.0}, 1.7);
  SampleRng rng(3, 0);
  for (int i = 0; i < 200; ++i) {
    const PhasePoint p = random_point(rng, 3, 0.05);
    const cplx want = oracle::weighted_symbol(spec.orders(), spec.weights(), A, 1.7, 0.05, p.tau, p.x, p.xi, p.sigma);
    EXPECT_LT(rel(sym.value(p), want, 1e-12), 1e-13);
    EXPECT_LT(std::abs(sym.value(p, Part::first) + sym.value(p, Part::second) - sym.value(p)), 1e-13 * std::abs(want) + 1e-15);
  }
}

TEST(WeightedSymbol, GradientsMatchFiniteDifferences) {
  const auto spec = frac::MultiTermSpec::make({0.7, 0.3}, {1.0, 0.5});
  SampleRng rng(4, 0);
  for (int n = 1; n <= 3; ++n) {
    const auto sym = local(spec, coeffs::rotating_anisotropic(n), 0.05, 1.0);
    for (int i = 0; i < 100; ++i) {
      const PhasePoint p = random_point(rng, n, 0.05);
      const SymbolValue g = sym.gradients(p);
      double scale = std::max(std::abs(g.d_tau), std::abs(g.d_t));
      for (int j = 0; j < n; ++j) scale = std::max({scale, std::abs(g.d_xi[j]), std::abs(g.d_x[j])});
      const double floor = 1e-6 * scale;
      auto along = [&](auto set, double v0) {
        return oracle::fd5([&](double v) {
          PhasePoint q = p;
          set(q, v);
          return sym.value(q);
        }, v0, 1e-4 * std::max(1.0, std::abs(v0)));
      };
      EXPECT_LT(rel(g.d_tau, along([](PhasePoint& q, double v) { q.tau = v; }, p.tau), floor), 1e-6);
      EXPECT_LT(rel(g.d_t, along([](PhasePoint& q, double v) { q.t = v; }, p.t), floor), 1e-6);
      for (int j = 0; j < n; ++j) {
        EXPECT_LT(rel(g.d_xi[j], along([j](PhasePoint& q, double v) { q.xi[j] = v; }, p.xi[j]), floor), 1e-6);
        EXPECT_LT(rel(g.d_x[j], along([j](PhasePoint& q, double v) { q.x[j] = v; }, p.x[j]), floor), 1e-6);
      }
    }
  }
}

TEST(Bracket, ClosedFormWhenChainTermsVanish) {
  SampleRng rng(5, 0);
  Mat A3(3, 3);
  A3 << 1.2, 0.1, 0.3, 0.1, 0.9, -0.2, 0.3, -0.2, 1.4;
  for (auto [n, c] : {std::pair{1, 1.0}, std::pair{1, 3.0}, std::pair{2, 0.0}, std::pair{3, 0.0}}) {
    const Mat A = A3.topLeftCorner(n, n);
    const WeightedSymbol sym(frac::MultiTermSpec::single(0.8), coeffs::constant(A), {0.05, 0.0}, c);
    for (int i = 0; i < 200; ++i) {
      PhasePoint p = random_point(rng, n, 0.05);
      p.x.head(n - 1).setZero();
      const double want = oracle::closed_form_bracket(A, p.xi, p.sigma, p.x[n - 1] - 0.1);
      EXPECT_NEAR(sym.bracket(p).principal, want, 1e-12 * std::abs(want));
    }
  }
}

TEST(Bracket, TangentialChainTermForPositiveC) {
  // at x' = 0 the k < n pairs add 8 c |sigma| X~ sum_{k<n} |(a eta)_k|^2
  Mat A(2, 2);
  A << 1.3, 0.4, 0.4, 0.9;
  const double c = 1.5;
  const WeightedSymbol sym(frac::MultiTermSpec::single(1.2), coeffs::constant(A), {0.05, 0.0}, c);
  SampleRng rng(6, 0);
  for (int i = 0; i < 100; ++i) {
    PhasePoint p = random_point(rng, 2, 0.05);
    p.x[0] = 0.0;
    const double xt = p.x[1] - 0.1;
    Eigen::VectorXcd eta(2);
    eta << p.xi[0], cplx(p.xi[1], p.sigma * xt);
    const Eigen::VectorXcd aeta = A * eta;
    const double want = oracle::closed_form_bracket(A, p.xi, p.sigma, xt) + 8.0 * c * p.sigma * xt * std::norm(aeta[0]);
    EXPECT_NEAR(sym.bracket(p).principal, want, 1e-12 * std::abs(want) + 1e-13);
  }
}

TEST(Bracket, Algebra) {
  const auto sym = local(frac::MultiTermSpec::single(1.4), coeffs::rotating_anisotropic(2), 0.05, 1.0);
  SampleRng rng(7, 0);
  for (int i = 0; i < 100; ++i) {
    const PhasePoint p = random_point(rng, 2, 0.05);
    const SymbolValue g = sym.gradients(p);
    const RealGradient re = real_part(g), im = imag_part(g);
    const double fg = poisson_bracket(re, im);
    EXPECT_NEAR(poisson_bracket(im, re), -fg, 1e-12 * std::abs(fg));
    EXPECT_EQ(poisson_bracket(re, re), 0.0);
    RealGradient combo = re;
    combo.d_tau = 2.0 * re.d_tau - 3.0 * im.d_tau;
    combo.d_t = 2.0 * re.d_t - 3.0 * im.d_t;
    combo.d_xi = 2.0 * re.d_xi - 3.0 * im.d_xi;
    combo.d_x = 2.0 * re.d_x - 3.0 * im.d_x;
    EXPECT_NEAR(poisson_bracket(combo, im), 2.0 * fg, 1e-11 * std::abs(fg));
    const BracketReport r = sym.bracket(p);
    EXPECT_NEAR(r.bracket, fg, 1e-12 * std::abs(fg));
    EXPECT_NEAR(r.principal, poisson_bracket(re, im, false), 1e-12 * std::abs(r.principal) + 1e-14);
  }
  // canonical pairs
  RealGradient xi1, x1, tau, t;
  for (RealGradient* r : {&xi1, &x1, &tau, &t}) {
    r->d_xi = Vec::Zero(2);
    r->d_x = Vec::Zero(2);
  }
  xi1.d_xi[0] = 1.0;
  x1.d_x[0] = 1.0;
  tau.d_tau = 1.0;
  t.d_t = 1.0;
  EXPECT_EQ(poisson_bracket(xi1, x1), 1.0);
  EXPECT_EQ(poisson_bracket(tau, t), 1.0);
  EXPECT_EQ(poisson_bracket(tau, t, false), 0.0);
}

TEST(Bracket, PrincipalPartIsHomogeneousOfDegreeThree) {
  const auto sym = local(frac::MultiTermSpec::single(0.6), coeffs::rotating_anisotropic(2), 0.05, 1.0);
  SampleRng rng(8, 0);
  for (int i = 0; i < 50; ++i) {
    const PhasePoint p = random_point(rng, 2, 0.05);
    PhasePoint q = p;
    const double rho = 37.0;
    q.xi *= rho;
    q.sigma *= rho;
    q.tau *= std::pow(rho, 2.0 / 0.6);
    const double b = sym.bracket(p).principal;
    EXPECT_NEAR(sym.bracket(q).principal / (rho * rho * rho), b, 1e-10 * std::abs(b) + 1e-12);
  }
}

TEST(TotalSymbol, AgreesWithWeightedSymbolAtZeroSigma) {
  const auto spec = frac::MultiTermSpec::make({1.5, 0.5}, {1.0, 0.3});
  const auto a = coeffs::rotating_anisotropic(2);
  const auto map = geometry::HolmgrenMap::make(Vec::Zero(2), 1.0, 0.05, 1.0, 2);
  const auto ax = geometry::compose_with_holmgren(a, map);
  const WeightedSymbol sym(spec, ax, {0.05, 0.0}, 1.0);
  SampleRng rng(9, 0);
  TotalSymbolOptions no_lower;
  no_lower.include_lower_order = false;
  for (int i = 0; i < 50; ++i) {
    PhasePoint p = random_point(rng, 2, 0.05);
    p.sigma = 0.0;
    const cplx plain = total_symbol(p, spec, ax, map, no_lower).value;
    EXPECT_LT(std::abs(plain - sym.value(p)), 1e-12 * std::abs(plain));
    cplx lower = 0.0;
    for (std::size_t l = 0; l < spec.size(); ++l)
      lower += spec.weight(l) * map.drift() * default_lower_order_factor(1.5, spec.order(l), p.tau) * p.xi[1];
    EXPECT_LT(std::abs(total_symbol(p, spec, ax, map).value - plain - lower), 1e-12 * std::abs(plain));
  }
  PhasePoint bad = random_point(rng, 2, 0.05);
  EXPECT_THROW(total_symbol(bad, spec, ax, map), DomainError);
}

TEST(CharSampler, PointsAreCharacteristicAndReproducible) {
  const auto sym = local(frac::MultiTermSpec::make({1.0, 0.5}, {1.0, 0.5}), coeffs::rotating_anisotropic(2), 0.05, 1.0);
  const auto region = SampleRegion::layer(0.05);
  const auto r = char_set_sample(sym, region, 300, 42);
  ASSERT_TRUE(r.complete());
  for (const auto& p : r.points) {
    EXPECT_LE(std::abs(sym.value(p)), 1e-8 * sym.base_scale(p));
    EXPECT_GE(p.x[1], 0.0);
    EXPECT_LE(p.x[1], 0.05);
    EXPECT_GT(p.sigma, 0.0);
  }
  EXPECT_TRUE(std::isfinite(r.max_K));
  thread_count() = 3;
  const auto again = char_set_sample(sym, region, 300, 42);
  thread_count() = 1;
  ASSERT_EQ(again.points.size(), r.points.size());
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    EXPECT_EQ(again.points[i].tau, r.points[i].tau);
    EXPECT_EQ(again.points[i].xi, r.points[i].xi);
  }
  EXPECT_NE(char_set_sample(sym, region, 5, 43).points[0].tau, r.points[0].tau);
}

TEST(Lemma21, PositiveOnSmallRunAndRejectsEmpty) {
  const auto sym = local(frac::MultiTermSpec::single(0.5), coeffs::identity(1), 0.05, 1.0);
  const auto r = char_set_sample(sym, SampleRegion::layer(0.05), 500, 1);
  EXPECT_TRUE(lemma21_check(sym, r.points).pass());
  EXPECT_THROW(lemma21_check(sym, {}), DomainError);
}

TEST(Garding, FirstTermVanishesOnCharacteristicSetAndIsMonotone) {
  const auto sym = local(frac::MultiTermSpec::single(1.5), coeffs::rotating_anisotropic(2), 0.05, 1.0);
  const auto chr = char_set_sample(sym, SampleRegion::layer(0.05), 200, 3);
  const auto tc = garding_terms(sym, chr.points);
  for (double a : tc.a) EXPECT_LE(a, 1e-15);
  const auto samples = full_region_sample(sym, SampleRegion::layer(0.05), 2000, 4);
  const auto terms = garding_terms(sym, samples);
  double prev = -std::numeric_limits<double>::infinity();
  for (double v = 1e-4; v < 1e6; v *= 10.0) {
    EXPECT_GE(terms.min_ratio(v), prev);
    prev = terms.min_ratio(v);
  }
  const auto vs = find_varpi(terms);
  ASSERT_TRUE(vs.found);
  EXPECT_GT(vs.min_ratio, 0.0);
  EXPECT_DOUBLE_EQ(vs.varpi, 2.0 * vs.threshold);
  EXPECT_NEAR(garding_precondition_check(sym, samples, vs.varpi).min_ratio, vs.min_ratio, 1e-12);
}

TEST(Lemma61, StageFiveIsPositiveWithWeightsAboveOne) {
  const auto spec = frac::MultiTermSpec::single(0.5);
  const auto map = geometry::HolmgrenMap::make(Vec::Zero(1), 1.0, 0.05, 1.0, 5);
  const auto sym = stage_symbol(spec, coeffs::rotating_anisotropic(1), {0.05, 0.0}, map);
  const auto pts = char_set_sample(sym, SampleRegion::layer(0.05), 500, 8);
  const auto rep = lemma61_check(sym, map, pts.points);
  EXPECT_TRUE(rep.pass());
  EXPECT_EQ(rep.ellipticity_violations, 0u);
  EXPECT_GE(rep.max_weight_factor, 1.0);
}
