#include "fracucp/symbol_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <boost/math/tools/toms748_solve.hpp>

#include "fracucp/errors.hpp"
#include "fracucp/parallel.hpp"

namespace fracucp::symbol {

namespace {

constexpr cplx kI{0.0, 1.0};

void check_order(double alpha, const char* who) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError(std::string(who) + ": order must lie in (0,2)");
}

void check_point(const PhasePoint& p, int n) {
  if (p.x.size() != n || p.xi.size() != n)
    throw ShapeError("phase point dimension does not match the coefficient field");
}

}  // namespace

cplx lambda_symbol(double m, double alpha, double tau, const Vec& xi) {
  check_order(alpha, "lambda_symbol");
  const cplx base(std::pow(1.0 + xi.squaredNorm(), 1.0 / alpha), tau);
  return std::pow(base, m * alpha / 2.0);
}

double c_alpha(double alpha) {
  check_order(alpha, "c_alpha");
  return std::min(std::numbers::sqrt2 / 2.0, std::sin(std::numbers::pi * (1.0 - alpha / 2.0)));
}

double c_alpha_sharp(double alpha) {
  check_order(alpha, "c_alpha_sharp");
  return std::min(std::sin(alpha * std::numbers::pi / 4.0), std::sin(alpha * std::numbers::pi / 2.0));
}

double epsilon0(double alpha) {
  check_order(alpha, "epsilon0");
  return std::cos(alpha * std::numbers::pi / 4.0);
}

cplx time_symbol(const frac::MultiTermSpec& spec, double tau) {
  const cplx base(1.0, tau);
  cplx sum = 0.0;
  for (std::size_t l = 0; l < spec.size(); ++l) sum += spec.weight(l) * std::pow(base, spec.order(l));
  return sum;
}

cplx time_symbol_derivative(const frac::MultiTermSpec& spec, double tau) {
  const cplx base(1.0, tau);
  cplx sum = 0.0;
  for (std::size_t l = 0; l < spec.size(); ++l) {
    const double a = spec.order(l);
    sum += spec.weight(l) * a * kI * std::pow(base, a - 1.0);
  }
  return sum;
}

cplx default_lower_order_factor(double alpha, double alpha_l, double tau) {
  return std::pow(kI, alpha) * std::pow(cplx(tau, -1.0), alpha_l - 1.0);
}

SymbolValue total_symbol(const PhasePoint& point, const frac::MultiTermSpec& spec,
                         const EllipticCoeffField& coeffs, const geometry::HolmgrenMap& map,
                         const TotalSymbolOptions& options) {
  const int n = coeffs.n;
  check_point(point, n);
  if (map.dim() != n) throw ShapeError("total_symbol: map dimension mismatch");
  if (point.sigma != 0.0) throw DomainError("total_symbol: sigma must be 0");
  const Vec eta = geometry::chain_matrix(point.x, map) * point.xi;
  SymbolValue out;
  out.value = time_symbol(spec, point.tau) + eta.dot(coeffs.value(point.t, point.x) * eta);
  if (options.include_lower_order) {
    const double alpha = spec.leading_order();
    cplx lower = 0.0;
    for (std::size_t l = 0; l < spec.size(); ++l)
      lower += spec.weight(l) * options.lower_order_factor(alpha, spec.order(l), point.tau);
    out.value += map.drift() * lower * point.xi[n - 1];
  }
  return out;
}

WeightedSymbol::WeightedSymbol(frac::MultiTermSpec spec, EllipticCoeffField coeffs,
                               CarlemanWeightParams weight, double c)
    : spec_(std::move(spec)), coeffs_(std::move(coeffs)), weight_(weight), c_(c) {
  if (!(weight_.X > 0.0)) throw DomainError("WeightedSymbol: X must be positive");
}

namespace {

struct Assembled {
  cplx zeta_n;
  CVec eta;
  CVec m;  // d eta / d xi_n
};

Assembled assemble(const PhasePoint& p, double c, const CarlemanWeightParams& w) {
  const int n = p.dim();
  Assembled a;
  a.zeta_n = cplx(p.xi[n - 1], std::abs(p.sigma) * w.x_tilde(p.x[n - 1]));
  a.eta.resize(n);
  a.m.resize(n);
  for (int j = 0; j + 1 < n; ++j) {
    a.eta[j] = p.xi[j] + 2.0 * c * p.x[j] * a.zeta_n;
    a.m[j] = 2.0 * c * p.x[j];
  }
  a.eta[n - 1] = a.zeta_n;
  a.m[n - 1] = 1.0;
  return a;
}

cplx quad(const Mat& a, const CVec& u, const CVec& v) { return u.transpose() * a.cast<cplx>() * v; }

}  // namespace

cplx WeightedSymbol::value(const PhasePoint& p, Part part) const {
  const int n = coeffs_.n;
  check_point(p, n);
  const Mat a = coeffs_.value(p.t, p.x);
  const Assembled s = assemble(p, c_, weight_);
  if (part == Part::full) return time_symbol(spec_, p.tau) + quad(a, s.eta, s.eta);
  CVec zeta = p.xi.cast<cplx>();
  zeta[n - 1] = s.zeta_n;
  if (part == Part::first) return quad(a, zeta, zeta);
  // d_j = 2c x_j zeta_n for j < n
  cplx sum = time_symbol(spec_, p.tau);
  for (int j = 0; j + 1 < n; ++j) {
    const cplx dj = 2.0 * c_ * p.x[j] * s.zeta_n;
    sum += 2.0 * a(j, n - 1) * dj * s.zeta_n;
    for (int k = 0; k + 1 < n; ++k) {
      const cplx dk = 2.0 * c_ * p.x[k] * s.zeta_n;
      sum += a(j, k) * dj * dk + 2.0 * a(j, k) * p.xi[j] * dk;
    }
  }
  return sum;
}

SymbolValue WeightedSymbol::gradients(const PhasePoint& p) const {
  const int n = coeffs_.n;
  check_point(p, n);
  const Mat a = coeffs_.value(p.t, p.x);
  const Assembled s = assemble(p, c_, weight_);
  const CVec a_eta = a.cast<cplx>() * s.eta;
  const double abs_sigma = std::abs(p.sigma);

  SymbolValue out;
  out.value = time_symbol(spec_, p.tau) + (s.eta.array() * a_eta.array()).sum();
  out.d_tau = time_symbol_derivative(spec_, p.tau);
  out.d_t = quad(coeffs_.d_t(p.t, p.x), s.eta, s.eta);
  out.d_xi.resize(n);
  out.d_x.resize(n);
  for (int k = 0; k + 1 < n; ++k) {
    out.d_xi[k] = 2.0 * a_eta[k];
    out.d_x[k] = quad(coeffs_.d_y(k, p.t, p.x), s.eta, s.eta) + 4.0 * c_ * s.zeta_n * a_eta[k];
  }
  const cplx a_eta_m = (a_eta.array() * s.m.array()).sum();
  out.d_xi[n - 1] = 2.0 * a_eta_m;
  out.d_x[n - 1] = quad(coeffs_.d_y(n - 1, p.t, p.x), s.eta, s.eta) + 2.0 * kI * abs_sigma * a_eta_m;
  return out;
}

double WeightedSymbol::base_scale(const PhasePoint& p) const {
  return p.xi.squaredNorm() + p.sigma * p.sigma + std::pow(std::abs(p.tau), alpha());
}

BracketReport WeightedSymbol::bracket(const PhasePoint& p) const {
  const SymbolValue g = gradients(p);
  BracketReport r;
  for (Eigen::Index k = 0; k < g.d_xi.size(); ++k) r.principal += std::imag(std::conj(g.d_xi[k]) * g.d_x[k]);
  r.bracket = r.principal + std::imag(std::conj(g.d_tau) * g.d_t);
  r.scale = std::pow(base_scale(p), 1.5);
  r.ratio = r.principal / r.scale;
  return r;
}

RealGradient real_part(const SymbolValue& s) {
  return {s.d_tau.real(), s.d_t.real(), s.d_xi.real(), s.d_x.real()};
}

RealGradient imag_part(const SymbolValue& s) {
  return {s.d_tau.imag(), s.d_t.imag(), s.d_xi.imag(), s.d_x.imag()};
}

double poisson_bracket(const RealGradient& f, const RealGradient& g, bool with_time) {
  if (f.d_xi.size() != g.d_xi.size() || f.d_x.size() != g.d_x.size())
    throw ShapeError("poisson_bracket: gradient dimensions differ");
  double sum = f.d_xi.dot(g.d_x) - f.d_x.dot(g.d_xi);
  if (with_time) sum += f.d_tau * g.d_t - f.d_t * g.d_tau;
  return sum;
}

SampleRegion SampleRegion::layer(double X, double T) {
  SampleRegion r;
  r.t_max = T;
  r.tangential_radius = std::sqrt(X);
  r.xn_max = X;
  return r;
}

namespace {

Vec unit_ball_point(SampleRng& rng, int dim) {
  Vec v(dim);
  if (dim == 0) return v;
  do {
    for (int j = 0; j < dim; ++j) v[j] = rng.uniform(-1.0, 1.0);
  } while (v.squaredNorm() > 1.0);
  return v;
}

Vec unit_direction(SampleRng& rng, int dim) {
  Vec v;
  do v = unit_ball_point(rng, dim);
  while (v.norm() < 1e-3);
  return v / v.norm();
}

void draw_base(SampleRng& rng, const SampleRegion& region, int n, PhasePoint& p) {
  p.t = rng.uniform(region.t_min, region.t_max);
  p.x.resize(n);
  p.x.head(n - 1) = region.tangential_radius * unit_ball_point(rng, n - 1);
  p.x[n - 1] = rng.uniform(region.xn_min, region.xn_max);
}

std::optional<PhasePoint> characteristic_point(const WeightedSymbol& symbol, const SampleRegion& region,
                                               SampleRng& rng, double tol) {
  const int n = symbol.coeffs().n;
  const auto& spec = symbol.spec();
  PhasePoint p;
  draw_base(rng, region, n, p);
  const Vec dir = unit_direction(rng, n);

  const Mat a = symbol.coeffs().value(p.t, p.x);
  Vec m = Vec::Unit(n, n - 1);
  for (int j = 0; j + 1 < n; ++j) m[j] = 2.0 * symbol.c() * p.x[j];
  Vec eta_dir = dir;
  eta_dir[n - 1] = 0.0;
  eta_dir += dir[n - 1] * m;
  const double q_r = eta_dir.dot(a * eta_dir);
  const double q_m = m.dot(a * m);
  const double b = eta_dir.dot(a * m);
  if (std::abs(b) < 1e-3 * std::sqrt(q_r * q_m)) return std::nullopt;

  const double xt = symbol.weight().x_tilde(p.x[n - 1]);
  if (xt == 0.0) return std::nullopt;
  const double sigma_min = std::sqrt(spec.weight_sum() / (xt * xt * q_m));
  p.sigma = sigma_min * (1.0 + std::pow(10.0, rng.uniform(-3.0, 3.0)));
  const double s2x2 = p.sigma * p.sigma * xt * xt;

  auto g = [&](double tau) {
    const cplx f = time_symbol(spec, tau);
    return f.real() + q_r * f.imag() * f.imag() / (4.0 * s2x2 * b * b) - s2x2 * q_m;
  };
  double hi = 1.0;
  int grow = 0;
  while (g(hi) <= 0.0) {
    hi *= 2.0;
    if (++grow > 200) return std::nullopt;
  }
  boost::uintmax_t iters = 300;
  const auto bracket = boost::math::tools::toms748_solve(
      g, 0.0, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  double tau = 0.5 * (bracket.first + bracket.second);
  double lambda = -time_symbol(spec, tau).imag() / (2.0 * p.sigma * xt * b);
  if (rng.uniform() < 0.5) {
    tau = -tau;
    lambda = -lambda;
  }
  p.tau = tau;
  p.xi = lambda * dir;
  if (std::abs(symbol.value(p)) > tol * symbol.base_scale(p)) return std::nullopt;
  return p;
}

}  // namespace

CharSampleResult char_set_sample(const WeightedSymbol& symbol, const SampleRegion& region,
                                 std::size_t n_samples, std::uint64_t seed,
                                 const CharSampleOptions& options) {
  if (!(options.tol > 0.0)) throw DomainError("char_set_sample: tol must be positive");
  CharSampleResult out;
  out.requested = n_samples;
  const std::size_t budget = n_samples * std::max<std::size_t>(options.seed_budget_factor, 1);
  const std::size_t batch = std::max<std::size_t>(n_samples, 64);
  std::size_t next = 0;
  while (out.points.size() < n_samples && next < budget) {
    const std::size_t count = std::min(batch, budget - next);
    std::vector<std::optional<PhasePoint>> found(count);
    parallel_for(count, [&](std::size_t i) {
      SampleRng rng(seed, options.stream_offset + next + i);
      found[i] = characteristic_point(symbol, region, rng, options.tol);
    });
    for (std::size_t i = 0; i < count && out.points.size() < n_samples; ++i) {
      ++out.attempts;
      if (found[i]) out.points.push_back(std::move(*found[i]));
    }
    next += count;
  }
  const double X = symbol.weight().X;
  for (const auto& p : out.points) {
    out.max_residual = std::max(out.max_residual, std::abs(symbol.value(p)) / symbol.base_scale(p));
    const double k = (p.xi.squaredNorm() + std::pow(std::abs(cplx(1.0, p.tau)), symbol.alpha())) /
                     (p.sigma * p.sigma * X * X);
    out.max_K = std::max(out.max_K, k);
  }
  return out;
}

namespace {

MinRatioReport reduce_min(const std::vector<double>& ratios) {
  MinRatioReport r;
  r.count = ratios.size();
  const auto it = std::min_element(ratios.begin(), ratios.end());
  r.min_ratio = *it;
  r.argmin = static_cast<std::size_t>(it - ratios.begin());
  return r;
}

void require_samples(const std::vector<PhasePoint>& samples, const char* who) {
  if (samples.empty()) throw DomainError(std::string(who) + ": empty sample set");
}

}  // namespace

MinRatioReport lemma21_check(const WeightedSymbol& symbol, const std::vector<PhasePoint>& samples) {
  require_samples(samples, "lemma21_check");
  std::vector<double> ratios(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const BracketReport b = symbol.bracket(samples[i]);
    if (!(b.scale > 0.0)) throw DomainError("lemma21_check: sample at the origin");
    ratios[i] = b.ratio;
  });
  return reduce_min(ratios);
}

std::vector<PhasePoint> full_region_sample(const WeightedSymbol& symbol, const SampleRegion& region,
                                           std::size_t n_samples, std::uint64_t seed) {
  const int n = symbol.coeffs().n;
  const std::size_t n_char = n_samples / 2;
  CharSampleOptions opts;
  opts.stream_offset = 0x40000000ULL;
  CharSampleResult chars = char_set_sample(symbol, region, n_char, seed, opts);
  std::vector<PhasePoint> out(n_samples);
  parallel_for(n_samples, [&](std::size_t i) {
    SampleRng rng(seed, i);
    auto sign = [&] { return rng.uniform() < 0.5 ? -1.0 : 1.0; };
    if (i % 2 == 1 && i / 2 < chars.points.size()) {
      PhasePoint p = chars.points[i / 2];
      if (rng.uniform() >= 0.1) {
        p.tau *= 1.0 + sign() * std::pow(10.0, rng.uniform(-8.0, -1.0));
        for (int j = 0; j < n; ++j) p.xi[j] *= 1.0 + sign() * std::pow(10.0, rng.uniform(-8.0, -1.0));
      }
      out[i] = std::move(p);
      return;
    }
    PhasePoint p;
    draw_base(rng, region, n, p);
    p.xi.resize(n);
    for (int j = 0; j < n; ++j) p.xi[j] = sign() * std::pow(10.0, rng.uniform(-2.0, 4.0));
    p.sigma = std::pow(10.0, rng.uniform(-2.0, 4.0));
    p.tau = sign() * std::pow(10.0, rng.uniform(-2.0, 6.0));
    out[i] = std::move(p);
  });
  return out;
}

double GardingTerms::min_ratio(double varpi) const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) m = std::min(m, varpi * a[i] + b[i]);
  return m;
}

GardingTerms garding_terms(const WeightedSymbol& symbol, const std::vector<PhasePoint>& samples) {
  require_samples(samples, "garding_terms");
  GardingTerms t;
  t.a.resize(samples.size());
  t.b.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const PhasePoint& p = samples[i];
    const double s = symbol.base_scale(p);
    if (!(s > 0.0)) throw DomainError("garding_terms: sample at the origin");
    const double s32 = std::pow(s, 1.5);
    t.a[i] = std::norm(symbol.value(p)) / std::sqrt(s) / s32;
    t.b[i] = 2.0 * symbol.bracket(p).bracket / s32;
  });
  return t;
}

MinRatioReport garding_precondition_check(const WeightedSymbol& symbol,
                                          const std::vector<PhasePoint>& samples, double varpi) {
  if (!(varpi > 0.0)) throw DomainError("garding_precondition_check: varpi must be positive");
  const GardingTerms t = garding_terms(symbol, samples);
  std::vector<double> ratios(samples.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) ratios[i] = varpi * t.a[i] + t.b[i];
  return reduce_min(ratios);
}

VarpiSearch find_varpi(const GardingTerms& terms, double varpi_lo, double varpi_hi) {
  VarpiSearch r;
  if (!(terms.min_ratio(varpi_hi) > 0.0)) {
    r.varpi = varpi_hi;
    r.min_ratio = terms.min_ratio(varpi_hi);
    return r;
  }
  double lo = std::log(varpi_lo);
  double hi = std::log(varpi_hi);
  if (terms.min_ratio(varpi_lo) > 0.0) {
    hi = lo;
  } else {
    while (hi - lo > 1e-3) {
      const double mid = 0.5 * (lo + hi);
      (terms.min_ratio(std::exp(mid)) > 0.0 ? hi : lo) = mid;
    }
  }
  r.found = true;
  r.threshold = std::exp(hi);
  r.varpi = 2.0 * r.threshold;
  r.min_ratio = terms.min_ratio(r.varpi);
  return r;
}

WeightedSymbol stage_symbol(const frac::MultiTermSpec& spec, const EllipticCoeffField& a,
                            const CarlemanWeightParams& weight, const geometry::HolmgrenMap& stage_map) {
  return WeightedSymbol(spec, geometry::compose_with_holmgren(geometry::global_transform(a), stage_map),
                        weight, stage_map.c);
}

Lemma61Report lemma61_check(const WeightedSymbol& symbol, const geometry::HolmgrenMap& stage_map,
                            const std::vector<PhasePoint>& samples) {
  require_samples(samples, "lemma61_check");
  const double delta = symbol.coeffs().delta;
  std::vector<double> ratios(samples.size());
  std::vector<int> violations(samples.size(), 0);
  std::vector<double> factors(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const PhasePoint& p = samples[i];
    const int n = p.dim();
    const Vec yt = geometry::holmgren_inverse(p.t, p.x, stage_map);
    const Vec w = geometry::global_weights(yt);
    const Mat at = symbol.coeffs().value(p.t, p.x);
    const Vec winv = w.cwiseInverse();
    const Mat unweighted = winv.asDiagonal() * at * winv.asDiagonal();
    const double slack = 1e-12;
    bool ok = check_ellipticity(unweighted, delta * (1.0 - slack)).ok;
    const Vec wxi = w.cwiseProduct(p.xi);
    const double form = p.xi.dot(at * p.xi);
    ok = ok && delta * wxi.squaredNorm() <= form * (1.0 + slack) &&
         form <= wxi.squaredNorm() / delta * (1.0 + slack);
    violations[i] = ok ? 0 : 1;
    factors[i] = w[n - 1];
    const double sigma_t = w[n - 1] * p.sigma;
    const double s = wxi.squaredNorm() + sigma_t * sigma_t + std::pow(std::abs(p.tau), symbol.alpha());
    ratios[i] = symbol.bracket(p).principal / (w[n - 1] * std::pow(s, 1.5));
  });
  Lemma61Report r;
  r.ratio = reduce_min(ratios);
  for (int v : violations) r.ellipticity_violations += static_cast<std::size_t>(v);
  r.max_weight_factor = *std::max_element(factors.begin(), factors.end());
  return r;
}

}  // namespace fracucp::symbol
