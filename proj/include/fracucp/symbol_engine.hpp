#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "fracucp/coeff_field.hpp"
#include "fracucp/fractional_ops.hpp"
#include "fracucp/geometry.hpp"

namespace fracucp::symbol {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;

/// Cotangent sample (t, x; tau, xi) plus the Carleman dual sigma.
struct PhasePoint {
  double t = 0.0;
  Vec x;
  double tau = 0.0;
  Vec xi;
  double sigma = 0.0;

  int dim() const noexcept { return static_cast<int>(x.size()); }
};

/// Weight psi(x) = (x_n - 2X)^2 / 2 + psi_shift.
struct CarlemanWeightParams {
  double X = 0.05;
  double psi_shift = 0.0;

  double x_tilde(double xn) const noexcept { return xn - 2.0 * X; }
  double psi(double xn) const noexcept { return 0.5 * x_tilde(xn) * x_tilde(xn) + psi_shift; }
};

/// A complex symbol value and, when requested, its partials in every phase variable.
struct SymbolValue {
  cplx value;
  cplx d_tau;
  cplx d_t;
  CVec d_xi;
  CVec d_x;
};

struct BracketReport {
  double bracket = 0.0;    // {Re p, Im p} including the (tau, t) pair
  double principal = 0.0;  // spatial pairs only
  double scale = 0.0;      // (|xi|^2 + sigma^2 + |tau|^alpha)^{3/2}
  double ratio = 0.0;      // principal / scale
};

/// ((1 + |xi|^2)^{1/alpha} + i tau)^{m alpha / 2}, principal branch.
cplx lambda_symbol(double m, double alpha, double tau, const Vec& xi);

/// min{sqrt(2)/2, sin(pi (1 - alpha/2))}. Throws DomainError outside (0,2).
double c_alpha(double alpha);
/// min{sin(alpha pi / 4), sin(alpha pi / 2)}: the infimum of |Im(1+i tau)^alpha| / |1+i tau|^alpha
/// over |tau| >= 1 (attained at |tau| = 1 or |tau| -> infinity).
double c_alpha_sharp(double alpha);
/// cos(alpha pi / 4), a lower bound of Re(1+i tau)^alpha / |1+i tau|^alpha for |tau| <= 1.
double epsilon0(double alpha);

/// F(tau) = sum_l q_l (1 + i tau)^{alpha_l} and its tau-derivative.
cplx time_symbol(const frac::MultiTermSpec& spec, double tau);
cplx time_symbol_derivative(const frac::MultiTermSpec& spec, double tau);

/// Factor multiplying q_l (X/T) xi_n in the lower-order part of the total symbol,
/// as a function of (leading order alpha, alpha_l, tau).
using LowerOrderFactor = std::function<cplx(double alpha, double alpha_l, double tau)>;
/// i^alpha (tau - i)^{alpha_l - 1}.
cplx default_lower_order_factor(double alpha, double alpha_l, double tau);

struct TotalSymbolOptions {
  bool include_lower_order = true;
  LowerOrderFactor lower_order_factor = default_lower_order_factor;
};

/// Total symbol in Holmgren coordinates:
///   F(tau) + eta^T a eta + sum_l q_l (sX/T) factor_l(tau) xi_n,   eta = M(x) xi,
/// with a = coeffs(t, x) already expressed in x (see geometry::compose_with_holmgren).
/// Requires sigma == 0 (DomainError) and matching dimensions (ShapeError).
SymbolValue total_symbol(const PhasePoint& point, const frac::MultiTermSpec& spec,
                         const EllipticCoeffField& coeffs, const geometry::HolmgrenMap& map,
                         const TotalSymbolOptions& options = {});

enum class Part { full, first, second };

/// Weighted principal symbol p~_psi: the principal part with xi_n replaced by
/// zeta_n = xi_n + i|sigma| X~, X~ = x_n - 2X,
///   p~_psi = F(tau) + eta^T a eta,  eta_j = xi_j + 2c x_j zeta_n (j<n),  eta_n = zeta_n.
/// Split: p~_1 = zeta^T a zeta with zeta = (xi', zeta_n), p~_2 = p~_psi - p~_1 (assembled
/// term by term, not by subtraction).
class WeightedSymbol {
 public:
  WeightedSymbol(frac::MultiTermSpec spec, EllipticCoeffField coeffs, CarlemanWeightParams weight,
                 double c);

  cplx value(const PhasePoint& p, Part part = Part::full) const;
  /// Analytic partials of p~_psi.
  SymbolValue gradients(const PhasePoint& p) const;
  BracketReport bracket(const PhasePoint& p) const;
  /// |xi|^2 + sigma^2 + |tau|^alpha.
  double base_scale(const PhasePoint& p) const;

  const frac::MultiTermSpec& spec() const noexcept { return spec_; }
  const EllipticCoeffField& coeffs() const noexcept { return coeffs_; }
  const CarlemanWeightParams& weight() const noexcept { return weight_; }
  double c() const noexcept { return c_; }
  double alpha() const noexcept { return spec_.leading_order(); }

 private:
  frac::MultiTermSpec spec_;
  EllipticCoeffField coeffs_;
  CarlemanWeightParams weight_;
  double c_;
};

/// Gradient of a real symbol in all phase variables.
struct RealGradient {
  double d_tau = 0.0;
  double d_t = 0.0;
  Vec d_xi;
  Vec d_x;
};

RealGradient real_part(const SymbolValue& s);
RealGradient imag_part(const SymbolValue& s);

/// {f, g} = sum_j (d_xi_j f d_x_j g - d_x_j f d_xi_j g), plus the (tau, t) pair when
/// `with_time` is set.
double poisson_bracket(const RealGradient& f, const RealGradient& g, bool with_time = true);

// ---------------------------------------------------------------------------
// Sampling.

/// Spatial-temporal box of the local argument: t in [t_min, t_max], |x'| <= tangential_radius,
/// x_n in [xn_min, xn_max].
struct SampleRegion {
  double t_min = 0.0;
  double t_max = 1.0;
  double tangential_radius = 0.0;
  double xn_min = 0.0;
  double xn_max = 0.0;

  /// |x'| <= sqrt(X), 0 <= x_n <= X.
  static SampleRegion layer(double X, double T = 1.0);
};

struct CharSampleResult {
  std::vector<PhasePoint> points;
  std::size_t requested = 0;
  std::size_t attempts = 0;
  /// max over points of |p~_psi| / (|xi|^2 + sigma^2 + |tau|^alpha).
  double max_residual = 0.0;
  /// max over points of (|xi|^2 + |1 + i tau|^alpha) / (sigma^2 X^2).
  double max_K = 0.0;

  bool complete() const noexcept { return points.size() == requested; }
};

struct CharSampleOptions {
  double tol = 1e-8;
  /// Seeds tried per requested point before returning a partial result.
  std::size_t seed_budget_factor = 20;
  /// Base-point offset applied to the stream index (lets callers draw disjoint sets).
  std::uint64_t stream_offset = 0;
};

/// Points with p~_psi = 0 in `region`. For a random (t, x, direction of xi, sigma) the
/// symbol is F(tau) + lambda^2 Q_r - sigma^2 X~^2 Q_m + 2i lambda sigma X~ B with
/// xi = lambda * direction; Im = 0 fixes lambda and Re = 0 is solved for tau by
/// bracketed root finding. sigma is drawn above sqrt(sum q / (X~^2 Q_m)), which
/// guarantees a root. Points failing the tol certificate are discarded.
CharSampleResult char_set_sample(const WeightedSymbol& symbol, const SampleRegion& region,
                                 std::size_t n_samples, std::uint64_t seed,
                                 const CharSampleOptions& options = {});

struct MinRatioReport {
  double min_ratio = 0.0;
  std::size_t argmin = 0;
  std::size_t count = 0;
  bool pass() const noexcept { return count > 0 && min_ratio > 0.0; }
};

/// min over samples of principal bracket / (|xi|^2 + sigma^2 + |tau|^alpha)^{3/2}.
/// Throws DomainError on an empty sample set or a sample at the origin.
MinRatioReport lemma21_check(const WeightedSymbol& symbol, const std::vector<PhasePoint>& samples);

/// Mixture over `region`: half log-uniform phase points (|xi_j|, sigma in [1e-2, 1e4],
/// |tau| in [1e-2, 1e6]) and half characteristic points with tau and xi perturbed by
/// relative amounts in [1e-8, 1e-1] (exact points for a tenth of them).
std::vector<PhasePoint> full_region_sample(const WeightedSymbol& symbol, const SampleRegion& region,
                                           std::size_t n_samples, std::uint64_t seed);

/// Per-sample terms of the Garding-type ratio
///   [varpi S^{-1/2} |p~_psi|^2 + 2 {Re p~_psi, Im p~_psi}] / S^{3/2},  S = |xi|^2+sigma^2+|tau|^alpha,
/// split as varpi * a_i + b_i.
struct GardingTerms {
  std::vector<double> a;
  std::vector<double> b;
  double min_ratio(double varpi) const;
};

GardingTerms garding_terms(const WeightedSymbol& symbol, const std::vector<PhasePoint>& samples);
MinRatioReport garding_precondition_check(const WeightedSymbol& symbol,
                                          const std::vector<PhasePoint>& samples, double varpi);

struct VarpiSearch {
  bool found = false;
  double threshold = 0.0;  // smallest varpi (to bisection accuracy) with a positive minimum
  double varpi = 0.0;      // 2 * threshold, the reported operating point
  double min_ratio = 0.0;  // minimum ratio at `varpi`
};

/// Log-scale bisection on [varpi_lo, varpi_hi]; the minimum is non-decreasing in varpi.
VarpiSearch find_varpi(const GardingTerms& terms, double varpi_lo = 1e-8, double varpi_hi = 1e12);

struct Lemma61Report {
  MinRatioReport ratio;
  std::size_t ellipticity_violations = 0;
  double max_weight_factor = 0.0;  // max (1 + y~_n^2)^{3/2}
  bool pass() const noexcept { return ratio.pass() && ellipticity_violations == 0; }
};

/// Stage-s version: `symbol` carries the globally transformed coefficients composed
/// with `stage_map` (see stage_symbol). For each sample, y~ = holmgren_inverse(t, x),
/// the weighted ellipticity delta |w.v|^2 <= a~(v,v) <= |w.v|^2/delta is checked
/// (spectrum of diag(w)^{-1} a~ diag(w)^{-1} and v = xi), and the ratio uses
///   (1 + y~_n^2)^{3/2} (|w.xi|^2 + (w_n sigma)^2 + |tau|^alpha)^{3/2}.
Lemma61Report lemma61_check(const WeightedSymbol& symbol, const geometry::HolmgrenMap& stage_map,
                            const std::vector<PhasePoint>& samples);

/// Weighted symbol for stage s: coefficients a~ = global_transform(a) composed with `stage_map`.
WeightedSymbol stage_symbol(const frac::MultiTermSpec& spec, const EllipticCoeffField& a,
                            const CarlemanWeightParams& weight, const geometry::HolmgrenMap& stage_map);

}  // namespace fracucp::symbol
