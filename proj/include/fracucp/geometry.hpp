#pragma once

#include <json.hpp>
#include <vector>

#include "fracucp/coeff_field.hpp"
#include "fracucp/fractional_ops.hpp"

namespace fracucp::geometry {

/// Holmgren-type change of variables at stage s >= 1:
///   x' = y' - y_hat',  x_n = y_n + c |y' - y_hat'|^2 + s X t / T - (s-1) X,  t~ = t.
/// Stage 1 is the local transform; later stages are the continuation steps.
struct HolmgrenMap {
  /// Throws DomainError unless c >= 1, X > 0, T > 0, stage >= 1 and y_hat_n = 0.
  static HolmgrenMap make(Vec y_hat, double c, double X, double T, int stage = 1);

  int dim() const noexcept { return static_cast<int>(y_hat.size()); }
  /// d x_n / d t.
  double drift() const noexcept { return stage * X / T; }
  double offset() const noexcept { return -(stage - 1) * X; }

  Vec y_hat;
  double c = 1.0;
  double X = 0.1;
  double T = 1.0;
  int stage = 1;
};

Vec holmgren_forward(double t, const Vec& y, const HolmgrenMap& map);
Vec holmgren_inverse(double t, const Vec& x, const HolmgrenMap& map);

/// Chain-rule matrix M(x): d/dy_j = sum_p M_jp d/dx_p, i.e. eta = M xi with
/// eta_j = xi_j + 2 c x_j xi_n (j < n), eta_n = xi_n.
Mat chain_matrix(const Vec& x, const HolmgrenMap& map);

/// a(t, y(t,x)) as a field over Holmgren coordinates, with chain-rule derivatives.
EllipticCoeffField compose_with_holmgren(const EllipticCoeffField& a, const HolmgrenMap& map);

/// The multi-term operator sum q_l d_t^{alpha_l} - L written in Holmgren
/// coordinates:
///   second order   M^T a M   (the quadratic form of the total symbol),
///   first order    2c sum_{j<n} a_jj d_{x_n}   (from d_{y_j} acting on 2c x_j),
///   time drift     (sX/T) d_t^{alpha_l - 1} d_{x_n}  per fractional term.
struct HolmgrenOperator {
  EllipticCoeffField coeffs;  // a(t, y(t,x)), untransformed matrix
  HolmgrenMap map;
  frac::MultiTermSpec spec;

  Mat effective_matrix(double t, const Vec& x) const;
  Vec first_order(double t, const Vec& x) const;
  double time_drift() const noexcept { return map.drift(); }
  /// Field whose value is effective_matrix, for solvers that take a plain field.
  EllipticCoeffField effective_field() const;
};

HolmgrenOperator pushforward_operator(const EllipticCoeffField& a, const frac::MultiTermSpec& spec,
                                      const HolmgrenMap& map);

// ---------------------------------------------------------------------------
// Global diffeomorphism of the open cube (-1,1)^n onto R^n.

/// y~_j = y_j / sqrt(1 - y_j^2). Throws DomainError if some |y_j| >= 1.
Vec global_forward(const Vec& y);
/// y_j = y~_j / sqrt(1 + y~_j^2).
Vec global_inverse(const Vec& y_tilde);
/// Diagonal of d y~ / d y, (1 - y_j^2)^{-3/2}.
Vec global_jacobian(const Vec& y);
/// (1 + y~_j^2)^{3/2}, the factor relating d/dy_j to d/dy~_j.
Vec global_weights(const Vec& y_tilde);
/// a~_jk(t, y~) = a_jk(t, y(y~)) w_j w_k with w = global_weights(y~).
/// The result satisfies the weighted bound delta |w.eta|^2 <= a~(eta,eta) <= |w.eta|^2/delta.
EllipticCoeffField global_transform(const EllipticCoeffField& a);

// ---------------------------------------------------------------------------
// Cutoffs.

/// C-infinity step: 0 for s <= 0, 1 for s >= 1, strictly between otherwise.
double smooth_step(double s);

struct CutoffSpec {
  int zeta = 1;
  double epsilon = 0.5;
  double l = 0.5;  // box depth
  double X = 0.1;
  Vec y_hat;       // base point; tangential box is centred on y_hat'
};

/// chi(x_n) = 1 for x_n <= (1-eps) X, 0 for x_n >= X.
double chi(double xn, const CutoffSpec& spec);
/// kappa_zeta = 1 on Q_zeta, 0 off Q~_zeta, values in [0,1].
double kappa(const Vec& y, const CutoffSpec& spec);
bool in_q(const Vec& y, const CutoffSpec& spec);
bool in_q_tilde(const Vec& y, const CutoffSpec& spec);

// ---------------------------------------------------------------------------
// Continuation schedule.

/// E_s = {(t, y~): 0 < t < T, y~_n + s X t / T < s X, |y~'| < sqrt(X)}.
struct ContinuationRegion {
  int stage = 1;
  double T = 1.0;
  double X = 0.1;
  bool contains(double t, const Vec& y_tilde) const;
};

struct ContinuationStage {
  HolmgrenMap map;
  ContinuationRegion region;
};

std::vector<ContinuationStage> continuation_schedule(int n, double T, double X, int s_max,
                                                     double c = 1.0);

/// True when the stage map re-based at y_hat' = y~' sends (t, y~) into {x_n < X},
/// i.e. the point is reached by the stage-s local argument.
bool stage_reaches(const ContinuationStage& stage, double t, const Vec& y_tilde);

nlohmann::json to_json(const HolmgrenMap& map);
nlohmann::json to_json(const std::vector<ContinuationStage>& schedule);

}  // namespace fracucp::geometry
