#pragma once

#include <filesystem>
#include <json.hpp>
#include <vector>

#include "fracucp/geometry.hpp"
#include "fracucp/pde_solver.hpp"
#include "fracucp/symbol_engine.hpp"

namespace fracucp::carleman {

using symbol::CarlemanWeightParams;

/// Which left-hand side is used: the D_t term is present for alpha >= 4/3.
enum class Branch { below_four_thirds, four_thirds_and_above };

inline Branch branch_for(double alpha) {
  return alpha >= 4.0 / 3.0 ? Branch::four_thirds_and_above : Branch::below_four_thirds;
}

/// Tensor bump phi((t - t_c)/r_t) prod_j phi((x_j - c_j)/r_j), phi(s) = (1 - s^2)^4 on |s| < 1.
struct Bump {
  double t_center = 0.5;
  double t_radius = 0.3;
  Vec x_center;
  Vec x_radius;

  double operator()(double t, const Vec& x) const;
};

double bump_profile(double s);

/// The operator P(t, x, D_t, D_x) whose weighted norm forms the right-hand side:
/// e^{-t}(sum q_l d_t^{alpha_l} - L~ - l_1)(e^{t} v) in Holmgren coordinates, with
/// L~ = (M^T a M) : grad^2 + 2c sum_{j<n} a_jj d_{x_n} and the tilted-time term
/// (sX/T) sum_l q_l lowered_order(d_{x_n} v).
struct HolmgrenProblem {
  frac::MultiTermSpec spec;
  EllipticCoeffField coeffs;  // a(t, y), original coordinates
  geometry::HolmgrenMap map;
  bool include_l1 = false;
  pde::LowerOrderTerm l1;  // in Holmgren coordinates; used only with include_l1
};

/// Discrete P v on every node (zero on the boundary and at t = 0).
std::vector<double> apply_holmgren_operator(const pde::SolutionField& v, const HolmgrenProblem& problem);

/// beta^3 int e^{2 beta psi} |v|^2 + beta int e^{2 beta psi} |grad_x v|^2
///   [+ beta^{3 - 4/alpha} int e^{2 beta psi} |d_t v|^2 on the upper branch],
/// trapezoidal quadrature in (t, x), fourth-order centred differences.
/// All weighted integrals use e^{2 beta (psi - psi_ref)}; psi_ref = 0 gives the plain value,
/// a positive psi_ref keeps large beta X^2 within range.
double carleman_lhs(const pde::SolutionField& v, double beta, const CarlemanWeightParams& weight, Branch branch,
                    double alpha, double psi_ref = 0.0);

/// int e^{2 beta psi} |P v|^2 by the same quadrature.
double carleman_rhs(const pde::SolutionField& v, double beta, const CarlemanWeightParams& weight,
                    const HolmgrenProblem& problem, double psi_ref = 0.0);

/// Weighted trapezoid of a node-wise field: int e^{2 beta (psi(x_n) - psi_ref)} f.
double weighted_integral(const pde::SpaceTimeGrid& grid, const std::vector<double>& f, double beta,
                         const CarlemanWeightParams& weight, double psi_ref = 0.0);

/// max of psi over the grid's x_n nodes.
double max_psi(const pde::SpaceTimeGrid& grid, const CarlemanWeightParams& weight);

struct BetaSweepConfig {
  std::vector<double> betas{25, 50, 100, 200, 400};
  HolmgrenProblem problem;
  CarlemanWeightParams weight;
  pde::SpaceTimeGrid grid;
  std::vector<Bump> family;
  /// Max over min ratio allowed per test function.
  double spread_limit = 100.0;
};

/// lhs and rhs carry the common factor e^{-log_scale}, log_scale = 2 beta max psi.
struct SweepRow {
  double beta = 0.0;
  double log_scale = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  std::size_t test_id = 0;
  bool flagged = false;  // rhs == 0 with lhs > 0, or a non-finite value
};

struct SweepSummary {
  std::vector<SweepRow> rows;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  /// max over test functions of (max ratio / min ratio) across beta.
  double worst_spread = 0.0;
  bool all_finite = true;
  bool spread_ok = true;
  /// True when some test function's ratio increases at every step of the top half of the grid.
  bool monotone_divergence = false;
  bool pass() const noexcept { return all_finite && spread_ok && !monotone_divergence; }
};

/// Rows for every (bump, beta); P v is computed once per bump.
SweepSummary beta_sweep(const BetaSweepConfig& config);

/// Five bumps of similar width inside t in (0, T), x_n in (0, X), |x'| < r.
std::vector<Bump> default_family(int n, double T, double X, double tangential_half_width);

void write_sweep_csv(const SweepSummary& s, const std::filesystem::path& path);
nlohmann::json to_json(const SweepSummary& s);

}  // namespace fracucp::carleman
