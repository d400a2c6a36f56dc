#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace fracucp::frac {

/// Orders alpha_1 > ... > alpha_m of the multi-term time-fractional operator
/// sum_j q_j d_t^{alpha_j}, with weights q_j > 0 and q_1 = 1.
class MultiTermSpec {
 public:
  /// Throws DomainError unless 2 > orders[0] > ... > orders[m-1] > 0,
  /// weights > 0, weights[0] == 1 and both lists have the same length m >= 1.
  static MultiTermSpec make(std::vector<double> orders, std::vector<double> weights);
  static MultiTermSpec single(double alpha) { return make({alpha}, {1.0}); }

  std::size_t size() const noexcept { return orders_.size(); }
  double order(std::size_t j) const { return orders_.at(j); }
  double weight(std::size_t j) const { return weights_.at(j); }
  double leading_order() const noexcept { return orders_.front(); }
  double weight_sum() const noexcept;
  const std::vector<double>& orders() const noexcept { return orders_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  MultiTermSpec(std::vector<double> orders, std::vector<double> weights)
      : orders_(std::move(orders)), weights_(std::move(weights)) {}
  std::vector<double> orders_;
  std::vector<double> weights_;
};

/// Uniform time grid t_k = k * dt, k = 0..n_steps.
struct TimeGrid {
  TimeGrid(double dt, std::size_t n_steps);
  static TimeGrid over(double horizon, std::size_t n_steps) {
    return TimeGrid(horizon / static_cast<double>(n_steps), n_steps);
  }

  double node(std::size_t k) const noexcept { return static_cast<double>(k) * dt; }
  double horizon() const noexcept { return node(n_steps); }
  std::size_t size() const noexcept { return n_steps + 1; }

  double dt;
  std::size_t n_steps;
};

/// Samples u(t_k) aligned to a TimeGrid (length n_steps + 1).
using Series = std::vector<double>;

/// Caputo derivative of order alpha in (0,1) u (1,2) at time t, evaluated by
/// tanh-sinh quadrature of
///   1/Gamma(k-alpha) * int_0^t (t-s)^{k-1-alpha} u^{(k)}(s) ds,  k = ceil(alpha).
/// The endpoint singularity is removed by the substitution t - s = t v^{1/(k-alpha)}.
/// `kth_derivative` must be u^{(k)}. Throws DomainError for alpha outside
/// (0,1) u (1,2) or t < 0, ConvergenceError when `max_levels` refinements
/// do not bring the error estimate below tol times the L1 norm of the integrand.
double caputo_oracle(const std::function<double(double)>& kth_derivative, double alpha,
                     double t, double tol = 1e-10, std::size_t max_levels = 15);

struct CaputoOptions {
  /// u'(0) for orders in (1,2). When empty, caputo_apply estimates it from the
  /// first three samples with a one-sided second-order difference.
  std::optional<double> initial_slope;
  /// Keep only the most recent `history_window` L1 increments (0 = full history).
  std::size_t history_window = 0;
};

/// L1 discretisation of a single Caputo order on a uniform grid.
///
/// For alpha in (0,1] the derivative at t_n is
///   1/(Gamma(2-alpha) dt^alpha) * sum_{k=1}^n b_{n-k} (u_k - u_{k-1}),
///   b_j = (j+1)^{1-alpha} - j^{1-alpha},
/// which reduces to the backward difference at alpha = 1. For alpha in (1,2)
/// the same scheme of order alpha-1 acts on the backward-difference slopes
/// w_k = (u_k - u_{k-1})/dt with w_0 = u'(0).
///
/// The value at node n is affine in u_n; `leading_coefficient()` is the slope
/// and `history()` the remainder, which is what an implicit step needs.
class CaputoL1 {
 public:
  /// Weights are tabulated for nodes up to `max_steps`.
  CaputoL1(double alpha, double dt, std::size_t max_steps, std::size_t history_window = 0);

  double alpha() const noexcept { return alpha_; }
  double leading_coefficient() const noexcept { return lead_; }

  /// Contribution of u_0..u_{n-1} (and u'(0)) to the derivative at node n >= 1.
  double history(std::span<const double> u, std::size_t n, double initial_slope) const;

  /// Full discrete derivative at node n (zero at n = 0).
  double at(std::span<const double> u, std::size_t n, double initial_slope) const {
    if (n == 0) return 0.0;
    return lead_ * u[n] + history(u, n, initial_slope);
  }

 private:
  double alpha_;
  double dt_;
  std::size_t window_;
  double scale_;  // 1/(Gamma(2-beta) dt^beta) with beta the order acting on the increments
  double lead_;
  std::vector<double> b_;  // b_j, j = 0..max_steps-1
};

/// Discrete Caputo derivative at every node. Requires series[0] == 0
/// (PreconditionError otherwise) and series.size() == grid.size() (ShapeError).
/// Orders in (0,2); alpha = 1 is accepted as the L1 limit (backward difference).
Series caputo_apply(std::span<const double> series, double alpha, const TimeGrid& grid,
                    const CaputoOptions& options = {});

/// sum_j q_j caputo_apply(series, alpha_j).
Series multiterm_apply(std::span<const double> series, const MultiTermSpec& spec,
                       const TimeGrid& grid, const CaputoOptions& options = {});

/// Riemann-Liouville integral of order gamma in (0,1] with the product
/// trapezoidal rule (piecewise-linear interpolation of the integrand).
Series rl_integral_apply(std::span<const double> series, double gamma, const TimeGrid& grid);

/// Time operator of order alpha-1 that accompanies d_t^alpha under a time-tilted
/// change of variables: the integral I^{1-alpha} for alpha < 1, the identity for
/// alpha = 1, and the Caputo derivative of order alpha-1 for alpha > 1.
/// No support condition on series[0] is imposed.
Series lowered_order_apply(std::span<const double> series, double alpha, const TimeGrid& grid);

}  // namespace fracucp::frac
