#include "fracucp/fractional_ops.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <string>

#include "fracucp/errors.hpp"

namespace fracucp::frac {

MultiTermSpec MultiTermSpec::make(std::vector<double> orders, std::vector<double> weights) {
  if (orders.empty()) throw DomainError("MultiTermSpec: at least one order is required");
  if (orders.size() != weights.size())
    throw DomainError("MultiTermSpec: orders and weights differ in length");
  if (!(orders.front() < 2.0)) throw DomainError("MultiTermSpec: leading order must be < 2");
  for (std::size_t j = 0; j < orders.size(); ++j) {
    if (!std::isfinite(orders[j]) || !(orders[j] > 0.0))
      throw DomainError("MultiTermSpec: orders must be positive");
    if (j > 0 && !(orders[j] < orders[j - 1]))
      throw DomainError("MultiTermSpec: orders must be strictly decreasing");
    if (!std::isfinite(weights[j]) || !(weights[j] > 0.0))
      throw DomainError("MultiTermSpec: weights must be positive");
  }
  if (weights.front() != 1.0) throw DomainError("MultiTermSpec: q_1 must equal 1");
  return MultiTermSpec(std::move(orders), std::move(weights));
}

double MultiTermSpec::weight_sum() const noexcept {
  double s = 0.0;
  for (double q : weights_) s += q;
  return s;
}

TimeGrid::TimeGrid(double dt_, std::size_t n_steps_) : dt(dt_), n_steps(n_steps_) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("TimeGrid: dt must be positive");
  if (n_steps == 0) throw DomainError("TimeGrid: n_steps must be positive");
}

namespace {

void check_order(double alpha, const char* who) {
  if (!(alpha > 0.0 && alpha < 2.0) || !std::isfinite(alpha))
    throw DomainError(std::string(who) + ": order must lie in (0,2)");
}

}  // namespace

double caputo_oracle(const std::function<double(double)>& kth_derivative, double alpha, double t,
                     double tol, std::size_t max_levels) {
  check_order(alpha, "caputo_oracle");
  if (alpha == 1.0) throw DomainError("caputo_oracle: order 1 is not fractional");
  if (!(t >= 0.0)) throw DomainError("caputo_oracle: t must be non-negative");
  if (t == 0.0) return 0.0;
  const int k = alpha < 1.0 ? 1 : 2;
  const double beta = k - alpha;  // kernel exponent + 1, in (0,1)
  const double inv_beta = 1.0 / beta;
  auto integrand = [&](double v) { return kth_derivative(t - t * std::pow(v, inv_beta)); };
  // Boost's refinement test is looser than the one applied below, so ask it for more.
  boost::math::quadrature::tanh_sinh<double> q(std::clamp<std::size_t>(max_levels, 4, 20));
  double error = 0.0, l1 = 0.0;
  const double integral = q.integrate(integrand, 0.0, 1.0, 1e-2 * tol, &error, &l1);
  if (!(error <= tol * l1) && error > 1e-300)
    throw ConvergenceError("caputo_oracle: quadrature did not converge (estimated error " +
                           std::to_string(error) + ")");
  return std::pow(t, beta) / std::tgamma(beta + 1.0) * integral;
}

CaputoL1::CaputoL1(double alpha, double dt, std::size_t max_steps, std::size_t history_window)
    : alpha_(alpha), dt_(dt), window_(history_window) {
  check_order(alpha, "CaputoL1");
  if (!(dt > 0.0)) throw DomainError("CaputoL1: dt must be positive");
  const double beta = alpha <= 1.0 ? alpha : alpha - 1.0;
  scale_ = 1.0 / (std::tgamma(2.0 - beta) * std::pow(dt, beta));
  lead_ = alpha <= 1.0 ? scale_ : scale_ / dt;
  b_.resize(std::max<std::size_t>(max_steps, 1));
  const double e = 1.0 - beta;
  for (std::size_t j = 0; j < b_.size(); ++j) {
    const double jd = static_cast<double>(j);
    b_[j] = std::pow(jd + 1.0, e) - (j == 0 ? 0.0 : std::pow(jd, e));
  }
}

double CaputoL1::history(std::span<const double> u, std::size_t n, double initial_slope) const {
  if (n == 0) return 0.0;
  if (n > b_.size()) throw ShapeError("CaputoL1: node beyond tabulated weights");
  const std::size_t first = (window_ == 0 || n <= window_) ? 1 : n - window_ + 1;
  double sum = 0.0;
  if (alpha_ <= 1.0) {
    sum -= b_[0] * u[n - 1];
    for (std::size_t k = first; k < n; ++k) sum += b_[n - k] * (u[k] - u[k - 1]);
  } else {
    auto slope = [&](std::size_t k) {
      return k == 0 ? initial_slope : (u[k] - u[k - 1]) / dt_;
    };
    sum -= b_[0] * (u[n - 1] / dt_ + slope(n - 1));
    for (std::size_t k = first; k < n; ++k) sum += b_[n - k] * (slope(k) - slope(k - 1));
  }
  return scale_ * sum;
}

namespace {

double estimate_initial_slope(std::span<const double> u, double dt) {
  if (u.size() >= 3) return (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dt);
  return (u[1] - u[0]) / dt;
}

void check_shape(std::span<const double> series, const TimeGrid& grid, const char* who) {
  if (series.size() != grid.size())
    throw ShapeError(std::string(who) + ": series length " + std::to_string(series.size()) +
                     " does not match grid size " + std::to_string(grid.size()));
}

}  // namespace

Series caputo_apply(std::span<const double> series, double alpha, const TimeGrid& grid,
                    const CaputoOptions& options) {
  check_order(alpha, "caputo_apply");
  check_shape(series, grid, "caputo_apply");
  if (series[0] != 0.0)
    throw PreconditionError("caputo_apply: series(0) must vanish (support in t >= 0)");
  const CaputoL1 l1(alpha, grid.dt, grid.n_steps, options.history_window);
  const double slope =
      alpha > 1.0 ? options.initial_slope.value_or(estimate_initial_slope(series, grid.dt)) : 0.0;
  Series out(series.size(), 0.0);
  for (std::size_t n = 1; n < series.size(); ++n) out[n] = l1.at(series, n, slope);
  return out;
}

Series multiterm_apply(std::span<const double> series, const MultiTermSpec& spec,
                       const TimeGrid& grid, const CaputoOptions& options) {
  Series out(series.size(), 0.0);
  for (std::size_t j = 0; j < spec.size(); ++j) {
    const Series term = caputo_apply(series, spec.order(j), grid, options);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += spec.weight(j) * term[k];
  }
  return out;
}

Series rl_integral_apply(std::span<const double> series, double gamma, const TimeGrid& grid) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("rl_integral_apply: gamma must lie in (0,1]");
  check_shape(series, grid, "rl_integral_apply");
  const std::size_t size = series.size();
  const double g1 = gamma + 1.0;
  std::vector<double> p(size + 1);
  for (std::size_t j = 0; j <= size; ++j) p[j] = std::pow(static_cast<double>(j), g1);
  const double scale = std::pow(grid.dt, gamma) / std::tgamma(gamma + 2.0);
  Series out(size, 0.0);
  for (std::size_t n = 1; n < size; ++n) {
    const double nd = static_cast<double>(n);
    double sum = (p[n - 1] - (nd - gamma - 1.0) * std::pow(nd, gamma)) * series[0];
    for (std::size_t k = 1; k < n; ++k) {
      const std::size_t j = n - k;
      sum += (p[j + 1] - 2.0 * p[j] + p[j - 1]) * series[k];
    }
    sum += series[n];
    out[n] = scale * sum;
  }
  return out;
}

Series lowered_order_apply(std::span<const double> series, double alpha, const TimeGrid& grid) {
  check_order(alpha, "lowered_order_apply");
  check_shape(series, grid, "lowered_order_apply");
  if (alpha < 1.0) return rl_integral_apply(series, 1.0 - alpha, grid);
  if (alpha == 1.0) return Series(series.begin(), series.end());
  const CaputoL1 l1(alpha - 1.0, grid.dt, grid.n_steps);
  Series out(series.size(), 0.0);
  for (std::size_t n = 1; n < series.size(); ++n) out[n] = l1.at(series, n, 0.0);
  return out;
}

}  // namespace fracucp::frac
