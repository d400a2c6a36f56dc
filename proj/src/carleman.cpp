#include "fracucp/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <iomanip>

#include "fracucp/errors.hpp"
#include "fracucp/parallel.hpp"

namespace fracucp::carleman {

double bump_profile(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return q * q * q * q;
}

double Bump::operator()(double t, const Vec& x) const {
  double v = bump_profile((t - t_center) / t_radius);
  for (Eigen::Index j = 0; j < x.size() && v != 0.0; ++j) v *= bump_profile((x[j] - x_center[j]) / x_radius[j]);
  return v;
}

std::vector<double> apply_holmgren_operator(const pde::SolutionField& v, const HolmgrenProblem& problem) {
  const geometry::HolmgrenOperator op = geometry::pushforward_operator(problem.coeffs, problem.spec, problem.map);
  pde::LowerOrderTerm lower;
  const bool l1 = problem.include_l1;
  const pde::LowerOrderTerm extra = problem.l1;
  lower.b = [op, l1, extra](double t, const Vec& x) {
    Vec b = op.first_order(t, x);
    if (l1 && extra.b) b += extra.b(t, x);
    return b;
  };
  if (l1 && extra.b0) lower.b0 = extra.b0;
  pde::OperatorOptions opts;
  opts.conjugate = true;
  opts.time_drift = op.time_drift();
  return pde::apply_discrete_operator(v, problem.spec, op.effective_field(), lower, {}, opts);
}

namespace {

std::vector<double> trapezoid_weights(std::size_t nodes, double h) {
  std::vector<double> w(nodes, h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

/// Derivative along a strided line: fourth order in the interior, second order one
/// node from the edge, first order at the edge.
double line_derivative(const std::vector<double>& f, std::size_t base, std::size_t stride, std::size_t i,
                       std::size_t last, double h) {
  auto at = [&](long off) { return f[base + static_cast<std::size_t>(static_cast<long>(i) + off) * stride]; };
  if (i >= 2 && i + 2 <= last) return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
  if (i >= 1 && i + 1 <= last) return (at(1) - at(-1)) / (2.0 * h);
  return i == 0 ? (at(1) - at(0)) / h : (at(0) - at(-1)) / h;
}

double psi_at(const pde::SpaceTimeGrid& grid, std::size_t i, const CarlemanWeightParams& weight) {
  const int nd = grid.dim() - 1;
  return weight.psi(grid.axis(nd).node(grid.index(nd, i)));
}

}  // namespace

double max_psi(const pde::SpaceTimeGrid& grid, const CarlemanWeightParams& weight) {
  const pde::Axis& a = grid.axis(grid.dim() - 1);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.nodes(); ++i) m = std::max(m, weight.psi(a.node(i)));
  return m;
}

double weighted_integral(const pde::SpaceTimeGrid& grid, const std::vector<double>& f, double beta,
                         const CarlemanWeightParams& weight, double psi_ref) {
  const std::size_t nt = grid.time().size();
  const std::size_t ns = grid.space_size();
  if (f.size() != nt * ns) throw ShapeError("weighted_integral: field size mismatch");
  const auto wt = trapezoid_weights(nt, grid.time().dt);
  std::vector<double> wx(ns, 1.0);
  for (int j = 0; j < grid.dim(); ++j) {
    const auto w = trapezoid_weights(grid.axis(j).nodes(), grid.axis(j).h());
    for (std::size_t i = 0; i < ns; ++i) wx[i] *= w[grid.index(j, i)];
  }
  for (std::size_t i = 0; i < ns; ++i) wx[i] *= std::exp(2.0 * beta * (psi_at(grid, i, weight) - psi_ref));
  double sum = 0.0;
  for (std::size_t k = 0; k < nt; ++k) {
    double row = 0.0;
    for (std::size_t i = 0; i < ns; ++i) row += wx[i] * f[k * ns + i];
    sum += wt[k] * row;
  }
  return sum;
}

double carleman_lhs(const pde::SolutionField& v, double beta, const CarlemanWeightParams& weight, Branch branch,
                    double alpha, double psi_ref) {
  if (!(beta > 0.0)) throw DomainError("carleman_lhs: beta must be positive");
  const auto& grid = v.grid;
  const std::size_t nt = grid.time().size();
  const std::size_t ns = grid.space_size();
  std::vector<double> v2(nt * ns), grad2(nt * ns, 0.0), dt2(nt * ns, 0.0);
  for (std::size_t k = 0; k < nt; ++k)
    for (std::size_t i = 0; i < ns; ++i) {
      const std::size_t idx = k * ns + i;
      v2[idx] = v.values[idx] * v.values[idx];
      for (int j = 0; j < grid.dim(); ++j) {
        const std::size_t s = grid.stride(j);
        const std::size_t ij = grid.index(j, i);
        const double d = line_derivative(v.values, idx - ij * s, s, ij, grid.axis(j).cells, grid.axis(j).h());
        grad2[idx] += d * d;
      }
      if (branch == Branch::four_thirds_and_above) {
        const double d = line_derivative(v.values, i, ns, k, nt - 1, grid.time().dt);
        dt2[idx] = d * d;
      }
    }
  double lhs = beta * beta * beta * weighted_integral(grid, v2, beta, weight, psi_ref) +
               beta * weighted_integral(grid, grad2, beta, weight, psi_ref);
  if (branch == Branch::four_thirds_and_above)
    lhs += std::pow(beta, 3.0 - 4.0 / alpha) * weighted_integral(grid, dt2, beta, weight, psi_ref);
  return lhs;
}

double carleman_rhs(const pde::SolutionField& v, double beta, const CarlemanWeightParams& weight,
                    const HolmgrenProblem& problem, double psi_ref) {
  std::vector<double> pv = apply_holmgren_operator(v, problem);
  for (double& x : pv) x *= x;
  return weighted_integral(v.grid, pv, beta, weight, psi_ref);
}

SweepSummary beta_sweep(const BetaSweepConfig& config) {
  if (config.betas.empty()) throw DomainError("beta_sweep: empty beta grid");
  for (std::size_t b = 0; b < config.betas.size(); ++b)
    if (!(config.betas[b] > 0.0) || (b > 0 && !(config.betas[b] > config.betas[b - 1])))
      throw DomainError("beta_sweep: beta grid must be positive and increasing");
  if (!(config.betas.back() >= 10.0 * config.betas.front()))
    throw DomainError("beta_sweep: beta grid must span at least one decade");
  const double alpha = config.problem.spec.leading_order();
  const Branch branch = branch_for(alpha);
  const std::size_t nb = config.betas.size();
  const std::size_t nf = config.family.size();

  const double psi_ref = max_psi(config.grid, config.weight);
  SweepSummary s;
  s.rows.resize(nf * nb);
  parallel_for(nf, [&](std::size_t f) {
    const pde::SolutionField v = pde::sample(config.grid, [&](double t, const Vec& x) { return config.family[f](t, x); });
    std::vector<double> pv = apply_holmgren_operator(v, config.problem);
    for (double& x : pv) x *= x;
    for (std::size_t b = 0; b < nb; ++b) {
      SweepRow& row = s.rows[f * nb + b];
      row.beta = config.betas[b];
      row.test_id = f;
      row.log_scale = 2.0 * row.beta * psi_ref;
      row.lhs = carleman_lhs(v, row.beta, config.weight, branch, alpha, psi_ref);
      row.rhs = weighted_integral(config.grid, pv, row.beta, config.weight, psi_ref);
      row.ratio = row.lhs / row.rhs;
      row.flagged = !std::isfinite(row.ratio) || (row.rhs == 0.0 && row.lhs > 0.0);
    }
  });

  s.max_ratio = 0.0;
  s.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < nf; ++f) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    bool increasing = true;
    for (std::size_t b = 0; b < nb; ++b) {
      const SweepRow& row = s.rows[f * nb + b];
      if (row.flagged) s.all_finite = false;
      lo = std::min(lo, row.ratio);
      hi = std::max(hi, row.ratio);
      // top half of the grid: steps ending at index >= nb/2
      if (b >= nb / 2 && b > 0 && !(row.ratio > s.rows[f * nb + b - 1].ratio)) increasing = false;
    }
    s.max_ratio = std::max(s.max_ratio, hi);
    s.min_ratio = std::min(s.min_ratio, lo);
    s.worst_spread = std::max(s.worst_spread, hi / lo);
    if (nb >= 2 && increasing) s.monotone_divergence = true;
  }
  s.spread_ok = s.worst_spread <= config.spread_limit;
  return s;
}

std::vector<Bump> default_family(int n, double T, double X, double tangential_half_width) {
  const double tc[5] = {0.40, 0.50, 0.60, 0.45, 0.55};
  const double xc[5] = {0.50, 0.40, 0.60, 0.55, 0.45};
  const double rr[5] = {0.30, 0.28, 0.30, 0.32, 0.30};
  std::vector<Bump> out;
  for (int b = 0; b < 5; ++b) {
    Bump bump;
    bump.t_center = tc[b] * T;
    bump.t_radius = 0.3 * T;
    bump.x_center = Vec::Zero(n);
    bump.x_radius = Vec::Constant(n, 0.8 * tangential_half_width);
    bump.x_center[n - 1] = xc[b] * X;
    bump.x_radius[n - 1] = rr[b] * X;
    out.push_back(bump);
  }
  return out;
}

void write_sweep_csv(const SweepSummary& s, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_sweep_csv: cannot open " + path.string());
  os << std::setprecision(17) << "beta,lhs,rhs,ratio,test_id,log_scale\n";
  for (const SweepRow& r : s.rows)
    os << r.beta << "," << r.lhs << "," << r.rhs << "," << r.ratio << "," << r.test_id << "," << r.log_scale << "\n";
}

nlohmann::json to_json(const SweepSummary& s) {
  return {{"max_ratio", s.max_ratio},
          {"min_ratio", s.min_ratio},
          {"worst_spread", s.worst_spread},
          {"flags",
           {{"all_finite", s.all_finite}, {"spread_ok", s.spread_ok}, {"monotone_divergence", s.monotone_divergence}}},
          {"pass", s.pass()}};
}

}  // namespace fracucp::carleman
