#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "fracucp/coeff_field.hpp"
#include "fracucp/fractional_ops.hpp"

namespace fracucp::pde {

/// Uniform axis [lo, hi] split into `cells` intervals.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t cells = 4;

  double h() const noexcept { return (hi - lo) / static_cast<double>(cells); }
  std::size_t nodes() const noexcept { return cells + 1; }
  double node(std::size_t i) const noexcept { return lo + static_cast<double>(i) * h(); }
};

/// Tensor grid in space (1 or 2 axes) times a uniform time grid. Spatial nodes are
/// flattened with the first axis fastest.
class SpaceTimeGrid {
 public:
  /// Throws DomainError unless 1 <= axes.size() <= 2, hi > lo and every axis has
  /// at least 3 interior nodes.
  SpaceTimeGrid(std::vector<Axis> axes, frac::TimeGrid time);

  int dim() const noexcept { return static_cast<int>(axes_.size()); }
  const std::vector<Axis>& axes() const noexcept { return axes_; }
  const Axis& axis(int j) const { return axes_.at(static_cast<std::size_t>(j)); }
  const frac::TimeGrid& time() const noexcept { return time_; }

  std::size_t space_size() const noexcept { return space_size_; }
  std::size_t stride(int j) const noexcept { return j == 0 ? 1 : axes_[0].nodes(); }
  std::size_t index(int j, std::size_t flat) const noexcept {
    return j == 0 ? flat % axes_[0].nodes() : flat / axes_[0].nodes();
  }
  Vec point(std::size_t flat) const;
  bool on_boundary(std::size_t flat) const noexcept;

 private:
  std::vector<Axis> axes_;
  frac::TimeGrid time_;
  std::size_t space_size_;
};

using GridFunction = std::function<double(double t, const Vec& y)>;

/// l_1 = sum_j b_j d_{y_j} + b_0.
struct LowerOrderTerm {
  std::function<Vec(double t, const Vec& y)> b;
  GridFunction b0;

  static LowerOrderTerm none() { return {}; }
  bool empty() const noexcept { return !b && !b0; }
};

/// Values on all space-time nodes, time-major: values[k * space_size + i].
struct SolutionField {
  SpaceTimeGrid grid;
  std::vector<double> values;
  std::string boundary = "homogeneous Dirichlet";
  std::string source = "none";
  /// Largest scaled per-step residual ||A u - b||_inf / (||A||_inf ||u||_inf + ||b||_inf).
  double max_step_residual = 0.0;

  explicit SolutionField(SpaceTimeGrid g)
      : grid(std::move(g)), values(grid.time().size() * grid.space_size(), 0.0) {}

  double& at(std::size_t k, std::size_t i) { return values[k * grid.space_size() + i]; }
  double at(std::size_t k, std::size_t i) const { return values[k * grid.space_size() + i]; }
  std::span<const double> slice(std::size_t k) const {
    return {values.data() + k * grid.space_size(), grid.space_size()};
  }
  double max_abs() const;
};

/// Samples g(t_k, y_i) on every node.
SolutionField sample(const SpaceTimeGrid& grid, const GridFunction& g);

struct SolveOptions {
  /// Scaled residual threshold enforced at every step (SolveError above it).
  double residual_tolerance = 1e-10;
  bool check_ellipticity = true;
};

/// Implicit solve of sum_j q_j d_t^{alpha_j} u - sum a_jk d_j d_k u - l_1 u = f with
/// u(0, .) = 0 and Dirichlet data `bc` on the spatial boundary. At each step the L1
/// history is moved to the right-hand side and the sparse system for the new level
/// is factorised with SparseLU. Orders above 1 use u_t(0) = 0.
/// Throws PreconditionError if a(t_k, y_i) violates the declared ellipticity and
/// SolveError when factorisation fails or the residual check does not hold.
SolutionField solve(const frac::MultiTermSpec& spec, const EllipticCoeffField& coeffs,
                    const LowerOrderTerm& lower, const GridFunction& source, const SpaceTimeGrid& grid,
                    const GridFunction& bc = {}, const SolveOptions& options = {});

/// u*(t, y) = t^2 prod_j sin(pi y_j) on [0,1]^n with zero boundary values, and the
/// source f = sum_l q_l d_t^{alpha_l} u* - a : grad^2 u* that it solves exactly.
struct ManufacturedSolution {
  GridFunction exact;
  GridFunction source;
};

ManufacturedSolution manufactured_solution(const frac::MultiTermSpec& spec, const EllipticCoeffField& coeffs);

struct OperatorOptions {
  /// Apply e^{-t} P (e^{t} u) instead of P u.
  bool conjugate = false;
  /// Coefficient d of the tilted-time term d * sum_l q_l lowered_order(d_{y_n} u, alpha_l).
  double time_drift = 0.0;
};

/// sum_j q_j d_t^{alpha_j} u - L u - l_1 u - f on interior nodes for k >= 1, zero elsewhere.
/// `source` may be empty (f = 0). Throws ShapeError if u has the wrong size.
std::vector<double> apply_discrete_operator(const SolutionField& u, const frac::MultiTermSpec& spec,
                                            const EllipticCoeffField& coeffs, const LowerOrderTerm& lower,
                                            const GridFunction& source = {},
                                            const OperatorOptions& options = {});

// ---------------------------------------------------------------------------
// Unique continuation demonstration.

struct UcpSource {
  Vec center;
  double radius = 0.1;
  double amplitude = 1.0;
};

struct UcpConfig {
  frac::MultiTermSpec spec = frac::MultiTermSpec::single(0.5);
  std::string coeffs = "identity";
  std::vector<Axis> axes{Axis{-1.0, 1.0, 64}};
  double T = 1.0;
  std::size_t n_steps = 64;
  /// Observation box omega, per axis [lo, hi], and window (0, T').
  std::vector<std::pair<double, double>> omega{{-0.2, 0.2}};
  double t_prime = 1.0;
  std::vector<UcpSource> sources;
  /// Ratios at or below this value count as vanishing on omega.
  double floor = 1e-12;
};

struct UcpRow {
  std::size_t source_id = 0;
  double distance = 0.0;  // distance from the source support to omega
  double norm_omega = 0.0;
  double norm_total = 0.0;
  double ratio = 0.0;
  bool above_floor = false;
};

struct UcpReport {
  std::vector<UcpRow> rows;
  bool pass() const;
};

/// Source f = amplitude * (1 - |y - center|^2 / radius^2)^4_+ * t, solved with zero data;
/// L2 norms over omega x (0, T') and over the whole cylinder. A row passes when a
/// nontrivial solution is visible on omega above `floor`, or when both norms vanish.
UcpReport ucp_experiment(const UcpConfig& config);

// ---------------------------------------------------------------------------
// Serialisation.

/// Flat binary layout: 8-byte magic "FUCPSF01", uint32 dims, uint64 time nodes,
/// uint64 nodes per axis, double dt, double lo/h per axis, then row-major doubles
/// (time slowest, first axis fastest). All little-endian host order.
void write_binary(const SolutionField& u, const std::filesystem::path& path);
SolutionField read_binary(const std::filesystem::path& path);
nlohmann::json sidecar(const SolutionField& u);
/// CSV of time slice k: columns y_1[,y_2],u.
void write_slice_csv(const SolutionField& u, std::size_t k, const std::filesystem::path& path);

}  // namespace fracucp::pde
