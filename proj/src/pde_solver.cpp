#include "fracucp/pde_solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "fracucp/errors.hpp"

namespace fracucp::pde {

SpaceTimeGrid::SpaceTimeGrid(std::vector<Axis> axes, frac::TimeGrid time)
    : axes_(std::move(axes)), time_(time), space_size_(1) {
  if (axes_.empty() || axes_.size() > 2) throw DomainError("SpaceTimeGrid: 1 or 2 spatial axes are supported");
  for (const Axis& a : axes_) {
    if (!(a.hi > a.lo)) throw DomainError("SpaceTimeGrid: axis must satisfy hi > lo");
    if (a.cells < 4) throw DomainError("SpaceTimeGrid: at least 3 interior nodes per axis");
    space_size_ *= a.nodes();
  }
}

Vec SpaceTimeGrid::point(std::size_t flat) const {
  Vec y(dim());
  for (int j = 0; j < dim(); ++j) y[j] = axes_[j].node(index(j, flat));
  return y;
}

bool SpaceTimeGrid::on_boundary(std::size_t flat) const noexcept {
  for (int j = 0; j < dim(); ++j) {
    const std::size_t i = index(j, flat);
    if (i == 0 || i == axes_[j].cells) return true;
  }
  return false;
}

double SolutionField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

SolutionField sample(const SpaceTimeGrid& grid, const GridFunction& g) {
  SolutionField u(grid);
  for (std::size_t k = 0; k < grid.time().size(); ++k) {
    const double t = grid.time().node(k);
    for (std::size_t i = 0; i < grid.space_size(); ++i) u.at(k, i) = g(t, grid.point(i));
  }
  return u;
}

ManufacturedSolution manufactured_solution(const frac::MultiTermSpec& spec, const EllipticCoeffField& coeffs) {
  constexpr double pi = std::numbers::pi;
  ManufacturedSolution m;
  m.exact = [](double t, const Vec& y) {
    double s = t * t;
    for (Eigen::Index j = 0; j < y.size(); ++j) s *= std::sin(pi * y[j]);
    return s;
  };
  m.source = [spec, coeffs](double t, const Vec& y) {
    const Eigen::Index d = y.size();
    Vec sn(d), cs(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      sn[j] = std::sin(pi * y[j]);
      cs[j] = std::cos(pi * y[j]);
    }
    // d_t^a t^2 = 2 t^{2-a} / Gamma(3-a)
    double time_part = 0.0;
    for (std::size_t l = 0; l < spec.size(); ++l)
      time_part += spec.weight(l) * 2.0 / std::tgamma(3.0 - spec.order(l)) * std::pow(t, 2.0 - spec.order(l));
    const Mat A = coeffs.value(t, y);
    double lu = 0.0;
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k) {
        double v = t * t;
        for (Eigen::Index i = 0; i < d; ++i) {
          const int order = (i == j) + (i == k);
          v *= order == 0 ? sn[i] : order == 1 ? pi * cs[i] : -pi * pi * sn[i];
        }
        lu += A(j, k) * v;
      }
    return time_part * sn.prod() - lu;
  };
  return m;
}

namespace {

struct Entry {
  std::size_t col;
  double w;
};

/// Entries of (L + l_1) at interior node i: second-order centred differences,
/// 4-point cross stencil, centred first differences.
void spatial_stencil(const SpaceTimeGrid& grid, const Mat& a, const Vec& b, double b0, std::size_t i,
                     std::vector<Entry>& out) {
  out.clear();
  const int d = grid.dim();
  double centre = b0;
  for (int j = 0; j < d; ++j) {
    const double h = grid.axis(j).h();
    const std::size_t s = grid.stride(j);
    const double second = a(j, j) / (h * h);
    const double first = b.size() > 0 ? b[j] / (2.0 * h) : 0.0;
    out.push_back({i + s, second + first});
    out.push_back({i - s, second - first});
    centre -= 2.0 * second;
  }
  if (d == 2) {
    const std::size_t s0 = grid.stride(0), s1 = grid.stride(1);
    const double w = 2.0 * a(0, 1) / (4.0 * grid.axis(0).h() * grid.axis(1).h());
    out.push_back({i + s0 + s1, w});
    out.push_back({i - s0 - s1, w});
    out.push_back({i + s0 - s1, -w});
    out.push_back({i - s0 + s1, -w});
  }
  out.push_back({i, centre});
}

struct NodeCoefficients {
  Mat a;
  Vec b;
  double b0 = 0.0;
};

NodeCoefficients node_coefficients(const EllipticCoeffField& coeffs, const LowerOrderTerm& lower, double t,
                                   const Vec& y) {
  NodeCoefficients c{coeffs.value(t, y), Vec(), 0.0};
  if (lower.b) c.b = lower.b(t, y);
  if (lower.b0) c.b0 = lower.b0(t, y);
  return c;
}

std::vector<frac::CaputoL1> build_l1(const frac::MultiTermSpec& spec, const frac::TimeGrid& time) {
  std::vector<frac::CaputoL1> ops;
  for (std::size_t l = 0; l < spec.size(); ++l) ops.emplace_back(spec.order(l), time.dt, time.n_steps);
  return ops;
}

void check_dims(const SpaceTimeGrid& grid, const EllipticCoeffField& coeffs) {
  if (coeffs.n != grid.dim()) throw ShapeError("coefficient dimension does not match the grid");
}

}  // namespace

SolutionField solve(const frac::MultiTermSpec& spec, const EllipticCoeffField& coeffs,
                    const LowerOrderTerm& lower, const GridFunction& source, const SpaceTimeGrid& grid,
                    const GridFunction& bc, const SolveOptions& options) {
  check_dims(grid, coeffs);
  const frac::TimeGrid& time = grid.time();
  const std::size_t nt = time.size();
  const std::size_t ns = grid.space_size();
  const auto l1 = build_l1(spec, time);
  double lead = 0.0;
  for (std::size_t l = 0; l < spec.size(); ++l) lead += spec.weight(l) * l1[l].leading_coefficient();

  SolutionField u(grid);
  u.boundary = bc ? "Dirichlet (user data)" : "homogeneous Dirichlet";
  u.source = source ? "user source" : "none";
  // node-major copy for the history sums
  std::vector<double> series(ns * nt, 0.0);

  using SpMat = Eigen::SparseMatrix<double>;
  Eigen::SparseLU<SpMat> lu;
  bool analysed = false;
  std::vector<Entry> stencil;
  std::vector<Eigen::Triplet<double>> triplets;
  Vec rhs(ns);

  for (std::size_t k = 1; k < nt; ++k) {
    const double t = time.node(k);
    triplets.clear();
    for (std::size_t i = 0; i < ns; ++i) {
      const Vec y = grid.point(i);
      if (grid.on_boundary(i)) {
        triplets.emplace_back(i, i, 1.0);
        rhs[i] = bc ? bc(t, y) : 0.0;
        continue;
      }
      const NodeCoefficients c = node_coefficients(coeffs, lower, t, y);
      if (options.check_ellipticity && !check_ellipticity(c.a, coeffs.delta).ok)
        throw PreconditionError("solve: coefficients violate ellipticity at t=" + std::to_string(t));
      spatial_stencil(grid, c.a, c.b, c.b0, i, stencil);
      for (const Entry& e : stencil) triplets.emplace_back(i, e.col, -e.w);
      triplets.emplace_back(i, i, lead);
      double history = 0.0;
      const std::span<const double> s(series.data() + i * nt, nt);
      for (std::size_t l = 0; l < spec.size(); ++l) history += spec.weight(l) * l1[l].history(s, k, 0.0);
      rhs[i] = (source ? source(t, y) : 0.0) - history;
    }
    SpMat A(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(ns));
    A.setFromTriplets(triplets.begin(), triplets.end());
    A.makeCompressed();
    if (!analysed) {
      lu.analyzePattern(A);
      analysed = true;
    }
    lu.factorize(A);
    if (lu.info() != Eigen::Success)
      throw SolveError("solve: factorisation failed at step " + std::to_string(k) + " (" + lu.lastErrorMessage() +
                       "), |det| = " + std::to_string(std::abs(lu.determinant())));
    const Vec x = lu.solve(rhs);
    const double a_norm = (A.cwiseAbs() * Vec::Ones(A.cols())).maxCoeff();
    const double denom = a_norm * x.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
    const double scaled = denom > 0.0 ? (A * x - rhs).lpNorm<Eigen::Infinity>() / denom : 0.0;
    if (!(scaled <= options.residual_tolerance))
      throw SolveError("solve: step " + std::to_string(k) + " residual " + std::to_string(scaled) +
                       " exceeds tolerance; the step matrix may be ill-conditioned");
    u.max_step_residual = std::max(u.max_step_residual, scaled);
    for (std::size_t i = 0; i < ns; ++i) {
      u.at(k, i) = x[static_cast<Eigen::Index>(i)];
      series[i * nt + k] = x[static_cast<Eigen::Index>(i)];
    }
  }
  return u;
}

std::vector<double> apply_discrete_operator(const SolutionField& u, const frac::MultiTermSpec& spec,
                                            const EllipticCoeffField& coeffs, const LowerOrderTerm& lower,
                                            const GridFunction& source, const OperatorOptions& options) {
  const SpaceTimeGrid& grid = u.grid;
  check_dims(grid, coeffs);
  const frac::TimeGrid& time = grid.time();
  const std::size_t nt = time.size();
  const std::size_t ns = grid.space_size();
  if (u.values.size() != nt * ns) throw ShapeError("apply_discrete_operator: field size mismatch");

  // w = e^{t} u when conjugating, stored node-major
  std::vector<double> w(ns * nt);
  for (std::size_t k = 0; k < nt; ++k) {
    const double f = options.conjugate ? std::exp(time.node(k)) : 1.0;
    for (std::size_t i = 0; i < ns; ++i) w[i * nt + k] = f * u.at(k, i);
  }
  const auto l1 = build_l1(spec, time);
  const int n_axis = grid.dim() - 1;
  const std::size_t sn = grid.stride(n_axis);
  const double hn = grid.axis(n_axis).h();

  std::vector<double> out(nt * ns, 0.0);
  std::vector<Entry> stencil;
  std::vector<double> dn(nt);
  for (std::size_t i = 0; i < ns; ++i) {
    if (grid.on_boundary(i)) continue;
    const Vec y = grid.point(i);
    const std::span<const double> s(w.data() + i * nt, nt);
    std::vector<double> drift(nt, 0.0);
    if (options.time_drift != 0.0) {
      for (std::size_t k = 0; k < nt; ++k) dn[k] = (w[(i + sn) * nt + k] - w[(i - sn) * nt + k]) / (2.0 * hn);
      for (std::size_t l = 0; l < spec.size(); ++l) {
        const frac::Series low = frac::lowered_order_apply(dn, spec.order(l), time);
        for (std::size_t k = 0; k < nt; ++k) drift[k] += options.time_drift * spec.weight(l) * low[k];
      }
    }
    for (std::size_t k = 1; k < nt; ++k) {
      const double t = time.node(k);
      double value = drift[k];
      for (std::size_t l = 0; l < spec.size(); ++l) value += spec.weight(l) * l1[l].at(s, k, 0.0);
      const NodeCoefficients c = node_coefficients(coeffs, lower, t, y);
      spatial_stencil(grid, c.a, c.b, c.b0, i, stencil);
      for (const Entry& e : stencil) value -= e.w * w[e.col * nt + k];
      if (options.conjugate) value *= std::exp(-t);
      if (source) value -= source(t, y);
      out[k * ns + i] = value;
    }
  }
  return out;
}

bool UcpReport::pass() const {
  for (const UcpRow& r : rows) {
    const bool trivial = r.norm_total == 0.0;
    if (trivial ? r.norm_omega != 0.0 : !r.above_floor) return false;
  }
  return !rows.empty();
}

UcpReport ucp_experiment(const UcpConfig& config) {
  const int d = static_cast<int>(config.axes.size());
  if (static_cast<int>(config.omega.size()) != d) throw ShapeError("ucp_experiment: omega needs one interval per axis");
  const SpaceTimeGrid grid(config.axes, frac::TimeGrid::over(config.T, config.n_steps));
  const EllipticCoeffField a = coeffs::preset(config.coeffs, d);
  const double cell = [&] {
    double v = grid.time().dt;
    for (const Axis& ax : config.axes) v *= ax.h();
    return v;
  }();

  auto in_omega = [&](const Vec& y) {
    for (int j = 0; j < d; ++j)
      if (y[j] < config.omega[j].first || y[j] > config.omega[j].second) return false;
    return true;
  };

  UcpReport report;
  for (std::size_t id = 0; id < config.sources.size(); ++id) {
    const UcpSource& src = config.sources[id];
    if (src.center.size() != d) throw ShapeError("ucp_experiment: source centre dimension mismatch");
    const GridFunction f = [src](double t, const Vec& y) {
      const double r2 = (y - src.center).squaredNorm() / (src.radius * src.radius);
      return r2 >= 1.0 ? 0.0 : src.amplitude * std::pow(1.0 - r2, 4) * t;
    };
    const SolutionField u = solve(config.spec, a, LowerOrderTerm::none(), f, grid);
    UcpRow row;
    row.source_id = id;
    double gap2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = src.center[j];
      const double g = std::max({config.omega[j].first - c, c - config.omega[j].second, 0.0});
      gap2 += g * g;
    }
    row.distance = std::max(0.0, std::sqrt(gap2) - src.radius);
    double omega2 = 0.0, total2 = 0.0;
    for (std::size_t k = 0; k < grid.time().size(); ++k) {
      const double t = grid.time().node(k);
      for (std::size_t i = 0; i < grid.space_size(); ++i) {
        const double v2 = u.at(k, i) * u.at(k, i);
        total2 += v2;
        if (t <= config.t_prime && in_omega(grid.point(i))) omega2 += v2;
      }
    }
    row.norm_omega = std::sqrt(omega2 * cell);
    row.norm_total = std::sqrt(total2 * cell);
    row.ratio = row.norm_total > 0.0 ? row.norm_omega / row.norm_total : 0.0;
    row.above_floor = row.ratio > config.floor;
    report.rows.push_back(row);
  }
  return report;
}

namespace {

constexpr char kMagic[8] = {'F', 'U', 'C', 'P', 'S', 'F', '0', '1'};

template <class T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ShapeError("read_binary: truncated file");
  return v;
}

}  // namespace

void write_binary(const SolutionField& u, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_binary: cannot open " + path.string());
  os.write(kMagic, sizeof(kMagic));
  const auto& g = u.grid;
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  put<std::uint64_t>(os, g.time().size());
  for (const Axis& a : g.axes()) put<std::uint64_t>(os, a.nodes());
  put<double>(os, g.time().dt);
  for (const Axis& a : g.axes()) {
    put<double>(os, a.lo);
    put<double>(os, a.h());
  }
  os.write(reinterpret_cast<const char*>(u.values.data()),
           static_cast<std::streamsize>(u.values.size() * sizeof(double)));
}

SolutionField read_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_binary: cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ShapeError("read_binary: bad magic");
  const auto dims = get<std::uint32_t>(is);
  if (dims < 1 || dims > 2) throw ShapeError("read_binary: unsupported dimension");
  const auto nt = get<std::uint64_t>(is);
  std::vector<std::uint64_t> nodes(dims);
  for (auto& n : nodes) n = get<std::uint64_t>(is);
  const double dt = get<double>(is);
  std::vector<Axis> axes;
  for (std::uint32_t j = 0; j < dims; ++j) {
    const double lo = get<double>(is);
    const double h = get<double>(is);
    axes.push_back(Axis{lo, lo + h * static_cast<double>(nodes[j] - 1), nodes[j] - 1});
  }
  SolutionField u(SpaceTimeGrid(std::move(axes), frac::TimeGrid(dt, nt - 1)));
  is.read(reinterpret_cast<char*>(u.values.data()), static_cast<std::streamsize>(u.values.size() * sizeof(double)));
  if (!is) throw ShapeError("read_binary: truncated payload");
  return u;
}

nlohmann::json sidecar(const SolutionField& u) {
  const auto& g = u.grid;
  nlohmann::json axes = nlohmann::json::array();
  for (const Axis& a : g.axes()) axes.push_back({{"lo", a.lo}, {"hi", a.hi}, {"nodes", a.nodes()}, {"h", a.h()}});
  return {{"format", "FUCPSF01"},
          {"dims", g.dim()},
          {"time_nodes", g.time().size()},
          {"dt", g.time().dt},
          {"axes", axes},
          {"layout", "row-major doubles, time slowest, first axis fastest"},
          {"boundary", u.boundary},
          {"source", u.source},
          {"max_step_residual", u.max_step_residual}};
}

void write_slice_csv(const SolutionField& u, std::size_t k, const std::filesystem::path& path) {
  if (k >= u.grid.time().size()) throw ShapeError("write_slice_csv: time index out of range");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_slice_csv: cannot open " + path.string());
  os << std::setprecision(17);
  for (int j = 0; j < u.grid.dim(); ++j) os << "y" << j + 1 << ",";
  os << "u\n";
  for (std::size_t i = 0; i < u.grid.space_size(); ++i) {
    const Vec y = u.grid.point(i);
    for (int j = 0; j < u.grid.dim(); ++j) os << y[j] << ",";
    os << u.at(k, i) << "\n";
  }
}

}  // namespace fracucp::pde
