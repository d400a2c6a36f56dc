#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fracucp/errors.hpp"
#include "fracucp/pde_solver.hpp"

using namespace fracucp;
using namespace fracucp::pde;

namespace {

SpaceTimeGrid unit_grid(int dim, std::size_t cells, std::size_t steps, double T = 1.0) {
  return SpaceTimeGrid(std::vector<Axis>(dim, Axis{0.0, 1.0, cells}), frac::TimeGrid::over(T, steps));
}

double max_error(const SolutionField& u, const GridFunction& exact) {
  double e = 0.0;
  for (std::size_t k = 0; k < u.grid.time().size(); ++k)
    for (std::size_t i = 0; i < u.grid.space_size(); ++i)
      e = std::max(e, std::abs(u.at(k, i) - exact(u.grid.time().node(k), u.grid.point(i))));
  return e;
}

}  // namespace

TEST(Grid, Validation) {
  const auto tg = frac::TimeGrid::over(1.0, 4);
  EXPECT_THROW(SpaceTimeGrid({}, tg), DomainError);
  EXPECT_THROW(SpaceTimeGrid({Axis{0, 1, 4}, Axis{0, 1, 4}, Axis{0, 1, 4}}, tg), DomainError);
  EXPECT_THROW(SpaceTimeGrid({Axis{1, 0, 8}}, tg), DomainError);
  EXPECT_THROW(SpaceTimeGrid({Axis{0, 1, 2}}, tg), DomainError);
  const SpaceTimeGrid g({Axis{0, 1, 4}, Axis{-1, 1, 8}}, tg);
  EXPECT_EQ(g.space_size(), 45u);
  EXPECT_TRUE(g.on_boundary(0));
  EXPECT_FALSE(g.on_boundary(6));
  EXPECT_DOUBLE_EQ(g.point(6)[0], 0.25);
  EXPECT_DOUBLE_EQ(g.point(6)[1], -0.75);
}

TEST(Solve, ZeroDataGivesZero) {
  const auto u = solve(frac::MultiTermSpec::single(0.5), coeffs::identity(1), LowerOrderTerm::none(), {},
                       unit_grid(1, 16, 16));
  EXPECT_EQ(u.max_abs(), 0.0);
}

TEST(Solve, ManufacturedOneDimensionConverges) {
  const auto spec = frac::MultiTermSpec::single(0.5);
  const auto a = coeffs::identity(1);
  const auto ms = manufactured_solution(spec, a);
  std::vector<double> err;
  for (std::size_t n : {32u, 64u, 128u}) {
    const auto u = solve(spec, a, LowerOrderTerm::none(), ms.source, unit_grid(1, n, n));
    EXPECT_LE(u.max_step_residual, 1e-10);
    err.push_back(max_error(u, ms.exact));
  }
  EXPECT_GT(std::log2(err[0] / err[1]), 1.2);
  EXPECT_GT(std::log2(err[1] / err[2]), 1.2);
}

TEST(Solve, ManufacturedTwoDimensionMultiTermVariableCoefficients) {
  for (auto spec : {frac::MultiTermSpec::make({0.8, 0.3}, {1.0, 0.5}), frac::MultiTermSpec::make({1.5, 0.5}, {1.0, 0.5})}) {
    const auto a = coeffs::rotating_anisotropic(2);
    const auto ms = manufactured_solution(spec, a);
    const double e1 = max_error(solve(spec, a, LowerOrderTerm::none(), ms.source, unit_grid(2, 12, 24)), ms.exact);
    const double e2 = max_error(solve(spec, a, LowerOrderTerm::none(), ms.source, unit_grid(2, 24, 48)), ms.exact);
    EXPECT_LT(e2, e1);
    EXPECT_LT(e2, 5e-3);
  }
}

TEST(Solve, DiscreteOperatorVanishesOnSolution) {
  const auto spec = frac::MultiTermSpec::make({1.3, 0.6}, {1.0, 0.4});
  const auto a = coeffs::diagonal_variable(2);
  LowerOrderTerm l1;
  l1.b = [](double t, const Vec& y) {
    Vec b(2);
    b << 0.3 + t, -0.2 * y[0];
    return b;
  };
  l1.b0 = [](double, const Vec& y) { return 0.5 * y[1]; };
  const GridFunction f = [](double t, const Vec& y) { return t * (1.0 + y[0] * y[1]); };
  const auto u = solve(spec, a, l1, f, unit_grid(2, 10, 20));
  const auto r = apply_discrete_operator(u, spec, a, l1, f);
  double m = 0.0;
  for (double v : r) m = std::max(m, std::abs(v));
  EXPECT_LT(m, 1e-9);
}

TEST(Operator, ConjugationIdentity) {
  const auto spec = frac::MultiTermSpec::make({1.4, 0.5}, {1.0, 0.7});
  const auto a = coeffs::rotating_anisotropic(1);
  const auto grid = unit_grid(1, 20, 30);
  const auto v = sample(grid, [](double t, const Vec& y) { return t * t * std::sin(3.0 * y[0]) * (1.0 - y[0]); });
  const auto w = sample(grid, [](double t, const Vec& y) { return std::exp(t) * t * t * std::sin(3.0 * y[0]) * (1.0 - y[0]); });
  OperatorOptions conj;
  conj.conjugate = true;
  conj.time_drift = 0.4;
  OperatorOptions plain;
  plain.time_drift = 0.4;
  const auto pv = apply_discrete_operator(v, spec, a, LowerOrderTerm::none(), {}, conj);
  const auto pw = apply_discrete_operator(w, spec, a, LowerOrderTerm::none(), {}, plain);
  const std::size_t ns = grid.space_size();
  for (std::size_t k = 0; k < grid.time().size(); ++k)
    for (std::size_t i = 0; i < ns; ++i)
      EXPECT_NEAR(pv[k * ns + i], std::exp(-grid.time().node(k)) * pw[k * ns + i], 1e-9 * (1.0 + std::abs(pv[k * ns + i])));
}

TEST(Solve, NonNegativeSourceGivesNonNegativeSolution) {
  const GridFunction f = [](double t, const Vec& y) { return std::abs(std::sin(7.0 * y[0] + t)); };
  const auto u = solve(frac::MultiTermSpec::make({0.6, 0.2}, {1.0, 1.0}), coeffs::identity(1), LowerOrderTerm::none(), f,
                       unit_grid(1, 40, 40));
  for (double v : u.values) EXPECT_GE(v, -1e-14);
  EXPECT_GT(u.max_abs(), 0.0);
}

TEST(Solve, RejectsCoefficientsBelowDeclaredEllipticity) {
  Mat A(1, 1);
  A << 0.01;
  EXPECT_THROW(solve(frac::MultiTermSpec::single(0.5), coeffs::constant(A, 0.5), LowerOrderTerm::none(), {},
                     unit_grid(1, 8, 8)),
               PreconditionError);
}

TEST(Serialization, BinaryRoundTripAndSidecar) {
  const auto grid = SpaceTimeGrid({Axis{0, 1, 6}, Axis{-1, 2, 5}}, frac::TimeGrid::over(0.5, 7));
  auto u = sample(grid, [](double t, const Vec& y) { return std::sin(t + 3.0 * y[0]) / (1.0 + y[1] * y[1]); });
  u.source = "test";
  const auto dir = std::filesystem::temp_directory_path() / "fracucp_serial";
  std::filesystem::create_directories(dir);
  write_binary(u, dir / "u.bin");
  const auto back = read_binary(dir / "u.bin");
  EXPECT_EQ(back.values, u.values);
  EXPECT_EQ(back.grid.dim(), 2);
  EXPECT_EQ(back.grid.axis(1).cells, 5u);
  EXPECT_DOUBLE_EQ(back.grid.time().dt, u.grid.time().dt);
  const auto j = sidecar(u);
  EXPECT_EQ(j["source"], "test");
  {
    std::ofstream os(dir / "bad.bin", std::ios::binary);
    os << "NOTMAGIC";
  }
  EXPECT_ANY_THROW(read_binary(dir / "bad.bin"));
  write_slice_csv(u, 3, dir / "s.csv");
  std::ifstream is(dir / "s.csv");
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "y1,y2,u");
  std::filesystem::remove_all(dir);
}

TEST(Ucp, SourceInsideObservationIsVisible) {
  UcpConfig c;
  c.axes = {Axis{-1.0, 1.0, 32}};
  c.n_steps = 32;
  Vec center(1);
  center << 0.0;
  c.sources.push_back({center, 0.15, 1.0});
  center << 0.7;
  c.sources.push_back({center, 0.15, 1.0});
  const auto r = ucp_experiment(c);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].distance, 0.0);
  EXPECT_GT(r.rows[1].distance, 0.0);
  EXPECT_TRUE(r.pass());
  for (const auto& row : r.rows) EXPECT_TRUE(row.above_floor);
}
