#include "fracucp/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "fracucp/carleman.hpp"
#include "fracucp/errors.hpp"
#include "fracucp/geometry.hpp"
#include "fracucp/parallel.hpp"
#include "fracucp/pde_solver.hpp"
#include "fracucp/symbol_engine.hpp"

namespace fracucp::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Schema validation.

enum class Kind { number, integer, string, boolean, array, object, any };

struct FieldSpec {
  std::string name;
  Kind kind;
  bool required;
  json fallback = nullptr;
};

using Schema = std::vector<FieldSpec>;

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::number: return "a number";
    case Kind::integer: return "an integer";
    case Kind::string: return "a string";
    case Kind::boolean: return "a boolean";
    case Kind::array: return "an array";
    case Kind::object: return "an object";
    case Kind::any: return "a value";
  }
  return "a value";
}

bool matches(const json& v, Kind k) {
  switch (k) {
    case Kind::number: return v.is_number();
    case Kind::integer: return v.is_number_integer();
    case Kind::string: return v.is_string();
    case Kind::boolean: return v.is_boolean();
    case Kind::array: return v.is_array();
    case Kind::object: return v.is_object();
    case Kind::any: return true;
  }
  return false;
}

/// Rejects unknown fields, names the first missing required field in schema order,
/// checks types and fills defaults.
json validate(const json& cfg, const Schema& schema, const std::string& path) {
  const std::string where = path.empty() ? "/" : path;
  if (!cfg.is_object()) throw SchemaError(where, "expected an object");
  for (const auto& [key, value] : cfg.items()) {
    const bool known = std::any_of(schema.begin(), schema.end(), [&](const FieldSpec& f) { return f.name == key; });
    if (!known) throw SchemaError(path + "/" + key, "unknown field");
  }
  json out = json::object();
  for (const FieldSpec& f : schema) {
    const std::string p = path + "/" + f.name;
    if (!cfg.contains(f.name)) {
      if (f.required) throw SchemaError(p, "missing required field");
      if (!f.fallback.is_null()) out[f.name] = f.fallback;
      continue;
    }
    if (!matches(cfg[f.name], f.kind)) throw SchemaError(p, std::string("expected ") + kind_name(f.kind));
    out[f.name] = cfg[f.name];
  }
  return out;
}

template <class T>
std::vector<T> array_of(const json& v, const std::string& path) {
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if constexpr (std::is_same_v<T, double>) {
      if (!v[i].is_number()) throw SchemaError(path + "/" + std::to_string(i), "expected a number");
    } else {
      if (!v[i].is_number_integer()) throw SchemaError(path + "/" + std::to_string(i), "expected an integer");
    }
    out.push_back(v[i].get<T>());
  }
  return out;
}

Vec vec_of(const json& v, const std::string& path) {
  const auto a = array_of<double>(v, path);
  return Eigen::Map<const Vec>(a.data(), static_cast<Eigen::Index>(a.size()));
}

template <class F>
auto as_schema_error(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw SchemaError(path, e.what());
  } catch (const ShapeError& e) {
    throw SchemaError(path, e.what());
  }
}

frac::MultiTermSpec parse_spec(const json& v, const std::string& path) {
  const json s = validate(v, {{"orders", Kind::array, true}, {"weights", Kind::array, true}}, path);
  return as_schema_error(path, [&] {
    return frac::MultiTermSpec::make(array_of<double>(s["orders"], path + "/orders"),
                                     array_of<double>(s["weights"], path + "/weights"));
  });
}

EllipticCoeffField parse_coeffs(const json& v, int n, const std::string& path) {
  if (v.is_string()) return as_schema_error(path, [&] { return coeffs::preset(v.get<std::string>(), n); });
  const json s = validate(v, {{"polynomial", Kind::array, true}, {"delta", Kind::number, true}}, path);
  std::vector<std::vector<std::vector<coeffs::Monomial>>> entries;
  for (std::size_t j = 0; j < s["polynomial"].size(); ++j) {
    const std::string pj = path + "/polynomial/" + std::to_string(j);
    const json& row = s["polynomial"][j];
    if (!row.is_array()) throw SchemaError(pj, "expected an array");
    entries.emplace_back();
    for (std::size_t k = 0; k < row.size(); ++k) {
      const std::string pk = pj + "/" + std::to_string(k);
      if (!row[k].is_array()) throw SchemaError(pk, "expected an array");
      entries.back().emplace_back();
      for (std::size_t m = 0; m < row[k].size(); ++m) {
        const std::string pm = pk + "/" + std::to_string(m);
        const json mono = validate(row[k][m],
                                   {{"coef", Kind::number, true},
                                    {"t_power", Kind::integer, false, 0},
                                    {"y_powers", Kind::array, true}},
                                   pm);
        entries.back().back().push_back(
            {mono["coef"].get<double>(), mono["t_power"].get<int>(), array_of<int>(mono["y_powers"], pm + "/y_powers")});
      }
    }
  }
  return as_schema_error(path, [&] { return coeffs::polynomial(n, entries, s["delta"].get<double>()); });
}

int parse_dim(const json& v, const std::string& path, int max_dim) {
  const int d = v.get<int>();
  if (d < 1 || d > max_dim) throw SchemaError(path, "dimension must lie in 1.." + std::to_string(max_dim));
  return d;
}

// ---------------------------------------------------------------------------
// Output helpers.

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(std::vector<double> row) { rows_.push_back(std::move(row)); }
  std::size_t size() const { return rows_.size(); }

  void write_csv(const std::filesystem::path& p) const {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot open " + p.string());
    os << std::setprecision(17);
    for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

void write_xy(const std::filesystem::path& p, const std::vector<std::pair<double, double>>& xy) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot open " + p.string());
  os << std::setprecision(17);
  for (const auto& [x, y] : xy) os << x << " " << y << "\n";
}

struct Context {
  std::string command;
  std::filesystem::path out;
  std::uint64_t seed;
};

std::filesystem::path artifact(const Context& ctx, const std::string& ext) { return ctx.out / (ctx.command + ext); }

Schema with_seed(Schema s) {
  s.push_back({"seed", Kind::integer, false});
  return s;
}

/// Weighted symbol of the local argument: coefficients composed with the stage-1 map at the origin.
symbol::WeightedSymbol local_symbol(const frac::MultiTermSpec& spec, const EllipticCoeffField& a, double X, double c,
                                    double T) {
  const auto map = geometry::HolmgrenMap::make(Vec::Zero(a.n), c, X, T, 1);
  return symbol::WeightedSymbol(spec, geometry::compose_with_holmgren(a, map), {X, 0.0}, c);
}

// ---------------------------------------------------------------------------
// Parameter grid shared by lemma21 / garding / lemma61.

struct GridCase {
  int dim;
  double alpha;
  int terms;
  frac::MultiTermSpec spec;
};

Schema grid_schema(std::size_t default_samples) {
  return {{"dims", Kind::array, true},
          {"alphas", Kind::array, true},
          {"terms", Kind::array, false, json::array({1})},
          {"second_order_ratio", Kind::number, false, 0.5},
          {"second_weight", Kind::number, false, 0.5},
          {"X", Kind::number, false, 0.05},
          {"c", Kind::number, false, 1.0},
          {"T", Kind::number, false, 1.0},
          {"coeffs", Kind::any, false, "rotating-anisotropic"},
          {"n_samples", Kind::integer, false, default_samples}};
}

std::vector<GridCase> grid_cases(const json& cfg) {
  std::vector<GridCase> out;
  const auto dims = array_of<int>(cfg["dims"], "/dims");
  const auto alphas = array_of<double>(cfg["alphas"], "/alphas");
  const auto terms = array_of<int>(cfg["terms"], "/terms");
  const double ratio = cfg["second_order_ratio"].get<double>();
  const double w2 = cfg["second_weight"].get<double>();
  for (int d : dims) {
    if (d < 1 || d > 3) throw SchemaError("/dims", "dimension must lie in 1..3");
    for (double a : alphas)
      for (int m : terms) {
        if (m != 1 && m != 2) throw SchemaError("/terms", "term counts must be 1 or 2");
        auto spec = as_schema_error("/alphas", [&] {
          return m == 1 ? frac::MultiTermSpec::single(a) : frac::MultiTermSpec::make({a, a * ratio}, {1.0, w2});
        });
        out.push_back({d, a, m, spec});
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands.

RunResult cmd_caputo_check(const json& raw, const Context& ctx) {
  const json cfg = validate(raw,
                            with_seed({{"alphas", Kind::array, true},
                                       {"n_steps", Kind::integer, true},
                                       {"power", Kind::number, false, 2.0},
                                       {"t", Kind::number, false, 1.0},
                                       {"l1_tolerance", Kind::number, false, 0.05},
                                       {"oracle_tolerance", Kind::number, false, 1e-8}}),
                            "");
  const auto alphas = array_of<double>(cfg["alphas"], "/alphas");
  const double p = cfg["power"].get<double>();
  const double t_end = cfg["t"].get<double>();
  const auto n = cfg["n_steps"].get<std::size_t>();
  if (!(p >= 1.0)) throw SchemaError("/power", "power must be >= 1");
  if (!(t_end > 0.0)) throw SchemaError("/t", "t must be positive");
  if (n < 2) throw SchemaError("/n_steps", "n_steps must be >= 2");
  const frac::TimeGrid grid = frac::TimeGrid::over(t_end, n);
  frac::Series u(grid.size());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = std::pow(grid.node(k), p);

  Table table({"alpha", "exact", "l1", "oracle", "l1_rel_error", "oracle_rel_error"});
  std::vector<std::pair<double, double>> xy;
  bool pass = true;
  json cases = json::array();
  for (double a : alphas) {
    if (!(a > 0.0 && a < 2.0) || a == 1.0) throw SchemaError("/alphas", "orders must lie in (0,1) u (1,2)");
    const int k = a < 1.0 ? 1 : 2;
    const bool vanishes = std::floor(p) == p && p < k;
    const double exact = vanishes ? 0.0 : std::tgamma(p + 1.0) / std::tgamma(p + 1.0 - a) * std::pow(t_end, p - a);
    frac::CaputoOptions opts;
    opts.initial_slope = p == 1.0 ? 1.0 : 0.0;
    const double l1 = frac::caputo_apply(u, a, grid, opts).back();
    const double oracle = frac::caputo_oracle(
        [p, k](double s) { return k == 1 ? p * std::pow(s, p - 1.0) : p * (p - 1.0) * std::pow(s, p - 2.0); }, a, t_end);
    const double denom = std::max(std::abs(exact), 1.0e-300);
    const double e1 = vanishes ? std::abs(l1) : std::abs(l1 - exact) / denom;
    const double e2 = vanishes ? std::abs(oracle) : std::abs(oracle - exact) / denom;
    const bool ok = e1 <= cfg["l1_tolerance"].get<double>() && e2 <= cfg["oracle_tolerance"].get<double>();
    pass = pass && ok;
    table.add({a, exact, l1, oracle, e1, e2});
    xy.emplace_back(a, e1);
    cases.push_back({{"alpha", a}, {"l1_rel_error", e1}, {"oracle_rel_error", e2}, {"pass", ok}});
  }
  table.write_csv(artifact(ctx, ".csv"));
  write_xy(artifact(ctx, ".xy"), xy);
  return {pass, {{"cases", cases}}};
}

RunResult cmd_symbol_bracket(const json& raw, const Context& ctx) {
  const json cfg = validate(raw,
                            with_seed({{"dim", Kind::integer, true},
                                       {"spec", Kind::object, true},
                                       {"points", Kind::array, true},
                                       {"coeffs", Kind::any, false, "identity"},
                                       {"X", Kind::number, false, 0.05},
                                       {"c", Kind::number, false, 1.0},
                                       {"T", Kind::number, false, 1.0}}),
                            "");
  const int n = parse_dim(cfg["dim"], "/dim", 3);
  const auto spec = parse_spec(cfg["spec"], "/spec");
  const auto a = parse_coeffs(cfg["coeffs"], n, "/coeffs");
  const auto sym = as_schema_error("/X", [&] {
    return local_symbol(spec, a, cfg["X"].get<double>(), cfg["c"].get<double>(), cfg["T"].get<double>());
  });
  std::vector<std::string> header{"t"};
  for (int j = 1; j <= n; ++j) header.push_back("x" + std::to_string(j));
  header.push_back("tau");
  for (int j = 1; j <= n; ++j) header.push_back("xi" + std::to_string(j));
  for (const char* h : {"sigma", "bracket", "principal", "scale", "ratio"}) header.push_back(h);
  Table table(header);
  std::vector<std::pair<double, double>> xy;
  bool pass = true;
  for (std::size_t i = 0; i < cfg["points"].size(); ++i) {
    const std::string p = "/points/" + std::to_string(i);
    const json pt = validate(cfg["points"][i],
                             {{"t", Kind::number, false, 0.0},
                              {"x", Kind::array, true},
                              {"tau", Kind::number, true},
                              {"xi", Kind::array, true},
                              {"sigma", Kind::number, false, 0.0}},
                             p);
    symbol::PhasePoint pp{pt["t"].get<double>(), vec_of(pt["x"], p + "/x"), pt["tau"].get<double>(),
                          vec_of(pt["xi"], p + "/xi"), pt["sigma"].get<double>()};
    if (pp.x.size() != n || pp.xi.size() != n) throw SchemaError(p, "x and xi must have length dim");
    const auto r = sym.bracket(pp);
    std::vector<double> row{pp.t};
    for (int j = 0; j < n; ++j) row.push_back(pp.x[j]);
    row.push_back(pp.tau);
    for (int j = 0; j < n; ++j) row.push_back(pp.xi[j]);
    for (double v : {pp.sigma, r.bracket, r.principal, r.scale, r.ratio}) row.push_back(v);
    pass = pass && std::isfinite(r.bracket) && std::isfinite(r.ratio);
    table.add(row);
    xy.emplace_back(static_cast<double>(i), r.ratio);
  }
  table.write_csv(artifact(ctx, ".csv"));
  write_xy(artifact(ctx, ".xy"), xy);
  return {pass, {{"points", table.size()}}};
}

RunResult cmd_char_sample(const json& raw, const Context& ctx) {
  const json cfg = validate(raw,
                            with_seed({{"dim", Kind::integer, true},
                                       {"spec", Kind::object, true},
                                       {"n_samples", Kind::integer, true},
                                       {"coeffs", Kind::any, false, "rotating-anisotropic"},
                                       {"X", Kind::number, false, 0.05},
                                       {"c", Kind::number, false, 1.0},
                                       {"T", Kind::number, false, 1.0},
                                       {"tol", Kind::number, false, 1e-8}}),
                            "");
  const int n = parse_dim(cfg["dim"], "/dim", 3);
  const auto spec = parse_spec(cfg["spec"], "/spec");
  const auto a = parse_coeffs(cfg["coeffs"], n, "/coeffs");
  const double X = cfg["X"].get<double>();
  const auto sym = as_schema_error("/X", [&] { return local_symbol(spec, a, X, cfg["c"].get<double>(), cfg["T"].get<double>()); });
  symbol::CharSampleOptions opts;
  opts.tol = cfg["tol"].get<double>();
  const auto res = symbol::char_set_sample(sym, symbol::SampleRegion::layer(X, cfg["T"].get<double>()),
                                           cfg["n_samples"].get<std::size_t>(), ctx.seed, opts);
  std::vector<std::string> header{"t"};
  for (int j = 1; j <= n; ++j) header.push_back("x" + std::to_string(j));
  header.push_back("tau");
  for (int j = 1; j <= n; ++j) header.push_back("xi" + std::to_string(j));
  header.push_back("sigma");
  header.push_back("residual");
  Table table(header);
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : res.points) {
    std::vector<double> row{p.t};
    for (int j = 0; j < n; ++j) row.push_back(p.x[j]);
    row.push_back(p.tau);
    for (int j = 0; j < n; ++j) row.push_back(p.xi[j]);
    row.push_back(p.sigma);
    row.push_back(std::abs(sym.value(p)) / sym.base_scale(p));
    table.add(row);
    xy.emplace_back(p.tau, p.sigma);
  }
  table.write_csv(artifact(ctx, ".csv"));
  write_xy(artifact(ctx, ".xy"), xy);
  return {res.complete(),
          {{"requested", res.requested},
           {"found", res.points.size()},
           {"attempts", res.attempts},
           {"max_residual", res.max_residual},
           {"max_K", res.max_K}}};
}

RunResult cmd_lemma21(const json& raw, const Context& ctx) {
  const json cfg = validate(raw, with_seed(grid_schema(10000)), "");
  const double X = cfg["X"].get<double>(), c = cfg["c"].get<double>(), T = cfg["T"].get<double>();
  Table table({"dim", "alpha", "terms", "samples", "min_ratio", "max_K", "pass"});
  std::vector<std::pair<double, double>> xy;
  json cases = json::array();
  bool pass = true;
  double global_min = std::numeric_limits<double>::infinity();
  for (const GridCase& gc : grid_cases(cfg)) {
    const auto a = parse_coeffs(cfg["coeffs"], gc.dim, "/coeffs");
    const auto sym = local_symbol(gc.spec, a, X, c, T);
    const auto res = symbol::char_set_sample(sym, symbol::SampleRegion::layer(X, T), cfg["n_samples"].get<std::size_t>(), ctx.seed);
    const bool ok = res.complete() && !res.points.empty() && symbol::lemma21_check(sym, res.points).pass();
    const double m = res.points.empty() ? 0.0 : symbol::lemma21_check(sym, res.points).min_ratio;
    pass = pass && ok;
    global_min = std::min(global_min, m);
    table.add({double(gc.dim), gc.alpha, double(gc.terms), double(res.points.size()), m, res.max_K, ok ? 1.0 : 0.0});
    xy.emplace_back(gc.alpha, m);
    cases.push_back({{"dim", gc.dim}, {"alpha", gc.alpha}, {"terms", gc.terms}, {"samples", res.points.size()},
                     {"min_ratio", m}, {"max_K", res.max_K}, {"pass", ok}});
  }
  table.write_csv(artifact(ctx, ".csv"));
  write_xy(artifact(ctx, ".xy"), xy);
  return {pass, {{"cases", cases}, {"min_ratio", global_min}}};
}

RunResult cmd_garding(const json& raw, const Context& ctx) {
  Schema schema = grid_schema(100000);
  schema.push_back({"varpi_lo", Kind::number, false, 1e-8});
  schema.push_back({"varpi_hi", Kind::number, false, 1e12});
  const json cfg = validate(raw, with_seed(schema), "");
  const double X = cfg["X"].get<double>(), c = cfg["c"].get<double>(), T = cfg["T"].get<double>();
  Table table({"dim", "alpha", "terms", "samples", "varpi_threshold", "varpi", "min_ratio", "pass"});
  std::vector<std::pair<double, double>> xy;
  json cases = json::array();
  bool pass = true;
  for (const GridCase& gc : grid_cases(cfg)) {
    const auto a = parse_coeffs(cfg["coeffs"], gc.dim, "/coeffs");
    const auto sym = local_symbol(gc.spec, a, X, c, T);
    const auto samples =
        symbol::full_region_sample(sym, symbol::SampleRegion::layer(X, T), cfg["n_samples"].get<std::size_t>(), ctx.seed);
    const auto terms = symbol::garding_terms(sym, samples);
    const auto vs = symbol::find_varpi(terms, cfg["varpi_lo"].get<double>(), cfg["varpi_hi"].get<double>());
    const bool ok = vs.found && vs.min_ratio > 0.0;
    pass = pass && ok;
    table.add({double(gc.dim), gc.alpha, double(gc.terms), double(samples.size()), vs.threshold, vs.varpi, vs.min_ratio,
               ok ? 1.0 : 0.0});
    xy.emplace_back(gc.alpha, vs.threshold);
    cases.push_back({{"dim", gc.dim}, {"alpha", gc.alpha}, {"terms", gc.terms}, {"varpi_threshold", vs.threshold},
                     {"varpi", vs.varpi}, {"min_ratio", vs.min_ratio}, {"pass", ok}});
  }
  table.write_csv(artifact(ctx, ".csv"));
  write_xy(artifact(ctx, ".xy"), xy);
  return {pass, {{"cases", cases}}};
}

RunResult cmd_lemma61(const json& raw, const Context& ctx) {
  Schema schema = grid_schema(10000);
  schema.push_back({"stages", Kind::array, true});
  const json cfg = validate(raw, with_seed(schema), "");
  const double X = cfg["X"].get<double>(), c = cfg["c"].get<double>(), T = cfg["T"].get<double>();
  const auto stages = array_of<int>(cfg["stages"], "/stages");
  Table table({"dim", "alpha", "terms", "stage", "samples", "min_ratio", "ellipticity_violations", "max_weight", "pass"});
  std::vector<std::pair<double, double>> xy;
  json cases = json::array();
  bool pass = true;
  for (const GridCase& gc : grid_cases(cfg)) {
    const auto a = parse_coeffs(cfg["coeffs"], gc.dim, "/coeffs");
    for (int s : stages) {
      const auto map = as_schema_error("/stages", [&] { return geometry::HolmgrenMap::make(Vec::Zero(gc.dim), c, X, T, s); });
      const auto sym = symbol::stage_symbol(gc.spec, a, {X, 0.0}, map);
      const auto res = symbol::char_set_sample(sym, symbol::SampleRegion::layer(X, T), cfg["n_samples"].get<std::size_t>(), ctx.seed);
      if (res.points.empty()) {
        pass = false;
        continue;
      }
      const auto rep = symbol::lemma61_check(sym, map, res.points);
      const bool ok = res.complete() && rep.pass();
      pass = pass && ok;
      table.add({double(gc.dim), gc.alpha, double(gc.terms), double(s), double(res.points.size()), rep.ratio.min_ratio,
                 double(rep.ellipticity_violations), rep.max_weight_factor, ok ? 1.0 : 0.0});
      xy.emplace_back(double(s), rep.ratio.min_ratio);
      cases.push_back({{"dim", gc.dim}, {"alpha", gc.alpha}, {"terms", gc.terms}, {"stage", s},
                       {"min_ratio", rep.ratio.min_ratio}, {"ellipticity_violations", rep.ellipticity_violations},
                       {"pass", ok}});
    }
  }
  table.write_csv(artifact(ctx, ".csv"));
  write_xy(artifact(ctx, ".xy"), xy);
  return {pass, {{"cases", cases}}};
}

RunResult cmd_solve(const json& raw, const Context& ctx) {
  const json cfg = validate(raw,
                            with_seed({{"dim", Kind::integer, true},
                                       {"spec", Kind::object, true},
                                       {"n_cells", Kind::integer, true},
                                       {"n_steps", Kind::integer, true},
                                       {"T", Kind::number, false, 1.0},
                                       {"coeffs", Kind::any, false, "identity"},
                                       {"manufactured", Kind::boolean, false, true},
                                       {"error_tolerance", Kind::number, false}}),
                            "");
  const int n = parse_dim(cfg["dim"], "/dim", 2);
  const auto spec = parse_spec(cfg["spec"], "/spec");
  const auto a = parse_coeffs(cfg["coeffs"], n, "/coeffs");
  const auto cells = cfg["n_cells"].get<std::size_t>();
  const pde::SpaceTimeGrid grid = as_schema_error("/n_cells", [&] {
    return pde::SpaceTimeGrid(std::vector<pde::Axis>(n, pde::Axis{0.0, 1.0, cells}),
                              frac::TimeGrid::over(cfg["T"].get<double>(), cfg["n_steps"].get<std::size_t>()));
  });
  const bool manufactured = cfg["manufactured"].get<bool>();
  const pde::ManufacturedSolution ms = pde::manufactured_solution(spec, a);
  const pde::GridFunction source = manufactured ? ms.source : pde::GridFunction{};
  const pde::SolutionField u = pde::solve(spec, a, pde::LowerOrderTerm::none(), source, grid);
  double max_error = 0.0;
  if (manufactured)
    for (std::size_t k = 0; k < grid.time().size(); ++k)
      for (std::size_t i = 0; i < grid.space_size(); ++i)
        max_error = std::max(max_error, std::abs(u.at(k, i) - ms.exact(grid.time().node(k), grid.point(i))));
  pde::write_binary(u, ctx.out / "solution.bin");
  {
    std::ofstream os(ctx.out / "solution.json");
    os << std::setw(2) << pde::sidecar(u) << "\n";
  }
  const std::size_t last = grid.time().size() - 1;
  pde::write_slice_csv(u, last, artifact(ctx, ".csv"));
  std::vector<std::pair<double, double>> xy;
  if (n == 1)
    for (std::size_t i = 0; i < grid.space_size(); ++i) xy.emplace_back(grid.point(i)[0], u.at(last, i));
  else
    for (std::size_t i = 0; i < grid.space_size(); ++i) xy.emplace_back(static_cast<double>(i), u.at(last, i));
  write_xy(artifact(ctx, ".xy"), xy);
  bool pass = u.max_step_residual <= 1e-10;
  json summary{{"max_step_residual", u.max_step_residual}};
  if (manufactured) {
    summary["max_error"] = max_error;
    if (cfg.contains("error_tolerance")) pass = pass && max_error <= cfg["error_tolerance"].get<double>();
  }
  return {pass, summary};
}

RunResult cmd_carleman_sweep(const json& raw, const Context& ctx) {
  const json cfg = validate(raw,
                            with_seed({{"alphas", Kind::array, true},
                                       {"betas", Kind::array, false, json::array({25, 50, 100, 200, 400})},
                                       {"X", Kind::number, false, 0.3},
                                       {"T", Kind::number, false, 1.0},
                                       {"c", Kind::number, false, 1.0},
                                       {"n_cells", Kind::integer, false, 256},
                                       {"n_steps", Kind::integer, false, 256},
                                       {"coeffs", Kind::any, false, "identity"},
                                       {"spread_limit", Kind::number, false, 100.0}}),
                            "");
  const double X = cfg["X"].get<double>(), T = cfg["T"].get<double>();
  const auto a = parse_coeffs(cfg["coeffs"], 1, "/coeffs");
  Table table({"alpha", "beta", "lhs", "rhs", "ratio", "test_id", "log_scale"});
  std::vector<std::pair<double, double>> xy;
  json runs = json::array();
  bool pass = true;
  for (double alpha : array_of<double>(cfg["alphas"], "/alphas")) {
    carleman::BetaSweepConfig sc{
        array_of<double>(cfg["betas"], "/betas"),
        {as_schema_error("/alphas", [&] { return frac::MultiTermSpec::single(alpha); }), a,
         as_schema_error("/X", [&] { return geometry::HolmgrenMap::make(Vec::Zero(1), cfg["c"].get<double>(), X, T, 1); }),
         false, pde::LowerOrderTerm::none()},
        {X, 0.0},
        pde::SpaceTimeGrid({pde::Axis{0.0, X, cfg["n_cells"].get<std::size_t>()}},
                           frac::TimeGrid::over(T, cfg["n_steps"].get<std::size_t>())),
        carleman::default_family(1, T, X, 0.0),
        cfg["spread_limit"].get<double>()};
    const auto s = as_schema_error("/betas", [&] { return carleman::beta_sweep(sc); });
    for (const auto& r : s.rows) {
      table.add({alpha, r.beta, r.lhs, r.rhs, r.ratio, double(r.test_id), r.log_scale});
      xy.emplace_back(r.beta, r.ratio);
    }
    pass = pass && s.pass();
    json j = carleman::to_json(s);
    j["alpha"] = alpha;
    runs.push_back(j);
  }
  table.write_csv(artifact(ctx, ".csv"));
  write_xy(artifact(ctx, ".xy"), xy);
  return {pass, {{"sweeps", runs}}};
}

RunResult cmd_ucp_demo(const json& raw, const Context& ctx) {
  const json cfg = validate(raw,
                            with_seed({{"sources", Kind::array, true},
                                       {"dim", Kind::integer, false, 1},
                                       {"spec", Kind::object, false, json{{"orders", {0.5}}, {"weights", {1.0}}}},
                                       {"coeffs", Kind::string, false, "identity"},
                                       {"box", Kind::array, false, json::array({-1.0, 1.0})},
                                       {"n_cells", Kind::integer, false, 64},
                                       {"n_steps", Kind::integer, false, 64},
                                       {"T", Kind::number, false, 1.0},
                                       {"omega", Kind::array, false, json::array({json::array({-0.2, 0.2})})},
                                       {"t_prime", Kind::number, false, 1.0},
                                       {"floor", Kind::number, false, 1e-12}}),
                            "");
  const int n = parse_dim(cfg["dim"], "/dim", 2);
  pde::UcpConfig uc;
  uc.spec = parse_spec(cfg["spec"], "/spec");
  uc.coeffs = cfg["coeffs"].get<std::string>();
  const auto box = array_of<double>(cfg["box"], "/box");
  if (box.size() != 2 || !(box[1] > box[0])) throw SchemaError("/box", "expected [lo, hi] with hi > lo");
  uc.axes.assign(n, pde::Axis{box[0], box[1], cfg["n_cells"].get<std::size_t>()});
  uc.T = cfg["T"].get<double>();
  uc.n_steps = cfg["n_steps"].get<std::size_t>();
  uc.omega.clear();
  for (std::size_t j = 0; j < cfg["omega"].size(); ++j) {
    const auto w = array_of<double>(cfg["omega"][j], "/omega/" + std::to_string(j));
    if (w.size() != 2) throw SchemaError("/omega/" + std::to_string(j), "expected [lo, hi]");
    uc.omega.emplace_back(w[0], w[1]);
  }
  if (static_cast<int>(uc.omega.size()) != n) throw SchemaError("/omega", "need one interval per axis");
  uc.t_prime = cfg["t_prime"].get<double>();
  uc.floor = cfg["floor"].get<double>();
  for (std::size_t i = 0; i < cfg["sources"].size(); ++i) {
    const std::string p = "/sources/" + std::to_string(i);
    const json s = validate(cfg["sources"][i],
                            {{"center", Kind::array, true}, {"radius", Kind::number, false, 0.1}, {"amplitude", Kind::number, false, 1.0}},
                            p);
    uc.sources.push_back({vec_of(s["center"], p + "/center"), s["radius"].get<double>(), s["amplitude"].get<double>()});
  }
  const auto report = as_schema_error("/sources", [&] { return pde::ucp_experiment(uc); });
  Table table({"source_id", "distance", "norm_omega", "norm_total", "ratio", "above_floor"});
  std::vector<std::pair<double, double>> xy;
  json rows = json::array();
  for (const auto& r : report.rows) {
    table.add({double(r.source_id), r.distance, r.norm_omega, r.norm_total, r.ratio, r.above_floor ? 1.0 : 0.0});
    xy.emplace_back(r.distance, r.ratio);
    rows.push_back({{"source_id", r.source_id}, {"distance", r.distance}, {"ratio", r.ratio}, {"above_floor", r.above_floor}});
  }
  table.write_csv(artifact(ctx, ".csv"));
  write_xy(artifact(ctx, ".xy"), xy);
  return {report.pass(), {{"rows", rows}}};
}

RunResult cmd_continuation_plan(const json& raw, const Context& ctx) {
  const json cfg = validate(raw,
                            with_seed({{"dim", Kind::integer, true},
                                       {"s_max", Kind::integer, true},
                                       {"T", Kind::number, false, 1.0},
                                       {"X", Kind::number, false, 0.05},
                                       {"c", Kind::number, false, 1.0},
                                       {"plot_points", Kind::integer, false, 64}}),
                            "");
  const int n = parse_dim(cfg["dim"], "/dim", 3);
  const double T = cfg["T"].get<double>(), X = cfg["X"].get<double>();
  const auto schedule = as_schema_error("/", [&] {
    return geometry::continuation_schedule(n, T, X, cfg["s_max"].get<int>(), cfg["c"].get<double>());
  });
  Table table({"stage", "t", "yn_upper"});
  std::vector<std::pair<double, double>> xy;
  const int pts = std::max(2, cfg["plot_points"].get<int>());
  for (const auto& st : schedule) {
    const double s = st.region.stage;
    for (int i = 0; i < pts; ++i) {
      const double t = T * i / (pts - 1);
      // boundary of E_s: y~_n = s X (1 - t/T)
      const double yn = s * X * (1.0 - t / T);
      table.add({s, t, yn});
      xy.emplace_back(t, yn);
    }
  }
  table.write_csv(artifact(ctx, ".csv"));
  write_xy(artifact(ctx, ".xy"), xy);
  return {true, geometry::to_json(schedule)};
}

using Handler = RunResult (*)(const json&, const Context&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
  static const std::vector<std::pair<std::string, Handler>> h{
      {"caputo-check", cmd_caputo_check}, {"symbol-bracket", cmd_symbol_bracket},
      {"char-sample", cmd_char_sample},   {"lemma21", cmd_lemma21},
      {"garding", cmd_garding},           {"lemma61", cmd_lemma61},
      {"solve", cmd_solve},               {"carleman-sweep", cmd_carleman_sweep},
      {"ucp-demo", cmd_ucp_demo},         {"continuation-plan", cmd_continuation_plan}};
  return h;
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : handlers()) v.push_back(name);
    return v;
  }();
  return names;
}

RunResult run(const std::string& command, const json& config, const RunOptions& options) {
  const auto& hs = handlers();
  const auto it = std::find_if(hs.begin(), hs.end(), [&](const auto& h) { return h.first == command; });
  if (it == hs.end()) throw SchemaError("/", "unknown command '" + command + "'");
  std::uint64_t seed = 20240601;
  if (config.is_object() && config.contains("seed")) {
    if (!config["seed"].is_number_integer() || config["seed"].get<std::int64_t>() < 0)
      throw SchemaError("/seed", "expected a non-negative integer");
    seed = config["seed"].get<std::uint64_t>();
  }
  if (options.seed) seed = *options.seed;
  thread_count() = std::max(1u, options.threads);
  std::filesystem::create_directories(options.out_dir);
  const Context ctx{command, options.out_dir, seed};
  RunResult r = it->second(config, ctx);
  r.summary["command"] = command;
  r.summary["seed"] = seed;
  r.summary["pass"] = r.pass;
  r.summary["status"] = r.pass ? "PASS" : "FAIL";
  std::ofstream os(options.out_dir / "summary.json");
  os << std::setprecision(17) << std::setw(2) << r.summary << "\n";
  return r;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Multi-term time-fractional diffusion: symbol, geometry and Carleman checks"};
  std::string command;
  std::string config_path;
  RunOptions options;
  std::uint64_t seed = 0;
  std::string out = "out";
  app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(commands()));
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  app.add_option("--threads", options.threads, "Worker threads")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  options.out_dir = out;
  if (seed_opt->count() > 0) options.seed = seed;
  try {
    json config = json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw SchemaError("/", "cannot read config file " + config_path);
      try {
        config = json::parse(is);
      } catch (const json::parse_error& e) {
        throw SchemaError("/", std::string("invalid JSON: ") + e.what());
      }
    }
    const RunResult r = run(command, config, options);
    std::cout << command << ": " << (r.pass ? "PASS" : "FAIL") << " (" << (options.out_dir / "summary.json").string() << ")\n";
    return r.pass ? 0 : 1;
  } catch (const SchemaError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace fracucp::cli
