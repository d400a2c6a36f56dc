#include "fracucp/geometry.hpp"

#include <cmath>

#include "fracucp/errors.hpp"

namespace fracucp::geometry {

HolmgrenMap HolmgrenMap::make(Vec y_hat, double c, double X, double T, int stage) {
  if (y_hat.size() < 1) throw DomainError("HolmgrenMap: dimension must be positive");
  if (y_hat[y_hat.size() - 1] != 0.0) throw DomainError("HolmgrenMap: base point must have y_hat_n = 0");
  if (!(c >= 1.0)) throw DomainError("HolmgrenMap: c must be >= 1");
  if (!(X > 0.0)) throw DomainError("HolmgrenMap: X must be positive");
  if (!(T > 0.0)) throw DomainError("HolmgrenMap: T must be positive");
  if (stage < 1) throw DomainError("HolmgrenMap: stage must be >= 1");
  HolmgrenMap m;
  m.y_hat = std::move(y_hat);
  m.c = c;
  m.X = X;
  m.T = T;
  m.stage = stage;
  return m;
}

namespace {

void check_dim(const Vec& v, const HolmgrenMap& map) {
  if (v.size() != map.dim()) throw ShapeError("HolmgrenMap: point dimension mismatch");
}

}  // namespace

Vec holmgren_forward(double t, const Vec& y, const HolmgrenMap& map) {
  check_dim(y, map);
  const int n = map.dim();
  Vec x(n);
  double r2 = 0.0;
  for (int j = 0; j + 1 < n; ++j) {
    x[j] = y[j] - map.y_hat[j];
    r2 += x[j] * x[j];
  }
  x[n - 1] = y[n - 1] + map.c * r2 + map.drift() * t + map.offset();
  return x;
}

Vec holmgren_inverse(double t, const Vec& x, const HolmgrenMap& map) {
  check_dim(x, map);
  const int n = map.dim();
  Vec y(n);
  double r2 = 0.0;
  for (int j = 0; j + 1 < n; ++j) {
    y[j] = x[j] + map.y_hat[j];
    r2 += x[j] * x[j];
  }
  y[n - 1] = x[n - 1] - map.c * r2 - map.drift() * t - map.offset();
  return y;
}

Mat chain_matrix(const Vec& x, const HolmgrenMap& map) {
  check_dim(x, map);
  const int n = map.dim();
  Mat m = Mat::Identity(n, n);
  for (int j = 0; j + 1 < n; ++j) m(j, n - 1) = 2.0 * map.c * x[j];
  return m;
}

EllipticCoeffField compose_with_holmgren(const EllipticCoeffField& a, const HolmgrenMap& map) {
  if (a.n != map.dim()) throw ShapeError("compose_with_holmgren: dimension mismatch");
  const int n = a.n;
  EllipticCoeffField f;
  f.n = n;
  f.delta = a.delta;
  f.value = [a, map](double t, const Vec& x) { return a.value(t, holmgren_inverse(t, x, map)); };
  // y_n = x_n - c|x'|^2 - drift t - offset, y' = x' + y_hat'.
  f.d_t = [a, map, n](double t, const Vec& x) {
    const Vec y = holmgren_inverse(t, x, map);
    return Mat(a.d_t(t, y) - map.drift() * a.d_y(n - 1, t, y));
  };
  f.d_y = [a, map, n](int k, double t, const Vec& x) {
    const Vec y = holmgren_inverse(t, x, map);
    if (k == n - 1) return a.d_y(n - 1, t, y);
    return Mat(a.d_y(k, t, y) - 2.0 * map.c * x[k] * a.d_y(n - 1, t, y));
  };
  return f;
}

Mat HolmgrenOperator::effective_matrix(double t, const Vec& x) const {
  const Mat m = chain_matrix(x, map);
  return m.transpose() * coeffs.value(t, x) * m;
}

Vec HolmgrenOperator::first_order(double t, const Vec& x) const {
  const int n = map.dim();
  Vec b = Vec::Zero(n);
  const Mat a = coeffs.value(t, x);
  double trace = 0.0;
  for (int j = 0; j + 1 < n; ++j) trace += a(j, j);
  b[n - 1] = 2.0 * map.c * trace;
  return b;
}

EllipticCoeffField HolmgrenOperator::effective_field() const {
  EllipticCoeffField f;
  const HolmgrenOperator self = *this;
  f.n = map.dim();
  f.delta = coeffs.delta;
  f.value = [self](double t, const Vec& x) { return self.effective_matrix(t, x); };
  f.d_t = [self](double t, const Vec& x) {
    const Mat m = chain_matrix(x, self.map);
    return Mat(m.transpose() * self.coeffs.d_t(t, x) * m);
  };
  f.d_y = [self](int k, double t, const Vec& x) {
    const int n = self.map.dim();
    const Mat m = chain_matrix(x, self.map);
    Mat dm = Mat::Zero(n, n);
    if (k + 1 < n) dm(k, n - 1) = 2.0 * self.map.c;
    const Mat a = self.coeffs.value(t, x);
    return Mat(m.transpose() * self.coeffs.d_y(k, t, x) * m + dm.transpose() * a * m +
               m.transpose() * a * dm);
  };
  return f;
}

HolmgrenOperator pushforward_operator(const EllipticCoeffField& a, const frac::MultiTermSpec& spec,
                                      const HolmgrenMap& map) {
  return HolmgrenOperator{compose_with_holmgren(a, map), map, spec};
}

Vec global_forward(const Vec& y) {
  Vec out(y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (!(std::abs(y[j]) < 1.0)) throw DomainError("global_forward: point must lie in the open cube (-1,1)^n");
    out[j] = y[j] / std::sqrt(1.0 - y[j] * y[j]);
  }
  return out;
}

Vec global_inverse(const Vec& y_tilde) {
  Vec out(y_tilde.size());
  for (Eigen::Index j = 0; j < y_tilde.size(); ++j)
    out[j] = y_tilde[j] / std::sqrt(1.0 + y_tilde[j] * y_tilde[j]);
  return out;
}

Vec global_jacobian(const Vec& y) {
  Vec out(y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (!(std::abs(y[j]) < 1.0)) throw DomainError("global_jacobian: point must lie in the open cube (-1,1)^n");
    out[j] = std::pow(1.0 - y[j] * y[j], -1.5);
  }
  return out;
}

Vec global_weights(const Vec& y_tilde) {
  Vec out(y_tilde.size());
  for (Eigen::Index j = 0; j < y_tilde.size(); ++j) out[j] = std::pow(1.0 + y_tilde[j] * y_tilde[j], 1.5);
  return out;
}

EllipticCoeffField global_transform(const EllipticCoeffField& a) {
  EllipticCoeffField f;
  f.n = a.n;
  f.delta = a.delta;
  f.value = [a](double t, const Vec& yt) {
    const Vec w = global_weights(yt);
    return Mat(w.asDiagonal() * a.value(t, global_inverse(yt)) * w.asDiagonal());
  };
  f.d_t = [a](double t, const Vec& yt) {
    const Vec w = global_weights(yt);
    return Mat(w.asDiagonal() * a.d_t(t, global_inverse(yt)) * w.asDiagonal());
  };
  f.d_y = [a](int k, double t, const Vec& yt) {
    const Vec w = global_weights(yt);
    const Vec y = global_inverse(yt);
    // dy_k/dy~_k = (1 + y~_k^2)^{-3/2}; dw_k/dy~_k = 3 y~_k (1 + y~_k^2)^{1/2}.
    const double dy = 1.0 / w[k];
    const double dw = 3.0 * yt[k] * std::sqrt(1.0 + yt[k] * yt[k]);
    const Mat base = a.value(t, y);
    Mat out = w.asDiagonal() * (dy * a.d_y(k, t, y)) * w.asDiagonal();
    for (int j = 0; j < a.n; ++j) {
      out(k, j) += dw * base(k, j) * w[j];
      out(j, k) += dw * base(j, k) * w[j];
    }
    return out;
  };
  return f;
}

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double f0 = std::exp(-1.0 / s);
  const double f1 = std::exp(-1.0 / (1.0 - s));
  return f0 / (f0 + f1);
}

double chi(double xn, const CutoffSpec& spec) {
  const double start = (1.0 - spec.epsilon) * spec.X;
  return 1.0 - smooth_step((xn - start) / (spec.epsilon * spec.X));
}

namespace {

double tangential_offset(const Vec& y, const CutoffSpec& spec, int j) {
  return spec.y_hat.size() == y.size() ? y[j] - spec.y_hat[j] : y[j];
}

}  // namespace

double kappa(const Vec& y, const CutoffSpec& spec) {
  const int n = static_cast<int>(y.size());
  const double r = std::sqrt(spec.X);
  double v = 1.0;
  for (int j = 0; j + 1 < n; ++j) {
    const double d = std::abs(tangential_offset(y, spec, j));
    v *= 1.0 - smooth_step((d - r) / r);
  }
  const double yn = y[n - 1];
  const double third = spec.l / 3.0;
  v *= smooth_step((yn + 2.0 * third) / third);
  v *= 1.0 - smooth_step((yn - spec.zeta * spec.X) / spec.X);
  return v;
}

bool in_q(const Vec& y, const CutoffSpec& spec) {
  const int n = static_cast<int>(y.size());
  for (int j = 0; j + 1 < n; ++j)
    if (std::abs(tangential_offset(y, spec, j)) > std::sqrt(spec.X)) return false;
  return y[n - 1] > -spec.l / 3.0 && y[n - 1] <= spec.zeta * spec.X;
}

bool in_q_tilde(const Vec& y, const CutoffSpec& spec) {
  const int n = static_cast<int>(y.size());
  for (int j = 0; j + 1 < n; ++j)
    if (std::abs(tangential_offset(y, spec, j)) > 2.0 * std::sqrt(spec.X)) return false;
  return y[n - 1] > -2.0 * spec.l / 3.0 && y[n - 1] <= (spec.zeta + 1) * spec.X;
}

bool ContinuationRegion::contains(double t, const Vec& y_tilde) const {
  if (!(t > 0.0 && t < T)) return false;
  const int n = static_cast<int>(y_tilde.size());
  double r2 = 0.0;
  for (int j = 0; j + 1 < n; ++j) r2 += y_tilde[j] * y_tilde[j];
  if (!(r2 < X)) return false;
  return y_tilde[n - 1] + stage * X * t / T < stage * X;
}

std::vector<ContinuationStage> continuation_schedule(int n, double T, double X, int s_max, double c) {
  if (s_max < 1) throw DomainError("continuation_schedule: s_max must be >= 1");
  std::vector<ContinuationStage> out;
  for (int s = 1; s <= s_max; ++s)
    out.push_back({HolmgrenMap::make(Vec::Zero(n), c, X, T, s), ContinuationRegion{s, T, X}});
  return out;
}

bool stage_reaches(const ContinuationStage& stage, double t, const Vec& y_tilde) {
  HolmgrenMap rebased = stage.map;
  rebased.y_hat = y_tilde;
  rebased.y_hat[y_tilde.size() - 1] = 0.0;
  return holmgren_forward(t, y_tilde, rebased)[y_tilde.size() - 1] < stage.map.X;
}

nlohmann::json to_json(const HolmgrenMap& map) {
  return {{"stage", map.stage},
          {"y_hat", std::vector<double>(map.y_hat.data(), map.y_hat.data() + map.y_hat.size())},
          {"c", map.c},
          {"X", map.X},
          {"T", map.T},
          // x_n = y_n + c|y'-y_hat'|^2 + drift * t + offset
          {"drift", map.drift()},
          {"offset", map.offset()}};
}

nlohmann::json to_json(const std::vector<ContinuationStage>& schedule) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& st : schedule) {
    const auto& r = st.region;
    stages.push_back(
        {{"stage", r.stage},
         {"map", to_json(st.map)},
         {"region",
          {{"t_open_interval", {0.0, r.T}},
           // coef_t * t + coef_yn * y~_n < rhs
           {"normal_inequality", {{"coef_t", r.stage * r.X / r.T}, {"coef_yn", 1.0}, {"rhs", r.stage * r.X}}},
           {"tangential_radius_squared", r.X}}}});
  }
  return {{"stages", stages}};
}

}  // namespace fracucp::geometry
