#include "fracucp/coeff_field.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "fracucp/errors.hpp"

namespace fracucp {

EllipticityReport check_ellipticity(const Mat& a, double delta) {
  EllipticityReport r;
  r.asymmetry = (a - a.transpose()).cwiseAbs().maxCoeff();
  const Mat sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = eig.eigenvalues().minCoeff();
  r.max_eigenvalue = eig.eigenvalues().maxCoeff();
  const double slack = 1e-12 * std::max(1.0, r.max_eigenvalue);
  r.ok = r.asymmetry <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()) &&
         r.min_eigenvalue >= delta - slack && r.max_eigenvalue <= 1.0 / delta + slack;
  return r;
}

namespace coeffs {

EllipticCoeffField identity(int n) { return constant(Mat::Identity(n, n), 1.0); }

EllipticCoeffField constant(const Mat& a, double delta) {
  if (a.rows() != a.cols() || a.rows() == 0) throw ShapeError("constant coefficients: matrix must be square");
  const int n = static_cast<int>(a.rows());
  if (delta <= 0.0) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
    delta = std::min(eig.eigenvalues().minCoeff(), 1.0 / eig.eigenvalues().maxCoeff());
  }
  if (!(delta > 0.0)) throw PreconditionError("constant coefficients: matrix is not positive definite");
  EllipticCoeffField f;
  f.n = n;
  f.delta = delta;
  f.value = [a](double, const Vec&) { return a; };
  f.d_t = [n](double, const Vec&) { return Mat::Zero(n, n); };
  f.d_y = [n](int, double, const Vec&) { return Mat::Zero(n, n); };
  return f;
}

EllipticCoeffField diagonal_variable(int n, double amplitude) {
  if (!(amplitude >= 0.0 && amplitude < 1.0)) throw DomainError("diagonal_variable: amplitude must lie in [0,1)");
  constexpr double pi = std::numbers::pi;
  EllipticCoeffField f;
  f.n = n;
  f.delta = 1.0 - amplitude;
  f.value = [n, amplitude](double t, const Vec& y) {
    Mat a = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j) a(j, j) = 1.0 + amplitude * std::sin(pi * y[j] + 0.7 * j + t);
    return a;
  };
  f.d_t = [n, amplitude](double t, const Vec& y) {
    Mat a = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j) a(j, j) = amplitude * std::cos(pi * y[j] + 0.7 * j + t);
    return a;
  };
  f.d_y = [n, amplitude](int k, double t, const Vec& y) {
    Mat a = Mat::Zero(n, n);
    a(k, k) = amplitude * pi * std::cos(pi * y[k] + 0.7 * k + t);
    return a;
  };
  return f;
}

EllipticCoeffField rotating_anisotropic(int n) {
  EllipticCoeffField f;
  f.n = n;
  if (n == 1) {
    f.delta = 0.7;
    f.value = [](double t, const Vec& y) { return Mat::Constant(1, 1, 1.0 + 0.3 * std::sin(2.0 * y[0] + t)); };
    f.d_t = [](double t, const Vec& y) { return Mat::Constant(1, 1, 0.3 * std::cos(2.0 * y[0] + t)); };
    f.d_y = [](int, double t, const Vec& y) { return Mat::Constant(1, 1, 0.6 * std::cos(2.0 * y[0] + t)); };
    return f;
  }
  f.delta = 0.7;
  const int last = n - 1;
  Vec lambda = Vec::Ones(n);
  lambda[0] = 1.4;
  lambda[last] = 0.8;
  auto theta = [last](double t, const Vec& y) { return 0.2 + 0.6 * y[0] - 0.4 * y[last] + 0.3 * t; };
  auto rotation = [n, last](double th) {
    Mat r = Mat::Identity(n, n);
    r(0, 0) = std::cos(th);
    r(0, last) = -std::sin(th);
    r(last, 0) = std::sin(th);
    r(last, last) = std::cos(th);
    return r;
  };
  auto rotation_dot = [n, last](double th) {
    Mat r = Mat::Zero(n, n);
    r(0, 0) = -std::sin(th);
    r(0, last) = -std::cos(th);
    r(last, 0) = std::cos(th);
    r(last, last) = -std::sin(th);
    return r;
  };
  const Mat d = lambda.asDiagonal();
  auto d_theta = [=](double th) {
    const Mat r = rotation(th);
    const Mat rd = rotation_dot(th);
    return Mat(rd * d * r.transpose() + r * d * rd.transpose());
  };
  f.value = [=](double t, const Vec& y) {
    const Mat r = rotation(theta(t, y));
    return Mat(r * d * r.transpose());
  };
  f.d_t = [=](double t, const Vec& y) { return Mat(0.3 * d_theta(theta(t, y))); };
  f.d_y = [=](int k, double t, const Vec& y) {
    const double w = (k == 0 ? 0.6 : 0.0) + (k == last ? -0.4 : 0.0);
    return Mat(w * d_theta(theta(t, y)));
  };
  return f;
}

namespace {

double eval_monomial(const Monomial& m, double t, const Vec& y, int dt_order, int dy_index) {
  double coef = m.coef;
  int tp = m.t_power;
  if (dt_order == 1) {
    if (tp == 0) return 0.0;
    coef *= tp;
    --tp;
  }
  double v = coef * std::pow(t, tp);
  for (int i = 0; i < static_cast<int>(m.y_powers.size()); ++i) {
    int p = m.y_powers[i];
    if (i == dy_index) {
      if (p == 0) return 0.0;
      v *= p;
      --p;
    }
    v *= std::pow(y[i], p);
  }
  return v;
}

}  // namespace

EllipticCoeffField polynomial(int n, const std::vector<std::vector<std::vector<Monomial>>>& entries,
                              double delta) {
  if (static_cast<int>(entries.size()) != n) throw ShapeError("polynomial coefficients: need n rows");
  for (int j = 0; j < n; ++j) {
    if (static_cast<int>(entries[j].size()) != n - j)
      throw ShapeError("polynomial coefficients: row j must list entries k = j..n-1");
    for (const auto& entry : entries[j])
      for (const auto& m : entry)
        if (static_cast<int>(m.y_powers.size()) != n || m.t_power < 0)
          throw ShapeError("polynomial coefficients: monomial exponents must have length n");
  }
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("polynomial coefficients: delta must lie in (0,1]");
  auto build = [n, entries](double t, const Vec& y, int dt_order, int dy_index) {
    Mat a = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        double v = 0.0;
        for (const auto& m : entries[j][k - j]) v += eval_monomial(m, t, y, dt_order, dy_index);
        a(j, k) = v;
        a(k, j) = v;
      }
    return a;
  };
  EllipticCoeffField f;
  f.n = n;
  f.delta = delta;
  f.value = [build](double t, const Vec& y) { return build(t, y, 0, -1); };
  f.d_t = [build](double t, const Vec& y) { return build(t, y, 1, -1); };
  f.d_y = [build](int k, double t, const Vec& y) { return build(t, y, 0, k); };
  return f;
}

EllipticCoeffField preset(const std::string& name, int n) {
  if (n < 1) throw DomainError("coefficient preset: dimension must be positive");
  if (name == "identity") return identity(n);
  if (name == "diagonal-variable") return diagonal_variable(n);
  if (name == "rotating-anisotropic") return rotating_anisotropic(n);
  throw DomainError("unknown coefficient preset '" + name + "'");
}

}  // namespace coeffs
}  // namespace fracucp
