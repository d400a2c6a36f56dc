#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace fracucp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symmetric coefficient field a_jk(t,y) of the non-divergence operator
/// L = sum a_jk d_j d_k, with its first derivatives and the declared
/// ellipticity constant: delta |xi|^2 <= a(xi,xi) <= |xi|^2 / delta.
struct EllipticCoeffField {
  int n = 0;
  double delta = 1.0;
  std::function<Mat(double t, const Vec& y)> value;
  std::function<Mat(double t, const Vec& y)> d_t;
  /// d/dy_k of the matrix, k = 0..n-1.
  std::function<Mat(int k, double t, const Vec& y)> d_y;

  Mat operator()(double t, const Vec& y) const { return value(t, y); }
};

struct EllipticityReport {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double asymmetry = 0.0;
  bool ok = false;
};

/// Eigenvalue form of the two-sided bound; `ok` also requires symmetry to 1e-12.
EllipticityReport check_ellipticity(const Mat& a, double delta);

namespace coeffs {

EllipticCoeffField identity(int n);
/// Constant symmetric matrix; delta is taken from its spectrum when not given.
EllipticCoeffField constant(const Mat& a, double delta = 0.0);
/// a_jj = 1 + amplitude sin(pi y_j + 0.7 j + t), off-diagonals zero.
EllipticCoeffField diagonal_variable(int n, double amplitude = 0.25);
/// n = 1: a = 1 + 0.3 sin(2 y + t). n >= 2: R(theta) diag(1.4, 1, ..., 1, 0.8) R(theta)^T
/// with R a rotation in the (y_1, y_n) plane and theta = 0.2 + 0.6 y_1 - 0.4 y_n + 0.3 t.
EllipticCoeffField rotating_anisotropic(int n);

/// One monomial coef * t^t_power * prod_i y_i^y_powers[i].
struct Monomial {
  double coef = 0.0;
  int t_power = 0;
  std::vector<int> y_powers;
};

/// Polynomial table: entries[j][k] for j <= k (upper triangle, row-major by j)
/// lists the monomials of a_jk; the lower triangle is mirrored.
EllipticCoeffField polynomial(int n, const std::vector<std::vector<std::vector<Monomial>>>& entries,
                              double delta);

/// Named preset lookup: "identity", "diagonal-variable", "rotating-anisotropic".
EllipticCoeffField preset(const std::string& name, int n);

}  // namespace coeffs
}  // namespace fracucp
