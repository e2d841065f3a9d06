#pragma once

// Dense linear-algebra helpers shared by the classical and quantum sides.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace eqsc {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Rejected input: dimension mismatch, unknown label, malformed configuration.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: step-size underflow, non-convergence, ill-conditioning.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A dynamical hypothesis (G-non-stationarity or G-non-degeneracy) fails.
class HypothesisViolation : public std::runtime_error {
 public:
  explicit HypothesisViolation(const std::string& what, std::string subject = {})
      : std::runtime_error(what), subject_(std::move(subject)) {}

  /// Offending object (e.g. "family 1, k=1"); may be empty.
  const std::string& subject() const { return subject_; }

 private:
  std::string subject_;
};

/// Standard symplectic matrix J = [[0, I], [-I, 0]] on R^{2n}.
inline Mat symplectic_j(int n) {
  Mat j = Mat::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = Mat::Identity(n, n);
  j.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return j;
}

/// J v without forming J: (a, b) -> (b, -a).
inline Vec apply_j(const Vec& v) {
  const auto n = v.size() / 2;
  Vec out(v.size());
  out.head(n) = v.tail(n);
  out.tail(n) = -v.head(n);
  return out;
}

/// Block-diagonal lift diag(m, m) of an n x n matrix to R^{2n}.
inline Mat lift_diag(const Mat& m) {
  const auto n = m.rows();
  Mat out = Mat::Zero(2 * n, 2 * n);
  out.topLeftCorner(n, n) = m;
  out.bottomRightCorner(n, n) = m;
  return out;
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

/// Orthonormal basis of the column span of `vectors` (modified Gram-Schmidt
/// with re-orthogonalisation). Columns whose residual norm falls below
/// `rel_tol` times the largest input norm are dropped.
inline Mat orthonormal_span(const Mat& vectors, double rel_tol = 1e-9) {
  const auto dim = vectors.rows();
  double scale = 0.0;
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) scale = std::max(scale, vectors.col(c).norm());
  Mat basis(dim, 0);
  if (scale == 0.0) return basis;
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Vec v = vectors.col(c);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index b = 0; b < basis.cols(); ++b) v -= basis.col(b).dot(v) * basis.col(b);
    }
    const double nv = v.norm();
    if (nv > rel_tol * scale) {
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v / nv;
    }
  }
  return basis;
}

/// Orthonormal basis of the orthogonal complement of the (orthonormal)
/// columns of `q`, built by Gram-Schmidt against the canonical basis in order,
/// so the result is deterministic and aligned with coordinate axes when possible.
inline Mat orthogonal_complement(const Mat& q) {
  const auto dim = q.rows();
  Mat basis = q;
  Mat comp(dim, 0);
  for (Eigen::Index i = 0; i < dim && basis.cols() < dim; ++i) {
    Vec v = Vec::Unit(dim, i);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index b = 0; b < basis.cols(); ++b) v -= basis.col(b).dot(v) * basis.col(b);
    }
    const double nv = v.norm();
    if (nv > 1e-8) {
      v /= nv;
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v;
      comp.conservativeResize(Eigen::NoChange, comp.cols() + 1);
      comp.col(comp.cols() - 1) = v;
    }
  }
  return comp;
}

/// Numerical rank: singular values above max(abs_tol, rel_tol * sigma_max).
inline int numerical_rank(const Mat& m, double rel_tol = 1e-9, double abs_tol = 1e-12) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  const double cut = std::max(abs_tol, rel_tol * (s.size() ? s(0) : 0.0));
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

/// Orthonormal basis of the null space of m.
inline Mat null_space(const Mat& m, double rel_tol = 1e-9, double abs_tol = 1e-12) {
  const auto cols = m.cols();
  if (m.rows() == 0) return Mat::Identity(cols, cols);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = std::max(abs_tol, rel_tol * (s.size() ? s(0) : 0.0));
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return svd.matrixV().rightCols(cols - r);
}

/// Minimum-norm least-squares solve with singular-value truncation.
inline Vec pinv_solve(const Mat& a, const Vec& b, double rel_tol = 1e-10) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(rel_tol);
  return svd.solve(b);
}

/// Levenberg-Marquardt step argmin |a s - b|^2 + mu |s|^2, via the SVD filter sigma/(sigma^2 + mu).
inline Vec damped_solve(const Mat& a, const Vec& b, double mu) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  Vec c = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < sv.size(); ++i) c(i) = sv(i) > 0.0 ? c(i) * sv(i) / (sv(i) * sv(i) + mu) : 0.0;
  return svd.matrixV() * c;
}

inline std::string dims_string(Eigen::Index a, Eigen::Index b) {
  return std::to_string(a) + " vs " + std::to_string(b);
}

}  // namespace eqsc
