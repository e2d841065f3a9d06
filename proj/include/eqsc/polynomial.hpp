#pragma once

// Multivariate polynomials in phase-space variables z = (x_1..x_n, xi_1..xi_n).

#include "eqsc/linalg.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

namespace eqsc {

/// One monomial c * x^alpha * xi^beta; `exponents` holds (alpha, beta).
template <typename Scalar>
struct Monomial {
  Scalar coefficient{};
  std::vector<int> exponents;

  int degree() const {
    int d = 0;
    for (int e : exponents) d += e;
    return d;
  }
  int x_power(int n, int i) const { return exponents[static_cast<size_t>(i)]; }
  int xi_power(int n, int i) const { return exponents[static_cast<size_t>(n + i)]; }
};

template <typename Scalar>
class Polynomial {
 public:
  using Term = Monomial<Scalar>;

  Polynomial() = default;
  explicit Polynomial(int n) : n_(n) {}

  static Polynomial constant(int n, Scalar c) {
    Polynomial p(n);
    p.add_term(c, std::vector<int>(static_cast<size_t>(2 * n), 0));
    return p;
  }

  /// Adds c * x^alpha * xi^beta.
  Polynomial& add_term(Scalar c, const std::vector<int>& alpha, const std::vector<int>& beta) {
    if (static_cast<int>(alpha.size()) != n_ || static_cast<int>(beta.size()) != n_)
      throw ValidationError("polynomial term: multi-index length mismatch");
    std::vector<int> e(alpha);
    e.insert(e.end(), beta.begin(), beta.end());
    return add_term(c, e);
  }

  Polynomial& add_term(Scalar c, std::vector<int> exponents) {
    if (static_cast<int>(exponents.size()) != 2 * n_)
      throw ValidationError("polynomial term: exponent vector must have length 2n");
    for (int e : exponents)
      if (e < 0) throw ValidationError("polynomial term: negative exponent");
    terms_.push_back(Term{c, std::move(exponents)});
    return *this;
  }

  int dimension() const { return n_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, t.degree());
    return d;
  }

  /// Merges equal monomials and drops coefficients with |c| <= tol.
  Polynomial simplified(double tol = 0.0) const {
    std::map<std::vector<int>, Scalar> acc;
    for (const auto& t : terms_) acc[t.exponents] += t.coefficient;
    Polynomial out(n_);
    for (auto& [e, c] : acc)
      if (std::abs(c) > tol) out.terms_.push_back(Term{c, e});
    return out;
  }

  /// d/dz_var, var in [0, 2n).
  Polynomial derivative(int var) const {
    Polynomial out(n_);
    for (const auto& t : terms_) {
      const int e = t.exponents[static_cast<size_t>(var)];
      if (e == 0) continue;
      Term d = t;
      d.coefficient = t.coefficient * static_cast<double>(e);
      d.exponents[static_cast<size_t>(var)] -= 1;
      out.terms_.push_back(std::move(d));
    }
    return out.simplified();
  }

  /// Mixed operator sum_i d^2/(dx_i dxi_i).
  Polynomial mixed_laplacian() const {
    Polynomial out(n_);
    for (int i = 0; i < n_; ++i) {
      const auto d = derivative(i).derivative(n_ + i);
      out.terms_.insert(out.terms_.end(), d.terms_.begin(), d.terms_.end());
    }
    return out.simplified();
  }

  template <typename Other>
  Polynomial<Other> cast() const {
    Polynomial<Other> out(n_);
    for (const auto& t : terms_) out.add_term(static_cast<Other>(t.coefficient), t.exponents);
    return out;
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.n_ != n_) throw ValidationError("polynomial sum: dimension mismatch");
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    *this = simplified();
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator*(Scalar s, Polynomial p) {
    for (auto& t : p.terms_) t.coefficient *= s;
    return p;
  }

  /// Evaluation at a real phase-space point.
  Scalar operator()(const Vec& z) const {
    if (z.size() != 2 * n_) throw ValidationError("polynomial evaluation: point dimension " + dims_string(z.size(), 2 * n_));
    Scalar sum{};
    for (const auto& t : terms_) {
      Scalar v = t.coefficient;
      for (int k = 0; k < 2 * n_; ++k) {
        const int e = t.exponents[static_cast<size_t>(k)];
        if (e) v *= std::pow(z(k), e);
      }
      sum += v;
    }
    return sum;
  }

  std::string to_string() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& t : terms_) {
      if (!first) os << " + ";
      first = false;
      os << "(" << t.coefficient << ")";
      for (int k = 0; k < 2 * n_; ++k) {
        const int e = t.exponents[static_cast<size_t>(k)];
        if (!e) continue;
        os << "*" << (k < n_ ? "x" : "xi") << (k % n_ + 1);
        if (e > 1) os << "^" << e;
      }
    }
    if (first) os << "0";
    return os.str();
  }

 private:
  int n_ = 0;
  std::vector<Term> terms_;
};

using PolynomialSymbol = Polynomial<double>;
using ComplexSymbol = Polynomial<Complex>;

/// Flattened polynomial with cached gradient and Hessian, for hot loops.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const PolynomialSymbol& p) : dim_(2 * p.dimension()) {
    const auto s = p.simplified();
    max_pow_ = std::max(1, s.degree());
    for (const auto& t : s.terms()) {
      coef_.push_back(t.coefficient);
      exps_.insert(exps_.end(), t.exponents.begin(), t.exponents.end());
    }
  }

  int dim() const { return dim_; }

  double value(const Vec& z) const {
    fill_powers(z);
    double sum = 0.0;
    for (size_t t = 0; t < coef_.size(); ++t) sum += coef_[t] * monomial(t, -1, -1);
    return sum;
  }

  Vec gradient(const Vec& z) const {
    fill_powers(z);
    Vec g = Vec::Zero(dim_);
    for (size_t t = 0; t < coef_.size(); ++t) {
      for (int k = 0; k < dim_; ++k) {
        const int e = exp(t, k);
        if (e) g(k) += coef_[t] * e * monomial(t, k, -1);
      }
    }
    return g;
  }

  Mat hessian(const Vec& z) const {
    fill_powers(z);
    Mat h = Mat::Zero(dim_, dim_);
    for (size_t t = 0; t < coef_.size(); ++t) {
      for (int a = 0; a < dim_; ++a) {
        const int ea = exp(t, a);
        if (!ea) continue;
        for (int b = a; b < dim_; ++b) {
          const int eb = exp(t, b);
          if (!eb) continue;
          double c;
          if (a == b) {
            if (ea < 2) continue;
            c = coef_[t] * ea * (ea - 1) * monomial(t, a, a);
          } else {
            c = coef_[t] * ea * eb * monomial(t, a, b);
          }
          h(a, b) += c;
          if (a != b) h(b, a) += c;
        }
      }
    }
    return h;
  }

 private:
  int exp(size_t t, int k) const { return exps_[t * static_cast<size_t>(dim_) + static_cast<size_t>(k)]; }

  // Per-thread scratch table keeps evaluation const and shareable.
  void fill_powers(const Vec& z) const {
    if (z.size() != dim_) throw ValidationError("polynomial evaluation: point dimension " + dims_string(z.size(), dim_));
    auto& pow_ = scratch();
    pow_.resize(static_cast<size_t>(dim_ * (max_pow_ + 1)));
    for (int k = 0; k < dim_; ++k) {
      double* row = &pow_[static_cast<size_t>(k * (max_pow_ + 1))];
      row[0] = 1.0;
      for (int p = 1; p <= max_pow_; ++p) row[p] = row[p - 1] * z(k);
    }
  }

  // Product of powers with the exponent of `da` and `db` lowered by one each.
  double monomial(size_t t, int da, int db) const {
    const auto& pow_ = scratch();
    double v = 1.0;
    for (int k = 0; k < dim_; ++k) {
      int e = exp(t, k);
      if (k == da) --e;
      if (k == db) --e;
      if (e > 0) v *= pow_[static_cast<size_t>(k * (max_pow_ + 1) + e)];
    }
    return v;
  }

  int dim_ = 0;
  int max_pow_ = 1;
  std::vector<double> coef_;
  std::vector<int> exps_;

  static std::vector<double>& scratch() {
    thread_local std::vector<double> buf;
    return buf;
  }
};

}  // namespace eqsc
