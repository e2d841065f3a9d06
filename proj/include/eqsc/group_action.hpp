#pragma once

// Compact subgroups of O(n) acting on phase space R^{2n} by g(x, xi) = (gx, g xi).
// Two kinds are supported: finite groups given by an element list with a
// character table, and tori given by commuting rotation generators.

#include "eqsc/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace eqsc {

struct GroupElement {
  Mat matrix;
  std::vector<double> coords;  // torus angles in radians; empty for finite groups
  int index = -1;              // position in the element list of a finite group

  GroupElement() = default;
  explicit GroupElement(Mat m, std::vector<double> c = {}, int idx = -1)
      : matrix(std::move(m)), coords(std::move(c)), index(idx) {
    validate();
  }

  int n() const { return static_cast<int>(matrix.rows()); }

  void validate() const {
    if (matrix.rows() != matrix.cols()) throw ValidationError("group element: matrix must be square");
    const auto id = Mat::Identity(matrix.rows(), matrix.cols());
    if ((matrix.transpose() * matrix - id).cwiseAbs().maxCoeff() > 1e-12)
      throw ValidationError("group element: matrix is not orthogonal to 1e-12");
    if (std::abs(std::abs(matrix.determinant()) - 1.0) > 1e-12)
      throw ValidationError("group element: |det| differs from 1");
  }
};

/// Character label: torus weight vector m, or a row index into a finite
/// group's character table.
struct CharacterLabel {
  std::vector<int> index;

  static CharacterLabel trivial(int rank = 1) { return {std::vector<int>(static_cast<size_t>(std::max(rank, 1)), 0)}; }
  bool operator==(const CharacterLabel&) const = default;
  bool operator<(const CharacterLabel& o) const { return index < o.index; }

  std::string to_string() const {
    std::string s;
    for (size_t i = 0; i < index.size(); ++i) {
      if (i) s += ';';
      s += std::to_string(index[i]);
    }
    return s;
  }
};

struct OrbitTypeReport {
  int orbit_dim = 0;
  int stabilizer_dim = 0;
  bool is_principal = false;
};

/// Principal isotropy data: a finite list of elements times a subtorus
/// spanned by integer directions in angle space (columns of `torus_directions`).
struct StabilizerSubgroup {
  std::vector<GroupElement> finite;
  Mat torus_directions;
};

/// phi(g) -> scalar evaluated at a Haar node.
struct HaarNode {
  double weight;
  GroupElement element;
};

inline Vec act(const GroupElement& g, const Vec& z) {
  const int n = g.n();
  if (z.size() != 2 * n) throw ValidationError("act: phase point dimension " + dims_string(z.size(), 2 * n));
  Vec out(2 * n);
  out.head(n) = g.matrix * z.head(n);
  out.tail(n) = g.matrix * z.tail(n);
  return out;
}

/// (Ax, A xi) for a Lie-algebra element A.
inline Vec infinitesimal_action(const Mat& a, const Vec& z) {
  const auto n = a.rows();
  if (z.size() != 2 * n) throw ValidationError("infinitesimal_action: phase point dimension " + dims_string(z.size(), 2 * n));
  Vec out(2 * n);
  out.head(n) = a * z.head(n);
  out.tail(n) = a * z.tail(n);
  return out;
}

class CompactGroupAction {
 public:
  enum class Kind { finite, torus };

  /// Finite group. `table[c][k]` is the value of character c on element k;
  /// element 0 must be the identity.
  static CompactGroupAction finite_group(std::vector<Mat> elements, std::vector<std::vector<Complex>> table,
                                         std::string name = "finite") {
    CompactGroupAction g;
    g.kind_ = Kind::finite;
    g.name_ = std::move(name);
    if (elements.empty()) throw ValidationError("finite group: empty element list");
    g.n_ = static_cast<int>(elements.front().rows());
    for (size_t k = 0; k < elements.size(); ++k) {
      if (elements[k].rows() != g.n_) throw ValidationError("finite group: inconsistent element dimensions");
      g.elements_.emplace_back(elements[k], std::vector<double>{}, static_cast<int>(k));
    }
    if ((g.elements_.front().matrix - Mat::Identity(g.n_, g.n_)).cwiseAbs().maxCoeff() > 1e-12)
      throw ValidationError("finite group: element 0 must be the identity");
    if (table.empty()) table.push_back(std::vector<Complex>(elements.size(), 1.0));
    for (const auto& row : table) {
      if (row.size() != elements.size()) throw ValidationError("finite group: character row length mismatch");
      const double d = row.front().real();
      if (std::abs(row.front().imag()) > 1e-12 || d < 1.0 - 1e-12 || std::abs(d - std::round(d)) > 1e-12)
        throw ValidationError("finite group: character value at identity must be a positive integer");
    }
    g.table_ = std::move(table);
    g.finalize();
    return g;
  }

  static CompactGroupAction trivial(int n) {
    return finite_group({Mat::Identity(n, n)}, {{Complex(1.0)}}, "trivial");
  }

  /// Z2 generated by an orthogonal involution, with trivial and sign characters.
  static CompactGroupAction z2(const Mat& involution, std::string name = "z2") {
    const auto n = involution.rows();
    return finite_group({Mat::Identity(n, n), involution}, {{1.0, 1.0}, {1.0, -1.0}}, std::move(name));
  }

  /// Torus with commuting antisymmetric generators satisfying exp(2 pi A_i) = I.
  static CompactGroupAction torus(std::vector<Mat> generators, int nodes_per_dim = 64, std::string name = "torus") {
    CompactGroupAction g;
    g.kind_ = Kind::torus;
    g.name_ = std::move(name);
    if (generators.empty()) throw ValidationError("torus: at least one generator required");
    if (nodes_per_dim < 1) throw ValidationError("torus: node count must be positive");
    g.n_ = static_cast<int>(generators.front().rows());
    for (const auto& a : generators) {
      if (a.rows() != g.n_ || a.cols() != g.n_) throw ValidationError("torus: generator dimension mismatch");
      if ((a + a.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ValidationError("torus: generator not antisymmetric");
      const Mat e = (kTwoPi * a).exp();
      if ((e - Mat::Identity(g.n_, g.n_)).cwiseAbs().maxCoeff() > 1e-9)
        throw ValidationError("torus: exp(2 pi A) != I; generator does not close with period 2 pi");
    }
    for (size_t i = 0; i < generators.size(); ++i)
      for (size_t j = i + 1; j < generators.size(); ++j)
        if ((generators[i] * generators[j] - generators[j] * generators[i]).cwiseAbs().maxCoeff() > 1e-12)
          throw ValidationError("torus: generators do not commute");
    g.lie_basis_ = std::move(generators);
    g.nodes_per_dim_ = nodes_per_dim;
    g.finalize();
    return g;
  }

  /// SO(2) rotating the (i, j) coordinate plane of R^n, generator e_j e_i^T - e_i e_j^T.
  static CompactGroupAction so2_plane(int n, int i = 0, int j = 1, int nodes = 64) {
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) throw ValidationError("so2_plane: invalid plane indices");
    Mat a = Mat::Zero(n, n);
    a(i, j) = -1.0;
    a(j, i) = 1.0;
    return torus({a}, nodes, "so2");
  }

  Kind kind() const { return kind_; }
  bool is_torus() const { return kind_ == Kind::torus; }
  int n() const { return n_; }
  int dim() const { return static_cast<int>(lie_basis_.size()); }
  int rank() const { return dim(); }
  const std::string& name() const { return name_; }
  const std::vector<Mat>& lie_basis() const { return lie_basis_; }
  const std::vector<GroupElement>& elements() const { return elements_; }
  int nodes_per_dim() const { return nodes_per_dim_; }
  int order() const { return static_cast<int>(elements_.size()); }

  /// Same action with a different torus quadrature.
  CompactGroupAction with_nodes(int nodes_per_dim) const {
    if (kind_ != Kind::torus) return *this;
    return torus(lie_basis_, nodes_per_dim, name_);
  }

  GroupElement identity() const {
    if (kind_ == Kind::finite) return elements_.front();
    return GroupElement(Mat::Identity(n_, n_), std::vector<double>(lie_basis_.size(), 0.0));
  }

  /// Torus element exp(sum theta_i A_i).
  GroupElement element(const std::vector<double>& theta) const {
    if (kind_ != Kind::torus) throw ValidationError("element(theta): only defined for torus groups");
    if (theta.size() != lie_basis_.size()) throw ValidationError("element(theta): angle count " + dims_string(static_cast<Eigen::Index>(theta.size()), dim()));
    Mat a = Mat::Zero(n_, n_);
    for (size_t i = 0; i < theta.size(); ++i) a += theta[i] * lie_basis_[i];
    Mat m = a.exp();
    // Polar cleanup so long products stay orthogonal to machine precision.
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    m = svd.matrixU() * svd.matrixV().transpose();
    return GroupElement(m, theta);
  }

  GroupElement element_at(int k) const {
    if (kind_ != Kind::finite) throw ValidationError("element_at: only defined for finite groups");
    if (k < 0 || k >= order()) throw ValidationError("element_at: index out of range");
    return elements_[static_cast<size_t>(k)];
  }

  GroupElement compose(const GroupElement& a, const GroupElement& b) const {
    if (kind_ == Kind::torus) {
      std::vector<double> c(a.coords.size());
      for (size_t i = 0; i < c.size(); ++i) c[i] = wrap_angle(a.coords[i] + b.coords[i]);
      return element(c);
    }
    return elements_[static_cast<size_t>(find_index(a.matrix * b.matrix))];
  }

  GroupElement power(const GroupElement& g, int k) const {
    if (kind_ == Kind::torus) {
      std::vector<double> c(g.coords.size());
      for (size_t i = 0; i < c.size(); ++i) c[i] = wrap_angle(k * g.coords[i]);
      return element(c);
    }
    Mat m = Mat::Identity(n_, n_);
    for (int i = 0; i < std::abs(k); ++i) m = m * g.matrix;
    if (k < 0) m.transposeInPlace();
    return elements_[static_cast<size_t>(find_index(m))];
  }

  GroupElement inverse(const GroupElement& g) const { return power(g, -1); }

  /// Quadrature nodes of the normalized Haar measure.
  const std::vector<HaarNode>& haar_nodes() const { return haar_; }

  template <typename Fn>
  auto haar_average(Fn&& phi) const {
    using R = decltype(phi(haar_.front().element));
    R acc{};
    for (const auto& node : haar_) acc += node.weight * phi(node.element);
    return acc;
  }

  // ---- characters --------------------------------------------------------

  void validate_label(const CharacterLabel& chi) const {
    if (kind_ == Kind::torus) {
      if (static_cast<int>(chi.index.size()) != dim())
        throw ValidationError("character label: torus of rank " + std::to_string(dim()) + " needs " +
                              std::to_string(dim()) + " integer weights, got '" + chi.to_string() + "'");
    } else {
      if (chi.index.size() != 1 || chi.index[0] < 0 || chi.index[0] >= static_cast<int>(table_.size()))
        throw ValidationError("character label: unknown character '" + chi.to_string() + "' for group " + name_);
    }
  }

  int d_chi(const CharacterLabel& chi) const {
    validate_label(chi);
    if (kind_ == Kind::torus) return 1;
    return static_cast<int>(std::lround(table_[static_cast<size_t>(chi.index[0])].front().real()));
  }

  Complex character(const CharacterLabel& chi, const GroupElement& g) const {
    validate_label(chi);
    if (kind_ == Kind::torus) {
      if (g.coords.size() != lie_basis_.size()) throw ValidationError("character: torus element without angle coordinates");
      double phase = 0.0;
      for (size_t i = 0; i < g.coords.size(); ++i) phase += chi.index[i] * g.coords[i];
      return std::polar(1.0, phase);
    }
    const int k = g.index >= 0 ? g.index : find_index(g.matrix);
    return table_[static_cast<size_t>(chi.index[0])][static_cast<size_t>(k)];
  }

  /// All finite-group labels, or torus weights with max |m_i| <= max_weight.
  std::vector<CharacterLabel> labels(int max_weight = 0) const {
    std::vector<CharacterLabel> out;
    if (kind_ == Kind::finite) {
      for (size_t c = 0; c < table_.size(); ++c) out.push_back({{static_cast<int>(c)}});
      return out;
    }
    std::vector<int> m(static_cast<size_t>(dim()), -max_weight);
    while (true) {
      out.push_back({m});
      size_t i = 0;
      while (i < m.size() && m[i] == max_weight) m[i++] = -max_weight;
      if (i == m.size()) break;
      ++m[i];
    }
    return out;
  }

  /// Largest |m_i| the torus quadrature resolves exactly (nodes > 2|m|).
  int max_resolved_weight() const { return kind_ == Kind::torus ? (nodes_per_dim_ - 1) / 2 : 0; }

  // ---- momentum map and orbits -------------------------------------------

  /// mu_i(z) = <z, J A_i z>.
  Vec momentum_map(const Vec& z) const {
    check_point(z);
    Vec mu(dim());
    for (int i = 0; i < dim(); ++i) mu(i) = z.dot(apply_j(infinitesimal_action(lie_basis_[static_cast<size_t>(i)], z)));
    return mu;
  }

  /// Rows are grad mu_i = 2 J A_i z (J A_i is symmetric).
  Mat momentum_jacobian(const Vec& z) const {
    check_point(z);
    Mat d(dim(), 2 * n_);
    for (int i = 0; i < dim(); ++i) d.row(i) = 2.0 * apply_j(infinitesimal_action(lie_basis_[static_cast<size_t>(i)], z)).transpose();
    return d;
  }

  /// Columns A_i z spanning the tangent space of the orbit.
  Mat orbit_tangent(const Vec& z) const {
    check_point(z);
    Mat t(2 * n_, dim());
    for (int i = 0; i < dim(); ++i) t.col(i) = infinitesimal_action(lie_basis_[static_cast<size_t>(i)], z);
    return t;
  }

  /// Same on configuration space: columns A_i x.
  Mat orbit_tangent_x(const Vec& x) const {
    if (x.size() != n_) throw ValidationError("orbit_tangent_x: dimension " + dims_string(x.size(), n_));
    Mat t(n_, dim());
    for (int i = 0; i < dim(); ++i) t.col(i) = lie_basis_[static_cast<size_t>(i)] * x;
    return t;
  }

  /// Rank of {A_i z} with singular values above max(tol, 1e-9 sigma_max).
  OrbitTypeReport orbit_type(const Vec& z, double tol = 1e-9) const {
    const int r = numerical_rank(orbit_tangent(z), 1e-9, tol);
    return {r, dim() - r, r == principal_orbit_dim_};
  }

  OrbitTypeReport orbit_type_x(const Vec& x, double tol = 1e-9) const {
    const int r = numerical_rank(orbit_tangent_x(x), 1e-9, tol);
    return {r, dim() - r, r == kappa_};
  }

  /// Principal orbit dimension on phase space.
  int principal_orbit_dim() const { return principal_orbit_dim_; }
  /// Principal orbit dimension on configuration space R^n.
  int kappa() const { return kappa_; }

  /// Isotropy of a generic configuration-space point.
  StabilizerSubgroup principal_stabilizer() const {
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> nd;
    Vec x(n_);
    for (int i = 0; i < n_; ++i) x(i) = nd(rng);
    StabilizerSubgroup s;
    if (kind_ == Kind::finite) {
      for (const auto& e : elements_)
        if ((e.matrix * x - x).norm() < 1e-9 * x.norm()) s.finite.push_back(e);
      return s;
    }
    s.torus_directions = null_space(orbit_tangent_x(x));
    // Discrete part, detected on the Haar grid.
    for (const auto& node : haar_)
      if ((node.element.matrix * x - x).norm() < 1e-9 * x.norm()) s.finite.push_back(node.element);
    if (s.torus_directions.cols() > 0) {
      // Keep only coset representatives transverse to the continuous part.
      std::vector<GroupElement> reps;
      for (const auto& e : s.finite) {
        Vec th = Eigen::Map<const Vec>(e.coords.data(), dim());
        Vec proj = th - s.torus_directions * (s.torus_directions.transpose() * th);
        if (proj.norm() < 1e-9) continue;
        reps.push_back(e);
      }
      reps.insert(reps.begin(), identity());
      s.finite = std::move(reps);
    }
    return s;
  }

  /// Multiplicity of the trivial representation in chi restricted to the
  /// stabilizer: the Haar average of chi over it.
  int frobenius_factor(const CharacterLabel& chi, const StabilizerSubgroup& stab, int nodes = 64) const {
    validate_label(chi);
    std::vector<GroupElement> base = stab.finite;
    if (base.empty()) base.push_back(identity());
    Complex acc = 0.0;
    const int s = static_cast<int>(stab.torus_directions.cols());
    if (s == 0) {
      for (const auto& e : base) acc += character(chi, e);
      acc /= static_cast<double>(base.size());
    } else {
      if (kind_ != Kind::torus) throw ValidationError("frobenius_factor: subtorus given for a finite group");
      long total = 1;
      for (int i = 0; i < s; ++i) total *= nodes;
      for (const auto& e : base) {
        for (long flat = 0; flat < total; ++flat) {
          long rem = flat;
          std::vector<double> th = e.coords;
          for (int i = 0; i < s; ++i) {
            const double si = kTwoPi * static_cast<double>(rem % nodes) / nodes;
            rem /= nodes;
            for (int k = 0; k < dim(); ++k) th[static_cast<size_t>(k)] += si * stab.torus_directions(k, i);
          }
          double phase = 0.0;
          for (int k = 0; k < dim(); ++k) phase += chi.index[static_cast<size_t>(k)] * th[static_cast<size_t>(k)];
          acc += std::polar(1.0, phase);
        }
      }
      acc /= static_cast<double>(total) * static_cast<double>(base.size());
    }
    const double v = acc.real();
    if (std::abs(acc.imag()) > 1e-9 || std::abs(v - std::round(v)) > 1e-9 || v < -1e-9)
      throw ValidationError("frobenius_factor: non-integer multiplicity " + std::to_string(v) +
                            "; character and stabilizer are inconsistent");
    return static_cast<int>(std::lround(v));
  }

  int frobenius_factor(const CharacterLabel& chi) const { return frobenius_factor(chi, principal_stabilizer()); }

  /// Riemannian volume of the orbit G z inside R^{2n} (or R^n when `x_space`).
  /// Finite groups: number of distinct orbit points.
  double orbit_volume(const Vec& z, bool x_space = false) const {
    const Vec p = x_space ? Vec(z.head(n_)) : z;
    auto moved = [&](const GroupElement& g) -> Vec {
      if (x_space) return g.matrix * p;
      return act(g, p);
    };
    if (kind_ == Kind::finite) {
      int fixing = 0;
      for (const auto& e : elements_)
        if ((moved(e) - p).norm() <= 1e-12 * std::max(1.0, p.norm())) ++fixing;
      return static_cast<double>(order()) / fixing;
    }
    const Mat t = x_space ? orbit_tangent_x(p) : orbit_tangent(p);
    if (numerical_rank(t) < dim())
      throw ValidationError("orbit_volume: torus orbit is not locally free at this point");
    int fixing = 0;
    for (const auto& node : haar_)
      if ((moved(node.element) - p).norm() <= 1e-10 * std::max(1.0, p.norm())) ++fixing;
    const double gram = std::sqrt(std::max(0.0, (t.transpose() * t).determinant()));
    return std::pow(kTwoPi, dim()) * gram / std::max(fixing, 1);
  }

  /// Finite-group element index matching a matrix.
  int find_index(const Mat& m) const {
    for (size_t k = 0; k < elements_.size(); ++k)
      if ((elements_[k].matrix - m).cwiseAbs().maxCoeff() < 1e-9) return static_cast<int>(k);
    throw ValidationError("finite group: matrix is not a group element");
  }

  void check_point(const Vec& z) const {
    if (z.size() != 2 * n_) throw ValidationError("phase point dimension " + dims_string(z.size(), 2 * n_));
  }

 private:
  void finalize() {
    haar_.clear();
    if (kind_ == Kind::finite) {
      const double w = 1.0 / static_cast<double>(elements_.size());
      for (const auto& e : elements_) haar_.push_back({w, e});
    } else {
      long total = 1;
      for (int i = 0; i < dim(); ++i) total *= nodes_per_dim_;
      const double w = 1.0 / static_cast<double>(total);
      for (long flat = 0; flat < total; ++flat) {
        long rem = flat;
        std::vector<double> th(static_cast<size_t>(dim()));
        for (auto& t : th) {
          t = wrap_angle(kTwoPi * static_cast<double>(rem % nodes_per_dim_) / nodes_per_dim_);
          rem /= nodes_per_dim_;
        }
        haar_.push_back({w, element(th)});
      }
    }
    std::mt19937_64 rng(0x0b17);
    std::normal_distribution<double> nd;
    principal_orbit_dim_ = 0;
    kappa_ = 0;
    for (int s = 0; s < 8; ++s) {
      Vec z(2 * n_);
      for (int i = 0; i < 2 * n_; ++i) z(i) = nd(rng);
      if (dim() > 0) {
        principal_orbit_dim_ = std::max(principal_orbit_dim_, numerical_rank(orbit_tangent(z)));
        kappa_ = std::max(kappa_, numerical_rank(orbit_tangent_x(z.head(n_))));
      }
    }
  }

  Kind kind_ = Kind::finite;
  std::string name_;
  int n_ = 0;
  std::vector<GroupElement> elements_;
  std::vector<std::vector<Complex>> table_;
  std::vector<Mat> lie_basis_;
  int nodes_per_dim_ = 0;
  std::vector<HaarNode> haar_;
  int principal_orbit_dim_ = 0;
  int kappa_ = 0;
};

/// Symplectic pairing <a, J b>.
inline double symplectic_form(const Vec& a, const Vec& b) { return a.dot(apply_j(b)); }

}  // namespace eqsc
