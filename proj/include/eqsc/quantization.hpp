#pragma once

// Hermite-Galerkin matrices of quantized polynomial symbols, group
// representations on the oscillator basis, isotypic projectors and spectra.

#include "eqsc/group_action.hpp"
#include "eqsc/hamiltonian.hpp"
#include "eqsc/polynomial.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

namespace eqsc {

using CSparse = Eigen::SparseMatrix<Complex>;

enum class Ordering { weyl, standard };

inline constexpr int kMaxSymbolDegree = 6;

/// Tensor Hermite functions of total degree <= cutoff for the reference
/// oscillator 1/2 sum (xi_j^2 + omega_j^2 x_j^2) at the working h.
class GalerkinBasis {
 public:
  GalerkinBasis(int n, int cutoff, Vec omega) : n_(n), cutoff_(cutoff), omega_(std::move(omega)) {
    if (n < 1 || n > 8) throw ValidationError("galerkin basis: dimension must be in [1, 8]");
    if (cutoff < 0 || cutoff > 250) throw ValidationError("galerkin basis: cutoff must be in [0, 250]");
    if (omega_.size() != n) throw ValidationError("galerkin basis: reference frequencies " + dims_string(omega_.size(), n));
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(omega_(i) > 0.0) || !std::isfinite(omega_(i)))
        throw ValidationError("galerkin basis: reference frequencies must be positive");
    std::vector<int> k(static_cast<size_t>(n), 0);
    for (int d = 0; d <= cutoff; ++d) enumerate(d, 0, k);
  }

  int n() const { return n_; }
  int cutoff() const { return cutoff_; }
  const Vec& omega() const { return omega_; }
  int size() const { return static_cast<int>(states_.size()); }
  const std::vector<int>& state(int i) const { return states_[static_cast<size_t>(i)]; }

  /// Index of a multi-index, or -1 when outside the truncation.
  int index(const std::vector<int>& k) const {
    int d = 0;
    for (int v : k) {
      if (v < 0) return -1;
      d += v;
    }
    if (d > cutoff_) return -1;
    const auto it = lookup_.find(key(k));
    return it == lookup_.end() ? -1 : it->second;
  }

  static std::size_t expected_size(int n, int cutoff) {
    double c = 1.0;
    for (int i = 1; i <= n; ++i) c = c * (cutoff + i) / i;
    return static_cast<std::size_t>(std::llround(c));
  }

 private:
  static std::uint64_t key(const std::vector<int>& k) {
    std::uint64_t v = 0;
    for (int x : k) v = (v << 8) | static_cast<std::uint64_t>(x);
    return v;
  }

  void enumerate(int remaining, int pos, std::vector<int>& k) {
    if (pos == n_ - 1) {
      k[static_cast<size_t>(pos)] = remaining;
      lookup_[key(k)] = static_cast<int>(states_.size());
      states_.push_back(k);
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      k[static_cast<size_t>(pos)] = v;
      enumerate(remaining - v, pos + 1, k);
    }
  }

  int n_;
  int cutoff_;
  Vec omega_;
  std::vector<std::vector<int>> states_;
  std::unordered_map<std::uint64_t, int> lookup_;
};

/// omega_j = sqrt(c_{x_j^2} / c_{xi_j^2}) from the quadratic diagonal of the symbol.
inline Vec default_reference_frequencies(const PolynomialSymbol& symbol) {
  const int n = symbol.dimension();
  Vec cx = Vec::Zero(n), cxi = Vec::Zero(n);
  const auto simple = symbol.simplified();
  for (const auto& t : simple.terms()) {
    if (t.degree() != 2) continue;
    for (int j = 0; j < n; ++j) {
      if (t.exponents[static_cast<size_t>(j)] == 2) cx(j) += t.coefficient;
      if (t.exponents[static_cast<size_t>(n + j)] == 2) cxi(j) += t.coefficient;
    }
  }
  Vec w(n);
  for (int j = 0; j < n; ++j) {
    if (!(cx(j) > 0.0) || !(cxi(j) > 0.0))
      throw ValidationError("reference frequencies: quadratic part is not positive on axis " + std::to_string(j + 1) +
                            "; configure omega explicitly");
    w(j) = std::sqrt(cx(j) / cxi(j));
  }
  return w;
}

struct OperatorMatrix {
  CSparse matrix;
  double h = 0.0;
  Ordering ordering = Ordering::weyl;

  double hermiticity_defect() const {
    const CSparse d = matrix - CSparse(matrix.adjoint());
    double m = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
      for (CSparse::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
  }
};

namespace detail {

/// Position and momentum matrices of one oscillator axis, size L x L.
struct AxisOperators {
  CMat x, xi;
  AxisOperators(int levels, double omega, double h) {
    CMat a = CMat::Zero(levels, levels);
    for (int k = 1; k < levels; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    const CMat ad = a.adjoint();
    x = std::sqrt(h / (2.0 * omega)) * (a + ad);
    xi = Complex(0.0, std::sqrt(h * omega / 2.0)) * (ad - a);
  }
};

inline double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

/// One-axis operator for x^a xi^b: Weyl uses 2^-a sum_k C(a,k) x^(a-k) xi^b x^k.
inline CMat axis_monomial(const AxisOperators& ops, int a, int b, Ordering ord) {
  const Eigen::Index L = ops.x.rows();
  std::vector<CMat> xp{CMat::Identity(L, L)};
  for (int k = 1; k <= a; ++k) xp.push_back(xp.back() * ops.x);
  CMat pb = CMat::Identity(L, L);
  for (int k = 0; k < b; ++k) pb = pb * ops.xi;
  if (ord == Ordering::standard || a == 0 || b == 0) return xp[static_cast<size_t>(a)] * pb;
  CMat out = CMat::Zero(L, L);
  for (int k = 0; k <= a; ++k) out += binomial(a, k) * (xp[static_cast<size_t>(a - k)] * pb * xp[static_cast<size_t>(k)]);
  return std::ldexp(1.0, -a) * out;
}

}  // namespace detail

/// Galerkin matrix of Op_h(symbol) in the basis; exact per monomial because the
/// axis matrices are built with `degree` extra levels.
inline OperatorMatrix quantize(const ComplexSymbol& symbol, Ordering ordering, const GalerkinBasis& basis, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("quantize: h must be positive");
  if (symbol.dimension() != basis.n()) throw ValidationError("quantize: symbol dimension " + dims_string(symbol.dimension(), basis.n()));
  const auto s = symbol.simplified();
  const int deg = s.degree();
  if (deg > kMaxSymbolDegree)
    throw ValidationError("quantize: symbol degree " + std::to_string(deg) + " exceeds supported maximum " +
                          std::to_string(kMaxSymbolDegree));
  const int n = basis.n();
  const int levels = basis.cutoff() + deg + 1;
  std::vector<detail::AxisOperators> axes;
  for (int j = 0; j < n; ++j) axes.emplace_back(levels, basis.omega()(j), h);

  std::map<std::tuple<int, int, int>, CMat> cache;
  auto axis_matrix = [&](int j, int a, int b) -> const CMat& {
    auto k = std::make_tuple(j, a, b);
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, detail::axis_monomial(axes[static_cast<size_t>(j)], a, b, ordering)).first;
    return it->second;
  };

  std::vector<Eigen::Triplet<Complex>> trip;
  std::vector<int> k(static_cast<size_t>(n));
  for (const auto& t : s.terms()) {
    std::vector<const CMat*> mats(static_cast<size_t>(n));
    std::vector<int> band(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
      const int a = t.exponents[static_cast<size_t>(j)], b = t.exponents[static_cast<size_t>(n + j)];
      band[static_cast<size_t>(j)] = a + b;
      mats[static_cast<size_t>(j)] = (a + b) ? &axis_matrix(j, a, b) : nullptr;
    }
    for (int col = 0; col < basis.size(); ++col) {
      const auto& l = basis.state(col);
      // Odometer over k_j = l_j - band_j, ..., l_j + band_j in steps of 2.
      for (int j = 0; j < n; ++j) k[static_cast<size_t>(j)] = l[static_cast<size_t>(j)] - band[static_cast<size_t>(j)];
      while (true) {
        const int row = basis.index(k);
        if (row >= 0) {
          Complex v = t.coefficient;
          for (int j = 0; j < n && v != Complex(0.0); ++j)
            if (mats[static_cast<size_t>(j)]) v *= (*mats[static_cast<size_t>(j)])(k[static_cast<size_t>(j)], l[static_cast<size_t>(j)]);
          if (v != Complex(0.0)) trip.emplace_back(row, col, v);
        }
        int j = 0;
        for (; j < n; ++j) {
          auto& kj = k[static_cast<size_t>(j)];
          const int lj = l[static_cast<size_t>(j)], bj = band[static_cast<size_t>(j)];
          if (kj + 2 <= lj + bj) {
            kj += 2;
            break;
          }
          kj = lj - bj;
        }
        if (j == n) break;
      }
    }
  }
  OperatorMatrix out;
  out.h = h;
  out.ordering = ordering;
  out.matrix.resize(basis.size(), basis.size());
  out.matrix.setFromTriplets(trip.begin(), trip.end());
  out.matrix.prune(Complex(0.0), 0.0);
  return out;
}

inline OperatorMatrix quantize(const PolynomialSymbol& symbol, Ordering ordering, const GalerkinBasis& basis, double h) {
  return quantize(symbol.cast<Complex>(), ordering, basis, h);
}

/// b_j = (1/j!) (-(i/2) sum_k d_{x_k} d_{xi_k})^j b, so that the Weyl
/// quantization of b equals the x-left quantization of sum_j h^j b_j.
/// Stops at the first vanishing term (polynomials terminate exactly).
inline std::vector<ComplexSymbol> quantization_change_expansion(const ComplexSymbol& b, int max_order) {
  if (max_order < 0) throw ValidationError("quantization change: order must be nonnegative");
  std::vector<ComplexSymbol> out{b.simplified()};
  for (int j = 1; j <= max_order; ++j) {
    const ComplexSymbol next = (Complex(0.0, -0.5) / static_cast<double>(j)) * out.back().mixed_laplacian();
    if (next.simplified(0.0).empty()) break;
    out.push_back(next.simplified());
  }
  return out;
}

inline std::vector<ComplexSymbol> quantization_change_expansion(const PolynomialSymbol& b, int max_order) {
  return quantization_change_expansion(b.cast<Complex>(), max_order);
}

/// sum_j h^j b_j as one symbol.
inline ComplexSymbol resum(const std::vector<ComplexSymbol>& terms, double h, int upto = -1) {
  if (terms.empty()) throw ValidationError("resum: empty expansion");
  ComplexSymbol out(terms.front().dimension());
  const int last = upto < 0 ? static_cast<int>(terms.size()) - 1 : std::min(upto, static_cast<int>(terms.size()) - 1);
  for (int j = 0; j <= last; ++j) out += Complex(std::pow(h, j)) * terms[static_cast<size_t>(j)];
  return out;
}

/// Block-diagonal operator on a GalerkinBasis: block b acts on basis indices blocks[b].
struct BlockMatrix {
  std::vector<std::vector<int>> blocks;
  std::vector<CMat> mats;
  int size = 0;

  CMat dense() const {
    CMat out = CMat::Zero(size, size);
    for (size_t b = 0; b < blocks.size(); ++b)
      for (size_t r = 0; r < blocks[b].size(); ++r)
        for (size_t c = 0; c < blocks[b].size(); ++c)
          out(blocks[b][r], blocks[b][c]) = mats[b](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    return out;
  }

  CSparse sparse() const {
    std::vector<Eigen::Triplet<Complex>> trip;
    for (size_t b = 0; b < blocks.size(); ++b)
      for (size_t r = 0; r < blocks[b].size(); ++r)
        for (size_t c = 0; c < blocks[b].size(); ++c) {
          const Complex v = mats[b](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
          if (v != Complex(0.0)) trip.emplace_back(blocks[b][r], blocks[b][c], v);
        }
    CSparse out(size, size);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
  }
};

/// The oscillator basis organized into subspaces that every group element
/// preserves: axes mixed by the group form classes, and a block is a fixed
/// tuple of per-class total degrees.
class SymmetryAdaptedBasis {
 public:
  SymmetryAdaptedBasis(const CompactGroupAction& group, const GalerkinBasis& basis) : group_(group), basis_(basis) {
    if (group.n() != basis.n()) throw ValidationError("representation: group acts on R^" + std::to_string(group.n()) +
                                                      " but the basis has dimension " + std::to_string(basis.n()));
    build_classes();
    build_blocks();
    if (group_.is_torus()) diagonalize_generators();
  }

  const GalerkinBasis& basis() const { return basis_; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }

  /// M(g) with (M(g) psi)(x) = psi(g^-1 x).
  BlockMatrix representation(const GroupElement& g) const {
    BlockMatrix out{blocks_, {}, basis_.size()};
    if (group_.is_torus()) {
      if (g.coords.size() != static_cast<size_t>(group_.dim()))
        throw ValidationError("representation: torus element without angle coordinates");
      for (size_t b = 0; b < blocks_.size(); ++b) {
        CVec phase(static_cast<Eigen::Index>(blocks_[b].size()));
        for (Eigen::Index c = 0; c < phase.size(); ++c) {
          double p = 0.0;
          for (size_t i = 0; i < g.coords.size(); ++i) p += g.coords[i] * weights_[b][static_cast<size_t>(c)][i];
          phase(c) = std::polar(1.0, p);
        }
        out.mats.push_back(vecs_[b] * phase.asDiagonal() * vecs_[b].adjoint());
      }
    } else {
      for (const auto& blk : blocks_) out.mats.push_back(expand_block(g.matrix, blk));
    }
    return out;
  }

  /// P_chi = d_chi * Haar average of conj(chi(g)) M(g).
  BlockMatrix projector(const CharacterLabel& chi) const {
    group_.validate_label(chi);
    BlockMatrix out{blocks_, {}, basis_.size()};
    const double d = group_.d_chi(chi);
    if (group_.is_torus()) {
      check_aliasing(chi);
      for (size_t b = 0; b < blocks_.size(); ++b) {
        const Eigen::Index s = static_cast<Eigen::Index>(blocks_[b].size());
        CVec p(s);
        for (Eigen::Index c = 0; c < s; ++c) {
          // Haar average of conj(chi(g)) times the eigenvalue of M(g) on this column.
          p(c) = d * group_.haar_average([&](const GroupElement& g) {
            double ph = 0.0;
            for (size_t i = 0; i < g.coords.size(); ++i) ph += g.coords[i] * weights_[b][static_cast<size_t>(c)][i];
            return std::conj(group_.character(chi, g)) * std::polar(1.0, ph);
          });
        }
        out.mats.push_back(vecs_[b] * p.asDiagonal() * vecs_[b].adjoint());
      }
    } else {
      for (size_t b = 0; b < blocks_.size(); ++b) {
        const Eigen::Index s = static_cast<Eigen::Index>(blocks_[b].size());
        CMat acc = CMat::Zero(s, s);
        for (const auto& node : group_.haar_nodes())
          acc += node.weight * std::conj(group_.character(chi, node.element)) * expand_block(node.element.matrix, blocks_[b]);
        out.mats.push_back(d * acc);
      }
    }
    for (const auto& m : out.mats) {
      const double idem = (m * m - m).cwiseAbs().maxCoeff();
      if (idem > 1e-10)
        throw NumericalError("isotypic projector for " + chi.to_string() + " is not idempotent (defect " +
                             std::to_string(idem) + "); increase the Haar node count");
    }
    return out;
  }

  /// Orthonormal basis of range(P_chi) as an n_basis x r sparse matrix.
  CSparse range_basis(const CharacterLabel& chi) const {
    const BlockMatrix p = projector(chi);
    std::vector<Eigen::Triplet<Complex>> trip;
    int col = 0;
    for (size_t b = 0; b < blocks_.size(); ++b) {
      Eigen::SelfAdjointEigenSolver<CMat> es(p.mats[b]);
      for (Eigen::Index c = 0; c < es.eigenvalues().size(); ++c) {
        if (es.eigenvalues()(c) < 0.5) continue;
        for (size_t r = 0; r < blocks_[b].size(); ++r) {
          const Complex v = es.eigenvectors()(static_cast<Eigen::Index>(r), c);
          if (std::abs(v) > 1e-15) trip.emplace_back(blocks_[b][r], col, v);
        }
        ++col;
      }
    }
    CSparse q(basis_.size(), col);
    q.setFromTriplets(trip.begin(), trip.end());
    return q;
  }

  /// Labels whose isotypic component meets the truncated basis.
  std::vector<CharacterLabel> labels_present() const {
    if (!group_.is_torus()) return group_.labels();
    std::set<std::vector<int>> seen;
    for (const auto& wb : weights_)
      for (const auto& w : wb) seen.insert(w);
    std::vector<CharacterLabel> out;
    for (const auto& w : seen) out.push_back({w});
    return out;
  }

 private:
  void build_classes() {
    const int n = basis_.n();
    std::vector<int> parent(static_cast<size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int i) { return parent[static_cast<size_t>(i)] == i ? i : parent[static_cast<size_t>(i)] = find(parent[static_cast<size_t>(i)]); };
    auto mark = [&](const Mat& m) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j && std::abs(m(i, j)) > 1e-14) parent[static_cast<size_t>(find(i))] = find(j);
    };
    if (group_.is_torus())
      for (const auto& a : group_.lie_basis()) mark(a);
    else
      for (const auto& g : group_.elements()) mark(g.matrix);
    class_of_.assign(static_cast<size_t>(n), -1);
    std::map<int, int> root_to_class;
    for (int i = 0; i < n; ++i) {
      const int r = find(i);
      auto it = root_to_class.find(r);
      if (it == root_to_class.end()) it = root_to_class.emplace(r, static_cast<int>(root_to_class.size())).first;
      class_of_[static_cast<size_t>(i)] = it->second;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (class_of_[static_cast<size_t>(i)] == class_of_[static_cast<size_t>(j)] &&
            std::abs(basis_.omega()(i) - basis_.omega()(j)) > 1e-12 * basis_.omega()(i))
          throw ValidationError("representation: reference frequencies differ on axes " + std::to_string(i + 1) + " and " +
                                std::to_string(j + 1) + ", which the group mixes");
  }

  void build_blocks() {
    std::map<std::vector<int>, int> key_to_block;
    const int classes = *std::max_element(class_of_.begin(), class_of_.end()) + 1;
    for (int s = 0; s < basis_.size(); ++s) {
      std::vector<int> key(static_cast<size_t>(classes), 0);
      const auto& k = basis_.state(s);
      for (size_t j = 0; j < k.size(); ++j) key[static_cast<size_t>(class_of_[j])] += k[j];
      auto it = key_to_block.find(key);
      if (it == key_to_block.end()) {
        it = key_to_block.emplace(key, static_cast<int>(blocks_.size())).first;
        blocks_.emplace_back();
      }
      blocks_[static_cast<size_t>(it->second)].push_back(s);
    }
  }

  // dM(A) = sum_ab A_ab a_a^+ a_b restricted to one block (skew-Hermitian).
  CMat generator_block(const Mat& a, const std::vector<int>& blk) const {
    const Eigen::Index s = static_cast<Eigen::Index>(blk.size());
    std::map<int, Eigen::Index> local;
    for (Eigen::Index r = 0; r < s; ++r) local[blk[static_cast<size_t>(r)]] = r;
    CMat d = CMat::Zero(s, s);
    const int n = basis_.n();
    for (Eigen::Index c = 0; c < s; ++c) {
      const auto& k = basis_.state(blk[static_cast<size_t>(c)]);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
          if (a(p, q) == 0.0 || k[static_cast<size_t>(q)] == 0) continue;
          std::vector<int> m = k;
          double amp = std::sqrt(static_cast<double>(m[static_cast<size_t>(q)]));
          --m[static_cast<size_t>(q)];
          ++m[static_cast<size_t>(p)];
          amp *= std::sqrt(static_cast<double>(m[static_cast<size_t>(p)]));
          const int row = basis_.index(m);
          const auto it = local.find(row);
          if (it == local.end()) throw NumericalError("representation: generator leaves a block; basis is not G-stable");
          d(it->second, c) += a(p, q) * amp;
        }
    }
    return d;
  }

  void diagonalize_generators() {
    const auto& gens = group_.lie_basis();
    const size_t r = gens.size();
    for (const auto& blk : blocks_) {
      std::vector<CMat> herm;
      CMat mix = CMat::Zero(static_cast<Eigen::Index>(blk.size()), static_cast<Eigen::Index>(blk.size()));
      for (size_t i = 0; i < r; ++i) {
        herm.push_back(Complex(0.0, -1.0) * generator_block(gens[i], blk));
        mix += std::sqrt(2.0 + static_cast<double>(i)) * herm.back();
      }
      Eigen::SelfAdjointEigenSolver<CMat> es(mix);
      vecs_.push_back(es.eigenvectors());
      std::vector<std::vector<int>> w;
      for (Eigen::Index c = 0; c < es.eigenvectors().cols(); ++c) {
        std::vector<int> wc(r);
        for (size_t i = 0; i < r; ++i) {
          const double v = (es.eigenvectors().col(c).adjoint() * herm[i] * es.eigenvectors().col(c))(0).real();
          wc[i] = static_cast<int>(std::lround(v));
          if (std::abs(v - wc[i]) > 1e-8)
            throw NumericalError("representation: non-integral torus weight " + std::to_string(v) +
                                 "; the generators do not close over 2 pi");
        }
        w.push_back(std::move(wc));
      }
      weights_.push_back(std::move(w));
    }
  }

  void check_aliasing(const CharacterLabel& chi) const {
    int worst = 0;
    for (const auto& wb : weights_)
      for (const auto& w : wb)
        for (size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(w[i] - chi.index[i]));
    const int nodes = 2 * group_.max_resolved_weight() + 1;
    if (worst >= nodes)
      throw NumericalError("isotypic projector for " + chi.to_string() + ": weights up to " + std::to_string(worst) +
                           " alias on the Haar grid; use at least " + std::to_string(worst + 1) + " nodes per angle");
  }

  // M(g) on one block by expanding prod_j (sum_i g_ij a_i^+)^{k_j} / sqrt(k_j!) |0>.
  CMat expand_block(const Mat& g, const std::vector<int>& blk) const {
    const Eigen::Index s = static_cast<Eigen::Index>(blk.size());
    std::map<int, Eigen::Index> local;
    for (Eigen::Index r = 0; r < s; ++r) local[blk[static_cast<size_t>(r)]] = r;
    const int n = basis_.n();
    CMat out = CMat::Zero(s, s);
    for (Eigen::Index c = 0; c < s; ++c) {
      const auto& k = basis_.state(blk[static_cast<size_t>(c)]);
      std::map<std::vector<int>, double> poly{{std::vector<int>(static_cast<size_t>(n), 0), 1.0}};
      double norm = 1.0;
      for (int j = 0; j < n; ++j) {
        for (int rep = 0; rep < k[static_cast<size_t>(j)]; ++rep) {
          std::map<std::vector<int>, double> next;
          for (const auto& [m, v] : poly)
            for (int i = 0; i < n; ++i) {
              if (g(i, j) == 0.0) continue;
              auto m2 = m;
              ++m2[static_cast<size_t>(i)];
              next[m2] += v * g(i, j);
            }
          poly.swap(next);
          norm *= std::sqrt(static_cast<double>(rep + 1));
        }
      }
      for (const auto& [m, v] : poly) {
        if (v == 0.0) continue;
        double f = 1.0;
        for (int x : m)
          for (int t = 2; t <= x; ++t) f *= std::sqrt(static_cast<double>(t));
        const auto it = local.find(basis_.index(m));
        if (it == local.end()) throw NumericalError("representation: group element leaves a block; basis is not G-stable");
        out(it->second, c) += v * f / norm;
      }
    }
    return out;
  }

  CompactGroupAction group_;
  GalerkinBasis basis_;
  std::vector<int> class_of_;
  std::vector<std::vector<int>> blocks_;
  std::vector<CMat> vecs_;
  std::vector<std::vector<std::vector<int>>> weights_;
};

inline BlockMatrix representation_matrix(const CompactGroupAction& group, const GroupElement& g, const GalerkinBasis& basis) {
  return SymmetryAdaptedBasis(group, basis).representation(g);
}

inline BlockMatrix isotypic_projector(const CompactGroupAction& group, const CharacterLabel& chi, const GalerkinBasis& basis) {
  return SymmetryAdaptedBasis(group, basis).projector(chi);
}

struct Eigenpair {
  double lambda = 0.0;
  CharacterLabel chi;
  long multiplicity = 1;
  bool trusted = true;
};

struct SpectralData {
  double h = 0.0;
  std::vector<Eigenpair> pairs;
  /// Eigenvalues below this bound are reliable; +inf for analytic sources.
  double trusted_upper = std::numeric_limits<double>::infinity();
  /// Set when the requested window reaches beyond the trusted range.
  bool truncation_warning = false;
  std::string source = "galerkin";
};

/// Spectrum of Q^* H Q inside [e1, e2], where Q spans range(P_chi).
inline SpectralData reduced_spectrum(const OperatorMatrix& hmat, const CSparse& q, const CharacterLabel& chi, double e1,
                                     double e2, double commute_tol = 1e-8) {
  if (q.rows() != hmat.matrix.rows()) throw ValidationError("reduced spectrum: projector range " + dims_string(q.rows(), hmat.matrix.rows()));
  if (!(e1 <= e2)) throw ValidationError("reduced spectrum: window must satisfy E1 <= E2");
  SpectralData out;
  out.h = hmat.h;
  if (q.cols() == 0) return out;
  const CSparse hq = hmat.matrix * q;
  const CMat hred = CMat(CSparse(q.adjoint()) * hq);
  // Invariance of range(P): (1 - QQ^*) H Q = 0.
  double scale = 1.0;
  for (int k = 0; k < hmat.matrix.outerSize(); ++k)
    for (CSparse::InnerIterator it(hmat.matrix, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  const CMat leak = CMat(hq) - CMat(q * hred.sparseView());
  const double defect = leak.size() ? leak.cwiseAbs().maxCoeff() / scale : 0.0;
  if (defect > commute_tol)
    throw ValidationError("reduced spectrum: operator does not commute with the projector (relative defect " +
                          std::to_string(defect) + "); symbol not G-invariant or basis not G-stable");
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (hred + hred.adjoint()), Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam >= e1 && lam <= e2) out.pairs.push_back({lam, chi, 1, true});
  }
  return out;
}

struct GalerkinOptions {
  int cutoff = 40;
  int trust_increment = 8;
  double trust_rel = 1e-8;
  Vec omega;  // empty: default_reference_frequencies
  int max_dense = 6000;
};

namespace detail {

inline std::vector<double> sector_eigenvalues(const HamiltonianModel& model, const CharacterLabel& chi, double h, int cutoff,
                                              const Vec& omega, int max_dense) {
  const int n = model.n();
  const GalerkinBasis basis(n, cutoff, omega);
  const SymmetryAdaptedBasis sab(model.group(), basis);
  const CSparse q = sab.range_basis(chi);
  if (q.cols() > max_dense)
    throw ValidationError("galerkin spectrum: isotypic subspace has dimension " + std::to_string(q.cols()) +
                          " > " + std::to_string(max_dense) + "; lower the cutoff");
  const auto hmat = quantize(model.symbol(), Ordering::weyl, basis, h);
  const auto spec = reduced_spectrum(hmat, q, chi, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
  std::vector<double> out;
  for (const auto& p : spec.pairs) out.push_back(p.lambda);
  return out;
}

}  // namespace detail

/// Galerkin spectrum of the chi-isotypic part at cutoff N, with trust flags
/// from comparing against cutoff N + increment (index-matched, ascending).
inline SpectralData galerkin_spectrum(const HamiltonianModel& model, const CharacterLabel& chi, double h, double e1, double e2,
                                      const GalerkinOptions& opt = {}) {
  if (!(h > 0.0)) throw ValidationError("galerkin spectrum: h must be positive");
  if (!(e1 <= e2)) throw ValidationError("galerkin spectrum: window must satisfy E1 <= E2");
  model.group().validate_label(chi);
  const Vec omega = opt.omega.size() ? opt.omega : default_reference_frequencies(model.symbol());
  const auto lo = detail::sector_eigenvalues(model, chi, h, opt.cutoff, omega, opt.max_dense);
  const auto hi = detail::sector_eigenvalues(model, chi, h, opt.cutoff + opt.trust_increment, omega, opt.max_dense);
  SpectralData out;
  out.h = h;
  out.trusted_upper = -std::numeric_limits<double>::infinity();
  bool all_trusted = true;
  for (size_t i = 0; i < lo.size(); ++i) {
    const bool ok = all_trusted && i < hi.size() && std::abs(lo[i] - hi[i]) <= opt.trust_rel * std::max(std::abs(lo[i]), 1e-300);
    if (!ok && all_trusted) {
      all_trusted = false;
      out.trusted_upper = lo[i];
    }
    if (lo[i] >= e1 && lo[i] <= e2) out.pairs.push_back({lo[i], chi, 1, ok});
  }
  if (all_trusted) out.trusted_upper = lo.empty() ? -std::numeric_limits<double>::infinity() : lo.back();
  out.truncation_warning = e2 > out.trusted_upper;
  return out;
}

/// Streams an analytic spectrum into SpectralData (small windows only).
inline SpectralData analytic_spectrum_data(const HamiltonianModel& model, const CharacterLabel& chi, double h, double e1,
                                           double e2, std::size_t max_pairs = 5'000'000) {
  SpectralData out;
  out.h = h;
  out.source = "analytic";
  model.analytic_spectrum()(h, chi, e1, e2, [&](double lam, long mult) {
    if (out.pairs.size() >= max_pairs)
      throw ValidationError("analytic spectrum: more than " + std::to_string(max_pairs) + " levels in the window");
    out.pairs.push_back({lam, chi, mult, true});
  });
  std::sort(out.pairs.begin(), out.pairs.end(), [](const Eigenpair& a, const Eigenpair& b) { return a.lambda < b.lambda; });
  return out;
}

/// sum multiplicity * f(lambda) over trusted pairs with label chi; f must be
/// supported in [support_lo, support_hi] below the trusted range.
inline double trace_f(const SpectralData& spec, const std::function<double(double)>& f, double support_lo, double support_hi,
                      const CharacterLabel& chi) {
  if (support_hi > spec.trusted_upper)
    throw ValidationError("trace_f: test function support reaches " + std::to_string(support_hi) +
                          " beyond the trusted range " + std::to_string(spec.trusted_upper));
  double sum = 0.0, comp = 0.0;
  for (const auto& p : spec.pairs) {
    if (p.chi.index != chi.index || p.lambda < support_lo || p.lambda > support_hi) continue;
    if (!p.trusted) throw ValidationError("trace_f: untrusted eigenvalue inside the test function support");
    const double y = static_cast<double>(p.multiplicity) * f(p.lambda) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace eqsc
