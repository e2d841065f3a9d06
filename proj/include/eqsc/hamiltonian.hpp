#pragma once

// G-invariant polynomial Hamiltonians together with optional closed-form oracles.

#include "eqsc/group_action.hpp"
#include "eqsc/polynomial.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace eqsc {

/// Receives (eigenvalue, multiplicity) pairs from a spectrum source.
using LevelSink = std::function<void(double, long)>;

/// Closed-form spectrum: calls sink for every level of isotypic type chi inside [lo, hi].
using AnalyticSpectrum = std::function<void(double h, const CharacterLabel& chi, double lo, double hi, const LevelSink& sink)>;

/// Explicit parametrization of the regular part of the zero momentum level.
struct ZeroLevelChart {
  int dim = 0;
  /// Parameter box covering {H <= emax} inside the zero level.
  std::function<std::vector<std::pair<double, double>>(double emax)> bounds;
  std::function<Vec(const Vec&)> map;
  /// Riemannian density sqrt(det(Dmap^T Dmap)); computed by finite differences when empty.
  std::function<double(const Vec&)> density;
};

class HamiltonianModel {
 public:
  HamiltonianModel(std::string id, PolynomialSymbol symbol, CompactGroupAction group)
      : id_(std::move(id)), symbol_(symbol.simplified()), compiled_(symbol_), group_(std::move(group)) {
    if (symbol_.dimension() != group_.n())
      throw ValidationError("model " + id_ + ": symbol dimension " + dims_string(symbol_.dimension(), group_.n()) +
                            " against group dimension");
    for (const auto& t : symbol_.terms())
      if (!std::isfinite(t.coefficient)) throw ValidationError("model " + id_ + ": non-finite coefficient");
  }

  const std::string& id() const { return id_; }
  int n() const { return symbol_.dimension(); }
  const PolynomialSymbol& symbol() const { return symbol_; }
  const CompactGroupAction& group() const { return group_; }

  double value(const Vec& z) const { return compiled_.value(z); }
  Vec gradient(const Vec& z) const { return compiled_.gradient(z); }
  Mat hessian(const Vec& z) const { return compiled_.hessian(z); }
  /// Hamilton vector field J grad H.
  Vec field(const Vec& z) const { return apply_j(compiled_.gradient(z)); }

  HamiltonianModel& set_description(std::string d) { description_ = std::move(d); return *this; }
  HamiltonianModel& set_analytic_flow(std::function<Vec(const Vec&, double)> f) { flow_ = std::move(f); return *this; }
  HamiltonianModel& set_analytic_spectrum(AnalyticSpectrum s) { spectrum_ = std::move(s); return *this; }
  HamiltonianModel& set_chart(ZeroLevelChart c) { chart_ = std::move(c); return *this; }
  HamiltonianModel& set_box(std::function<Vec(double)> b) { box_ = std::move(b); return *this; }
  HamiltonianModel& set_group(CompactGroupAction g) {
    if (g.n() != n()) throw ValidationError("set_group: dimension mismatch");
    group_ = std::move(g);
    return *this;
  }

  const std::string& description() const { return description_; }
  bool has_analytic_flow() const { return static_cast<bool>(flow_); }
  bool has_analytic_spectrum() const { return static_cast<bool>(spectrum_); }
  bool has_chart() const { return chart_.has_value(); }

  Vec analytic_flow(const Vec& z, double t) const {
    if (!flow_) throw ValidationError("model " + id_ + " has no analytic flow");
    return flow_(z, t);
  }
  const AnalyticSpectrum& analytic_spectrum() const {
    if (!spectrum_) throw ValidationError("model " + id_ + " has no analytic spectrum");
    return spectrum_;
  }
  const ZeroLevelChart& chart() const {
    if (!chart_) throw ValidationError("model " + id_ + " has no zero-level chart");
    return *chart_;
  }

  /// Half-widths of a box containing {H <= emax}.
  Vec box(double emax) const {
    if (!box_) throw ValidationError("model " + id_ + " has no sampling box; configure one");
    return box_(emax);
  }

  /// Checks G-invariance on random samples: |H(gz) - H(z)| <= tol * max(1, |H(z)|).
  double invariance_defect(int samples = 64, unsigned long seed = 7) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<size_t> pick(0, group_.haar_nodes().size() - 1);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      Vec z(2 * n());
      for (int i = 0; i < 2 * n(); ++i) z(i) = nd(rng);
      const auto& g = group_.haar_nodes()[pick(rng)].element;
      const double hz = value(z);
      worst = std::max(worst, std::abs(value(act(g, z)) - hz) / std::max(1.0, std::abs(hz)));
    }
    return worst;
  }

  void check_invariance(double tol = 1e-10) const {
    const double d = invariance_defect();
    if (d > tol)
      throw ValidationError("model " + id_ + ": symbol is not invariant under group " + group_.name() +
                            " (relative defect " + std::to_string(d) + ")");
  }

  /// Confinement check for an energy window: points on the boundary of the
  /// sampling box must lie above E2 + eps.
  void check_window(double e1, double e2, double eps = 1e-6, int samples = 2000, unsigned long seed = 11) const {
    if (!(e1 < e2)) throw ValidationError("window must satisfy E1 < E2");
    const Vec w = box(e2 + eps);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> face(0, 2 * n() - 1);
    double low = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
      Vec z(2 * n());
      for (int i = 0; i < 2 * n(); ++i) z(i) = u(rng) * w(i);
      low = std::min(low, value(z));
      const int f = face(rng);
      z(f) = (u(rng) < 0 ? -1.0 : 1.0) * w(f);
      if (value(z) <= e2 + eps)
        throw ValidationError("model " + id_ + ": energy window [" + std::to_string(e1) + ", " + std::to_string(e2) +
                              "] is not confined by the sampling box");
    }
    if (!std::isfinite(low)) throw ValidationError("model " + id_ + ": symbol not bounded below on the sampling box");
  }

 private:
  std::string id_;
  std::string description_;
  PolynomialSymbol symbol_;
  CompiledPolynomial compiled_;
  CompactGroupAction group_;
  std::function<Vec(const Vec&, double)> flow_;
  AnalyticSpectrum spectrum_;
  std::optional<ZeroLevelChart> chart_;
  std::function<Vec(double)> box_;
};

/// H = 1/2 sum_i (w_i^2 x_i^2 + xi_i^2).
inline PolynomialSymbol harmonic_symbol(const Vec& omega) {
  const int n = static_cast<int>(omega.size());
  PolynomialSymbol p(n);
  for (int i = 0; i < n; ++i) {
    std::vector<int> e(static_cast<size_t>(2 * n), 0);
    e[static_cast<size_t>(i)] = 2;
    p.add_term(0.5 * omega(i) * omega(i), e);
    e[static_cast<size_t>(i)] = 0;
    e[static_cast<size_t>(n + i)] = 2;
    p.add_term(0.5, e);
  }
  return p;
}

/// Closed-form flow of the diagonal oscillator.
inline Vec harmonic_flow(const Vec& omega, const Vec& z, double t) {
  const auto n = omega.size();
  Vec out(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = omega(i), c = std::cos(w * t), s = std::sin(w * t);
    out(i) = z(i) * c + z(n + i) / w * s;
    out(n + i) = z(n + i) * c - w * z(i) * s;
  }
  return out;
}

inline Vec harmonic_box(const Vec& omega, double emax) {
  const auto n = omega.size();
  Vec w(2 * n);
  const double r = std::sqrt(2.0 * std::max(emax, 0.0)) * 1.02 + 1e-9;
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i) = r / omega(i);
    w(n + i) = r;
  }
  return w;
}

/// Riemannian density of a chart map by central differences.
inline double chart_density_fd(const std::function<Vec(const Vec&)>& map, const Vec& u, double step = 1e-6) {
  const Vec z0 = map(u);
  Mat d(z0.size(), u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    Vec up = u, um = u;
    const double s = step * std::max(1.0, std::abs(u(k)));
    up(k) += s;
    um(k) -= s;
    d.col(k) = (map(up) - map(um)) / (2.0 * s);
  }
  return std::sqrt(std::max(0.0, (d.transpose() * d).determinant()));
}

}  // namespace eqsc
