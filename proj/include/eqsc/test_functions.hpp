#pragma once

// Test functions for traces and spectral distributions.
//
//  * smooth_bump: the C-infinity bump exp(1 - 1/(1-u^2)) on (-1, 1).
//  * FourierWindow: f specified through its Fourier data, f^(t) = bump((t - c)/w),
//    so that supp f^ = [c - w, c + w] holds by construction. With
//    f^(t) = int e^{-iEt} f(E) dE the inverse is
//        f(s) = (w / 2pi) e^{isc} G(sw),   G(k) = int_{-1}^{1} e^{iku} bump(u) du,
//    and G (real, even) is tabulated once with value, first and second
//    derivative and evaluated by quintic Hermite interpolation.
//  * PlateauCutoff: zeta, equal to 1 on [E - delta, E + delta].
//  * EnergyBump: compactly supported f for the Weyl law.

#include "eqsc/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <vector>

namespace eqsc {

inline double smooth_bump(double u) {
  if (!(std::abs(u) < 1.0)) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

/// 0 for x <= 0, 1 for x >= 1, C-infinity in between.
inline double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

namespace detail {

/// Table of G, G', G'' on [0, k_max] with spacing kDelta.
class BumpTransformTable {
 public:
  static constexpr double kDelta = 0.02;
  // The trapezoid rule on [-1, 1] is exact up to aliasing at wavenumber
  // 2 pi / du - k, which for 2048 panels is far beyond any tabulated k.
  static constexpr int kPanels = 2048;

  explicit BumpTransformTable(double k_max) {
    const int count = static_cast<int>(std::ceil(k_max / kDelta)) + 2;
    k_max_ = (count - 1) * kDelta;
    const int half = kPanels / 2;
    const double du = 2.0 / kPanels;
    std::vector<double> u(static_cast<size_t>(half)), b(static_cast<size_t>(half));
    for (int j = 0; j < half; ++j) {
      u[static_cast<size_t>(j)] = du * (j + 1);
      b[static_cast<size_t>(j)] = smooth_bump(u[static_cast<size_t>(j)]);
    }
    vals_.resize(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
      const double k = i * kDelta;
      // Even integrand: G = du (b(0) + 2 sum_{u_j>0} cos(k u_j) b(u_j)).
      double g0 = 1.0, g1 = 0.0, g2 = 0.0;
      for (int j = 0; j < half; ++j) {
        const double uj = u[static_cast<size_t>(j)], bj = b[static_cast<size_t>(j)];
        if (bj == 0.0) continue;
        const double c = std::cos(k * uj), s = std::sin(k * uj);
        g0 += 2.0 * c * bj;
        g1 -= 2.0 * uj * s * bj;
        g2 -= 2.0 * uj * uj * c * bj;
      }
      vals_[static_cast<size_t>(i)] = {g0 * du, g1 * du, g2 * du};
    }
  }

  double k_max() const { return k_max_; }

  double value(double k) const {
    k = std::abs(k);
    if (k > k_max_) return direct(k);
    const double pos = k / kDelta;
    size_t i = static_cast<size_t>(pos);
    if (i + 1 >= vals_.size()) i = vals_.size() - 2;
    const double x = pos - static_cast<double>(i);
    const auto& a = vals_[i];
    const auto& c = vals_[i + 1];
    // Quintic Hermite basis on [0, 1].
    const double x2 = x * x, x3 = x2 * x, x4 = x3 * x, x5 = x4 * x;
    const double h0 = 1 - 10 * x3 + 15 * x4 - 6 * x5;
    const double h1 = x - 6 * x3 + 8 * x4 - 3 * x5;
    const double h2 = 0.5 * (x2 - 3 * x3 + 3 * x4 - x5);
    const double h3 = 10 * x3 - 15 * x4 + 6 * x5;
    const double h4 = -4 * x3 + 7 * x4 - 3 * x5;
    const double h5 = 0.5 * (x3 - 2 * x4 + x5);
    const double d = kDelta;
    return h0 * a[0] + h1 * d * a[1] + h2 * d * d * a[2] + h3 * c[0] + h4 * d * c[1] + h5 * d * d * c[2];
  }

  /// Same trapezoid sum evaluated on the spot (used past the table).
  static double direct(double k) {
    const double du = 2.0 / kPanels;
    double g = 1.0;
    for (int j = 1; j < kPanels / 2; ++j) {
      const double uj = du * j;
      g += 2.0 * std::cos(k * uj) * smooth_bump(uj);
    }
    return g * du;
  }

  /// Shared immutable tables, rebuilt (never mutated) when a larger range is needed.
  static std::shared_ptr<const BumpTransformTable> shared(double k_max) {
    static std::mutex mu;
    static std::shared_ptr<const BumpTransformTable> cached;
    std::lock_guard<std::mutex> lock(mu);
    if (!cached || cached->k_max() < k_max)
      cached = std::make_shared<const BumpTransformTable>(std::max(k_max, cached ? 2.0 * cached->k_max() : k_max));
    return cached;
  }

 private:
  double k_max_ = 0.0;
  std::vector<std::array<double, 3>> vals_;
};

}  // namespace detail

/// f with f^ = bump((t - center)/halfwidth).
class FourierWindow {
 public:
  FourierWindow(double center, double halfwidth, double k_max = 800.0) : c_(center), w_(halfwidth) {
    if (!(halfwidth > 0.0) || !std::isfinite(center)) throw ValidationError("FourierWindow: need finite center and halfwidth > 0");
    table_ = detail::BumpTransformTable::shared(k_max);
  }

  static FourierWindow from_support(double t_lo, double t_hi) {
    if (!(t_hi > t_lo)) throw ValidationError("FourierWindow: empty support");
    return FourierWindow(0.5 * (t_lo + t_hi), 0.5 * (t_hi - t_lo));
  }

  double center() const { return c_; }
  double halfwidth() const { return w_; }
  double support_lo() const { return c_ - w_; }
  double support_hi() const { return c_ + w_; }
  bool in_support(double t) const { return std::abs(t - c_) < w_; }

  double f_hat(double t) const { return smooth_bump((t - c_) / w_); }

  Complex operator()(double s) const {
    const double mag = w_ / kTwoPi * table_->value(s * w_);
    return std::polar(1.0, s * c_) * mag;
  }

  /// Makes sure arguments up to |s| are served from the table.
  void reserve(double s_max) { table_ = detail::BumpTransformTable::shared(std::abs(s_max) * w_); }

 private:
  double c_, w_;
  std::shared_ptr<const detail::BumpTransformTable> table_;
};

/// zeta: 1 on [E - delta, E + delta], smooth decay to 0 over a further tau.
struct PlateauCutoff {
  double E = 0.0;
  double delta = 1.0;
  double tau = 1.0;

  double lo() const { return E - delta - tau; }
  double hi() const { return E + delta + tau; }
  double operator()(double lam) const {
    return smooth_step((lam - lo()) / tau) * smooth_step((hi() - lam) / tau);
  }
  void validate() const {
    if (!(delta >= 0.0) || !(tau > 0.0) || !std::isfinite(E))
      throw ValidationError("PlateauCutoff: need delta >= 0, tau > 0");
  }
};

/// f(E) = bump((E - center)/halfwidth).
struct EnergyBump {
  double center = 0.0;
  double halfwidth = 1.0;

  double lo() const { return center - halfwidth; }
  double hi() const { return center + halfwidth; }
  double operator()(double e) const { return smooth_bump((e - center) / halfwidth); }
};

}  // namespace eqsc
