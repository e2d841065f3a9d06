#pragma once

// Leading Weyl-law coefficient
//     L0 = frob(chi) * int_{Reg Omega0} f(H(z)) / Vol(Gz) d(Reg Omega0)
// and the comparison of Tr f(H_chi) over an h-grid against (2 pi h)^{-(n - kappa)} d_chi L0.

#include "eqsc/hamiltonian.hpp"
#include "eqsc/quantization.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace eqsc {

enum class L0Method { chart, mc };

inline std::string to_string(L0Method m) { return m == L0Method::chart ? "chart" : "mc"; }

inline L0Method parse_l0_method(const std::string& s) {
  if (s == "chart") return L0Method::chart;
  if (s == "mc") return L0Method::mc;
  throw ValidationError("unknown L0 method '" + s + "' (expected chart or mc)");
}

struct L0Options {
  L0Method method = L0Method::chart;
  bool x_space = false;   // Vol(Gz) of the x-orbit in R^n instead of the orbit of z in R^{2n}
  int nodes = 20;         // Gauss-Legendre nodes per chart dimension
  long samples = 2'000'000;
  unsigned long seed = 1;
  double slab = 0.05;     // half-width of the |mu| < slab shell around Omega0
};

struct L0Result {
  double L0 = 0.0;
  double error = 0.0;  // chart: |Q_n - Q_{3n/4}|; mc: one standard error
  int frobenius = 1;
  std::string method;
  bool x_space = false;
  long evaluations = 0;
  long accepted = 0;
};

namespace detail {

inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<size_t>(n), 0.0);
  w.assign(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double r = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = r;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * r * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (r * p1 - p0) / (r * r - 1.0);
      const double dr = p1 / dp;
      r -= dr;
      if (std::abs(dr) < 1e-16) break;
    }
    x[static_cast<size_t>(i)] = -r;
    x[static_cast<size_t>(n - 1 - i)] = r;
    w[static_cast<size_t>(i)] = w[static_cast<size_t>(n - 1 - i)] = 2.0 / ((1.0 - r * r) * dp * dp);
  }
}

class KahanSum {
 public:
  void add(double v) {
    const double y = v - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

inline double chart_tensor_quadrature(const HamiltonianModel& model, const std::function<double(double)>& f, double emax,
                                      bool x_space, int nodes, long& evaluations) {
  const auto& chart = model.chart();
  const auto bounds = chart.bounds(emax);
  const int dim = chart.dim;
  std::vector<double> gx, gw;
  gauss_legendre(nodes, gx, gw);
  const auto& grp = model.group();
  KahanSum sum;
  std::vector<int> idx(static_cast<size_t>(dim), 0);
  Vec u(dim);
  for (;;) {
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      const auto [lo, hi] = bounds[static_cast<size_t>(d)];
      const double half = 0.5 * (hi - lo);
      u(d) = lo + half * (gx[static_cast<size_t>(idx[static_cast<size_t>(d)])] + 1.0);
      w *= half * gw[static_cast<size_t>(idx[static_cast<size_t>(d)])];
    }
    const Vec z = chart.map(u);
    const double fv = f(model.value(z));
    ++evaluations;
    if (fv != 0.0) {
      const double dens = chart.density ? chart.density(u) : chart_density_fd(chart.map, u);
      if (dens > 0.0) sum.add(w * fv * dens / grp.orbit_volume(z, x_space));
    }
    int d = 0;
    while (d < dim && ++idx[static_cast<size_t>(d)] == nodes) idx[static_cast<size_t>(d++)] = 0;
    if (d == dim) break;
  }
  return sum.value();
}

}  // namespace detail

/// Leading coefficient L0 of the equivariant Weyl law for a test function f
/// supported in [support_lo, support_hi].
inline L0Result leading_term_L0(const HamiltonianModel& model, const std::function<double(double)>& f, double support_lo,
                                double support_hi, const CharacterLabel& chi, const L0Options& opt = {}) {
  const auto& grp = model.group();
  grp.validate_label(chi);
  if (!(support_hi >= support_lo)) throw ValidationError("leading_term_L0: empty test function support");
  L0Result res;
  res.method = to_string(opt.method);
  res.x_space = opt.x_space;
  res.frobenius = grp.frobenius_factor(chi);
  const double emax = support_hi;

  if (opt.method == L0Method::chart) {
    if (!model.has_chart())
      throw ValidationError("leading_term_L0: model '" + model.id() + "' has no zero-level chart (use method mc)");
    if (opt.nodes < 4) throw ValidationError("leading_term_L0: need at least 4 nodes per dimension");
    const double fine = detail::chart_tensor_quadrature(model, f, emax, opt.x_space, opt.nodes, res.evaluations);
    const double coarse =
        detail::chart_tensor_quadrature(model, f, emax, opt.x_space, (3 * opt.nodes) / 4, res.evaluations);
    res.L0 = res.frobenius * fine;
    res.error = res.frobenius * std::abs(fine - coarse);
    res.accepted = res.evaluations;
    return res;
  }

  // Monte Carlo: uniform box samples inside the shell |mu_i| < slab, Newton
  // projection onto Omega0 and the co-area factor sqrt(det(Dmu Dmu^T)):
  //   int_{|mu| < eps} F(pi z) J(z) dz = (2 eps)^k int_{Omega0} F + O(eps^2).
  if (opt.samples < 100) throw ValidationError("leading_term_L0: need at least 100 samples");
  if (!(opt.slab > 0.0)) throw ValidationError("leading_term_L0: slab half-width must be positive");
  const Vec half = model.box(emax);
  const int dim = static_cast<int>(half.size());
  const int k = grp.dim();
  double box_vol = 1.0;
  for (int i = 0; i < dim; ++i) box_vol *= 2.0 * half(i);
  const double scale = box_vol / std::pow(2.0 * opt.slab, k);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  detail::KahanSum s1, s2;
  Vec z(dim);
  for (long i = 0; i < opt.samples; ++i) {
    for (int d = 0; d < dim; ++d) z(d) = half(d) * unit(rng);
    ++res.evaluations;
    double y = 0.0;
    Vec mu = grp.momentum_map(z);
    if (k == 0 || mu.cwiseAbs().maxCoeff() < opt.slab) {
      double jac = 1.0;
      Vec p = z;
      if (k > 0) {
        const Mat dm = grp.momentum_jacobian(z);
        jac = std::sqrt(std::max(0.0, (dm * dm.transpose()).determinant()));
        for (int it = 0; it < 30 && mu.norm() > 1e-13 * (1.0 + p.squaredNorm()); ++it) {
          const Mat dp = grp.momentum_jacobian(p);
          p -= dp.transpose() * (dp * dp.transpose()).ldlt().solve(mu);
          mu = grp.momentum_map(p);
        }
      }
      // Non-principal points form a null set; they are rejected (counted as zero).
      if (grp.orbit_type(p).is_principal) {
        ++res.accepted;
        const double fv = f(model.value(p));
        if (fv != 0.0) y = fv * jac / grp.orbit_volume(p, opt.x_space);
      }
    }
    s1.add(y);
    s2.add(y * y);
  }
  const double nd = static_cast<double>(opt.samples);
  if (static_cast<double>(res.accepted) / nd < 1e-4)
    throw NumericalError("leading_term_L0: Monte Carlo acceptance rate " + std::to_string(res.accepted / nd) +
                         " below 1e-4 (widen the slab or add samples)");
  const double mean = s1.value() / nd;
  const double var = std::max(0.0, s2.value() / nd - mean * mean);
  res.L0 = res.frobenius * scale * mean;
  res.error = res.frobenius * scale * std::sqrt(var / nd);
  return res;
}

/// Tr f(H_chi) summed over the analytic spectrum oracle, compensated.
inline double analytic_trace(const HamiltonianModel& model, const CharacterLabel& chi, double h,
                             const std::function<double(double)>& f, double support_lo, double support_hi) {
  if (!model.has_analytic_spectrum())
    throw ValidationError("analytic_trace: model '" + model.id() + "' has no analytic spectrum");
  if (!(h > 0.0)) throw ValidationError("analytic_trace: h must be positive");
  detail::KahanSum sum;
  model.analytic_spectrum()(h, chi, support_lo, support_hi,
                            [&](double lam, long mult) { sum.add(static_cast<double>(mult) * f(lam)); });
  return sum.value();
}

struct WeylLawReport {
  double L0 = 0.0;
  double L0_error = 0.0;  // quadrature error (standard error for mc)
  int kappa = 0;
  int d_chi = 1;
  int frobenius = 1;
  int n = 0;
  double fitted_slope = 0.0;
  double fitted_constant = 0.0;  // Tr ~ fitted_constant * h^fitted_slope
  double slope_stderr = 0.0;
  std::vector<double> h_grid;
  std::vector<double> trace_values;
  std::vector<double> ratios;     // Tr (2 pi h)^{n - kappa} / (d_chi L0)
  std::vector<double> residuals;  // of the log-log fit
  bool monotone = true;
  std::string note;
  std::string Lambda_note = "remainder log-exponent not measured";
};

/// Least-squares fit of log Tr against log h plus the leading-term ratios.
inline WeylLawReport weyl_check(const std::vector<double>& h_grid, const std::vector<double>& traces, double L0,
                                int d_chi, int n, int kappa, int frobenius = 1, double L0_error = 0.0) {
  if (h_grid.size() != traces.size()) throw ValidationError("weyl_check: h grid and traces differ in length");
  if (h_grid.size() < 5) throw ValidationError("weyl_check: need at least 5 h values");
  const auto [hmin, hmax] = std::minmax_element(h_grid.begin(), h_grid.end());
  if (!(*hmin > 0.0)) throw ValidationError("weyl_check: h values must be positive");
  if (*hmax / *hmin < 100.0 * (1.0 - 1e-12)) throw ValidationError("weyl_check: h grid must span at least 2 decades");
  for (double t : traces)
    if (!(t > 0.0)) throw ValidationError("weyl_check: traces must be positive for a log-log fit");
  WeylLawReport r;
  r.L0 = L0;
  r.L0_error = L0_error;
  r.kappa = kappa;
  r.d_chi = d_chi;
  r.frobenius = frobenius;
  r.n = n;
  r.h_grid = h_grid;
  r.trace_values = traces;
  const auto m = static_cast<Eigen::Index>(h_grid.size());
  Mat a(m, 2);
  Vec y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, 0) = std::log(h_grid[static_cast<size_t>(i)]);
    a(i, 1) = 1.0;
    y(i) = std::log(traces[static_cast<size_t>(i)]);
  }
  const Vec coef = a.colPivHouseholderQr().solve(y);
  r.fitted_slope = coef(0);
  r.fitted_constant = std::exp(coef(1));
  const Vec res = y - a * coef;
  r.residuals.assign(res.data(), res.data() + m);
  if (m > 2) {
    const double s2 = res.squaredNorm() / static_cast<double>(m - 2);
    const Mat cov = s2 * (a.transpose() * a).inverse();
    r.slope_stderr = std::sqrt(std::max(0.0, cov(0, 0)));
  }
  for (size_t i = 0; i < h_grid.size(); ++i)
    r.ratios.push_back(traces[i] * std::pow(kTwoPi * h_grid[i], n - kappa) / (d_chi * L0));
  // Traces must grow as h decreases.
  std::vector<size_t> order(h_grid.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t p, size_t q) { return h_grid[p] > h_grid[q]; });
  for (size_t i = 1; i < order.size(); ++i)
    if (!(traces[order[i]] > traces[order[i - 1]])) r.monotone = false;
  if (!r.monotone) r.note = "non-monotone trace sequence: h range too coarse for the asymptotic regime";
  return r;
}

}  // namespace eqsc
