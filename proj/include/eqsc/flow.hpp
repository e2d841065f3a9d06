#pragma once

// Hamilton flow z' = J grad H(z) integrated jointly with the variational
// equation M' = J Hess H(z) M and two action integrals, using the embedded
// Runge-Kutta-Fehlberg 7(8) pair from Boost.Odeint under our own step control.

#include "eqsc/hamiltonian.hpp"

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

namespace eqsc {

struct FlowOptions {
  double tol = 1e-12;           // mixed absolute/relative local error target
  bool variational = true;      // integrate M_t alongside z_t
  double initial_step = 1e-3;
  double min_step = 1e-13;
  long max_steps = 20'000'000;
  // When positive: this many equal steps, no error control. The result is then
  // a smooth function of z0 and t, which finite-difference derivatives need.
  int fixed_steps = 0;
  bool observe_fixed_steps = false;  // fixed-step mode: call the observer after every step
};

struct FlowStats {
  long steps = 0;
  long rejected = 0;
  double max_error_ratio = 0.0;  // largest accepted local error relative to its target
};

struct FlowResult {
  double t = 0.0;
  Vec z;
  Mat M;                // linearized flow (Phi_t)_*, identity when not integrated
  double action = 0.0;  // int xi . dx/ds ds
  double sympl = 0.0;   // int <z_s, J dz_s/ds> ds
  double energy_drift = 0.0;
  FlowStats stats;

  int n() const { return static_cast<int>(z.size() / 2); }
  Mat block_a() const { return M.topLeftCorner(n(), n()); }
  Mat block_b() const { return M.topRightCorner(n(), n()); }
  Mat block_c() const { return M.bottomLeftCorner(n(), n()); }
  Mat block_d() const { return M.bottomRightCorner(n(), n()); }
};

namespace detail {

class FlowSystem {
 public:
  FlowSystem(const HamiltonianModel& h, bool variational) : h_(h), variational_(variational), dim_(2 * h.n()) {}

  size_t state_size() const { return static_cast<size_t>(dim_ + 2 + (variational_ ? dim_ * dim_ : 0)); }

  void operator()(const std::vector<double>& x, std::vector<double>& dxdt, double /*t*/) const {
    Eigen::Map<const Vec> z(x.data(), dim_);
    const Vec grad = h_.gradient(z);
    Eigen::Map<Vec> dz(dxdt.data(), dim_);
    dz = apply_j(grad);
    const int n = dim_ / 2;
    dxdt[static_cast<size_t>(dim_)] = z.tail(n).dot(grad.tail(n));
    dxdt[static_cast<size_t>(dim_ + 1)] = -z.dot(grad);
    if (variational_) {
      Eigen::Map<const Mat> m(x.data() + dim_ + 2, dim_, dim_);
      Eigen::Map<Mat> dm(dxdt.data() + dim_ + 2, dim_, dim_);
      const Mat hm = h_.hessian(z) * m;
      dm.topRows(n) = hm.bottomRows(n);
      dm.bottomRows(n) = -hm.topRows(n);
    }
  }

 private:
  const HamiltonianModel& h_;
  bool variational_;
  int dim_;
};

}  // namespace detail

/// Integrates from z0 up to time t_end, stopping exactly at each entry of
/// `stops` (which must be monotone in the direction of integration) and
/// calling observer(result) there.
inline FlowResult flow_observed(const HamiltonianModel& h, const Vec& z0, double t_end, const FlowOptions& opt,
                                const std::vector<double>& stops,
                                const std::function<void(const FlowResult&)>& observer) {
  const int dim = 2 * h.n();
  if (z0.size() != dim) throw ValidationError("flow: phase point dimension " + dims_string(z0.size(), dim));
  if (!(opt.tol > 0.0)) throw ValidationError("flow: tolerance must be positive");
  if (!std::isfinite(t_end)) throw ValidationError("flow: time must be finite");
  for (Eigen::Index i = 0; i < z0.size(); ++i)
    if (!std::isfinite(z0(i))) throw ValidationError("flow: phase point has non-finite entries");

  detail::FlowSystem sys(h, opt.variational);
  std::vector<double> x(sys.state_size(), 0.0);
  std::copy(z0.data(), z0.data() + dim, x.begin());
  if (opt.variational) {
    Eigen::Map<Mat> m(x.data() + dim + 2, dim, dim);
    m.setIdentity();
  }
  const double h0 = h.value(z0);
  const double dir = t_end >= 0.0 ? 1.0 : -1.0;

  FlowResult res;
  auto snapshot = [&](double t) {
    res.t = t;
    res.z = Eigen::Map<const Vec>(x.data(), dim);
    res.action = x[static_cast<size_t>(dim)];
    res.sympl = x[static_cast<size_t>(dim + 1)];
    if (opt.variational)
      res.M = Eigen::Map<const Mat>(x.data() + dim + 2, dim, dim);
    else
      res.M = Mat::Identity(dim, dim);
    res.energy_drift = std::abs(h.value(res.z) - h0);
  };

  boost::numeric::odeint::runge_kutta_fehlberg78<std::vector<double>> stepper;
  std::vector<double> trial(x.size()), err(x.size());
  double t = 0.0;
  double dt = dir * std::min(opt.initial_step, std::max(std::abs(t_end), opt.min_step));
  size_t next_stop = 0;
  while (next_stop < stops.size() && dir * stops[next_stop] <= 0.0) {
    snapshot(0.0);
    observer(res);
    ++next_stop;
  }
  if (opt.fixed_steps > 0) {
    if (!stops.empty()) throw ValidationError("flow: fixed-step mode does not support intermediate stops");
    const double step = t_end / opt.fixed_steps;
    for (int i = 0; i < opt.fixed_steps; ++i) {
      stepper.do_step(sys, x, t, step, err);
      t = step * (i + 1);
      if (opt.observe_fixed_steps) {
        snapshot(t);
        observer(res);
      }
    }
    res.stats.steps = opt.fixed_steps;
    t = t_end;
  }
  while (dir * (t_end - t) > 0.0) {
    if (res.stats.steps + res.stats.rejected > opt.max_steps)
      throw NumericalError("flow: step budget exhausted at t=" + std::to_string(t));
    double target = t_end;
    if (next_stop < stops.size() && dir * (stops[next_stop] - t_end) < 0.0) target = stops[next_stop];
    bool clipped = false;
    double step = dt;
    if (dir * (t + step - target) >= 0.0) {
      step = target - t;
      clipped = true;
    }
    trial = x;
    stepper.do_step(sys, trial, t, step, err);
    double ratio = 0.0;
    for (size_t i = 0; i < x.size(); ++i)
      ratio = std::max(ratio, std::abs(err[i]) / (opt.tol * (1.0 + std::abs(x[i]))));
    if (ratio <= 1.0) {
      x.swap(trial);
      t = clipped ? target : t + step;
      ++res.stats.steps;
      res.stats.max_error_ratio = std::max(res.stats.max_error_ratio, ratio);
      const double grow = ratio > 0.0 ? std::min(4.0, 0.9 * std::pow(ratio, -1.0 / 8.0)) : 4.0;
      if (!clipped) dt = step * grow;
      else dt = dir * std::max(std::abs(dt), std::abs(step) * grow);
      while (next_stop < stops.size() && dir * (stops[next_stop] - t) <= 0.0) {
        snapshot(t);
        observer(res);
        ++next_stop;
      }
    } else {
      ++res.stats.rejected;
      dt = step * std::max(0.2, 0.9 * std::pow(ratio, -1.0 / 8.0));
      if (std::abs(dt) < opt.min_step) {
        std::ostringstream os;
        os << "flow: step size underflow at t=" << t << " (step " << std::abs(dt) << ", error ratio " << ratio << ")";
        throw NumericalError(os.str());
      }
    }
  }
  snapshot(t_end);
  const double limit = 10.0 * opt.tol * std::max(1.0, std::abs(h0)) * std::max(1.0, std::abs(t_end));
  if (res.energy_drift > limit) {
    std::ostringstream os;
    os << "flow: energy drift " << res.energy_drift << " exceeds " << limit << " after t=" << t_end << " ("
       << res.stats.steps << " steps, " << res.stats.rejected << " rejected)";
    throw NumericalError(os.str());
  }
  return res;
}

inline FlowResult flow(const HamiltonianModel& h, const Vec& z0, double t, const FlowOptions& opt = {}) {
  return flow_observed(h, z0, t, opt, {}, [](const FlowResult&) {});
}

/// Samples z along [0, t_end] at the given stop times (no variational part).
inline std::vector<Vec> trajectory(const HamiltonianModel& h, const Vec& z0, const std::vector<double>& times,
                                   FlowOptions opt = {}) {
  opt.variational = false;
  std::vector<Vec> out;
  out.reserve(times.size());
  const double t_end = times.empty() ? 0.0 : times.back();
  flow_observed(h, z0, t_end, opt, times, [&](const FlowResult& r) { out.push_back(r.z); });
  return out;
}

/// || M^T J M - J ||_max.
inline double symplectic_defect(const Mat& m) {
  const Mat j = symplectic_j(static_cast<int>(m.rows() / 2));
  return (m.transpose() * j * m - j).cwiseAbs().maxCoeff();
}

}  // namespace eqsc
