#pragma once

// Complex phase phi_E(z, t, g) = phi1 + i phi2 of the spectral distribution
// kernel and the det_* normalization.
//
//   phi1 = (E - H(z)) t + 1/2 <g^-1 z, J z> - 1/2 int_0^t <z_s - g^-1 z, J dz_s/ds> ds
//   phi2 = 1/4 <(1 - What)(g z_t - z), g z_t - z>,  What = [[W, -iW], [-iW, -W]],
//   1/2 (1 + W) = (1 - i g (C + iD)(A + iB)^-1 g^-1)^-1,
// with A, B, C, D the n x n blocks of the linearized flow (Phi_t)_*(z).
// The line integral is exact in the action integrals carried by the flow:
// int <g^-1 z, J dz_s> = <g^-1 z, J (z_t - z)>.

#include "eqsc/flow.hpp"
#include "eqsc/group_action.hpp"
#include "eqsc/hamiltonian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace eqsc {

/// prod_i lambda_i^{-1/2} over the eigenvalues of m, each root with positive real part.
inline Complex det_star(const CMat& m, double axis_tol = 1e-12) {
  if (m.rows() != m.cols()) throw ValidationError("det_star: matrix must be square");
  if (m.rows() == 0) return {1.0, 0.0};
  Eigen::ComplexEigenSolver<CMat> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("det_star: eigenvalue computation failed");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  Complex out(1.0, 0.0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Complex lam = es.eigenvalues()(i);
    if (std::abs(lam) <= axis_tol * scale) throw NumericalError("det_star: singular matrix (zero eigenvalue)");
    if (lam.real() < 0.0 && std::abs(lam.imag()) <= axis_tol * std::abs(lam)) {
      std::ostringstream os;
      os << "det_star: eigenvalue " << lam.real() << " on the negative real axis, square-root branch is ambiguous";
      throw NumericalError(os.str());
    }
    out /= std::sqrt(lam);
  }
  return out;
}

/// det_*^{-1/2}((A + iB - i(C + iD)) / 2) for the linearized flow at (z, t).
/// For symplectic M the matrix is invertible for every t, so the square root
/// is continued along s in [0, t] from the identity. The eigenvalue rule
/// (roots with positive real part) is ambiguous at eigenvalue -1, which full
/// half-periods of harmonic motion hit exactly, and it misses the Maslov sign.
inline Complex coherent_amplitude(const HamiltonianModel& model, const Vec& z, double t, int steps,
                                  double max_turn = 0.3, int max_refinements = 8) {
  const Complex I(0.0, 1.0);
  for (int attempt = 0; attempt <= max_refinements; ++attempt, steps *= 2) {
    FlowOptions fo;
    fo.fixed_steps = steps;
    fo.observe_fixed_steps = true;
    fo.tol = 1e-9;
    Complex root(1.0, 0.0);
    double worst = 0.0;
    flow_observed(model, z, t, fo, {}, [&](const FlowResult& r) {
      const CMat m = 0.5 * (r.block_a().cast<Complex>() + r.block_d().cast<Complex>() +
                            I * (r.block_b().cast<Complex>() - r.block_c().cast<Complex>()));
      Complex next = std::sqrt(m.determinant());
      if (std::abs(next - root) > std::abs(next + root)) next = -next;
      worst = std::max(worst, std::abs(std::arg(next / root)));
      root = next;
    });
    if (worst <= max_turn) return 1.0 / root;
  }
  throw NumericalError("coherent_amplitude: square-root continuation did not resolve after " +
                       std::to_string(max_refinements) + " refinements");
}

struct PhaseOptions {
  double E = 0.0;
  // Fixed-step integration makes phi a smooth function of (z, t, theta);
  // the step count is chosen so that omega_max * dt <= max_phase_step.
  double max_phase_step = 0.25;
  int min_steps = 16;
  double fd_step = 1e-5;  // relative step of the gradient
  bool gradient = true;
};

struct PhaseEvaluation {
  double phi1 = 0.0;
  Complex phi2;      // Re phi2 = Im phi_E >= 0
  Complex value;     // phi1 + i phi2
  CMat W;            // n x n
  CMat W_hat;        // 2n x 2n
  Mat M;             // (Phi_t)_*(z)
  CVec gradient;     // d/d(z, t, theta); empty unless requested
  double H = 0.0;

  double im_value() const { return value.imag(); }
};

/// Phase-space point, time and torus angles packed into y = (z, t, theta).
struct PhaseArgs {
  Vec z;
  double t = 0.0;
  GroupElement g;
};

namespace detail {

inline int phase_steps(const HamiltonianModel& model, const Vec& z, double t, const PhaseOptions& opt) {
  const Mat jh = symplectic_j(model.n()) * model.hessian(z);
  const double wmax = std::max(1e-3, jh.eigenvalues().cwiseAbs().maxCoeff());
  return std::max(opt.min_steps, static_cast<int>(std::ceil(std::abs(t) * wmax / opt.max_phase_step)));
}

inline PhaseEvaluation phase_value(const HamiltonianModel& model, const Vec& z, double t, const GroupElement& g,
                                   const PhaseOptions& opt, int steps) {
  const int n = model.n();
  FlowOptions fo;
  fo.fixed_steps = steps;
  fo.tol = 1e-9;  // only used by the energy-drift sanity check in fixed-step mode
  const FlowResult fr = flow(model, z, t, fo);
  PhaseEvaluation ev;
  ev.M = fr.M;
  ev.H = model.value(z);
  const Mat lg = lift_diag(g.matrix);
  const Vec ginv_z = lg.transpose() * z;
  const Vec gzt = lg * fr.z;
  const double line = fr.sympl - ginv_z.dot(apply_j(Vec(fr.z - z)));
  ev.phi1 = (opt.E - ev.H) * t + 0.5 * ginv_z.dot(apply_j(z)) - 0.5 * line;

  const Complex I(0.0, 1.0);
  const CMat apb = fr.block_a().cast<Complex>() + I * fr.block_b().cast<Complex>();
  const CMat cpd = fr.block_c().cast<Complex>() + I * fr.block_d().cast<Complex>();
  Eigen::FullPivLU<CMat> lu(apb);
  if (lu.rcond() < 1e-12) {
    std::ostringstream os;
    os << "phase_function: A + iB is singular (caustic) at t=" << t << ", |z|=" << z.norm()
       << ", rcond=" << lu.rcond();
    throw NumericalError(os.str());
  }
  const CMat gc = g.matrix.cast<Complex>();
  // Y = (C + iD)(A + iB)^-1, computed as ((A + iB)^-T (C + iD)^T)^T.
  const CMat y = apb.transpose().fullPivLu().solve(cpd.transpose()).transpose();
  const CMat k = CMat::Identity(n, n) - I * gc * y * gc.transpose();
  ev.W = 2.0 * k.fullPivLu().inverse() - CMat::Identity(n, n);
  ev.W_hat.resize(2 * n, 2 * n);
  ev.W_hat.topLeftCorner(n, n) = ev.W;
  ev.W_hat.topRightCorner(n, n) = -I * ev.W;
  ev.W_hat.bottomLeftCorner(n, n) = -I * ev.W;
  ev.W_hat.bottomRightCorner(n, n) = -ev.W;
  const CVec v = (gzt - z).cast<Complex>();
  const CMat one_minus = CMat::Identity(2 * n, 2 * n) - ev.W_hat;
  ev.phi2 = 0.25 * (v.transpose() * one_minus * v)(0, 0);
  ev.value = ev.phi1 + I * ev.phi2;
  return ev;
}

}  // namespace detail

/// Number of torus angles the phase depends on (0 for finite groups).
inline int phase_angle_count(const CompactGroupAction& grp) { return grp.is_torus() ? grp.dim() : 0; }

/// Unpacks y = (z, t, theta) into a phase argument; finite groups keep `g_fixed`.
inline PhaseArgs unpack_phase_args(const CompactGroupAction& grp, const Vec& y, const GroupElement& g_fixed) {
  const int dim = 2 * grp.n();
  PhaseArgs a;
  a.z = y.head(dim);
  a.t = y(dim);
  if (grp.is_torus()) {
    std::vector<double> th(static_cast<size_t>(grp.dim()));
    for (int i = 0; i < grp.dim(); ++i) th[static_cast<size_t>(i)] = y(dim + 1 + i);
    a.g = grp.element(th);
  } else {
    a.g = g_fixed;
  }
  return a;
}

inline Vec pack_phase_args(const CompactGroupAction& grp, const Vec& z, double t, const GroupElement& g) {
  const int dim = 2 * grp.n();
  const int r = phase_angle_count(grp);
  Vec y(dim + 1 + r);
  y.head(dim) = z;
  y(dim) = t;
  for (int i = 0; i < r; ++i) {
    if (g.coords.size() != static_cast<size_t>(r)) throw ValidationError("phase: torus element without angle coordinates");
    y(dim + 1 + i) = g.coords[static_cast<size_t>(i)];
  }
  return y;
}

/// phi_E at y = (z, t, theta) with a step count fixed by the caller, so that
/// neighbouring evaluations share one smooth discretization.
inline Complex phase_at(const HamiltonianModel& model, const Vec& y, const GroupElement& g_fixed, const PhaseOptions& opt,
                        int steps) {
  const PhaseArgs a = unpack_phase_args(model.group(), y, g_fixed);
  return detail::phase_value(model, a.z, a.t, a.g, opt, steps).value;
}

inline PhaseEvaluation phase_function(const HamiltonianModel& model, const Vec& z, double t, const GroupElement& g,
                                      const PhaseOptions& opt = {}) {
  const int dim = 2 * model.n();
  if (z.size() != dim) throw ValidationError("phase_function: phase point dimension " + dims_string(z.size(), dim));
  if (g.n() != model.n()) throw ValidationError("phase_function: group element acts on the wrong dimension");
  if (!std::isfinite(t)) throw ValidationError("phase_function: time must be finite");
  const int steps = detail::phase_steps(model, z, t, opt);
  PhaseEvaluation ev = detail::phase_value(model, z, t, g, opt, steps);
  if (!opt.gradient) return ev;
  const auto& grp = model.group();
  const Vec y = pack_phase_args(grp, z, t, g);
  ev.gradient.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double s = opt.fd_step * std::max(1.0, std::abs(y(i)));
    // fourth-order central stencil; the second-order one leaves O(s^2) bias in the time direction
    const auto diff = [&](double u) {
      Vec yp = y, ym = y;
      yp(i) += u;
      ym(i) -= u;
      return phase_at(model, yp, g, opt, steps) - phase_at(model, ym, g, opt, steps);
    };
    ev.gradient(i) = (8.0 * diff(s) - diff(2.0 * s)) / (12.0 * s);
  }
  return ev;
}

}  // namespace eqsc
