#pragma once

// Relative periodic orbits g Phi_T(z) = z on the zero momentum level of an
// energy shell: tangent frames, shooting search, monodromy blocks, actions.

#include "eqsc/flow.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace eqsc {

struct TangentFrame {
  Mat basis_Jf;  // J f z
  Mat basis_f;   // f z = R J grad H + g z
  Mat basis_R;   // orthogonal remainder

  /// Columns [Jf | f | R], an orthogonal matrix.
  Mat q() const {
    Mat out(basis_f.rows(), basis_Jf.cols() + basis_f.cols() + basis_R.cols());
    out << basis_Jf, basis_f, basis_R;
    return out;
  }
};

struct NonstationarityReport {
  bool holds = false;
  double margin = 0.0;  // |J grad H(z) - projection onto g z|
};

/// H2' at a point: J grad H(z) must stick out of the orbit tangent g z.
inline NonstationarityReport is_G_nonstationary(const HamiltonianModel& h, const Vec& z, double tol = 1e-9) {
  const auto& g = h.group();
  const Vec v = h.field(z);
  Vec r = v;
  if (g.dim() > 0) {
    const Mat b = orthonormal_span(g.orbit_tangent(z));
    r -= b * (b.transpose() * v);
  }
  return {r.norm() > tol, r.norm()};
}

/// Decomposition R^{2n} = J f z + f z + R at z in the zero level of an energy shell.
inline TangentFrame tangent_frame(const HamiltonianModel& h, const Vec& z, double tol = 1e-8) {
  const auto& g = h.group();
  const auto ns = is_G_nonstationary(h, z, tol * std::max(1.0, h.field(z).norm()));
  if (!ns.holds) {
    std::ostringstream os;
    os << "H2' violated: J grad H lies in the orbit tangent space (margin " << ns.margin << ")";
    throw HypothesisViolation(os.str());
  }
  const int orbit_dim = g.dim() > 0 ? g.orbit_type(z).orbit_dim : 0;
  Mat gen(z.size(), 1 + g.dim());
  gen.col(0) = h.field(z);
  if (g.dim() > 0) gen.rightCols(g.dim()) = g.orbit_tangent(z);
  TangentFrame f;
  f.basis_f = orthonormal_span(gen, 1e-9);
  if (f.basis_f.cols() != 1 + orbit_dim) throw HypothesisViolation("H2' violated: degenerate f z frame");
  f.basis_Jf.resize(z.size(), f.basis_f.cols());
  for (Eigen::Index c = 0; c < f.basis_f.cols(); ++c) f.basis_Jf.col(c) = apply_j(f.basis_f.col(c));
  const double overlap = (f.basis_Jf.transpose() * f.basis_f).cwiseAbs().maxCoeff();
  if (overlap > 1e-6) {
    std::ostringstream os;
    os << "tangent_frame: J f z not orthogonal to f z (overlap " << overlap << "); point is off the zero momentum level";
    throw ValidationError(os.str());
  }
  Mat both(z.size(), 2 * f.basis_f.cols());
  both << f.basis_Jf, f.basis_f;
  f.basis_R = orthogonal_complement(both);
  return f;
}

/// Newton projection onto {H = E, mu = 0} with minimum-norm steps.
inline std::optional<Vec> project_to_level(const HamiltonianModel& h, double e, Vec z, int max_iter = 60) {
  const auto& g = h.group();
  const double scale = std::max(1.0, std::abs(e));
  for (int it = 0; it < max_iter; ++it) {
    Vec c(1 + g.dim());
    c(0) = h.value(z) - e;
    if (g.dim() > 0) c.tail(g.dim()) = g.momentum_map(z);
    if (!std::isfinite(c.norm())) return std::nullopt;
    if (c.norm() < 1e-13 * scale) return z;
    Mat d(1 + g.dim(), z.size());
    d.row(0) = h.gradient(z).transpose();
    if (g.dim() > 0) d.bottomRows(g.dim()) = g.momentum_jacobian(z);
    z -= pinv_solve(d, c, 1e-12);
  }
  return std::nullopt;
}

/// Deterministic seeds on the zero momentum level of Sigma_E: uniform box
/// samples, Newton-projected. Stream i uses its own generator seeded by (seed, i).
inline std::vector<Vec> sample_level_points(const HamiltonianModel& h, double e, int count, unsigned long seed,
                                            bool principal_only = false) {
  const Vec w = h.box(e);
  const auto& g = h.group();
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(count));
  for (unsigned long attempt = 0; static_cast<int>(out.size()) < count; ++attempt) {
    if (attempt > static_cast<unsigned long>(count) * 200 + 1000)
      throw NumericalError("sample_level_points: could not reach the zero momentum level of the energy shell");
    std::seed_seq sq{seed, attempt, 0x9e3779b9UL};
    std::mt19937_64 rng(sq);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec z(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) z(i) = u(rng) * w(i);
    const auto p = project_to_level(h, e, z);
    if (!p) continue;
    if (((p->cwiseAbs() - 1.5 * w).array() > 0.0).any()) continue;
    if (principal_only && g.dim() > 0 && !g.orbit_type(*p).is_principal) continue;
    out.push_back(*p);
  }
  return out;
}

// ---- group-element search helpers ----------------------------------------

/// Element minimising |g u - z|: enumeration for finite groups, Haar grid plus
/// Gauss-Newton polish on the angles for tori.
inline std::pair<GroupElement, double> best_group_match(const CompactGroupAction& g, const Vec& u, const Vec& z) {
  GroupElement best = g.identity();
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& node : g.haar_nodes()) {
    const double d = (act(node.element, u) - z).norm();
    if (d < best_d) {
      best_d = d;
      best = node.element;
    }
  }
  if (!g.is_torus()) return {best, best_d};
  std::vector<double> th = best.coords;
  for (int it = 0; it < 12; ++it) {
    const GroupElement e = g.element(th);
    const Vec gu = act(e, u);
    const Vec r = gu - z;
    Mat jac(u.size(), g.dim());
    for (int i = 0; i < g.dim(); ++i) jac.col(i) = infinitesimal_action(g.lie_basis()[static_cast<size_t>(i)], gu);
    const Vec step = pinv_solve(jac, -r, 1e-10);
    if (!step.allFinite()) break;
    std::vector<double> trial = th;
    for (int i = 0; i < g.dim(); ++i) trial[static_cast<size_t>(i)] = wrap_angle(th[static_cast<size_t>(i)] + step(i));
    const double d = (act(g.element(trial), u) - z).norm();
    if (d >= best_d) break;
    best_d = d;
    th = trial;
    best = g.element(th);
    if (step.norm() < 1e-15) break;
  }
  return {best, best_d};
}

// ---- shooting -------------------------------------------------------------

struct ShootingOptions {
  double flow_tol = 1e-12;
  int max_iter = 40;
  double residual_tol = 1e-10;  // on the full residual, relative to max(1, |z|)
  double t_min = 1e-2;
  double t_max = std::numeric_limits<double>::infinity();
};

struct ShootingResult {
  bool converged = false;
  Vec z;
  double T = 0.0;
  GroupElement g;
  double residual = std::numeric_limits<double>::infinity();  // |g Phi_T(z) - z|
  int nullity = 0;
  bool degenerate = false;  // Jacobian nullity above dim F
  int iterations = 0;
};

namespace detail {

inline Vec shooting_residual(const HamiltonianModel& h, double e, const Vec& z, const GroupElement& g,
                             const FlowResult& fr) {
  const auto& grp = h.group();
  Vec f(z.size() + 1 + grp.dim());
  f.head(z.size()) = act(g, fr.z) - z;
  f(z.size()) = h.value(z) - e;
  if (grp.dim() > 0) f.tail(grp.dim()) = grp.momentum_map(z);
  return f;
}

inline Mat shooting_jacobian(const HamiltonianModel& h, const Vec& z, const GroupElement& g, const FlowResult& fr) {
  const auto& grp = h.group();
  const auto m = z.size();
  const int r = grp.is_torus() ? grp.dim() : 0;
  Mat jac = Mat::Zero(m + 1 + grp.dim(), m + 1 + r);
  const Mat lg = lift_diag(g.matrix);
  jac.topLeftCorner(m, m) = lg * fr.M - Mat::Identity(m, m);
  const Vec gzt = act(g, fr.z);
  jac.block(0, m, m, 1) = h.field(gzt);
  for (int i = 0; i < r; ++i) jac.block(0, m + 1 + i, m, 1) = infinitesimal_action(grp.lie_basis()[static_cast<size_t>(i)], gzt);
  jac.block(m, 0, 1, m) = h.gradient(z).transpose();
  if (grp.dim() > 0) jac.block(m + 1, 0, grp.dim(), m) = grp.momentum_jacobian(z);
  return jac;
}

}  // namespace detail

/// Levenberg-Marquardt shooting on (g Phi_T z - z, H(z) - E, mu(z)) over (z, T, torus angles).
/// Finite-group elements stay fixed (the caller enumerates them).
inline ShootingResult refine_relative_periodic_orbit(const HamiltonianModel& h, double e, Vec z, double T,
                                                     GroupElement g, const ShootingOptions& opt = {}) {
  const auto& grp = h.group();
  FlowOptions fo;
  fo.tol = opt.flow_tol;
  ShootingResult res;
  auto evaluate = [&](const Vec& zz, double tt, const GroupElement& gg, FlowResult& fr) {
    fr = flow(h, zz, tt, fo);
    return detail::shooting_residual(h, e, zz, gg, fr);
  };
  FlowResult fr;
  Vec f;
  try {
    f = evaluate(z, T, g, fr);
  } catch (const NumericalError&) {
    return res;
  }
  double fn = f.norm();
  const auto m = z.size();
  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    if (fn < opt.residual_tol * std::max(1.0, z.norm())) break;
    const Mat jac = detail::shooting_jacobian(h, z, g, fr);
    // damping mu = |f| keeps the step near the solution set when it is not isolated
    // (stabilizer angles of fixed points), and is Gauss-Newton in the limit
    const Vec step = damped_solve(jac, -f, fn);
    if (!step.allFinite()) return res;
    bool accepted = false;
    for (double lam = 1.0; lam > 1e-3; lam *= 0.5) {
      Vec zt = z + lam * step.head(m);
      const double tt = T + lam * step(m);
      if (!(tt > 0.5 * opt.t_min) || tt > 1.5 * opt.t_max) continue;
      GroupElement gt = g;
      if (grp.is_torus()) {
        std::vector<double> th = g.coords;
        for (int i = 0; i < grp.dim(); ++i) th[static_cast<size_t>(i)] = wrap_angle(th[static_cast<size_t>(i)] + lam * step(m + 1 + i));
        gt = grp.element(th);
      }
      FlowResult frt;
      Vec ft;
      try {
        ft = evaluate(zt, tt, gt, frt);
      } catch (const NumericalError&) {
        continue;
      }
      if (ft.norm() < fn) {
        z = zt;
        T = tt;
        g = gt;
        fr = frt;
        f = ft;
        fn = ft.norm();
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  res.z = z;
  res.T = T;
  res.g = g;
  res.residual = (act(g, fr.z) - z).norm();
  res.converged = fn < 1e3 * opt.residual_tol * std::max(1.0, z.norm()) && T >= opt.t_min && T <= opt.t_max * (1 + 1e-9);
  if (res.converged) {
    const Mat jac = detail::shooting_jacobian(h, z, g, fr);
    Eigen::JacobiSVD<Mat> svd(jac);
    const auto& s = svd.singularValues();
    const Eigen::Index cols = jac.cols();
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > 1e-7 * s(0)) ++rank;
    res.nullity = static_cast<int>(cols - rank);
    const int dim_f = 1 + (grp.is_torus() ? grp.dim() : 0);
    res.degenerate = res.nullity > dim_f;
  }
  return res;
}

// ---- orbit census ---------------------------------------------------------

struct MonodromyBlocks {
  int k = 1;
  Mat full;        // (g Phi_{kT})_* in the frame basis [Jf | f | R]
  Mat frame;       // the basis itself
  Mat A, B, P;     // diagonal blocks
  Mat B_expected;  // diag(1, Ad g) acting on (J grad H, A_i z)
  double B_defect = 0.0;
  double structure_defect = 0.0;  // size of the blocks that must vanish
  std::vector<Complex> P_eigenvalues;
  double margin = std::numeric_limits<double>::infinity();
  bool nondegenerate = true;
};

struct RelativePeriodicOrbit {
  int family_id = -1;
  Vec z0;
  double T = 0.0;        // period of the representative (equals T_gamma)
  GroupElement g;        // element with g Phi_T(z0) = z0
  double T_gamma = 0.0;  // primitive period
  double residual = 0.0;
  int nullity = 0;
  bool degenerate_candidate = false;
  bool nondegenerate = true;  // H3' at k = 1
  double margin = 0.0;
  int hits = 0;  // number of seeds that converged onto this family
};

/// Monodromy of the k-th repetition in the frame basis with Lemma-style blocks.
inline MonodromyBlocks monodromy_blocks(const HamiltonianModel& h, const RelativePeriodicOrbit& orbit, int k,
                                        double nondeg_tol = 1e-6, double flow_tol = 1e-12) {
  if (k < 1) throw ValidationError("monodromy_blocks: k must be >= 1");
  const auto& grp = h.group();
  FlowOptions fo;
  fo.tol = flow_tol;
  const FlowResult fr = flow(h, orbit.z0, k * orbit.T, fo);
  const GroupElement gk = grp.power(orbit.g, k);
  const Mat mk = lift_diag(gk.matrix) * fr.M;
  const TangentFrame tf = tangent_frame(h, orbit.z0);
  MonodromyBlocks b;
  b.k = k;
  b.frame = tf.q();
  b.full = b.frame.transpose() * mk * b.frame;
  const Eigen::Index a = tf.basis_f.cols(), r = tf.basis_R.cols();
  b.A = b.full.topLeftCorner(a, a);
  b.B = b.full.block(a, a, a, a);
  b.P = b.full.bottomRightCorner(r, r);
  double sd = 0.0;
  if (a > 0) sd = std::max(sd, b.full.block(0, a, a, a + r).cwiseAbs().maxCoeff());
  if (r > 0) sd = std::max(sd, b.full.block(2 * a, a, r, a).cwiseAbs().maxCoeff());
  b.structure_defect = sd;
  // B in the natural generators: M_k J grad H = J grad H, M_k A_i z = (Ad(g^k) A_i) z.
  const Vec v0 = h.field(orbit.z0);
  double bd = (mk * v0 - v0).norm() / std::max(1.0, v0.norm());
  b.B_expected = Mat::Identity(1 + grp.dim(), 1 + grp.dim());
  for (int i = 0; i < grp.dim(); ++i) {
    const Mat& ai = grp.lie_basis()[static_cast<size_t>(i)];
    const Mat ad = gk.matrix * ai * gk.matrix.transpose();
    const Vec lhs = mk * infinitesimal_action(ai, orbit.z0);
    const Vec rhs = infinitesimal_action(ad, orbit.z0);
    bd = std::max(bd, (lhs - rhs).norm() / std::max(1.0, orbit.z0.norm()));
    for (int j = 0; j < grp.dim(); ++j) {
      // Coordinates of Ad(g) A_i in the Lie basis (Frobenius inner product).
      const Mat& aj = grp.lie_basis()[static_cast<size_t>(j)];
      b.B_expected(1 + j, 1 + i) = (ad.cwiseProduct(aj)).sum() / (aj.cwiseProduct(aj)).sum();
    }
  }
  b.B_defect = bd;
  if (r > 0) {
    Eigen::EigenSolver<Mat> es(b.P);
    for (Eigen::Index i = 0; i < r; ++i) {
      const Complex lam = es.eigenvalues()(i);
      b.P_eigenvalues.push_back(lam);
      b.margin = std::min(b.margin, std::abs(lam - 1.0));
    }
    std::sort(b.P_eigenvalues.begin(), b.P_eigenvalues.end(), [](Complex x, Complex y) {
      return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
  }
  b.nondegenerate = b.margin > nondeg_tol;
  return b;
}

struct NondegeneracyReport {
  bool holds = true;
  double margin = std::numeric_limits<double>::infinity();
};

inline NondegeneracyReport is_G_nondegenerate(const HamiltonianModel& h, const RelativePeriodicOrbit& orbit, int k,
                                              double tol = 1e-6) {
  const auto b = monodromy_blocks(h, orbit, k, tol);
  return {b.nondegenerate, b.margin};
}

/// int_0^{k T} xi . dx along the orbit.
inline double action_integral(const HamiltonianModel& h, const RelativePeriodicOrbit& orbit, int k,
                              double flow_tol = 1e-12) {
  FlowOptions fo;
  fo.tol = flow_tol;
  fo.variational = false;
  return flow(h, orbit.z0, k * orbit.T, fo).action;
}

/// Distance from z to the F-orbit {g Phi_t(z_ref)} of a relative periodic point
/// with period T_ref: (t, g) grid search then Gauss-Newton polish.
inline double f_orbit_distance(const HamiltonianModel& h, const Vec& z_ref, double t_ref, const Vec& z,
                               int grid = 64, double flow_tol = 1e-12) {
  const auto& grp = h.group();
  std::vector<double> times(static_cast<size_t>(grid));
  for (int j = 0; j < grid; ++j) times[static_cast<size_t>(j)] = t_ref * j / grid;
  FlowOptions fo;
  fo.tol = flow_tol;
  const auto traj = trajectory(h, z_ref, times, fo);
  double best = std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  GroupElement best_g = grp.identity();
  for (size_t j = 0; j < traj.size(); ++j) {
    for (const auto& node : grp.haar_nodes()) {
      const double d = (act(node.element, traj[j]) - z).norm();
      if (d < best) {
        best = d;
        best_t = times[j];
        best_g = node.element;
      }
    }
  }
  // Polish over (t, angles); finite groups keep their element.
  double t = best_t;
  GroupElement g = best_g;
  fo.variational = false;
  for (int it = 0; it < 12; ++it) {
    const Vec zt = flow(h, z_ref, t, fo).z;
    const Vec gz = act(g, zt);
    const Vec r = gz - z;
    const int nr = grp.is_torus() ? grp.dim() : 0;
    Mat jac(z.size(), 1 + nr);
    jac.col(0) = h.field(gz);
    for (int i = 0; i < nr; ++i) jac.col(1 + i) = infinitesimal_action(grp.lie_basis()[static_cast<size_t>(i)], gz);
    const Vec step = pinv_solve(jac, -r, 1e-10);
    const double t_new = t + step(0);
    GroupElement g_new = g;
    if (nr > 0) {
      std::vector<double> th = g.coords;
      for (int i = 0; i < nr; ++i) th[static_cast<size_t>(i)] = wrap_angle(th[static_cast<size_t>(i)] + step(1 + i));
      g_new = grp.element(th);
    }
    const double d = (act(g_new, flow(h, z_ref, t_new, fo).z) - z).norm();
    if (!(d < best)) break;
    best = d;
    t = t_new;
    g = g_new;
    if (step.norm() < 1e-14) break;
  }
  return best;
}

struct OrbitSearchOptions {
  double E = 0.0;
  double T_max = 2.0;
  double T_min = 1e-2;
  int seeds = 200;
  unsigned long rng_seed = 1;
  int scan_points = 400;
  int candidates_per_seed = 3;
  double residual_tol = 1e-10;
  double merge_tol = 1e-6;
  double period_tol = 1e-6;
  double nondeg_tol = 1e-6;
  double flow_tol = 1e-12;
};

namespace detail {

/// Removes stabilizer components from torus angles and wraps them.
inline GroupElement normalize_representative(const CompactGroupAction& grp, const Vec& z, const GroupElement& g) {
  if (!grp.is_torus()) return g;
  Vec th = Eigen::Map<const Vec>(g.coords.data(), grp.dim());
  const Mat ns = null_space(grp.orbit_tangent(z), 1e-9, 1e-10 * std::max(1.0, z.norm()));
  if (ns.cols() > 0) th -= ns * (ns.transpose() * th);
  std::vector<double> c(static_cast<size_t>(grp.dim()));
  for (int i = 0; i < grp.dim(); ++i) c[static_cast<size_t>(i)] = wrap_angle(th(i));
  return grp.element(c);
}

/// Smallest relative period T/m of a converged solution, re-solved by shooting.
inline ShootingResult primitive_solution(const HamiltonianModel& h, double e, const ShootingResult& sol,
                                         const OrbitSearchOptions& opt, const ShootingOptions& so) {
  const int mmax = static_cast<int>(std::ceil(sol.T / opt.T_min));
  if (mmax < 2) return sol;
  std::vector<double> stops;
  for (int m = mmax; m >= 2; --m) stops.push_back(sol.T / m);
  FlowOptions fo;
  fo.tol = opt.flow_tol;
  const auto traj = trajectory(h, sol.z, stops, fo);
  const double scale = std::max(1.0, sol.z.norm());
  // stops[i] corresponds to m = mmax - i; the largest m is tried first.
  for (size_t i = 0; i < stops.size(); ++i) {
    const auto [g, d] = best_group_match(h.group(), traj[i], sol.z);
    if (d > 1e-5 * scale) continue;
    ShootingResult r = refine_relative_periodic_orbit(h, e, sol.z, stops[i], g, so);
    if (r.converged && std::abs(r.T - stops[i]) < 1e-6 * sol.T) return r;
  }
  return sol;
}

}  // namespace detail

/// Shooting search for primitive relative periodic families with T_gamma <= T_max.
inline std::vector<RelativePeriodicOrbit> find_relative_periodic_orbits(const HamiltonianModel& h,
                                                                        const OrbitSearchOptions& opt,
                                                                        const std::vector<Vec>& seed_points = {}) {
  if (!(opt.T_max > 0.0)) throw ValidationError("orbit search: T_max must be positive");
  if (!(opt.T_min > 0.0) || opt.T_min >= opt.T_max) throw ValidationError("orbit search: need 0 < T_min < T_max");
  const auto& grp = h.group();
  std::vector<Vec> seeds = seed_points;
  if (seeds.empty()) seeds = sample_level_points(h, opt.E, opt.seeds, opt.rng_seed);

  ShootingOptions so;
  so.flow_tol = opt.flow_tol;
  so.residual_tol = opt.residual_tol;
  so.t_min = opt.T_min;
  so.t_max = opt.T_max;

  std::vector<double> stops(static_cast<size_t>(opt.scan_points));
  for (int j = 0; j < opt.scan_points; ++j) stops[static_cast<size_t>(j)] = opt.T_max * (j + 1) / opt.scan_points;

  std::vector<RelativePeriodicOrbit> families;
  FlowOptions fo;
  fo.tol = opt.flow_tol;
  for (const Vec& z : seeds) {
    std::vector<Vec> traj;
    try {
      traj = trajectory(h, z, stops, fo);
    } catch (const NumericalError&) {
      continue;
    }
    std::vector<double> r(traj.size());
    std::vector<GroupElement> gbest(traj.size());
    for (size_t j = 0; j < traj.size(); ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& node : grp.haar_nodes()) {
        const double d = (act(node.element, traj[j]) - z).norm();
        if (d < best) {
          best = d;
          gbest[j] = node.element;
        }
      }
      r[j] = best / z.norm();
    }
    std::vector<size_t> minima;
    for (size_t j = 0; j < r.size(); ++j) {
      if (stops[j] < opt.T_min) continue;
      const bool left = j == 0 || r[j] <= r[j - 1];
      const bool right = j + 1 == r.size() || r[j] <= r[j + 1];
      if (left && right) minima.push_back(j);
    }
    std::sort(minima.begin(), minima.end(), [&](size_t a, size_t b) { return r[a] < r[b]; });
    if (static_cast<int>(minima.size()) > opt.candidates_per_seed) minima.resize(static_cast<size_t>(opt.candidates_per_seed));

    for (size_t j : minima) {
      ShootingResult sol = refine_relative_periodic_orbit(h, opt.E, z, stops[j], gbest[j], so);
      if (!sol.converged) continue;
      sol = detail::primitive_solution(h, opt.E, sol, opt, so);
      if (!sol.converged) continue;
      sol.g = detail::normalize_representative(grp, sol.z, sol.g);
      {
        FlowOptions fv = fo;
        fv.variational = false;
        sol.residual = (act(sol.g, flow(h, sol.z, sol.T, fv).z) - sol.z).norm();
      }
      bool merged = false;
      for (auto& fam : families) {
        if (std::abs(fam.T_gamma - sol.T) > opt.period_tol * std::max(1.0, sol.T)) continue;
        const double d = f_orbit_distance(h, fam.z0, fam.T_gamma, sol.z, 64, opt.flow_tol);
        if (d < opt.merge_tol * std::max(1.0, sol.z.norm())) {
          ++fam.hits;
          if (sol.residual < fam.residual && !sol.degenerate) {
            fam.z0 = sol.z;
            fam.g = sol.g;
            fam.residual = sol.residual;
            fam.T = fam.T_gamma = sol.T;
          }
          merged = true;
          break;
        }
      }
      if (merged) continue;
      RelativePeriodicOrbit o;
      o.z0 = sol.z;
      o.T = o.T_gamma = sol.T;
      o.g = sol.g;
      o.residual = sol.residual;
      o.nullity = sol.nullity;
      o.degenerate_candidate = sol.degenerate;
      o.hits = 1;
      families.push_back(o);
    }
  }
  std::sort(families.begin(), families.end(), [](const RelativePeriodicOrbit& a, const RelativePeriodicOrbit& b) {
    return a.T_gamma != b.T_gamma ? a.T_gamma < b.T_gamma : a.residual < b.residual;
  });
  for (size_t i = 0; i < families.size(); ++i) {
    auto& fam = families[i];
    fam.family_id = static_cast<int>(i);
    const auto b = monodromy_blocks(h, fam, 1, opt.nondeg_tol, opt.flow_tol);
    fam.nondegenerate = b.nondegenerate;
    fam.margin = b.margin;
  }
  return families;
}

/// Relative equilibria J grad H(z) = sum c_i A_i z on Sigma_E with z off the
/// zero momentum level; these show that the zero level restriction in H2' matters.
inline std::vector<Vec> find_relative_equilibria(const HamiltonianModel& h, double e, int seeds, unsigned long rng_seed) {
  const auto& grp = h.group();
  std::vector<Vec> out;
  if (grp.dim() == 0) return out;
  const Vec w = h.box(e);
  const auto m = w.size();
  for (int s = 0; s < seeds; ++s) {
    std::seed_seq sq{rng_seed, static_cast<unsigned long>(s), 0x7f4a7c15UL};
    std::mt19937_64 rng(sq);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec p(m + grp.dim());
    for (Eigen::Index i = 0; i < m; ++i) p(i) = u(rng) * w(i);
    for (int i = 0; i < grp.dim(); ++i) p(m + i) = 10.0 * u(rng);
    for (int it = 0; it < 80; ++it) {
      const Vec z = p.head(m);
      Vec f(m + 1);
      Mat jac = Mat::Zero(m + 1, m + grp.dim());
      f.head(m) = h.field(z);
      const Mat hj = symplectic_j(static_cast<int>(m / 2)) * h.hessian(z);
      jac.topLeftCorner(m, m) = hj;
      for (int i = 0; i < grp.dim(); ++i) {
        const Mat& a = grp.lie_basis()[static_cast<size_t>(i)];
        f.head(m) -= p(m + i) * infinitesimal_action(a, z);
        jac.topLeftCorner(m, m) -= p(m + i) * lift_diag(a);
        jac.block(0, m + i, m, 1) = -infinitesimal_action(a, z);
      }
      f(m) = h.value(z) - e;
      jac.block(m, 0, 1, m) = h.gradient(z).transpose();
      if (f.norm() < 1e-11 * std::max(1.0, std::abs(e))) {
        if (grp.orbit_type(z).orbit_dim > 0 && grp.momentum_map(z).norm() > 1e-6) out.push_back(z);
        break;
      }
      p -= pinv_solve(jac, f, 1e-12);
      if (!p.allFinite()) break;
    }
  }
  return out;
}

}  // namespace eqsc
