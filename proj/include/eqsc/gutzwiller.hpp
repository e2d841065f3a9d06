#pragma once

// Spectral distribution rho(h) = sum_lambda zeta(lambda) f((E - lambda)/h) and its
// leading Gutzwiller prediction
//   rho ~ d_chi (2 pi h)^{n-d} / (2 pi) sum_{gamma,k} e^{i phi_{k,gamma}/h} f^(k T_gamma)
//         * int_M conj(chi(g)) d(z,t,g) dsigma,
//   d = det_*(Hess_N phi_E / i) det_*((A + iB - i(C + iD)) / 2),
// with d = n, M the critical manifold in y = (z, t, theta) (flat metric, torus
// angles weighted by the normalized Haar factor (2 pi)^-r) and Hess_N the
// Hessian of phi_E restricted to the orthogonal complement of T M.

#include "eqsc/flow.hpp"
#include "eqsc/orbits.hpp"
#include "eqsc/phase.hpp"
#include "eqsc/quantization.hpp"
#include "eqsc/test_functions.hpp"
#include "eqsc/weyl.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace eqsc {

// ---- spectral distribution -----------------------------------------------

namespace detail {

class ComplexKahanSum {
 public:
  void add(Complex v) {
    re_.add(v.real());
    im_.add(v.imag());
  }
  Complex value() const { return {re_.value(), im_.value()}; }

 private:
  KahanSum re_, im_;
};

}  // namespace detail

inline Complex spectral_distribution(const SpectralData& spec, const PlateauCutoff& zeta, FourierWindow f, double E,
                                     const CharacterLabel& chi) {
  zeta.validate();
  if (!(spec.h > 0.0)) throw ValidationError("spectral_distribution: spectrum has no positive h");
  if (zeta.hi() > spec.trusted_upper)
    throw ValidationError("spectral_distribution: cutoff support reaches " + std::to_string(zeta.hi()) +
                          " beyond the trusted range " + std::to_string(spec.trusted_upper));
  f.reserve(std::max(std::abs(E - zeta.lo()), std::abs(zeta.hi() - E)) / spec.h);
  detail::ComplexKahanSum sum;
  for (const auto& p : spec.pairs) {
    if (p.chi.index != chi.index || !(p.lambda > zeta.lo() && p.lambda < zeta.hi())) continue;
    if (!p.trusted) throw ValidationError("spectral_distribution: untrusted eigenvalue inside the cutoff support");
    sum.add(static_cast<double>(p.multiplicity) * zeta(p.lambda) * f((E - p.lambda) / spec.h));
  }
  return sum.value();
}

/// Same sum streamed from the analytic spectrum oracle (no storage).
inline Complex analytic_spectral_distribution(const HamiltonianModel& model, const CharacterLabel& chi, double h,
                                              const PlateauCutoff& zeta, FourierWindow f, double E) {
  zeta.validate();
  if (!model.has_analytic_spectrum())
    throw ValidationError("spectral_distribution: model '" + model.id() + "' has no analytic spectrum");
  if (!(h > 0.0)) throw ValidationError("spectral_distribution: h must be positive");
  f.reserve(std::max(std::abs(E - zeta.lo()), std::abs(zeta.hi() - E)) / h);
  detail::ComplexKahanSum sum;
  model.analytic_spectrum()(h, chi, zeta.lo(), zeta.hi(), [&](double lam, long mult) {
    const double z = zeta(lam);
    if (z != 0.0) sum.add(static_cast<double>(mult) * z * f((E - lam) / h));
  });
  return sum.value();
}

// ---- Gutzwiller terms -------------------------------------------------------

enum class ExponentConvention { phase_over_h, bare };

inline std::string to_string(ExponentConvention c) { return c == ExponentConvention::phase_over_h ? "phase-over-h" : "bare"; }

/// What to do with stabilizer elements at which the relative periodic point is G-degenerate.
/// `regularized` adds i pi s_j c_j per simple pole to the principal value, where c_j is the
/// residue of the flow-integrated amplitude and s_j = +-1 the Krein direction of the crossing.
enum class SingularPolicy { error, principal_value, regularized };

inline SingularPolicy parse_singular_policy(const std::string& s) {
  if (s == "error") return SingularPolicy::error;
  if (s == "principal-value") return SingularPolicy::principal_value;
  if (s == "regularized") return SingularPolicy::regularized;
  throw ValidationError("unknown singular policy '" + s + "' (expected error, principal-value or regularized)");
}

inline std::string to_string(SingularPolicy p) {
  return p == SingularPolicy::error ? "error" : p == SingularPolicy::principal_value ? "principal-value" : "regularized";
}

struct GutzwillerOptions {
  double hessian_step = 5e-4;   // relative; refined once by Richardson extrapolation
  int s_nodes = 2;              // initial trapezoid nodes along the orbit
  int angle_nodes = 2;          // initial nodes in the group direction
  int max_doublings = 4;
  double rel_tol = 1e-5;        // quadrature convergence target
  double pv_rel_tol = 1e-3;     // same for principal-value rules (FD noise near the pole)
  double residue_offset = 0.02; // pole offset u for residue estimates, extrapolated with u / 2
  double hessian_sv_tol = 1e-6;
  double nondeg_tol = 1e-6;
  int stabilizer_scan = 720;
  SingularPolicy singular = SingularPolicy::error;
  PhaseOptions phase;
};

struct GutzwillerTerm {
  int family_id = -1;
  int k = 1;
  double t_star = 0.0;
  double phase = 0.0;  // phi_{k,gamma}
  Complex amplitude;   // (2 pi)^-r int_M conj(chi(g)) d dsigma
  double quadrature_error = 0.0;
  double f_hat = 0.0;
  int dim_M = 0;
  int nodes = 0;
  double min_hessian_sv = 0.0;
  double phase_spread = 0.0;  // variation of phi1 over the nodes
  std::string kind;           // free-orbit | fixed-point | trivial-group
  std::vector<double> degenerate_angles;
  std::vector<int> crossing_signs;   // Krein direction per degenerate angle (regularized policy)
  std::vector<Complex> residues;     // flow-integrated residue per degenerate angle
  bool principal_value = false;
  bool regularized = false;
};

namespace detail {

struct ManifoldChart {
  enum class Kind { trivial, free_orbit, fixed_point } kind = Kind::trivial;
  Vec z0;
  double T = 0.0;       // parameter period along the flow
  double t_star = 0.0;
  GroupElement g_k;     // element of the representative at repetition k
  double cover = 1.0;   // discrete stabilizer order of z0 in the free case
  int dim = 1;

  std::string kind_name() const {
    return kind == Kind::trivial ? "trivial-group" : kind == Kind::free_orbit ? "free-orbit" : "fixed-point";
  }
};

struct NodeValue {
  Complex integrand;
  double min_sv = 0.0;
  double phi1 = 0.0;
};

/// Point of M at parameters (s, angle) and its tangent frame in y = (z, t, theta).
inline void chart_point(const HamiltonianModel& model, const ManifoldChart& mc, double s, double angle, Vec& y, Mat& tangents,
                        GroupElement& g) {
  const auto& grp = model.group();
  const int dim = 2 * model.n();
  const int r = phase_angle_count(grp);
  FlowOptions fo;
  fo.variational = false;
  Vec z = s == 0.0 ? mc.z0 : flow(model, mc.z0, s, fo).z;
  g = mc.g_k;
  if (mc.kind == ManifoldChart::Kind::free_orbit) {
    z = act(grp.element({angle}), z);
  } else if (mc.kind == ManifoldChart::Kind::fixed_point) {
    g = grp.compose(mc.g_k, grp.element({angle}));
  }
  y = pack_phase_args(grp, z, mc.t_star, g);
  tangents = Mat::Zero(dim + 1 + r, mc.dim);
  tangents.col(0).head(dim) = model.field(z);
  if (mc.kind == ManifoldChart::Kind::free_orbit) tangents.col(1).head(dim) = infinitesimal_action(grp.lie_basis()[0], z);
  if (mc.kind == ManifoldChart::Kind::fixed_point) tangents(dim + 1, 1) = 1.0;
}

inline NodeValue node_value(const HamiltonianModel& model, const CharacterLabel& chi, const ManifoldChart& mc, double s,
                            double angle, const GutzwillerOptions& opt) {
  const auto& grp = model.group();
  Vec y;
  Mat tangents;
  GroupElement g;
  chart_point(model, mc, s, angle, y, tangents, g);
  const double rho_m = std::sqrt(std::max(0.0, (tangents.transpose() * tangents).determinant()));
  const Mat normal = orthogonal_complement(orthonormal_span(tangents));
  const PhaseArgs args = unpack_phase_args(grp, y, g);
  const int steps = phase_steps(model, args.z, args.t, opt.phase);
  const PhaseEvaluation center = phase_value(model, args.z, args.t, args.g, opt.phase, steps);
  const auto m = normal.cols();
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  auto phi = [&](const Vec& yy) { return phase_at(model, yy, g, opt.phase, steps); };
  auto hessian = [&](double eps) {
    CMat hm(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vec ei = eps * normal.col(i);
      hm(i, i) = (phi(y + ei) - 2.0 * center.value + phi(y - ei)) / (eps * eps);
      for (Eigen::Index j = 0; j < i; ++j) {
        const Vec ej = eps * normal.col(j);
        hm(i, j) = hm(j, i) = (phi(y + ei + ej) - phi(y + ei - ej) - phi(y - ei + ej) + phi(y - ei - ej)) / (4.0 * eps * eps);
      }
    }
    return hm;
  };
  const double eps = opt.hessian_step * scale;
  const CMat h1 = hessian(eps), h2 = hessian(0.5 * eps);
  const CMat hn = (4.0 * h2 - h1) / 3.0;
  Eigen::JacobiSVD<CMat> svd(hn);
  NodeValue out;
  out.min_sv = m > 0 ? svd.singularValues()(m - 1) : 1.0;
  out.phi1 = center.phi1;
  if (out.min_sv < opt.hessian_sv_tol) {
    std::ostringstream os;
    os << "gutzwiller_terms: transversal Hessian is singular (smallest singular value " << out.min_sv << ") at s=" << s
       << ", angle=" << angle << "; the critical manifold is degenerate there";
    throw HypothesisViolation(os.str());
  }
  const Complex I(0.0, 1.0);
  const Complex d = det_star(hn / I) * coherent_amplitude(model, args.z, args.t, steps);
  out.integrand = std::conj(grp.character(chi, g)) * d * rho_m;
  return out;
}

/// Margin min |lambda - 1| of the reduced monodromy for g_k e^{beta A}, beta on a grid.
inline std::vector<double> stabilizer_degeneracies(const HamiltonianModel& model, const ManifoldChart& mc,
                                                   const GutzwillerOptions& opt) {
  const auto& grp = model.group();
  FlowOptions fo;
  const FlowResult fr = flow(model, mc.z0, mc.t_star, fo);
  const TangentFrame tf = tangent_frame(model, mc.z0);
  const Mat frame = tf.q();
  const Eigen::Index r = tf.basis_R.cols();
  if (r == 0) return {};
  auto margin = [&](double beta) {
    const GroupElement g = grp.compose(mc.g_k, grp.element({beta}));
    const Mat full = frame.transpose() * lift_diag(g.matrix) * fr.M * frame;
    const Mat p = full.bottomRightCorner(r, r);
    Eigen::EigenSolver<Mat> es(p, false);
    double mgn = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < r; ++i) mgn = std::min(mgn, std::abs(es.eigenvalues()(i) - 1.0));
    return mgn;
  };
  const int nscan = std::max(16, opt.stabilizer_scan);
  std::vector<double> vals(static_cast<size_t>(nscan));
  for (int i = 0; i < nscan; ++i) vals[static_cast<size_t>(i)] = margin(kTwoPi * i / nscan);
  std::vector<double> roots;
  const double db = kTwoPi / nscan;
  for (int i = 0; i < nscan; ++i) {
    const double prev = vals[static_cast<size_t>((i + nscan - 1) % nscan)], cur = vals[static_cast<size_t>(i)],
                 next = vals[static_cast<size_t>((i + 1) % nscan)];
    if (!(cur <= prev && cur < next) || cur > 10.0 * db) continue;
    // Golden-section search on the V-shaped margin.
    double lo = kTwoPi * i / nscan - db, hi = kTwoPi * i / nscan + db;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = margin(x1), f2 = margin(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = margin(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = margin(x2);
      }
    }
    const double beta = 0.5 * (lo + hi);
    if (margin(beta) < opt.nondeg_tol) roots.push_back(std::fmod(beta + kTwoPi, kTwoPi));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Direction +-1 in which the eigenvalue of positive Krein signature crosses 1 at a
/// degenerate angle: the sign of d arg(lambda_+) / d beta.
inline int krein_crossing_sign(const HamiltonianModel& model, const ManifoldChart& mc, double beta, double delta = 1e-3) {
  const auto& grp = model.group();
  const FlowResult fr = flow(model, mc.z0, mc.t_star, FlowOptions{});
  const TangentFrame tf = tangent_frame(model, mc.z0);
  const Mat frame = tf.q();
  const Eigen::Index r = tf.basis_R.cols();
  const CMat omega = (tf.basis_R.transpose() * symplectic_j(model.n()) * tf.basis_R).cast<Complex>();
  auto positive_arg = [&](double b) {
    const GroupElement g = grp.compose(mc.g_k, grp.element({b}));
    const Mat p = (frame.transpose() * lift_diag(g.matrix) * fr.M * frame).bottomRightCorner(r, r);
    Eigen::EigenSolver<Mat> es(p);
    double best = std::numeric_limits<double>::infinity(), arg = 0.0;
    for (Eigen::Index i = 0; i < r; ++i) {
      const Complex lam = es.eigenvalues()(i);
      const CVec v = es.eigenvectors().col(i);
      const double krein = (v.adjoint() * omega * v)(0, 0).imag() / v.squaredNorm();
      if (krein > 1e-8 && std::abs(lam - 1.0) < best) {
        best = std::abs(lam - 1.0);
        arg = std::arg(lam);
      }
    }
    if (!(best < 10.0 * delta))
      throw HypothesisViolation("krein_crossing_sign: no elliptic eigenvalue crosses 1 at angle " + std::to_string(beta) +
                                "; the degeneracy is not a simple Krein crossing");
    return arg;
  };
  const double d = positive_arg(beta + delta) - positive_arg(beta - delta);
  if (std::abs(d) < 1e-3 * delta)
    throw HypothesisViolation("krein_crossing_sign: eigenvalue touches 1 without crossing at angle " + std::to_string(beta));
  return d > 0.0 ? 1 : -1;
}

/// One-dimensional rule on [0, 2 pi) for the group direction.
struct AngleRule {
  std::vector<double> nodes, weights;
};

inline AngleRule periodic_rule(int count) {
  AngleRule r;
  for (int i = 0; i < count; ++i) {
    r.nodes.push_back(kTwoPi * i / count);
    r.weights.push_back(kTwoPi / count);
  }
  return r;
}

/// Principal-value rule: around each singular point b the integrand is folded
/// as F(b + u) + F(b - u) on [0, L] (Gauss-Legendre), the rest of each
/// segment between midpoints is integrated regularly.
inline AngleRule principal_value_rule(const std::vector<double>& sing, int order) {
  AngleRule r;
  std::vector<double> gx, gw;
  gauss_legendre(order, gx, gw);
  auto add_gl = [&](double a, double b) {
    if (b - a <= 0.0) return;
    for (size_t i = 0; i < gx.size(); ++i) {
      r.nodes.push_back(a + 0.5 * (b - a) * (gx[i] + 1.0));
      r.weights.push_back(0.5 * (b - a) * gw[i]);
    }
  };
  const size_t m = sing.size();
  for (size_t j = 0; j < m; ++j) {
    const double b = sing[j];
    const double prev = j == 0 ? sing[m - 1] - kTwoPi : sing[j - 1];
    const double next = j + 1 == m ? sing[0] + kTwoPi : sing[j + 1];
    const double left = 0.5 * (prev + b), right = 0.5 * (b + next);
    const double l = std::min(b - left, right - b);
    // Symmetric pairs b +- u share one weight.
    for (size_t i = 0; i < gx.size(); ++i) {
      const double u = 0.5 * l * (gx[i] + 1.0);
      r.nodes.push_back(b + u);
      r.weights.push_back(0.5 * l * gw[i]);
      r.nodes.push_back(b - u);
      r.weights.push_back(0.5 * l * gw[i]);
    }
    add_gl(left, b - l);
    add_gl(b + l, right);
  }
  for (double& x : r.nodes) x = std::fmod(std::fmod(x, kTwoPi) + kTwoPi, kTwoPi);
  return r;
}

}  // namespace detail

/// Stabilizer angles beta at which a G-fixed relative periodic point fails H3'
/// for the closing element g^k e^{beta A}. Empty for free orbits, where the
/// closing element is unique and monodromy_blocks decides.
inline std::vector<double> degenerate_stabilizer_angles(const HamiltonianModel& model, const RelativePeriodicOrbit& orbit,
                                                        int k, const GutzwillerOptions& opt = {}) {
  const auto& grp = model.group();
  if (!grp.is_torus() || grp.dim() != 1 || numerical_rank(grp.orbit_tangent(orbit.z0)) != 0) return {};
  detail::ManifoldChart mc;
  mc.kind = detail::ManifoldChart::Kind::fixed_point;
  mc.z0 = orbit.z0;
  mc.T = orbit.T_gamma;
  mc.t_star = k * orbit.T_gamma;
  mc.g_k = grp.power(orbit.g, k);
  mc.dim = 2;
  return detail::stabilizer_degeneracies(model, mc, opt);
}

/// Leading Gutzwiller terms for every (family, k) with k T_gamma inside the open support of f^.
inline std::vector<GutzwillerTerm> gutzwiller_terms(const HamiltonianModel& model, const CharacterLabel& chi,
                                                    const std::vector<RelativePeriodicOrbit>& census,
                                                    const FourierWindow& window, double E,
                                                    GutzwillerOptions opt = {}) {
  const auto& grp = model.group();
  grp.validate_label(chi);
  opt.phase.E = E;
  opt.phase.gradient = false;
  if (!grp.is_torus() && grp.order() != 1)
    throw ValidationError("gutzwiller_terms: finite groups other than the trivial group are not supported");
  if (grp.is_torus() && grp.dim() != 1) throw ValidationError("gutzwiller_terms: only rank-1 tori are supported");
  std::vector<GutzwillerTerm> out;
  for (const auto& orbit : census) {
    if (!(orbit.T_gamma > 0.0)) throw ValidationError("gutzwiller_terms: census entry without a primitive period");
    for (int k = 1; k * orbit.T_gamma < window.support_hi(); ++k) {
      const double t_star = k * orbit.T_gamma;
      if (!window.in_support(t_star)) continue;
      detail::ManifoldChart mc;
      mc.z0 = orbit.z0;
      mc.T = orbit.T_gamma;
      mc.t_star = t_star;
      mc.g_k = grp.power(orbit.g, k);
      if (grp.is_torus()) {
        const int od = numerical_rank(grp.orbit_tangent(orbit.z0));
        if (od == 1) {
          mc.kind = detail::ManifoldChart::Kind::free_orbit;
          mc.cover = grp.orbit_volume(orbit.z0) > 0.0
                         ? kTwoPi * grp.orbit_tangent(orbit.z0).norm() / grp.orbit_volume(orbit.z0)
                         : 1.0;
        } else {
          mc.kind = detail::ManifoldChart::Kind::fixed_point;
        }
        mc.dim = 2;
      }
      GutzwillerTerm term;
      term.family_id = orbit.family_id;
      term.k = k;
      term.t_star = t_star;
      term.f_hat = window.f_hat(t_star);
      term.dim_M = mc.dim;
      term.kind = mc.kind_name();

      // Hypothesis H3' for every group element closing the orbit.
      if (mc.kind == detail::ManifoldChart::Kind::fixed_point) {
        term.degenerate_angles = detail::stabilizer_degeneracies(model, mc, opt);
        if (!term.degenerate_angles.empty() && opt.singular == SingularPolicy::error) {
          std::ostringstream os;
          os << "family " << orbit.family_id << " (T_gamma=" << orbit.T_gamma << ", k=" << k
             << ") is G-degenerate at stabilizer angle(s)";
          for (double b : term.degenerate_angles) os << ' ' << b;
          os << ": the reduced monodromy has eigenvalue 1 there";
          throw HypothesisViolation(os.str(), "family " + std::to_string(orbit.family_id) + ", k=" + std::to_string(k));
        }
        term.principal_value = !term.degenerate_angles.empty();
        term.regularized = term.principal_value && opt.singular == SingularPolicy::regularized;
        if (term.regularized)
          for (double b : term.degenerate_angles) term.crossing_signs.push_back(detail::krein_crossing_sign(model, mc, b));
      } else {
        const auto nd = is_G_nondegenerate(model, orbit, k, opt.nondeg_tol);
        if (!nd.holds) {
          std::ostringstream os;
          os << "family " << orbit.family_id << " (T_gamma=" << orbit.T_gamma << ", k=" << k
             << ") is G-degenerate: reduced monodromy margin " << nd.margin;
          throw HypothesisViolation(os.str(), "family " + std::to_string(orbit.family_id) + ", k=" + std::to_string(k));
        }
      }

      // Tensor quadrature, refined until two successive levels agree.
      std::map<std::pair<double, double>, detail::NodeValue> cache;
      double min_sv = std::numeric_limits<double>::infinity(), phi_lo = 1e300, phi_hi = -1e300;
      auto eval = [&](double s, double a) {
        const auto key = std::make_pair(s, a);
        auto it = cache.find(key);
        if (it == cache.end()) {
          it = cache.emplace(key, detail::node_value(model, chi, mc, s, a, opt)).first;
          min_sv = std::min(min_sv, it->second.min_sv);
          phi_lo = std::min(phi_lo, it->second.phi1);
          phi_hi = std::max(phi_hi, it->second.phi1);
        }
        return it->second.integrand;
      };
      auto integrate = [&](int ns, int na) {
        detail::ComplexKahanSum sum;
        const double ws = mc.T / ns;
        detail::AngleRule rule;
        if (mc.kind == detail::ManifoldChart::Kind::trivial)
          rule = {{0.0}, {1.0}};
        else if (term.principal_value)
          rule = detail::principal_value_rule(term.degenerate_angles, na);
        else
          rule = detail::periodic_rule(na);
        for (int i = 0; i < ns; ++i)
          for (size_t j = 0; j < rule.nodes.size(); ++j) sum.add(ws * rule.weights[j] * eval(mc.T * i / ns, rule.nodes[j]));
        if (term.regularized) {
          // Residue c = lim u (G(b + u) - G(b - u)) / 2 of the flow-integrated amplitude G.
          term.residues.clear();
          for (size_t j = 0; j < term.degenerate_angles.size(); ++j) {
            const double b = term.degenerate_angles[j];
            auto c_at = [&](double u) {
              Complex c(0.0, 0.0);
              for (int i = 0; i < ns; ++i)
                c += ws * 0.5 * u * (eval(mc.T * i / ns, b + u) - eval(mc.T * i / ns, b - u));
              return c;
            };
            const double u = opt.residue_offset;
            const Complex c = (4.0 * c_at(0.5 * u) - c_at(u)) / 3.0;
            term.residues.push_back(c);
            sum.add(Complex(0.0, kPi) * static_cast<double>(term.crossing_signs[j]) * c);
          }
        }
        const double haar = grp.is_torus() ? 1.0 / kTwoPi : 1.0;
        return sum.value() * haar / mc.cover;
      };
      // Refine along the flow first, then in the group direction.
      const double tol = term.principal_value ? opt.pv_rel_tol : opt.rel_tol;
      int ns = opt.s_nodes, na = term.principal_value ? std::max(opt.angle_nodes, 4) : opt.angle_nodes;
      Complex prev = integrate(ns, na);
      double err = 0.0;
      auto refine = [&](bool along_flow) {
        double change = std::numeric_limits<double>::infinity();
        for (int d = 0; d < opt.max_doublings; ++d) {
          (along_flow ? ns : na) *= 2;
          const Complex cur = integrate(ns, na);
          change = std::abs(cur - prev);
          prev = cur;
          if (change <= tol * std::abs(cur) + 1e-14) return change;
        }
        std::ostringstream os;
        os << "gutzwiller_terms: quadrature over the critical manifold of family " << orbit.family_id << ", k=" << k
           << " did not converge " << (along_flow ? "along the flow" : "in the group direction") << " (last change "
           << change << ", value " << prev << ", " << cache.size() << " nodes, smallest transversal singular value "
           << min_sv << ")";
        throw NumericalError(os.str());
      };
      err += refine(true);
      if (mc.kind != detail::ManifoldChart::Kind::trivial) err += refine(false);
      term.amplitude = prev;
      term.quadrature_error = err;
      term.nodes = static_cast<int>(cache.size());
      term.min_hessian_sv = min_sv;
      term.phase = cache.begin()->second.phi1;
      term.phase_spread = phi_hi - phi_lo;
      out.push_back(term);
    }
  }
  std::sort(out.begin(), out.end(), [](const GutzwillerTerm& a, const GutzwillerTerm& b) { return a.t_star < b.t_star; });
  return out;
}

/// Leading prediction for rho at h under one exponent convention.
inline Complex gutzwiller_prediction(const std::vector<GutzwillerTerm>& terms, double h, int d_chi,
                                     ExponentConvention conv) {
  Complex sum(0.0, 0.0);
  for (const auto& t : terms) {
    const Complex e = conv == ExponentConvention::phase_over_h ? std::polar(1.0, t.phase / h) : Complex(std::exp(t.phase));
    sum += static_cast<double>(d_chi) / kTwoPi * e * t.f_hat * t.amplitude;
  }
  return sum;
}

// ---- comparison -------------------------------------------------------------

struct RhoComparisonRow {
  double h = 0.0;
  Complex direct;
  Complex predicted[2];
  double modulus_ratio[2] = {0.0, 0.0};
  Complex complex_ratio[2];
};

struct RhoComparison {
  std::vector<RhoComparisonRow> rows;
  double decay_slope = 0.0;      // |rho| ~ h^decay_slope
  double bound_ratio = 0.0;      // max |rho| / min |rho| over the grid
  bool superpolynomial = false;  // decay_slope > 3
  bool theta1 = false;           // bound_ratio <= 10
  double modulus_drift[2] = {0.0, 0.0};  // largest relative change per decade of h
  double complex_drift[2] = {0.0, 0.0};
  int stable = -1;  // index of the h-stable convention, -1 when inconclusive
  bool contradiction = false;
  std::string verdict;
};

namespace detail {

inline double drift_per_decade(const std::vector<double>& h, const std::vector<Complex>& v) {
  double worst = 0.0;
  for (size_t i = 1; i < v.size(); ++i) {
    const double decades = std::abs(std::log10(h[i - 1] / h[i]));
    if (decades <= 0.0 || std::abs(v[i - 1]) == 0.0) continue;
    worst = std::max(worst, std::abs(v[i] - v[i - 1]) / std::abs(v[i - 1]) / decades);
  }
  return worst;
}

}  // namespace detail

inline RhoComparison rho_compare(const std::vector<double>& h_grid, const std::vector<Complex>& direct,
                                 const std::vector<GutzwillerTerm>& terms, int d_chi) {
  if (h_grid.size() != direct.size()) throw ValidationError("rho_compare: h grid and direct values differ in length");
  if (h_grid.size() < 2) throw ValidationError("rho_compare: need at least two h values");
  std::vector<size_t> order(h_grid.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return h_grid[a] > h_grid[b]; });
  RhoComparison c;
  std::vector<double> hs;
  std::vector<Complex> mod[2], cplx[2];
  double lo = 1e300, hi = 0.0;
  Mat a(static_cast<Eigen::Index>(order.size()), 2);
  Vec y(static_cast<Eigen::Index>(order.size()));
  for (size_t ii = 0; ii < order.size(); ++ii) {
    const size_t i = order[ii];
    RhoComparisonRow row;
    row.h = h_grid[i];
    row.direct = direct[i];
    for (int conv = 0; conv < 2; ++conv) {
      row.predicted[conv] = gutzwiller_prediction(terms, row.h, d_chi, static_cast<ExponentConvention>(conv));
      if (std::abs(row.predicted[conv]) > 0.0) {
        row.modulus_ratio[conv] = std::abs(row.direct) / std::abs(row.predicted[conv]);
        row.complex_ratio[conv] = row.direct / row.predicted[conv];
      }
      mod[conv].push_back(row.modulus_ratio[conv]);
      cplx[conv].push_back(row.complex_ratio[conv]);
    }
    hs.push_back(row.h);
    const double m = std::abs(row.direct);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
    a(static_cast<Eigen::Index>(ii), 0) = std::log(row.h);
    a(static_cast<Eigen::Index>(ii), 1) = 1.0;
    y(static_cast<Eigen::Index>(ii)) = std::log(std::max(m, 1e-300));
    c.rows.push_back(row);
  }
  c.decay_slope = a.colPivHouseholderQr().solve(y)(0);
  c.bound_ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  c.superpolynomial = c.decay_slope > 3.0;
  c.theta1 = c.bound_ratio <= 10.0 && !c.superpolynomial;
  for (int conv = 0; conv < 2; ++conv) {
    c.modulus_drift[conv] = detail::drift_per_decade(hs, mod[conv]);
    c.complex_drift[conv] = detail::drift_per_decade(hs, cplx[conv]);
  }
  std::ostringstream v;
  if (terms.empty()) {
    c.contradiction = c.theta1;
    v << (c.theta1 ? "contradiction: direct rho is Theta(1) but no orbit contributes"
                   : "consistent: no contributing orbit and direct rho decays");
  } else {
    c.contradiction = c.superpolynomial;
    if (c.contradiction) {
      v << "contradiction: orbits contribute but direct rho decays";
    } else {
      const double d0 = c.complex_drift[0], d1 = c.complex_drift[1];
      if (std::min(d0, d1) < 0.2 && std::max(d0, d1) > 2.0 * std::min(d0, d1)) c.stable = d0 <= d1 ? 0 : 1;
      if (c.stable >= 0)
        v << "h-stable exponent convention: " << to_string(static_cast<ExponentConvention>(c.stable));
      else
        v << "inconclusive: neither exponent convention gives an h-stable complex ratio";
    }
  }
  c.verdict = v.str();
  return c;
}

}  // namespace eqsc
