#include "eqsc/gutzwiller.hpp"
#include "eqsc/models.hpp"
#include "eqsc/phase.hpp"
#include "eqsc/test_functions.hpp"
#include "eqsc/weyl.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace eqsc;

namespace {

const double kE = 2.0 * kPi * kPi;
const double kW1 = kTwoPi;
const double kW2 = kTwoPi / std::sqrt(2.0);
const CharacterLabel kChi0{{0}};

/// Composite Simpson rule, used as an independent oracle.
template <class Fn>
auto simpson(Fn&& fn, double a, double b, int panels) {
  const double h = (b - a) / panels;
  auto sum = fn(a) + fn(b);
  for (int i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * fn(a + i * h);
  return sum * (h / 3.0);
}

RelativePeriodicOrbit planar_orbit(const CompactGroupAction& g) {
  RelativePeriodicOrbit o;
  o.family_id = 0;
  o.z0 = Vec::Unit(6, 0);
  o.T = o.T_gamma = 0.5;
  o.g = g.element({kPi});
  return o;
}

RelativePeriodicOrbit axis_orbit(const CompactGroupAction& g) {
  RelativePeriodicOrbit o;
  o.family_id = 1;
  o.z0 = Vec::Zero(6);
  o.z0(2) = std::sqrt(2.0 * kE) / kW2;
  o.T = o.T_gamma = std::sqrt(2.0);
  o.g = g.identity();
  return o;
}

RelativePeriodicOrbit oscillator_orbit(const HamiltonianModel& m, double w, double e) {
  RelativePeriodicOrbit o;
  o.family_id = 0;
  o.z0 = Vec(2);
  o.z0 << std::sqrt(2.0 * e) / w, 0.0;
  o.T = o.T_gamma = kTwoPi / w;
  o.g = m.group().identity();
  return o;
}

}  // namespace

// ---- test functions ---------------------------------------------------------

TEST(TestFunctions, BumpAndStep) {
  EXPECT_DOUBLE_EQ(smooth_bump(0.0), 1.0);
  EXPECT_EQ(smooth_bump(1.0), 0.0);
  EXPECT_EQ(smooth_bump(-1.5), 0.0);
  EXPECT_GT(smooth_bump(0.99), 0.0);
  EXPECT_EQ(smooth_step(-0.1), 0.0);
  EXPECT_EQ(smooth_step(1.2), 1.0);
  EXPECT_NEAR(smooth_step(0.5), 0.5, 1e-15);
  for (double x = 0.01; x < 1.0; x += 0.01) EXPECT_GE(smooth_step(x + 0.005), smooth_step(x));
}

TEST(TestFunctions, FourierWindowMatchesDirectInverseTransform) {
  const FourierWindow f(0.625, 0.025);
  for (double s : {0.0, 3.7, -11.2, 150.0, 2400.0}) {
    const Complex direct =
        simpson([&](double t) { return std::polar(1.0, s * t) * f.f_hat(t); }, f.support_lo(), f.support_hi(), 20000) / kTwoPi;
    EXPECT_NEAR(std::abs(f(s) - direct), 0.0, 1e-12 * std::max(1.0, std::abs(direct))) << "s=" << s;
  }
  // f^ real, so f(-s) = conj f(s).
  EXPECT_NEAR(std::abs(f(-7.3) - std::conj(f(7.3))), 0.0, 1e-16);
  EXPECT_DOUBLE_EQ(f.f_hat(0.625), 1.0);
  EXPECT_EQ(f.f_hat(0.65), 0.0);
  EXPECT_TRUE(f.in_support(0.61));
  EXPECT_FALSE(f.in_support(0.5));
}

TEST(TestFunctions, TransformTableTailAccuracy) {
  // Deep in the tail G is ~1e-12 against G(0) ~ 0.9. Both sides carry the
  // rounding floor of cos(k u) at k u ~ 1e3, about 1e-15 absolute.
  const auto table = detail::BumpTransformTable::shared(800.0);
  for (double k : {100.013, 333.3333, 512.77, 777.01})
    EXPECT_NEAR(table->value(k), detail::BumpTransformTable::direct(k), 2e-15) << "k=" << k;
}

TEST(TestFunctions, PlateauCutoff) {
  const PlateauCutoff z{10.0, 1.0, 0.5};
  EXPECT_EQ(z(10.0), 1.0);
  EXPECT_EQ(z(9.0), 1.0);
  EXPECT_EQ(z(11.0), 1.0);
  EXPECT_EQ(z(8.5), 0.0);
  EXPECT_EQ(z(11.6), 0.0);
  EXPECT_GT(z(8.8), 0.0);
  EXPECT_LT(z(8.8), 1.0);
  PlateauCutoff bad{0.0, 1.0, 0.0};
  EXPECT_THROW(bad.validate(), ValidationError);
}

// ---- det_star -----------------------------------------------------------------

TEST(DetStar, Examples) {
  EXPECT_NEAR(std::abs(det_star(CMat::Identity(3, 3)) - 1.0), 0.0, 1e-15);
  CMat d = CMat::Zero(2, 2);
  d(0, 0) = d(1, 1) = 4.0;
  EXPECT_NEAR(std::abs(det_star(d) - 0.25), 0.0, 1e-15);
  CMat i2(1, 1);
  i2(0, 0) = Complex(0.0, 2.0);
  EXPECT_NEAR(std::abs(det_star(i2) - 1.0 / Complex(1.0, 1.0)), 0.0, 1e-15);
}

TEST(DetStar, BlockMultiplicativity) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    // Blocks of the form S + i P with P positive definite keep eigenvalues off the negative axis.
    auto block = [&](int k) {
      Mat a(k, k), b(k, k);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) a(i, j) = g(rng), b(i, j) = g(rng);
      const Mat s = a + a.transpose();
      const Mat p = b * b.transpose() + Mat::Identity(k, k);
      return CMat(s.cast<Complex>() + Complex(0.0, 1.0) * p.cast<Complex>());
    };
    const CMat m = block(2), n = block(3);
    CMat mn = CMat::Zero(5, 5);
    mn.topLeftCorner(2, 2) = m;
    mn.bottomRightCorner(3, 3) = n;
    const Complex lhs = det_star(mn), rhs = det_star(m) * det_star(n);
    EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-12 * std::abs(rhs));
  }
}

TEST(DetStar, BranchAmbiguityAndSingularity) {
  CMat neg = CMat::Identity(2, 2);
  neg(1, 1) = -3.0;
  EXPECT_THROW(det_star(neg), NumericalError);
  EXPECT_THROW(det_star(CMat::Zero(2, 2)), NumericalError);
  EXPECT_THROW(det_star(CMat::Zero(2, 3)), ValidationError);
}

TEST(CoherentAmplitude, ContinuedRootOfTheUnitOscillator) {
  // For H = (x^2 + xi^2)/2 the matrix is e^{is}, so the continued amplitude is e^{-is/2}.
  const auto m = models::ho1d();
  Vec z(2);
  z << 0.4, -1.1;
  for (double t : {0.3, kPi, 5.0, kTwoPi, 3.0 * kPi, -2.0}) {
    const Complex a = coherent_amplitude(m, z, t, 32);
    EXPECT_NEAR(std::abs(a - std::polar(1.0, -0.5 * t)), 0.0, 1e-9) << "t=" << t;
  }
}

TEST(CoherentAmplitude, AnisotropicOscillatorProduct) {
  // Decoupled axes: per axis cos(ws) + i a sin(ws) with a = (w + 1/w)/2, continued in s.
  const auto m = models::aniso_ho_so2();
  const Vec w = models::example_frequencies();
  const double t = 0.83;
  Complex expected(1.0, 0.0);
  for (int j = 0; j < 3; ++j) {
    const double a = 0.5 * (w(j) + 1.0 / w(j));
    const double phase = std::atan2(a * std::sin(w(j) * t), std::cos(w(j) * t));
    // w t < 2 pi on every axis; atan2 covers (-pi, pi], continue past pi.
    const double arg = phase < 0.0 ? phase + kTwoPi : phase;
    expected *= std::polar(std::pow(std::norm(Complex(std::cos(w(j) * t), a * std::sin(w(j) * t))), -0.25), -0.5 * arg);
  }
  const Complex got = coherent_amplitude(m, Vec::Unit(6, 1), t, 64);
  EXPECT_NEAR(std::abs(got - expected), 0.0, 1e-8 * std::abs(expected));
}

// ---- phase function -------------------------------------------------------------

TEST(PhaseFunction, TrivialTime) {
  const auto m = models::aniso_ho_so2();
  PhaseOptions opt;
  opt.E = kE;
  Vec z(6);
  z << 0.3, -0.2, 0.5, 1.0, 2.0, -1.5;
  const auto ev = phase_function(m, z, 0.0, m.group().identity(), opt);
  EXPECT_NEAR(ev.phi1, 0.0, 1e-14);
  EXPECT_NEAR(std::abs(ev.phi2), 0.0, 1e-14);
}

TEST(PhaseFunction, WVanishesAfterFullOscillatorPeriod) {
  const auto m = models::ho1d();
  Vec z(2);
  z << 0.7, 0.1;
  PhaseOptions opt;
  opt.gradient = false;
  const auto ev = phase_function(m, z, kTwoPi, m.group().identity(), opt);
  EXPECT_LT(ev.W.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(PhaseFunction, CriticalSetOfThePlanarFamily) {
  const auto m = models::aniso_ho_so2();
  const auto o = planar_orbit(m.group());
  PhaseOptions opt;
  opt.E = kE;
  for (int k = 1; k <= 3; ++k) {
    const auto ev = phase_function(m, o.z0, k * o.T, m.group().power(o.g, k), opt);
    EXPECT_LT(std::abs(ev.phi2), 1e-8);
    EXPECT_LT(ev.gradient.norm(), 1e-5) << "k=" << k;
    // On the critical set phi1 is the action k pi^2.
    EXPECT_NEAR(ev.phi1, k * kPi * kPi, 1e-6);
  }
}

TEST(PhaseFunction, CriticalSetOfTheAxisFamilyForEveryStabilizerAngle) {
  const auto m = models::aniso_ho_so2();
  const auto o = axis_orbit(m.group());
  PhaseOptions opt;
  opt.E = kE;
  for (double beta : {0.0, 1.0, 4.0}) {
    const auto ev = phase_function(m, o.z0, o.T, m.group().element({beta}), opt);
    EXPECT_LT(std::abs(ev.phi2), 1e-8);
    EXPECT_LT(ev.gradient.norm(), 1e-6) << "beta=" << beta;
    EXPECT_NEAR(ev.phi1, std::sqrt(2.0) * kE, 1e-6);
  }
}

TEST(PhaseFunction, ImaginaryPartNonnegativeAndNoSpuriousCriticalPoints) {
  const auto m = models::aniso_ho_so2();
  const auto& grp = m.group();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0), t(0.05, 2.0), a(0.0, kTwoPi);
  PhaseOptions opt;
  opt.E = kE;
  int flagged = 0;
  for (int i = 0; i < 100; ++i) {
    Vec z(6);
    for (int j = 0; j < 3; ++j) z(j) = 1.2 * u(rng), z(3 + j) = 6.0 * u(rng);
    const auto ev = phase_function(m, z, t(rng), grp.element({a(rng)}), opt);
    EXPECT_GE(ev.im_value(), -1e-10);
    if (ev.im_value() > 1e-8 || ev.gradient.norm() > 1e-3) ++flagged;
  }
  EXPECT_EQ(flagged, 100);
}

TEST(PhaseFunction, RejectsBadInput) {
  const auto m = models::aniso_ho_so2();
  EXPECT_THROW(phase_function(m, Vec::Zero(4), 1.0, m.group().identity()), ValidationError);
  EXPECT_THROW(phase_function(m, Vec::Zero(6), std::nan(""), m.group().identity()), ValidationError);
}

// ---- spectral distribution --------------------------------------------------------

TEST(SpectralDistribution, FiniteSums) {
  const FourierWindow f(0.5, 0.05);
  const PlateauCutoff zeta{10.0, 1.0, 1.0};
  SpectralData spec;
  spec.h = 0.01;
  EXPECT_EQ(spectral_distribution(spec, zeta, f, 10.0, kChi0), Complex(0.0, 0.0));
  spec.pairs.push_back({9.7, kChi0, 1, true});
  const Complex one = spectral_distribution(spec, zeta, f, 10.0, kChi0);
  EXPECT_NEAR(std::abs(one - f((10.0 - 9.7) / 0.01)), 0.0, 1e-18);
  // Levels outside supp zeta or of another type do not contribute.
  spec.pairs.push_back({13.5, kChi0, 1, true});
  spec.pairs.push_back({10.1, CharacterLabel{{1}}, 1, true});
  EXPECT_EQ(spectral_distribution(spec, zeta, f, 10.0, kChi0), one);
  spec.pairs.push_back({10.4, kChi0, 1, false});
  EXPECT_THROW(spectral_distribution(spec, zeta, f, 10.0, kChi0), ValidationError);
  spec.pairs.pop_back();
  spec.trusted_upper = 11.5;
  EXPECT_THROW(spectral_distribution(spec, zeta, f, 10.0, kChi0), ValidationError);
}

TEST(SpectralDistribution, StreamedAndStoredSpectraAgree) {
  const auto m = models::aniso_ho_so2();
  const double h = 1.0 / 32;
  const PlateauCutoff zeta{kE, 1.0, 1.0};
  const FourierWindow f(0.5, 0.05);
  const auto spec = analytic_spectrum_data(m, kChi0, h, zeta.lo(), zeta.hi());
  const Complex a = spectral_distribution(spec, zeta, f, kE, kChi0);
  const Complex b = analytic_spectral_distribution(m, kChi0, h, zeta, f, kE);
  EXPECT_NEAR(std::abs(a - b), 0.0, 1e-12);
}

TEST(SpectralDistribution, LinearInTheTestFunction) {
  const auto m = models::aniso_ho_so2();
  const double h = 1.0 / 16;
  const PlateauCutoff zeta{kE, 1.0, 1.0};
  const auto spec = analytic_spectrum_data(m, kChi0, h, zeta.lo(), zeta.hi());
  const FourierWindow f1(0.5, 0.05), f2(1.4, 0.06);
  Complex sum(0.0, 0.0);
  for (const auto& p : spec.pairs) sum += zeta(p.lambda) * (f1((kE - p.lambda) / h) + 2.0 * f2((kE - p.lambda) / h));
  const Complex lin =
      spectral_distribution(spec, zeta, f1, kE, kChi0) + 2.0 * spectral_distribution(spec, zeta, f2, kE, kChi0);
  EXPECT_NEAR(std::abs(sum - lin), 0.0, 1e-12);
}

// ---- Gutzwiller terms ----------------------------------------------------------------

TEST(Gutzwiller, OneDimensionalOscillatorNormalization) {
  // Poisson summation: rho = -e^{i 2 pi E/(h w)} f^(2 pi / w) / w + exponentially small.
  // The minus sign is the Maslov factor carried by the continued amplitude root.
  for (double w : {1.0, 2.0}) {
    const auto m = models::ho1d(w);
    const double e = 3.0;
    const auto o = oscillator_orbit(m, w, e);
    const FourierWindow win(o.T, 0.3);
    const auto terms = gutzwiller_terms(m, kChi0, {o}, win, e);
    ASSERT_EQ(terms.size(), 1u);
    EXPECT_EQ(terms[0].kind, "trivial-group");
    EXPECT_NEAR(terms[0].phase, e * o.T, 1e-8);
    const double h = 1.0 / 512;
    const Complex direct = analytic_spectral_distribution(m, kChi0, h, PlateauCutoff{e, 1.0, 1.0}, win, e);
    EXPECT_NEAR(std::abs(direct), win.f_hat(o.T) / w, 1e-9);
    const Complex ratio = direct / gutzwiller_prediction(terms, h, 1, ExponentConvention::phase_over_h);
    EXPECT_NEAR(std::abs(ratio - 1.0), 0.0, 1e-6) << "w=" << w;
  }
}

TEST(Gutzwiller, PlanarFamilyMatchesTheSectorSpectrum) {
  const auto m = models::aniso_ho_so2();
  const auto& grp = m.group();
  const FourierWindow win(0.5, 0.05);
  const auto terms = gutzwiller_terms(m, kChi0, {planar_orbit(grp), axis_orbit(grp)}, win, kE);
  ASSERT_EQ(terms.size(), 1u);
  EXPECT_EQ(terms[0].kind, "free-orbit");
  EXPECT_EQ(terms[0].dim_M, 2);
  EXPECT_NEAR(terms[0].t_star, 0.5, 1e-12);
  EXPECT_NEAR(terms[0].phase, kPi * kPi, 1e-6);
  EXPECT_LT(terms[0].phase_spread, 1e-8);
  EXPECT_GT(terms[0].min_hessian_sv, 1e-6);
  const double h = 1.0 / 1024;
  const Complex direct = analytic_spectral_distribution(m, kChi0, h, PlateauCutoff{kE, 1.0, 1.0}, win, kE);
  const Complex ratio = direct / gutzwiller_prediction(terms, h, 1, ExponentConvention::phase_over_h);
  EXPECT_NEAR(std::abs(ratio - 1.0), 0.0, 1e-5);
}

TEST(Gutzwiller, TermEnumerationByWindow) {
  const auto m = models::aniso_ho_so2();
  const auto& grp = m.group();
  const std::vector<RelativePeriodicOrbit> census{planar_orbit(grp), axis_orbit(grp)};
  GutzwillerOptions opt;
  opt.rel_tol = 1e-4;
  EXPECT_TRUE(gutzwiller_terms(m, kChi0, census, FourierWindow::from_support(0.60, 0.65), kE, opt).empty());
  const auto two = gutzwiller_terms(m, kChi0, census, FourierWindow::from_support(0.4, 1.1), kE, opt);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_NEAR(two[0].t_star, 0.5, 1e-12);
  EXPECT_NEAR(two[1].t_star, 1.0, 1e-12);
  EXPECT_NEAR(two[1].phase, 2.0 * two[0].phase, 1e-6);
}

TEST(Gutzwiller, AxisFamilyIsDegenerateAtTwoStabilizerAngles) {
  // e^{beta A} composed with the planar rotation by 2 pi sqrt2 has eigenvalue 1
  // at beta = +-2 pi (sqrt2 - 1): the orbit is G-degenerate there.
  const auto m = models::aniso_ho_so2();
  const auto& grp = m.group();
  try {
    gutzwiller_terms(m, kChi0, {planar_orbit(grp), axis_orbit(grp)}, FourierWindow::from_support(1.3, 1.5), kE);
    FAIL() << "expected a hypothesis violation";
  } catch (const HypothesisViolation& e) {
    EXPECT_NE(std::string(e.what()).find("G-degenerate"), std::string::npos);
  }
  detail::ManifoldChart mc;
  mc.kind = detail::ManifoldChart::Kind::fixed_point;
  mc.z0 = axis_orbit(grp).z0;
  mc.T = mc.t_star = std::sqrt(2.0);
  mc.g_k = grp.identity();
  mc.dim = 2;
  const auto roots = detail::stabilizer_degeneracies(m, mc, GutzwillerOptions{});
  ASSERT_EQ(roots.size(), 2u);
  const double b0 = kTwoPi * (std::sqrt(2.0) - 1.0);
  EXPECT_NEAR(roots[0], b0, 1e-7);
  EXPECT_NEAR(roots[1], kTwoPi - b0, 1e-7);
}

TEST(Gutzwiller, RegularizedAxisTermMatchesTheDirectSum) {
  // Across each degenerate angle the amplitude has a simple pole; the direct
  // spectral sum fixes the i0 side, which the Krein direction of the crossing predicts.
  const auto m = models::aniso_ho_so2();
  const auto& grp = m.group();
  const FourierWindow win(1.415, 0.065);
  GutzwillerOptions opt;
  opt.singular = parse_singular_policy("regularized");
  const auto terms = gutzwiller_terms(m, kChi0, {planar_orbit(grp), axis_orbit(grp)}, win, kE, opt);
  ASSERT_EQ(terms.size(), 1u);
  const auto& t = terms[0];
  EXPECT_TRUE(t.regularized);
  ASSERT_EQ(t.crossing_signs.size(), 2u);
  EXPECT_EQ(t.crossing_signs[0], -1);
  EXPECT_EQ(t.crossing_signs[1], 1);
  ASSERT_EQ(t.residues.size(), 2u);
  EXPECT_NEAR(std::abs(t.residues[0] + t.residues[1]), 0.0, 1e-6);
  // Opposite residues: the principal value alone vanishes.
  EXPECT_LT(std::abs(t.amplitude.real()), 1e-3);
  for (int j : {9, 10}) {
    const double h = std::ldexp(1.0, -j);
    const Complex direct = analytic_spectral_distribution(m, kChi0, h, PlateauCutoff{kE, 1.0, 1.0}, win, kE);
    const Complex pred = gutzwiller_prediction(terms, h, 1, ExponentConvention::phase_over_h);
    EXPECT_NEAR(std::abs(direct / pred - 1.0), 0.0, 1e-4) << "h=2^-" << j;
  }
}

TEST(Gutzwiller, UnsupportedGroupsAreRejected) {
  auto m = models::aniso_ho_so2();
  Mat refl = Mat::Identity(3, 3);
  refl(2, 2) = -1.0;
  m.set_group(CompactGroupAction::z2(refl));
  EXPECT_THROW(gutzwiller_terms(m, kChi0, {}, FourierWindow(0.5, 0.1), kE), ValidationError);
}

TEST(RhoCompare, EmptyCensusWithResonantWindowIsAContradiction) {
  const auto m = models::aniso_ho_so2();
  const FourierWindow win(0.5, 0.05);
  std::vector<double> hs;
  std::vector<Complex> direct;
  for (int j = 5; j <= 8; ++j) {
    hs.push_back(std::ldexp(1.0, -j));
    direct.push_back(analytic_spectral_distribution(m, kChi0, hs.back(), PlateauCutoff{kE, 1.0, 1.0}, win, kE));
  }
  const auto c = rho_compare(hs, direct, {}, 1);
  EXPECT_TRUE(c.theta1);
  EXPECT_TRUE(c.contradiction);
  EXPECT_NE(c.verdict.find("contradiction"), std::string::npos);
}

TEST(RhoCompare, ConventionsAreDiscriminatedByTheComplexRatio) {
  const auto m = models::ho1d();
  const double e = 3.0;
  const auto o = oscillator_orbit(m, 1.0, e);
  const FourierWindow win(o.T, 0.3);
  const auto terms = gutzwiller_terms(m, kChi0, {o}, win, e);
  std::vector<double> hs;
  std::vector<Complex> direct;
  for (int j = 0; j < 6; ++j) {
    hs.push_back(0.01 * std::pow(0.5, j) * 1.01);
    direct.push_back(analytic_spectral_distribution(m, kChi0, hs.back(), PlateauCutoff{e, 1.0, 1.0}, win, e));
  }
  const auto c = rho_compare(hs, direct, terms, 1);
  EXPECT_FALSE(c.contradiction);
  EXPECT_EQ(c.stable, static_cast<int>(ExponentConvention::phase_over_h));
  EXPECT_LT(c.complex_drift[0], 1e-3);
  EXPECT_LT(c.modulus_drift[0], 1e-3);
}

// ---- Weyl law ----------------------------------------------------------------------

TEST(WeylLaw, VanishingTestFunction) {
  const auto m = models::aniso_ho_so2();
  L0Options opt;
  opt.nodes = 6;
  EXPECT_EQ(leading_term_L0(m, [](double) { return 0.0; }, 10.0, 20.0, kChi0, opt).L0, 0.0);
}

TEST(WeylLaw, ChartQuadratureMatchesTheReducedDensityOfStates) {
  // On Omega0 the measure f(H) dvol / Vol(Gz) reduces to f(E) E / sqrt2 dE for
  // these frequencies (half-ellipse areas of the planar and axial parts).
  const auto m = models::aniso_ho_so2();
  const EnergyBump f{kE, 10.0};
  const double oracle =
      simpson([&](double e) { return e * f(e); }, f.lo(), f.hi(), 4000) / std::sqrt(2.0);
  L0Options opt;
  opt.nodes = 16;
  const auto r = leading_term_L0(m, f, f.lo(), f.hi(), kChi0, opt);
  EXPECT_NEAR(r.L0 / oracle, 1.0, 3e-3);
  EXPECT_LT(std::abs(r.L0 - oracle), 3.0 * r.error + 1e-12);
  EXPECT_EQ(r.frobenius, 1);
}

TEST(WeylLaw, ChartAndMonteCarloAgree) {
  const auto m = models::aniso_ho_so2();
  const EnergyBump f{kE, 10.0};
  L0Options chart;
  chart.nodes = 16;
  L0Options mc;
  mc.method = L0Method::mc;
  mc.samples = 400'000;
  mc.seed = 3;
  const auto a = leading_term_L0(m, f, f.lo(), f.hi(), kChi0, chart);
  const auto b = leading_term_L0(m, f, f.lo(), f.hi(), kChi0, mc);
  EXPECT_GT(b.accepted, 100);
  EXPECT_LT(std::abs(a.L0 - b.L0), 3.0 * std::hypot(a.error, b.error));
  EXPECT_LT(b.error / b.L0, 0.1);
}

TEST(WeylLaw, XSpaceReadingUsesTheConfigurationOrbit) {
  const auto m = models::aniso_ho_so2();
  Vec z = Vec::Zero(6);
  z(0) = 1.0;
  EXPECT_NEAR(m.group().orbit_volume(z), kTwoPi, 1e-12);
  z(4) = 2.0;
  EXPECT_NEAR(m.group().orbit_volume(z, true), kTwoPi, 1e-12);
  EXPECT_NEAR(m.group().orbit_volume(z), kTwoPi * std::sqrt(5.0), 1e-12);
  const EnergyBump f{kE, 10.0};
  L0Options opt;
  opt.nodes = 8;
  opt.x_space = true;
  const auto xs = leading_term_L0(m, f, f.lo(), f.hi(), kChi0, opt);
  opt.x_space = false;
  const auto zs = leading_term_L0(m, f, f.lo(), f.hi(), kChi0, opt);
  EXPECT_TRUE(xs.x_space);
  EXPECT_GT(std::abs(xs.L0 / zs.L0 - 1.0), 0.1);
}

TEST(WeylLaw, MissingChartIsRejected) {
  const auto m = models::anharmonic_so2();
  EXPECT_THROW(leading_term_L0(m, EnergyBump{kE, 5.0}, kE - 5, kE + 5, kChi0), ValidationError);
}

TEST(WeylLaw, SyntheticRegression) {
  std::vector<double> hs, tr;
  for (int j = 2; j <= 10; ++j) {
    hs.push_back(std::ldexp(1.0, -j));
    tr.push_back(5.0 * std::pow(hs.back(), -2.0));
  }
  const auto r = weyl_check(hs, tr, 5.0 * std::pow(kTwoPi, 2), 1, 3, 1);
  EXPECT_NEAR(r.fitted_slope, -2.0, 1e-12);
  EXPECT_NEAR(r.fitted_constant, 5.0, 1e-10);
  for (double q : r.ratios) EXPECT_NEAR(q, 1.0, 1e-12);
  EXPECT_TRUE(r.monotone);
  auto bumpy = tr;
  std::swap(bumpy[3], bumpy[4]);
  EXPECT_FALSE(weyl_check(hs, bumpy, 1.0, 1, 3, 1).monotone);
}

TEST(WeylLaw, RegressionPreconditions) {
  EXPECT_THROW(weyl_check({0.1, 0.05, 0.02, 0.01}, {1, 2, 3, 4}, 1.0, 1, 3, 1), ValidationError);
  EXPECT_THROW(weyl_check({0.1, 0.08, 0.06, 0.04, 0.02}, {1, 2, 3, 4, 5}, 1.0, 1, 3, 1), ValidationError);
  EXPECT_THROW(weyl_check({0.1, 0.05, 0.02, 0.01, 0.001}, {1, 2, 3, 4}, 1.0, 1, 3, 1), ValidationError);
}

TEST(WeylLaw, ExampleSectorScaling) {
  const auto m = models::aniso_ho_so2();
  const EnergyBump f{kE, 10.0};
  std::vector<double> hs, tr;
  for (int j = 2; j <= 9; ++j) {
    hs.push_back(std::ldexp(1.0, -j));
    tr.push_back(analytic_trace(m, kChi0, hs.back(), f, f.lo(), f.hi()));
  }
  const double l0 = simpson([&](double e) { return e * f(e); }, f.lo(), f.hi(), 4000) / std::sqrt(2.0);
  const auto r = weyl_check(hs, tr, l0, 1, 3, m.group().kappa());
  EXPECT_EQ(m.group().kappa(), 1);
  EXPECT_NEAR(r.fitted_slope, -2.0, 0.02);
  EXPECT_NEAR(r.ratios.back(), 1.0, 1e-3);
}

TEST(WeylLaw, TrivialGroupControl) {
  const auto m = models::aniso_ho();
  const EnergyBump f{kE, 10.0};
  std::vector<double> hs, tr;
  for (int j = 1; j <= 8; ++j) {
    hs.push_back(std::ldexp(1.0, -j) * 1.5);
    tr.push_back(analytic_trace(m, kChi0, hs.back(), f, f.lo(), f.hi()));
  }
  const auto r = weyl_check(hs, tr, 1.0, 1, 3, m.group().kappa());
  EXPECT_EQ(m.group().kappa(), 0);
  EXPECT_NEAR(r.fitted_slope, -3.0, 0.05);
}
