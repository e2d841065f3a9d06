#pragma once

// Built-in model registry.

#include "eqsc/hamiltonian.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace eqsc {

struct ModelRegistryEntry {
  std::string id;
  std::string documentation;
  std::function<HamiltonianModel()> build;
};

namespace models {

inline Vec example_frequencies() {
  Vec w(3);
  w << kTwoPi, kTwoPi, kTwoPi / std::sqrt(2.0);
  return w;
}

/// Levels h(w1 (2k + |m| + 1) + w2 (n3 + 1/2)) of the planar-symmetric
/// oscillator in angular-momentum sector m.
inline void aniso_sector_levels(double w1, double w2, double h, int m, double lo, double hi, const LevelSink& sink) {
  const double planar0 = h * w1 * (std::abs(m) + 1);
  for (long n3 = 0;; ++n3) {
    const double base = planar0 + h * w2 * (static_cast<double>(n3) + 0.5);
    if (base > hi) break;
    const long kmin = std::max(0L, static_cast<long>(std::ceil((lo - base) / (2.0 * h * w1) - 1e-12)));
    for (long k = kmin;; ++k) {
      const double lam = base + 2.0 * h * w1 * static_cast<double>(k);
      if (lam > hi) break;
      if (lam >= lo) sink(lam, 1);
    }
  }
}

/// Same oscillator without symmetry reduction: planar degree d carries d + 1 states.
inline void aniso_full_levels(double w1, double w2, double h, double lo, double hi, const LevelSink& sink) {
  for (long n3 = 0;; ++n3) {
    const double base = h * w1 + h * w2 * (static_cast<double>(n3) + 0.5);
    if (base > hi) break;
    const long dmin = std::max(0L, static_cast<long>(std::ceil((lo - base) / (h * w1) - 1e-12)));
    for (long d = dmin;; ++d) {
      const double lam = base + h * w1 * static_cast<double>(d);
      if (lam > hi) break;
      if (lam >= lo) sink(lam, d + 1);
    }
  }
}

/// Zero momentum level of the planar SO(2) action on R^6:
/// u = (r >= 0, s, phi, x3, xi3) -> x = (r cos phi, r sin phi, x3), xi = (s cos phi, s sin phi, xi3).
inline ZeroLevelChart planar_zero_level_chart(const Vec& omega) {
  ZeroLevelChart c;
  c.dim = 5;
  c.bounds = [omega](double emax) {
    const double p = std::sqrt(2.0 * std::max(emax, 0.0)) * 1.0000001;
    return std::vector<std::pair<double, double>>{
        {0.0, p / omega(0)}, {-p, p}, {0.0, kTwoPi}, {-p / omega(2), p / omega(2)}, {-p, p}};
  };
  c.map = [](const Vec& u) {
    Vec z(6);
    const double cp = std::cos(u(2)), sp = std::sin(u(2));
    z << u(0) * cp, u(0) * sp, u(3), u(1) * cp, u(1) * sp, u(4);
    return z;
  };
  c.density = [](const Vec& u) { return std::hypot(u(0), u(1)); };
  return c;
}

inline HamiltonianModel aniso_ho_so2() {
  const Vec w = example_frequencies();
  HamiltonianModel m("aniso-ho-so2", harmonic_symbol(w), CompactGroupAction::so2_plane(3));
  m.set_description("3D oscillator, frequencies (2pi, 2pi, 2pi/sqrt2), SO(2) rotating the x1x2-plane")
      .set_analytic_flow([w](const Vec& z, double t) { return harmonic_flow(w, z, t); })
      .set_analytic_spectrum([w](double h, const CharacterLabel& chi, double lo, double hi, const LevelSink& sink) {
        if (chi.index.size() != 1) throw ValidationError("aniso-ho-so2: SO(2) labels are single integers");
        aniso_sector_levels(w(0), w(2), h, chi.index[0], lo, hi, sink);
      })
      .set_chart(planar_zero_level_chart(w))
      .set_box([w](double e) { return harmonic_box(w, e); });
  return m;
}

inline HamiltonianModel aniso_ho() {
  const Vec w = example_frequencies();
  HamiltonianModel m("aniso-ho", harmonic_symbol(w), CompactGroupAction::trivial(3));
  m.set_description("same oscillator as aniso-ho-so2 with the trivial group")
      .set_analytic_flow([w](const Vec& z, double t) { return harmonic_flow(w, z, t); })
      .set_analytic_spectrum([w](double h, const CharacterLabel& chi, double lo, double hi, const LevelSink& sink) {
        if (chi.index != std::vector<int>{0}) throw ValidationError("aniso-ho: trivial group has only label 0");
        aniso_full_levels(w(0), w(2), h, lo, hi, sink);
      })
      .set_box([w](double e) { return harmonic_box(w, e); });
  // Action-angle chart (I_i, phi_i), unit density.
  ZeroLevelChart c;
  c.dim = 6;
  c.bounds = [w](double emax) {
    std::vector<std::pair<double, double>> b;
    for (int i = 0; i < 3; ++i) {
      b.push_back({0.0, std::max(emax, 0.0) / w(i) * 1.0000001});
      b.push_back({0.0, kTwoPi});
    }
    return b;
  };
  c.map = [w](const Vec& u) {
    Vec z(6);
    for (int i = 0; i < 3; ++i) {
      const double rho = std::sqrt(2.0 * std::max(u(2 * i), 0.0));
      z(i) = rho / std::sqrt(w(i)) * std::cos(u(2 * i + 1));
      z(3 + i) = -rho * std::sqrt(w(i)) * std::sin(u(2 * i + 1));
    }
    return z;
  };
  c.density = [](const Vec&) { return 1.0; };
  m.set_chart(c);
  return m;
}

inline HamiltonianModel ho1d(double omega = 1.0) {
  Vec w(1);
  w << omega;
  HamiltonianModel m("ho1d", harmonic_symbol(w), CompactGroupAction::trivial(1));
  m.set_description("1D oscillator 1/2 (w^2 x^2 + xi^2)")
      .set_analytic_flow([w](const Vec& z, double t) { return harmonic_flow(w, z, t); })
      .set_analytic_spectrum([omega](double h, const CharacterLabel&, double lo, double hi, const LevelSink& sink) {
        const long k0 = std::max(0L, static_cast<long>(std::ceil(lo / (h * omega) - 0.5 - 1e-12)));
        for (long k = k0;; ++k) {
          const double lam = h * omega * (static_cast<double>(k) + 0.5);
          if (lam > hi) break;
          if (lam >= lo) sink(lam, 1);
        }
      })
      .set_box([w](double e) { return harmonic_box(w, e); });
  return m;
}

/// 1:1 resonant planar oscillator with trivial group; every orbit is periodic.
inline HamiltonianModel resonant_ho2d() {
  Vec w(2);
  w << 1.0, 1.0;
  HamiltonianModel m("resonant-ho2d", harmonic_symbol(w), CompactGroupAction::trivial(2));
  m.set_description("2D isotropic oscillator with unit frequencies, trivial group")
      .set_analytic_flow([w](const Vec& z, double t) { return harmonic_flow(w, z, t); })
      .set_analytic_spectrum([](double h, const CharacterLabel&, double lo, double hi, const LevelSink& sink) {
        const long d0 = std::max(0L, static_cast<long>(std::ceil(lo / h - 1.0 - 1e-12)));
        for (long d = d0;; ++d) {
          const double lam = h * static_cast<double>(d + 1);
          if (lam > hi) break;
          if (lam >= lo) sink(lam, d + 1);
        }
      })
      .set_box([w](double e) { return harmonic_box(w, e); });
  return m;
}

/// aniso-ho-so2 plus eps (x1^2 + x2^2)^2: still SO(2)-invariant, no closed forms.
inline HamiltonianModel anharmonic_so2(double eps = 2.0) {
  const Vec w = example_frequencies();
  PolynomialSymbol p = harmonic_symbol(w);
  p.add_term(eps, {4, 0, 0}, {0, 0, 0});
  p.add_term(2.0 * eps, {2, 2, 0}, {0, 0, 0});
  p.add_term(eps, {0, 4, 0}, {0, 0, 0});
  HamiltonianModel m("anharmonic-so2", p, CompactGroupAction::so2_plane(3));
  m.set_description("aniso-ho-so2 with a quartic planar anharmonicity")
      .set_box([w](double e) { return harmonic_box(w, e); });
  return m;
}

}  // namespace models

inline const std::vector<ModelRegistryEntry>& model_registry() {
  static const std::vector<ModelRegistryEntry> reg{
      {"aniso-ho-so2", "3D oscillator (2pi, 2pi, 2pi/sqrt2) with SO(2) in the x1x2-plane", [] { return models::aniso_ho_so2(); }},
      {"aniso-ho", "same oscillator, trivial group (full Weyl law control)", [] { return models::aniso_ho(); }},
      {"ho1d", "1D oscillator with unit frequency", [] { return models::ho1d(); }},
      {"resonant-ho2d", "2D isotropic oscillator, trivial group (degenerate orbits)", [] { return models::resonant_ho2d(); }},
      {"anharmonic-so2", "SO(2)-invariant quartic perturbation of aniso-ho-so2", [] { return models::anharmonic_so2(); }},
  };
  return reg;
}

inline HamiltonianModel make_model(const std::string& id) {
  for (const auto& e : model_registry())
    if (e.id == id) return e.build();
  std::string known;
  for (const auto& e : model_registry()) known += (known.empty() ? "" : ", ") + e.id;
  throw ValidationError("unknown model id '" + id + "' (known: " + known + ")");
}

}  // namespace eqsc
