#pragma once

// Batch driver behind the eqsc executable. Every subcommand computes its
// artifacts in memory first; files are written only once the whole run has
// succeeded, so a failed run never leaves partial output.

#include "eqsc/config.hpp"
#include "eqsc/gutzwiller.hpp"
#include "eqsc/orbits.hpp"
#include "eqsc/quantization.hpp"
#include "eqsc/weyl.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace eqsc {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode { exit_ok = 0, exit_validation = 2, exit_hypothesis = 3, exit_numerical = 4 };

/// File name -> content, in write order.
struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;
  std::string summary;  // human-readable, also echoed on stdout
  /// Set when a certificate failed but the artifacts document it (orbits).
  std::optional<HypothesisViolation> violation;

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
  void merge(Artifacts other) {
    for (auto& f : other.files) files.push_back(std::move(f));
    summary += other.summary;
    if (!violation && other.violation) violation = other.violation;
  }
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string joined(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num(v[i]);
  return s;
}

inline std::string provenance(const RunConfig& cfg, const std::string& what) {
  return "# eqsc " + std::string(kVersion) + " config=" + config_hash(cfg) + " " + what + "\n";
}

inline SpectralData spectrum_for(const HamiltonianModel& model, const RunConfig& cfg, double h, double e1, double e2) {
  if (cfg.source == "analytic") return analytic_spectrum_data(model, cfg.chi, h, e1, e2);
  return galerkin_spectrum(model, cfg.chi, h, e1, e2, cfg.galerkin);
}

}  // namespace detail

// ---- subcommands ------------------------------------------------------------

inline Artifacts run_spectrum(const RunConfig& cfg) {
  using detail::num;
  const auto model = cfg.build_model();
  Artifacts out;
  std::ostringstream sum;
  sum << "spectrum: model " << model.id() << ", chi " << cfg.chi.to_string() << ", window [" << cfg.E1 << ", " << cfg.E2
      << "], source " << cfg.source << "\n";
  for (size_t i = 0; i < cfg.h_grid.size(); ++i) {
    const double h = cfg.h_grid[i];
    const auto spec = detail::spectrum_for(model, cfg, h, cfg.E1, cfg.E2);
    std::ostringstream csv;
    csv << detail::provenance(cfg, "spectrum h=" + num(h) + " source=" + spec.source);
    csv << "h,chi_label,index,eigenvalue,multiplicity,trusted\n";
    for (size_t k = 0; k < spec.pairs.size(); ++k) {
      const auto& p = spec.pairs[k];
      csv << num(h) << ',' << p.chi.to_string() << ',' << k << ',' << num(p.lambda) << ',' << p.multiplicity << ','
          << (p.trusted ? 1 : 0) << '\n';
    }
    out.add("spectrum_chi" + cfg.chi.to_string() + "_" + std::to_string(i) + ".csv", csv.str());
    sum << "  h=" << detail::short_num(h) << ": " << spec.pairs.size() << " levels"
        << (spec.truncation_warning ? " (window reaches beyond the trusted range)" : "") << "\n";
  }
  out.summary = sum.str();
  return out;
}

inline std::vector<RelativePeriodicOrbit> orbit_census(const HamiltonianModel& model, const RunConfig& cfg, double t_max) {
  OrbitSearchOptions opt;
  opt.E = cfg.E;
  opt.T_max = t_max;
  opt.seeds = cfg.orbits.seeds;
  opt.rng_seed = cfg.seed;
  opt.residual_tol = cfg.residual_tol;
  opt.nondeg_tol = cfg.gutzwiller.nondeg_tol;
  return find_relative_periodic_orbits(model, opt);
}

inline Artifacts run_orbits(const RunConfig& cfg) {
  using detail::num;
  const auto model = cfg.build_model();
  const int dim = 2 * model.n();
  const auto census = orbit_census(model, cfg, cfg.orbits.T_max);
  Artifacts out;
  std::ostringstream csv, sum;
  csv << detail::provenance(cfg, "orbits E=" + num(cfg.E) + " T_max=" + num(cfg.orbits.T_max));
  csv << "family_id,T_gamma,k,T,g_coords";
  for (int i = 0; i < dim; ++i) csv << ",z0_" << i;
  csv << ",residual,P_eigenvalues_re,P_eigenvalues_im,nondeg_margin,degenerate_stabilizer_angles,action_phi,h3_holds\n";
  sum << "orbits: model " << model.id() << ", E=" << cfg.E << ", T_max=" << cfg.orbits.T_max << ": " << census.size()
      << " primitive families\n";
  int h3_failures = 0;
  for (const auto& fam : census) {
    std::ostringstream fails;
    const int kmax = std::max(1, static_cast<int>(std::floor(cfg.orbits.T_max / fam.T_gamma + 1e-9)));
    for (int k = 1; k <= kmax; ++k) {
      const auto b = monodromy_blocks(model, fam, k, cfg.gutzwiller.nondeg_tol);
      // A G-fixed point closes up under every stabilizer element, not only the representative.
      const auto angles = degenerate_stabilizer_angles(model, fam, k, cfg.gutzwiller);
      const bool h3 = b.nondegenerate && angles.empty();
      std::vector<double> re, im;
      for (const auto& ev : b.P_eigenvalues) {
        re.push_back(ev.real());
        im.push_back(ev.imag());
      }
      csv << fam.family_id << ',' << num(fam.T_gamma) << ',' << k << ',' << num(k * fam.T_gamma) << ','
          << detail::joined(fam.g.coords);
      for (int i = 0; i < dim; ++i) csv << ',' << num(fam.z0(i));
      csv << ',' << num(fam.residual) << ',' << detail::joined(re) << ',' << detail::joined(im) << ',' << num(b.margin)
          << ',' << detail::joined(angles) << ',' << num(action_integral(model, fam, k)) << ',' << (h3 ? 1 : 0) << '\n';
      if (!h3) {
        ++h3_failures;
        if (!out.violation) {
          std::string why = "margin " + num(b.margin);
          if (!angles.empty())
            why = "reduced monodromy has eigenvalue 1 at stabilizer angle(s) " + detail::joined(angles);
          out.violation = HypothesisViolation("H3' fails for family " + std::to_string(fam.family_id) + " at k=" +
                                                  std::to_string(k) + " (" + why + ")",
                                              "family " + std::to_string(fam.family_id) + ", k=" + std::to_string(k));
        }
        fails << "    k=" << k << ": H3' FAILS"
            << (angles.empty() ? "" : " at stabilizer angle(s) " + detail::joined(angles)) << "\n";
      }
    }
    sum << "  family " << fam.family_id << ": T_gamma=" << num(fam.T_gamma) << ", residual "
        << detail::short_num(fam.residual) << ", margin " << detail::short_num(fam.margin) << "\n"
        << fails.str();
  }
  out.add("orbits.csv", csv.str());

  // H2' on sampled principal points of the zero momentum level.
  std::ostringstream cert;
  cert << detail::provenance(cfg, "certificates E=" + num(cfg.E));
  cert << "hypothesis,samples,min_margin,holds\n";
  if (cfg.orbits.h2_samples > 0) {
    const auto pts = sample_level_points(model, cfg.E, cfg.orbits.h2_samples, cfg.seed, true);
    double worst = std::numeric_limits<double>::infinity();
    bool holds = true;
    for (const auto& z : pts) {
      const auto r = is_G_nonstationary(model, z);
      worst = std::min(worst, r.margin);
      holds = holds && r.holds;
    }
    cert << "H2'," << pts.size() << ',' << num(worst) << ',' << (holds ? 1 : 0) << '\n';
    sum << "  H2': " << (holds ? "holds" : "FAILS") << " on " << pts.size() << " samples, min margin "
        << detail::short_num(worst) << "\n";
    if (!holds && !out.violation) out.violation = HypothesisViolation("H2' fails on the sampled zero level", "H2'");
  }
  double h3_worst = std::numeric_limits<double>::infinity();
  for (const auto& fam : census) h3_worst = std::min(h3_worst, fam.margin);
  cert << "H3'," << census.size() << ',' << num(census.empty() ? 0.0 : h3_worst) << ',' << (h3_failures == 0 ? 1 : 0)
       << '\n';
  out.add("certificates.csv", cert.str());
  out.summary = sum.str();
  return out;
}

inline Artifacts run_weyl(const RunConfig& cfg) {
  using detail::num;
  const auto model = cfg.build_model();
  const auto& grp = model.group();
  const EnergyBump f = cfg.energy_bump();
  std::vector<double> traces;
  for (double h : cfg.h_grid) {
    if (cfg.source == "analytic") {
      traces.push_back(analytic_trace(model, cfg.chi, h, f, f.lo(), f.hi()));
    } else {
      const auto spec = galerkin_spectrum(model, cfg.chi, h, f.lo(), f.hi(), cfg.galerkin);
      traces.push_back(trace_f(spec, f, f.lo(), f.hi(), cfg.chi));
    }
  }
  const auto l0 = leading_term_L0(model, f, f.lo(), f.hi(), cfg.chi, cfg.weyl.l0);
  const auto r = weyl_check(cfg.h_grid, traces, l0.L0, grp.d_chi(cfg.chi), model.n(), grp.kappa(), l0.frobenius, l0.error);
  Artifacts out;
  std::ostringstream csv, dat, sum;
  csv << detail::provenance(cfg, "weyl");
  csv << "h,trace,ratio,log_residual\n";
  dat << detail::provenance(cfg, "weyl scaling (h, trace)");
  for (size_t i = 0; i < r.h_grid.size(); ++i) {
    csv << num(r.h_grid[i]) << ',' << num(r.trace_values[i]) << ',' << num(r.ratios[i]) << ',' << num(r.residuals[i]) << '\n';
    dat << num(r.h_grid[i]) << ' ' << num(r.trace_values[i]) << '\n';
  }
  sum << "weyl: model " << model.id() << ", chi " << cfg.chi.to_string() << ", f = bump on [" << f.lo() << ", " << f.hi()
      << "], source " << cfg.source << "\n"
      << "  n=" << r.n << " kappa=" << r.kappa << " d_chi=" << r.d_chi << " frobenius=" << r.frobenius
      << " expected slope " << -(r.n - r.kappa) << "\n"
      << "  fitted slope " << num(r.fitted_slope) << " +- " << detail::short_num(r.slope_stderr) << "\n"
      << "  L0 " << num(r.L0) << " +- " << detail::short_num(r.L0_error) << " (" << l0.method
      << (l0.x_space ? ", x-space orbit volume" : "") << ")\n"
      << "  ratio at smallest h " << num(r.ratios.back()) << "\n";
  if (!r.note.empty()) sum << "  note: " << r.note << "\n";
  sum << "  " << r.Lambda_note << "\n";
  std::ostringstream report;
  report << detail::provenance(cfg, "weyl report");
  report << "key,value\n"
         << "n," << r.n << "\nkappa," << r.kappa << "\nd_chi," << r.d_chi << "\nfrobenius," << r.frobenius
         << "\nfitted_slope," << num(r.fitted_slope) << "\nslope_stderr," << num(r.slope_stderr)
         << "\nfitted_constant," << num(r.fitted_constant) << "\nL0," << num(r.L0) << "\nL0_error," << num(r.L0_error)
         << "\nL0_method," << l0.method << "\nx_space," << (l0.x_space ? 1 : 0) << "\nmonotone," << (r.monotone ? 1 : 0)
         << '\n';
  out.add("weyl.csv", csv.str());
  out.add("weyl_report.csv", report.str());
  out.add("weyl_scaling.dat", dat.str());
  out.add("weyl_summary.txt", detail::provenance(cfg, "weyl summary") + sum.str());
  out.summary = sum.str();
  return out;
}

inline Artifacts run_rho(const RunConfig& cfg) {
  using detail::num;
  const auto model = cfg.build_model();
  const auto& grp = model.group();
  const FourierWindow win = cfg.window();
  const int d_chi = grp.d_chi(cfg.chi);
  const auto census = orbit_census(model, cfg, std::max(cfg.orbits.T_max, win.support_hi()));
  const auto terms = gutzwiller_terms(model, cfg.chi, census, win, cfg.E, cfg.gutzwiller);
  std::vector<Complex> direct;
  for (double h : cfg.h_grid) {
    if (cfg.source == "analytic") {
      direct.push_back(analytic_spectral_distribution(model, cfg.chi, h, cfg.cutoff, win, cfg.E));
    } else {
      const auto spec = galerkin_spectrum(model, cfg.chi, h, cfg.cutoff.lo(), cfg.cutoff.hi(), cfg.galerkin);
      direct.push_back(spectral_distribution(spec, cfg.cutoff, win, cfg.E, cfg.chi));
    }
  }
  const auto cmp = rho_compare(cfg.h_grid, direct, terms, d_chi);
  Artifacts out;
  std::ostringstream csv, tcsv, dat, sum;
  csv << detail::provenance(cfg, "rho");
  csv << "h,direct_re,direct_im,direct_abs,pred_phase_over_h_re,pred_phase_over_h_im,pred_bare_re,pred_bare_im,"
         "modulus_ratio_phase_over_h,modulus_ratio_bare\n";
  dat << detail::provenance(cfg, "rho scaling (h, |rho|)");
  for (const auto& row : cmp.rows) {
    auto ratio = [&](int c) { return std::abs(row.predicted[c]) > 0.0 ? std::abs(row.direct) / std::abs(row.predicted[c]) : 0.0; };
    csv << num(row.h) << ',' << num(row.direct.real()) << ',' << num(row.direct.imag()) << ',' << num(std::abs(row.direct))
        << ',' << num(row.predicted[0].real()) << ',' << num(row.predicted[0].imag()) << ','
        << num(row.predicted[1].real()) << ',' << num(row.predicted[1].imag()) << ',' << num(ratio(0)) << ','
        << num(ratio(1)) << '\n';
    dat << num(row.h) << ' ' << num(std::abs(row.direct)) << '\n';
  }
  auto signs_of = [](const GutzwillerTerm& t) { return std::vector<double>(t.crossing_signs.begin(), t.crossing_signs.end()); };
  auto residue_part = [](const GutzwillerTerm& t, bool imag) {
    std::vector<double> v;
    for (const Complex& c : t.residues) v.push_back(imag ? c.imag() : c.real());
    return v;
  };
  tcsv << detail::provenance(cfg, "gutzwiller terms");
  tcsv << "family_id,k,t_star,phase,amplitude_re,amplitude_im,f_hat,dim_M,kind,singular_rule,degenerate_angles,"
          "crossing_signs,residues_re,residues_im,quadrature_error,nodes,min_hessian_sv,phase_spread\n";
  for (const auto& t : terms)
    tcsv << t.family_id << ',' << t.k << ',' << num(t.t_star) << ',' << num(t.phase) << ',' << num(t.amplitude.real())
         << ',' << num(t.amplitude.imag()) << ',' << num(t.f_hat) << ',' << t.dim_M << ',' << t.kind << ','
         << (t.regularized ? "regularized" : t.principal_value ? "principal-value" : "none") << ','
         << detail::joined(t.degenerate_angles) << ',' << detail::joined(signs_of(t)) << ','
         << detail::joined(residue_part(t, false)) << ',' << detail::joined(residue_part(t, true)) << ','
         << num(t.quadrature_error)
         << ',' << t.nodes << ',' << num(t.min_hessian_sv) << ',' << num(t.phase_spread) << '\n';
  const char* conv[2] = {"phase_over_h", "bare"};
  sum << "rho: model " << model.id() << ", chi " << cfg.chi.to_string() << ", E=" << cfg.E << ", f^ supported in ["
      << win.support_lo() << ", " << win.support_hi() << "], source " << cfg.source << "\n"
      << "  " << terms.size() << " Gutzwiller term(s); census of " << census.size() << " families\n"
      << "  |rho| log-log slope " << num(cmp.decay_slope) << ", max/min |rho| " << num(cmp.bound_ratio) << "\n";
  for (int c = 0; c < 2; ++c)
    sum << "  convention " << conv[c] << ": modulus drift/decade " << num(cmp.modulus_drift[c])
        << ", complex drift/decade " << num(cmp.complex_drift[c]) << "\n";
  sum << "  stable convention: " << (cmp.stable >= 0 ? conv[cmp.stable] : "inconclusive") << "\n"
      << "  verdict: " << cmp.verdict << "\n";
  for (const auto& t : terms)
    if (t.principal_value)
      sum << "  family " << t.family_id << " k=" << t.k << " integrated as "
          << (t.regularized ? "an i0-regularized" : "a principal") << " value across " << t.degenerate_angles.size()
          << " G-degenerate stabilizer angle(s)\n";
  out.add("rho.csv", csv.str());
  out.add("gutzwiller_terms.csv", tcsv.str());
  out.add("rho_scaling.dat", dat.str());
  out.add("rho_summary.txt", detail::provenance(cfg, "rho summary") + sum.str());
  out.summary = sum.str();
  return out;
}

inline Artifacts run_report(const RunConfig& cfg) {
  Artifacts out;
  out.merge(run_spectrum(cfg));
  out.merge(run_orbits(cfg));
  out.merge(run_weyl(cfg));
  out.merge(run_rho(cfg));
  std::ostringstream s;
  s << detail::provenance(cfg, "report") << out.summary;
  out.add("summary.txt", s.str());
  return out;
}

inline Artifacts run_subcommand(const std::string& name, const RunConfig& cfg) {
  cfg.validate();
  if (name == "spectrum") return run_spectrum(cfg);
  if (name == "orbits") return run_orbits(cfg);
  if (name == "weyl") return run_weyl(cfg);
  if (name == "rho") return run_rho(cfg);
  if (name == "report") return run_report(cfg);
  throw ValidationError("unknown subcommand '" + name + "' (spectrum, orbits, weyl, rho, report)");
}

inline void write_artifacts(const Artifacts& a, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory '" + dir + "': " + ec.message());
  for (const auto& [name, content] : a.files) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    f << content;
    if (!f) throw ValidationError("cannot write '" + (fs::path(dir) / name).string() + "'");
  }
}

/// Machine-readable error record for stderr.
inline std::string error_record(const std::string& kind, int code, const std::string& message,
                                const std::string& subject = {}) {
  Json j{{"status", "error"}, {"kind", kind}, {"exit_code", code}, {"message", message}};
  if (!subject.empty()) j["subject"] = subject;
  return j.dump();
}

}  // namespace eqsc
