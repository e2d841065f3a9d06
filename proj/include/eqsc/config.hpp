#pragma once

// Run configuration for the batch driver, read from JSON.
//
//   {
//     "model": "aniso-ho-so2",                 // registry id, or an inline object:
//     // "model": {"id": "custom", "n": 1,
//     //           "terms": [{"c": 0.5, "alpha": [2], "beta": [0]}, ...],
//     //           "group": {"type": "trivial" | "so2_plane" | "z2" | "torus", ...}},
//     "character": [0],
//     "E": 19.7392088022,
//     "window": [18.7392088022, 20.7392088022],
//     "h_grid": [0.0625, 0.03125, ...],        // descending
//     "test_function": {"center": 0.5, "halfwidth": 0.05, "shape": "bump"},
//     "cutoff": {"delta": 1.0, "tau": 1.0},
//     "weyl": {"l0_method": "chart", "nodes": 20, "samples": 2000000, "x_space": false},
//     "orbits": {"T_max": 2.0, "seeds": 200, "h2_samples": 1000},
//     "gutzwiller": {"singular": "error", "hessian_step": 5e-4},
//     "galerkin": {"cutoff": 40},
//     "source": "analytic",
//     "seed": 1,
//     "tolerances": {"residual": 1e-10, "nondeg": 1e-6, "rel_tol": 1e-5},
//     "output_dir": "out"
//   }
//
// Every key except "model", "E" and "h_grid" has a default. Unknown keys are
// rejected so that typos cannot silently fall back to defaults.

#include "eqsc/gutzwiller.hpp"
#include "eqsc/models.hpp"
#include "eqsc/weyl.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace eqsc {

using Json = nlohmann::json;

struct TestFunctionSpec {
  double center = 0.5;
  double halfwidth = 0.05;
  std::string shape = "bump";
};

struct WeylSpec {
  L0Options l0;
};

struct OrbitSpec {
  double T_max = 2.0;
  int seeds = 200;
  int h2_samples = 1000;
};

struct RunConfig {
  Json model_spec;  // string id or inline object, kept for the provenance hash
  CharacterLabel chi = CharacterLabel::trivial();
  double E = 0.0;
  double E1 = 0.0, E2 = 0.0;
  std::vector<double> h_grid;
  TestFunctionSpec test_function;
  PlateauCutoff cutoff;
  WeylSpec weyl;
  OrbitSpec orbits;
  GutzwillerOptions gutzwiller;
  GalerkinOptions galerkin;
  std::string source = "analytic";
  unsigned long seed = 1;
  double residual_tol = 1e-10;
  std::string output_dir = "out";

  HamiltonianModel build_model() const;
  FourierWindow window() const { return FourierWindow(test_function.center, test_function.halfwidth); }
  /// Weyl-law test function: the smooth bump over the window.
  EnergyBump energy_bump() const { return {0.5 * (E1 + E2), 0.5 * (E2 - E1)}; }
  /// Effective configuration (after command-line overrides) in canonical form.
  Json to_json() const;
  void validate() const;
};

namespace detail {

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError("config: " + where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ValidationError("config: unknown key '" + k + "' in " + where);
}

template <class T>
T get_or(const Json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError("config: " + where + "." + key + " has the wrong type (" + e.what() + ")");
  }
}

inline Mat json_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ValidationError("config: " + where + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[static_cast<size_t>(i)].is_array() || static_cast<Eigen::Index>(j[static_cast<size_t>(i)].size()) != cols)
      throw ValidationError("config: " + where + " is not rectangular");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[static_cast<size_t>(i)][static_cast<size_t>(c)].get<double>();
  }
  return m;
}

/// Group acting on R^n from {"type": ...}.
inline CompactGroupAction group_from_json(const Json& j, int n) {
  check_keys(j, {"type", "plane", "involution", "generators", "nodes"}, "model.group");
  const auto type = get_or<std::string>(j, "type", "trivial", "model.group");
  if (type == "trivial") return CompactGroupAction::trivial(n);
  if (type == "so2_plane") {
    const auto plane = get_or<std::vector<int>>(j, "plane", {0, 1}, "model.group");
    if (plane.size() != 2) throw ValidationError("config: model.group.plane needs two axis indices");
    return CompactGroupAction::so2_plane(n, plane[0], plane[1], get_or<int>(j, "nodes", 64, "model.group"));
  }
  if (type == "z2") {
    if (!j.contains("involution")) throw ValidationError("config: z2 group needs an involution matrix");
    return CompactGroupAction::z2(json_matrix(j.at("involution"), "model.group.involution"));
  }
  if (type == "torus") {
    if (!j.contains("generators") || !j.at("generators").is_array())
      throw ValidationError("config: torus group needs a list of generator matrices");
    std::vector<Mat> gens;
    for (const auto& g : j.at("generators")) gens.push_back(json_matrix(g, "model.group.generators"));
    return CompactGroupAction::torus(gens, get_or<int>(j, "nodes", 64, "model.group"));
  }
  throw ValidationError("config: unknown group type '" + type + "' (trivial, so2_plane, z2, torus)");
}

inline HamiltonianModel model_from_json(const Json& j) {
  if (j.is_string()) return make_model(j.get<std::string>());
  check_keys(j, {"id", "n", "terms", "group"}, "model");
  const int n = get_or<int>(j, "n", 0, "model");
  if (n < 1) throw ValidationError("config: inline model needs n >= 1");
  if (!j.contains("terms") || !j.at("terms").is_array() || j.at("terms").empty())
    throw ValidationError("config: inline model needs a nonempty term list");
  PolynomialSymbol p(n);
  for (const auto& t : j.at("terms")) {
    check_keys(t, {"c", "alpha", "beta"}, "model.terms[]");
    const auto alpha = get_or<std::vector<int>>(t, "alpha", {}, "model.terms[]");
    const auto beta = get_or<std::vector<int>>(t, "beta", {}, "model.terms[]");
    if (static_cast<int>(alpha.size()) != n || static_cast<int>(beta.size()) != n)
      throw ValidationError("config: term exponents must have n = " + std::to_string(n) + " entries each");
    for (int e : alpha)
      if (e < 0) throw ValidationError("config: negative exponent");
    for (int e : beta)
      if (e < 0) throw ValidationError("config: negative exponent");
    p.add_term(get_or<double>(t, "c", 0.0, "model.terms[]"), alpha, beta);
  }
  const Json group = j.contains("group") ? j.at("group") : Json{{"type", "trivial"}};
  return HamiltonianModel(get_or<std::string>(j, "id", "custom", "model"), p, group_from_json(group, n));
}

}  // namespace detail

inline HamiltonianModel RunConfig::build_model() const { return detail::model_from_json(model_spec); }

inline void RunConfig::validate() const {
  if (!(std::isfinite(E1) && std::isfinite(E2) && E1 < E2)) throw ValidationError("config: window must satisfy E1 < E2");
  if (!(E >= E1 && E <= E2)) throw ValidationError("config: E = " + std::to_string(E) + " lies outside the window");
  if (h_grid.empty()) throw ValidationError("config: h_grid is empty");
  for (size_t i = 0; i < h_grid.size(); ++i) {
    if (!(h_grid[i] > 0.0) || !std::isfinite(h_grid[i])) throw ValidationError("config: h_grid entries must be positive");
    if (i > 0 && !(h_grid[i] < h_grid[i - 1])) throw ValidationError("config: h_grid must be sorted descending");
  }
  if (!(test_function.halfwidth > 0.0)) throw ValidationError("config: test_function.halfwidth must be positive");
  if (test_function.shape != "bump") throw ValidationError("config: test_function.shape must be 'bump'");
  cutoff.validate();
  if (!(orbits.T_max > 0.0) || orbits.seeds < 1 || orbits.h2_samples < 0)
    throw ValidationError("config: orbits needs T_max > 0, seeds >= 1, h2_samples >= 0");
  if (source != "analytic" && source != "galerkin") throw ValidationError("config: source must be analytic or galerkin");
  if (galerkin.cutoff < 1) throw ValidationError("config: galerkin.cutoff must be positive");
  if (output_dir.empty()) throw ValidationError("config: output_dir is empty");
  const auto model = build_model();
  model.group().validate_label(chi);
  if (source == "analytic" && !model.has_analytic_spectrum())
    throw ValidationError("config: model '" + model.id() + "' has no analytic spectrum; use source galerkin");
}

inline Json RunConfig::to_json() const {
  Json j;
  j["model"] = model_spec;
  j["character"] = chi.index;
  j["E"] = E;
  j["window"] = {E1, E2};
  j["h_grid"] = h_grid;
  j["test_function"] = {{"center", test_function.center}, {"halfwidth", test_function.halfwidth},
                        {"shape", test_function.shape}};
  j["cutoff"] = {{"delta", cutoff.delta}, {"tau", cutoff.tau}};
  j["weyl"] = {{"l0_method", to_string(weyl.l0.method)}, {"nodes", weyl.l0.nodes},
               {"samples", weyl.l0.samples}, {"x_space", weyl.l0.x_space}};
  j["orbits"] = {{"T_max", orbits.T_max}, {"seeds", orbits.seeds}, {"h2_samples", orbits.h2_samples}};
  j["gutzwiller"] = {{"singular", to_string(gutzwiller.singular)},
                     {"hessian_step", gutzwiller.hessian_step}};
  j["galerkin"] = {{"cutoff", galerkin.cutoff}};
  j["source"] = source;
  j["seed"] = seed;
  j["tolerances"] = {{"residual", residual_tol}, {"nondeg", gutzwiller.nondeg_tol}, {"rel_tol", gutzwiller.rel_tol}};
  j["output_dir"] = output_dir;
  return j;
}

inline RunConfig parse_run_config(const Json& j) {
  using detail::get_or;
  detail::check_keys(j,
                     {"model", "character", "E", "window", "h_grid", "test_function", "cutoff", "weyl", "orbits",
                      "gutzwiller", "galerkin", "source", "seed", "tolerances", "output_dir"},
                     "config");
  RunConfig c;
  if (!j.contains("model")) throw ValidationError("config: missing 'model'");
  c.model_spec = j.at("model");
  if (!j.contains("E")) throw ValidationError("config: missing 'E'");
  c.E = get_or<double>(j, "E", 0.0, "config");
  const auto win = get_or<std::vector<double>>(j, "window", {c.E - 1.0, c.E + 1.0}, "config");
  if (win.size() != 2) throw ValidationError("config: window must be [E1, E2]");
  c.E1 = win[0];
  c.E2 = win[1];
  c.chi.index = get_or<std::vector<int>>(j, "character", {0}, "config");
  if (!j.contains("h_grid")) throw ValidationError("config: missing 'h_grid'");
  c.h_grid = get_or<std::vector<double>>(j, "h_grid", {}, "config");
  if (j.contains("test_function")) {
    const auto& t = j.at("test_function");
    detail::check_keys(t, {"center", "halfwidth", "shape"}, "test_function");
    c.test_function.center = get_or<double>(t, "center", c.test_function.center, "test_function");
    c.test_function.halfwidth = get_or<double>(t, "halfwidth", c.test_function.halfwidth, "test_function");
    c.test_function.shape = get_or<std::string>(t, "shape", c.test_function.shape, "test_function");
  }
  c.cutoff.E = c.E;
  if (j.contains("cutoff")) {
    const auto& t = j.at("cutoff");
    detail::check_keys(t, {"delta", "tau"}, "cutoff");
    c.cutoff.delta = get_or<double>(t, "delta", c.cutoff.delta, "cutoff");
    c.cutoff.tau = get_or<double>(t, "tau", c.cutoff.tau, "cutoff");
  }
  if (j.contains("weyl")) {
    const auto& t = j.at("weyl");
    detail::check_keys(t, {"l0_method", "nodes", "samples", "x_space"}, "weyl");
    c.weyl.l0.method = parse_l0_method(get_or<std::string>(t, "l0_method", "chart", "weyl"));
    c.weyl.l0.nodes = get_or<int>(t, "nodes", c.weyl.l0.nodes, "weyl");
    c.weyl.l0.samples = get_or<long long>(t, "samples", c.weyl.l0.samples, "weyl");
    c.weyl.l0.x_space = get_or<bool>(t, "x_space", false, "weyl");
  }
  if (j.contains("orbits")) {
    const auto& t = j.at("orbits");
    detail::check_keys(t, {"T_max", "seeds", "h2_samples"}, "orbits");
    c.orbits.T_max = get_or<double>(t, "T_max", c.orbits.T_max, "orbits");
    c.orbits.seeds = get_or<int>(t, "seeds", c.orbits.seeds, "orbits");
    c.orbits.h2_samples = get_or<int>(t, "h2_samples", c.orbits.h2_samples, "orbits");
  }
  if (j.contains("gutzwiller")) {
    const auto& t = j.at("gutzwiller");
    detail::check_keys(t, {"singular", "hessian_step"}, "gutzwiller");
    c.gutzwiller.singular = parse_singular_policy(get_or<std::string>(t, "singular", "error", "gutzwiller"));
    c.gutzwiller.hessian_step = get_or<double>(t, "hessian_step", c.gutzwiller.hessian_step, "gutzwiller");
    if (!(c.gutzwiller.hessian_step > 0.0)) throw ValidationError("config: gutzwiller.hessian_step must be positive");
  }
  if (j.contains("galerkin")) {
    const auto& t = j.at("galerkin");
    detail::check_keys(t, {"cutoff"}, "galerkin");
    c.galerkin.cutoff = get_or<int>(t, "cutoff", c.galerkin.cutoff, "galerkin");
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    detail::check_keys(t, {"residual", "nondeg", "rel_tol"}, "tolerances");
    c.residual_tol = get_or<double>(t, "residual", c.residual_tol, "tolerances");
    c.gutzwiller.nondeg_tol = get_or<double>(t, "nondeg", c.gutzwiller.nondeg_tol, "tolerances");
    c.gutzwiller.rel_tol = get_or<double>(t, "rel_tol", c.gutzwiller.rel_tol, "tolerances");
  }
  c.source = get_or<std::string>(j, "source", c.source, "config");
  c.seed = get_or<unsigned long>(j, "seed", c.seed, "config");
  c.weyl.l0.seed = c.seed;
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir, "config");
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);  // comments allowed
  } catch (const Json::parse_error& e) {
    throw ValidationError("config: '" + path + "' is not valid JSON (" + e.what() + ")");
  }
  return parse_run_config(j);
}

/// 64-bit FNV-1a, used for config fingerprints in provenance lines.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const RunConfig& c) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  Json j = c.to_json();
  j.erase("output_dir");  // artifacts do not depend on where they are written
  os << fnv1a64(j.dump());
  return os.str();
}

}  // namespace eqsc
