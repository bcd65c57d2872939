#pragma once

// JSON run configuration. Errors carry the offending field path
// ("coefficients[1].trig[0]") or, for malformed JSON, line and column.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evofam/assumptions.hpp"
#include "evofam/errors.hpp"
#include "evofam/evolution.hpp"
#include "evofam/perturbation.hpp"
#include "evofam/symbol.hpp"
#include "evofam/transport.hpp"

namespace evofam {

using json = nlohmann::json;

inline constexpr int config_schema_version = 1;

namespace config {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
inline std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config field '" + path + "': " + msg);
}

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(join(path, key), "missing");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "not finite");
  return v;
}

inline int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

inline double number_or(const json& j, const std::string& key, const std::string& path, double fallback) {
  return j.contains(key) ? number(j[key], join(path, key)) : fallback;
}

inline int integer_or(const json& j, const std::string& key, const std::string& path, int fallback) {
  return j.contains(key) ? integer(j[key], join(path, key)) : fallback;
}

inline std::string string_or(const json& j, const std::string& key, const std::string& path,
                             const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) fail(join(path, key), "expected a string");
  return j[key].get<std::string>();
}

/// number or [re, im]
inline complex complex_value(const json& j, const std::string& path) {
  if (j.is_number()) return number(j, path);
  if (j.is_array() && j.size() == 2) return {number(j[0], index(path, 0)), number(j[1], index(path, 1))};
  fail(path, "expected a number or [re, im]");
}

inline const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

inline std::vector<double> number_array(const json& j, const std::string& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(number(j[i], index(path, i)));
  return out;
}

}  // namespace config

/// {"const": c, "poly": [[k, re, im]], "trig": [[w, cos_re, cos_im, sin_re, sin_im]], "step": [[t0, re, im]]}
inline CoefficientFunction parse_coefficient(const json& j, const std::string& path) {
  using namespace config;
  if (j.is_number() || j.is_array()) return CoefficientFunction(complex_value(j, path));
  if (!j.is_object()) fail(path, "expected a coefficient object");
  const complex c0 = j.contains("const") ? complex_value(j["const"], join(path, "const")) : complex{};
  std::vector<PolyTerm> poly;
  if (j.contains("poly")) {
    const auto p = join(path, "poly");
    for (std::size_t i = 0; i < array(j["poly"], p).size(); ++i) {
      const auto& e = j["poly"][i];
      const auto ep = index(p, i);
      if (!e.is_array() || e.size() != 3) fail(ep, "expected [k, re, im]");
      const int k = integer(e[0], index(ep, 0));
      if (k < 1) fail(index(ep, 0), "degree must be >= 1");
      poly.push_back({k, {number(e[1], index(ep, 1)), number(e[2], index(ep, 2))}});
    }
  }
  std::vector<TrigTerm> trig;
  if (j.contains("trig")) {
    const auto p = join(path, "trig");
    for (std::size_t i = 0; i < array(j["trig"], p).size(); ++i) {
      const auto& e = j["trig"][i];
      const auto ep = index(p, i);
      if (!e.is_array() || e.size() != 5) fail(ep, "expected [omega, cos_re, cos_im, sin_re, sin_im]");
      const double w = number(e[0], index(ep, 0));
      if (!(w > 0.0)) fail(index(ep, 0), "omega must be > 0");
      trig.push_back({w, {number(e[1], index(ep, 1)), number(e[2], index(ep, 2))},
                      {number(e[3], index(ep, 3)), number(e[4], index(ep, 4))}});
    }
  }
  std::vector<StepTerm> steps;
  if (j.contains("step")) {
    const auto p = join(path, "step");
    for (std::size_t i = 0; i < array(j["step"], p).size(); ++i) {
      const auto& e = j["step"][i];
      const auto ep = index(p, i);
      if (!e.is_array() || e.size() != 3) fail(ep, "expected [t0, re, im]");
      steps.push_back({number(e[0], index(ep, 0)), {number(e[1], index(ep, 1)), number(e[2], index(ep, 2))}});
    }
  }
  return CoefficientFunction(c0, std::move(poly), std::move(trig), std::move(steps));
}

/// Top-level keys dim, order, horizon, coefficients.
inline SymbolSpec parse_symbol(const json& j) {
  using namespace config;
  const int dim = integer(require(j, "dim", ""), "dim");
  const int order = integer(require(j, "order", ""), "order");
  const double horizon = number(require(j, "horizon", ""), "horizon");
  if (dim < 1) fail("dim", "must be >= 1");
  if (order < 1) fail("order", "must be >= 1");
  if (!(horizon > 0.0)) fail("horizon", "must be > 0");
  const auto& coeffs = require(j, "coefficients", "");
  if (!coeffs.is_array() || coeffs.empty()) fail("coefficients", "expected a non-empty array");
  std::vector<SymbolTerm> terms;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const auto p = index("coefficients", i);
    const auto& c = coeffs[i];
    if (!c.is_object()) fail(p, "expected an object");
    const auto& alpha_j = require(c, "alpha", p);
    MultiIndex alpha;
    for (std::size_t a = 0; a < array(alpha_j, join(p, "alpha")).size(); ++a)
      alpha.push_back(integer(alpha_j[a], index(join(p, "alpha"), a)));
    if (static_cast<int>(alpha.size()) != dim) fail(join(p, "alpha"), "length must equal dim");
    for (int a : alpha)
      if (a < 0) fail(join(p, "alpha"), "entries must be >= 0");
    if (degree(alpha) > order) fail(join(p, "alpha"), "|alpha| exceeds order");
    terms.push_back({alpha, parse_coefficient(c, p)});
  }
  try {
    return SymbolSpec(dim, order, horizon, std::move(terms));
  } catch (const ConfigError& e) {
    fail("coefficients", e.what());
  }
}

struct GridConfig {
  int n = 1024;
  double box = 2.0 * std::numbers::pi;
};

struct TestVectorConfig {
  int count = 8;
  int kmax = 4;
  std::uint64_t seed = 7;
};

struct EvolveConfig {
  double s = 0.0;
  double t = 1.0;
  std::string initial_file;  // stem, relative to the config directory; empty: first test vector
  std::vector<int> product_steps = {16, 32, 64, 128};
  std::vector<double> derivative_steps = {4e-3, 2e-3, 1e-3};
};

struct PerturbConfig {
  double s = 0.0;
  double r = 0.37;
  double t = 1.0;
  std::vector<int> step_ladder = {256, 512, 1024};
  std::vector<double> separations = dyadic_separations(6);
  /// rough test vector for the regularity report: indicator of (-w/2, w/2)
  double indicator_width = 1.0;
};

struct FavardConfig {
  std::vector<double> times = {0.0};
};

struct RunConfig {
  std::filesystem::path source;
  std::string text;  // raw config, hashed into reports
  std::optional<SymbolSpec> symbol;
  GridConfig grid;
  double theta = 0.75 * std::numbers::pi;
  EllipticityPlan ellipticity;
  SectorPlan sector;
  KatoPlan kato;
  PairPlan pairs;
  int equivalence_samples = 513;
  PropagatorMethod method = ExactQuadrature{};
  TestVectorConfig vectors;
  EvolveConfig evolve;
  PerturbationFamily perturbation = ZeroFamily{};
  VolterraSolver solver;
  PerturbConfig perturb;
  FavardConfig favard;
  std::optional<TransportProblem> transport;
  InitialProfile transport_initial = Gaussian{};
  double transport_s = 0.0;
  double transport_t = 1.0;
  int transport_levels = 4;
  int refine = 2;
};

inline PerturbationFamily parse_perturbation(const json& j, const std::string& path) {
  using namespace config;
  const auto kind = string_or(j, "kind", path, "");
  if (kind == "zero") return ZeroFamily{};
  if (kind == "identity") return IdentityFamily{};
  if (kind == "mollifier") return Mollifier{};
  if (kind == "multiplier") {
    MultiplierFamily m;
    m.scale = parse_coefficient(require(j, "scale", path), join(path, "scale"));
    if (j.contains("numerator")) m.profile.numerator = number_array(j["numerator"], join(path, "numerator"));
    if (j.contains("denominator")) m.profile.denominator = number_array(j["denominator"], join(path, "denominator"));
    if (m.profile.numerator.empty() || m.profile.denominator.empty()) fail(path, "empty rational profile");
    for (double c : m.profile.denominator)
      if (c < 0.0) fail(join(path, "denominator"), "coefficients must be >= 0 so the profile has no poles");
    if (m.profile.denominator.front() <= 0.0) fail(join(path, "denominator"), "constant term must be > 0");
    return m;
  }
  if (kind == "smoothing") {
    SmoothingComposite sc;
    sc.order = integer_or(j, "order", path, 2);
    if (sc.order < 0) fail(join(path, "order"), "must be >= 0");
    if (j.contains("amplitude")) sc.amplitude = parse_coefficient(j["amplitude"], join(path, "amplitude"));
    sc.width = number_or(j, "width", path, 1.0);
    if (!(sc.width > 0.0)) fail(join(path, "width"), "must be > 0");
    return sc;
  }
  fail(join(path, "kind"), "expected one of zero, identity, mollifier, multiplier, smoothing");
}

inline TransportField parse_field(const json& j, const std::string& path) {
  using namespace config;
  TransportField f;
  f.time = parse_coefficient(j, path);
  if (j.is_object()) {
    f.amplitude = number_or(j, "amplitude", path, 0.0);
    f.frequency = number_or(j, "frequency", path, 0.0);
  }
  return f;
}

inline InitialProfile parse_profile(const json& j, const std::string& path) {
  using namespace config;
  const auto kind = string_or(j, "kind", path, "");
  if (kind == "indicator") {
    Indicator p{number(require(j, "a", path), join(path, "a")), number(require(j, "b", path), join(path, "b"))};
    if (!(p.a < p.b) || p.a < 0.0) fail(path, "need 0 <= a < b");
    return p;
  }
  if (kind == "gaussian") {
    Gaussian p{number_or(j, "center", path, 2.0), number_or(j, "width", path, 0.3), number_or(j, "height", path, 1.0)};
    if (!(p.width > 0.0)) fail(join(path, "width"), "must be > 0");
    return p;
  }
  if (kind == "bump") {
    SmoothBump p{number_or(j, "center", path, 2.0), number_or(j, "radius", path, 1.0),
                 number_or(j, "height", path, 1.0)};
    if (!(p.radius > 0.0)) fail(join(path, "radius"), "must be > 0");
    return p;
  }
  fail(join(path, "kind"), "expected one of indicator, gaussian, bump");
}

/// {T, xmax, cells, g, mu, initial, s, t, dt, levels}
inline void parse_transport(const json& j, RunConfig& cfg) {
  using namespace config;
  TransportProblem p;
  p.horizon = number(require(j, "T", ""), "T");
  p.xmax = number(require(j, "xmax", ""), "xmax");
  p.cells = integer(require(j, "cells", ""), "cells");
  p.g = parse_field(require(j, "g", ""), "g");
  p.mu = parse_field(require(j, "mu", ""), "mu");
  p.dt = number_or(j, "dt", "", 0.0);
  if (!(p.horizon > 0.0)) fail("T", "must be > 0");
  if (!(p.xmax > 0.0)) fail("xmax", "must be > 0");
  if (p.cells < 2) fail("cells", "must be >= 2");
  cfg.transport_initial = parse_profile(require(j, "initial", ""), "initial");
  cfg.transport_s = number_or(j, "s", "", 0.0);
  cfg.transport_t = number_or(j, "t", "", p.horizon);
  cfg.transport_levels = integer_or(j, "levels", "", 4);
  if (!(0.0 <= cfg.transport_s && cfg.transport_s <= cfg.transport_t && cfg.transport_t <= p.horizon))
    fail("t", "need 0 <= s <= t <= T");
  if (cfg.transport_levels < 2) fail("levels", "must be >= 2");
  try {
    validate(p);
  } catch (const ConfigError& e) {
    fail("g/mu", e.what());
  }
  cfg.transport = p;
}

/// Parses JSON text; malformed input reports line and column.
inline json parse_json_text(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(name + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (" +
                      e.what() + ")");
  }
}

inline RunConfig parse_run_config(const std::string& text, const std::string& name = "config") {
  using namespace config;
  const json j = parse_json_text(text, name);
  if (!j.is_object()) fail("", "top level must be an object");
  RunConfig cfg;
  cfg.text = text;
  if (j.contains("schema_version") && integer(j["schema_version"], "schema_version") != config_schema_version)
    fail("schema_version", "unsupported version (expected " + std::to_string(config_schema_version) + ")");

  if (j.contains("T") && j.contains("xmax")) {
    parse_transport(j, cfg);
    return cfg;
  }
  cfg.symbol = parse_symbol(j);
  const int dim = cfg.symbol->dim();
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    cfg.grid.n = integer_or(g, "n", "grid", dim == 1 ? 1024 : 128);
    cfg.grid.box = number_or(g, "box", "grid", cfg.grid.box);
    try {
      Grid probe(dim, cfg.grid.n, cfg.grid.box);
    } catch (const ConfigError& e) {
      fail("grid", e.what());
    }
  } else if (dim > 1) {
    cfg.grid.n = 128;
  }
  cfg.theta = number_or(j, "theta", "", cfg.theta);
  cfg.refine = integer_or(j, "refine", "", cfg.refine);
  if (cfg.refine < 2) fail("refine", "must be >= 2");

  if (j.contains("plans")) {
    const auto& p = j["plans"];
    if (p.contains("ellipticity")) {
      const auto& e = p["ellipticity"];
      cfg.ellipticity.time_samples = integer_or(e, "time_samples", "plans.ellipticity", 512);
      cfg.ellipticity.sphere_samples = integer_or(e, "sphere_samples", "plans.ellipticity", 64);
    }
    if (p.contains("sector")) {
      const auto& e = p["sector"];
      const std::string ep = "plans.sector";
      cfg.sector.rays = integer_or(e, "rays", ep, cfg.sector.rays);
      cfg.sector.moduli_per_decade = integer_or(e, "moduli_per_decade", ep, cfg.sector.moduli_per_decade);
      cfg.sector.min_modulus = number_or(e, "min_modulus", ep, cfg.sector.min_modulus);
      cfg.sector.max_modulus = number_or(e, "max_modulus", ep, cfg.sector.max_modulus);
      cfg.sector.time_samples = integer_or(e, "time_samples", ep, cfg.sector.time_samples);
      cfg.sector.cap = number_or(e, "cap", ep, cfg.sector.cap);
    }
    if (p.contains("kato")) {
      const auto& e = p["kato"];
      const std::string ep = "plans.kato";
      cfg.kato.kmax = integer_or(e, "kmax", ep, cfg.kato.kmax);
      cfg.kato.random_partitions = integer_or(e, "random_partitions", ep, cfg.kato.random_partitions);
      cfg.kato.time_samples = integer_or(e, "time_samples", ep, cfg.kato.time_samples);
      if (e.contains("lambda_offsets")) {
        cfg.kato.lambda_offsets = number_array(e["lambda_offsets"], join(ep, "lambda_offsets"));
        for (double o : cfg.kato.lambda_offsets)
          if (!(o > 0.0)) fail(join(ep, "lambda_offsets"), "offsets must be > 0 (lambda > omega)");
      }
    }
    if (p.contains("pairs")) {
      const auto& e = p["pairs"];
      const std::string ep = "plans.pairs";
      cfg.pairs.base_times = integer_or(e, "base_times", ep, cfg.pairs.base_times);
      cfg.pairs.all_pairs_times = integer_or(e, "all_pairs_times", ep, cfg.pairs.all_pairs_times);
      cfg.pairs.random_pairs = integer_or(e, "random_pairs", ep, cfg.pairs.random_pairs);
      if (e.contains("separations")) cfg.pairs.separations = number_array(e["separations"], join(ep, "separations"));
      for (double d : cfg.pairs.separations)
        if (!(d > 0.0)) fail(join(ep, "separations"), "must be > 0");
    }
    cfg.equivalence_samples = integer_or(p, "equivalence_samples", "plans", cfg.equivalence_samples);
  }
  if (j.contains("engine")) {
    const auto& e = j["engine"];
    const auto m = string_or(e, "method", "engine", "exact");
    if (m == "exact") {
      cfg.method = ExactQuadrature{integer_or(e, "nodes_per_panel", "engine", 16), number_or(e, "panel_width", "engine", 0.25)};
    } else if (m == "product") {
      const auto rule = string_or(e, "rule", "engine", "left");
      if (rule != "left" && rule != "midpoint") fail("engine.rule", "expected left or midpoint");
      cfg.method = ProductFormula{integer_or(e, "steps", "engine", 64),
                                  rule == "left" ? ProductRule::left_endpoint : ProductRule::midpoint};
    } else {
      fail("engine.method", "expected exact or product");
    }
  }
  if (j.contains("test_vectors")) {
    const auto& e = j["test_vectors"];
    cfg.vectors.count = integer_or(e, "count", "test_vectors", cfg.vectors.count);
    cfg.vectors.kmax = integer_or(e, "kmax", "test_vectors", cfg.vectors.kmax);
    cfg.vectors.seed = static_cast<std::uint64_t>(integer_or(e, "seed", "test_vectors", 7));
  }
  if (j.contains("evolve")) {
    const auto& e = j["evolve"];
    cfg.evolve.s = number_or(e, "s", "evolve", 0.0);
    cfg.evolve.t = number_or(e, "t", "evolve", cfg.symbol->horizon());
    cfg.evolve.initial_file = string_or(e, "initial", "evolve", "");
    if (e.contains("product_steps")) {
      cfg.evolve.product_steps.clear();
      for (double v : number_array(e["product_steps"], "evolve.product_steps"))
        cfg.evolve.product_steps.push_back(static_cast<int>(v));
    }
    if (e.contains("derivative_steps"))
      cfg.evolve.derivative_steps = number_array(e["derivative_steps"], "evolve.derivative_steps");
  } else {
    cfg.evolve.t = std::min(1.0, cfg.symbol->horizon());
  }
  if (j.contains("perturbation")) cfg.perturbation = parse_perturbation(j["perturbation"], "perturbation");
  if (j.contains("solver")) {
    const auto& e = j["solver"];
    cfg.solver.steps = integer_or(e, "steps", "solver", cfg.solver.steps);
    cfg.solver.tolerance = number_or(e, "tolerance", "solver", cfg.solver.tolerance);
    cfg.solver.max_sweeps = integer_or(e, "max_sweeps", "solver", cfg.solver.max_sweeps);
    if (cfg.solver.steps < 1) fail("solver.steps", "must be >= 1");
    if (!(cfg.solver.tolerance > 0.0)) fail("solver.tolerance", "must be > 0");
  }
  if (j.contains("perturb")) {
    const auto& e = j["perturb"];
    cfg.perturb.s = number_or(e, "s", "perturb", 0.0);
    cfg.perturb.t = number_or(e, "t", "perturb", std::min(1.0, cfg.symbol->horizon()));
    cfg.perturb.r = number_or(e, "r", "perturb", cfg.perturb.s + 0.37 * (cfg.perturb.t - cfg.perturb.s));
    cfg.perturb.indicator_width = number_or(e, "indicator_width", "perturb", 1.0);
    if (e.contains("step_ladder")) {
      cfg.perturb.step_ladder.clear();
      for (double v : number_array(e["step_ladder"], "perturb.step_ladder"))
        cfg.perturb.step_ladder.push_back(static_cast<int>(v));
    }
    if (e.contains("separations")) cfg.perturb.separations = number_array(e["separations"], "perturb.separations");
  }
  if (j.contains("favard") && j["favard"].contains("times"))
    cfg.favard.times = config::number_array(j["favard"]["times"], "favard.times");
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_run_config(ss.str(), path.string());
  cfg.source = path;
  return cfg;
}

}  // namespace evofam
