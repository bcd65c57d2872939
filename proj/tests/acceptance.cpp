// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evofam/config.hpp"
#include "evofam/pipelines.hpp"
#include "evofam/report.hpp"

namespace fs = std::filesystem;
using evofam::RunReport;

namespace {

const fs::path configs = EVOFAM_CONFIGS;
const fs::path scratch = fs::temp_directory_path() / "evofam_acceptance";

std::map<std::string, RunReport> cache;

const RunReport& run(const std::string& command, const std::string& config) {
  const std::string key = command + ":" + config;
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const auto cfg = evofam::load_run_config(configs / config);
  const auto out = scratch / (command + "_" + fs::path(config).stem().string());
  fs::create_directories(out);
  return cache.emplace(key, evofam::run_subcommand(command, cfg, evofam::RunOptions{out, 2})).first->second;
}

std::string describe(const evofam::Verdict& v) {
  std::ostringstream os;
  os << v.name << '=' << v.value;
  if (!std::isnan(v.bound)) os << " (bound " << v.bound << ')';
  return os.str();
}

struct Check {
  bool ok = true;
  std::vector<std::string> parts;

  void require(bool cond, const std::string& what) {
    ok = ok && cond;
    parts.push_back(what + (cond ? "" : " [x]"));
  }
  void verdict(const RunReport& r, const std::string& name) {
    if (!r.has(name)) return require(false, name + " missing");
    const auto& v = r.at(name);
    require(v.pass, describe(v));
  }
  void within(const RunReport& r, const std::string& name, double lo, double hi) {
    if (!r.has(name)) return require(false, name + " missing");
    const auto& v = r.at(name);
    std::ostringstream os;
    os << v.name << '=' << v.value << " in [" << lo << ", " << hi << ']';
    require(v.pass && v.value >= lo && v.value <= hi, os.str());
  }
  std::string text() const {
    std::string s;
    for (const auto& p : parts) s += (s.empty() ? "" : "; ") + p;
    return s;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Check cocycle() {
  Check c;
  c.verdict(run("evolve", "td1.json"), "cocycle");
  c.require(run("evolve", "td1.json").at("cocycle").samples >= 100, "100 triples");
  return c;
}

Check derivatives() {
  Check c;
  const auto& r = run("convergence", "td1.json");
  c.within(r, "derivative_t_order", 1.7, 2.3);
  c.within(r, "derivative_s_order", 1.7, 2.3);
  return c;
}

Check product_formula() {
  Check c;
  const auto& r = run("convergence", "td1.json");
  c.within(r, "product_left_order", 0.8, 1.2);
  c.within(r, "product_midpoint_order", 1.7, 2.3);
  return c;
}

Check assumption_suite() {
  Check c;
  const auto& r = run("check", "td1.json");
  c.within(r, "a1", 1.0, (std::sqrt(2.0) + 1.0) * 1.05);
  c.within(r, "a2", 2.0 * 0.98, 2.0 * 1.02);
  c.within(r, "a3", 0.0, 1.05);
  c.verdict(r, "kato");
  const auto kato = nlohmann::json::parse(slurp(scratch / "check_td1" / "assumptions.json"))["kato"];
  c.require(std::abs(kato["value"].get<double>() - 1.0) < 1e-9, "kato M=1");
  c.require(std::abs(kato["omega"].get<double>() + 1.0) < 1e-9, "kato omega=-1");
  c.require(kato["kmax"].get<int>() >= 8, "k up to " + std::to_string(kato["kmax"].get<int>()));
  c.verdict(r, "resolvent_chain");
  const auto& ne = run("check", "nonelliptic.json");
  c.require(ne.has("a1") && !ne.at("a1").pass && !ne.at("a1").witness.is_null(),
            "nonelliptic a1 fails with witness " + (ne.has("a1") ? ne.at("a1").witness.dump() : std::string("-")));
  return c;
}

Check refinement() {
  Check c;
  const std::vector<std::pair<std::string, std::string>> runs{
      {"check", "td1.json"},         {"evolve", "td1.json"},
      {"convergence", "td1.json"},   {"favard", "td1.json"},
      {"favard", "h1.json"},         {"perturb", "perturb_multiplier.json"},
      {"perturb", "perturb_smoothing.json"}, {"perturb", "perturb_mollifier.json"},
      {"transport", "transport.json"}, {"convergence", "transport.json"}};
  std::size_t counted = 0;
  double worst = 0.0;
  std::string worst_name = "-";
  for (const auto& [cmd, cfg] : runs) {
    for (const auto& v : run(cmd, cfg).verdicts) {
      if (std::isnan(v.refinement_delta)) continue;  // constants fixed by construction
      ++counted;
      if (!(v.refinement_delta <= worst)) {
        worst = v.refinement_delta;
        worst_name = cmd + "/" + fs::path(cfg).stem().string() + "/" + v.name;
      }
    }
  }
  std::ostringstream os;
  os << counted << " constants, worst delta " << worst << " at " << worst_name;
  c.require(counted > 0 && worst <= 0.05, os.str());
  return c;
}

Check favard() {
  Check c;
  for (const char* cfg : {"h1.json", "td1.json"}) {
    c.verdict(run("favard", cfg), "favard_f1");
    c.verdict(run("favard", cfg), "favard_f0");
  }
  return c;
}

Check volterra() {
  Check c;
  const auto& r = run("perturb", "perturb_multiplier.json");
  c.verdict(r, "volterra_oracle");
  c.within(r, "volterra_order", 1.7, 2.3);
  c.verdict(r, "duhamel_residual");
  return c;
}

Check perturbed_axioms() {
  Check c;
  const auto& s = run("perturb", "perturb_smoothing.json");
  c.verdict(s, "cocycle_order");
  c.verdict(s, "growth_bound");
  c.verdict(s, "envelope");
  const auto& m = run("perturb", "perturb_multiplier.json");
  c.verdict(m, "cocycle");
  c.verdict(m, "volterra_oracle");
  c.verdict(m, "growth_bound");
  return c;
}

Check mollifier() {
  Check c;
  const auto& r = run("perturb", "perturb_mollifier.json");
  c.within(r, "modulus_l2", 0.4, 0.6);
  c.within(r, "modulus_x_minus1", 0.9, 1.1);
  return c;
}

Check laplace() {
  Check c;
  c.verdict(run("favard", "h1.json"), "laplace_residual");
  return c;
}

Check transport() {
  Check c;
  c.verdict(run("convergence", "transport.json"), "transport_order");
  const auto& t = run("transport", "transport.json");
  c.verdict(t, "transport_cocycle");
  c.verdict(t, "decay");
  c.verdict(t, "positivity");
  c.verdict(t, "mass_balance");
  return c;
}

Check determinism() {
  Check c;
  for (const char* cmd : {"check", "evolve"}) {
    std::string reports[2], assumptions[2];
    for (int k = 0; k < 2; ++k) {
      const auto out = scratch / ("cli_" + std::string(cmd) + std::to_string(k));
      fs::remove_all(out);
      const std::string line = std::string(EVOFAM_CLI) + " " + cmd + " --config " + (configs / "td1.json").string() +
                               " --out " + out.string() + " --seed 7 --stable > /dev/null";
      const int status = std::system(line.c_str());
      c.require(status == 0, std::string(cmd) + " run " + std::to_string(k) + " exit " + std::to_string(status));
      reports[k] = slurp(out / "report.json");
      if (fs::exists(out / "assumptions.json")) assumptions[k] = slurp(out / "assumptions.json");
    }
    c.require(!reports[0].empty() && reports[0] == reports[1], std::string(cmd) + " report.json identical");
    if (std::string(cmd) == "check")
      c.require(!assumptions[0].empty() && assumptions[0] == assumptions[1], "assumptions.json identical");
  }
  return c;
}

}  // namespace

int main() {
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
      {"exact-propagator cocycle", cocycle},
      {"derivative orders", derivatives},
      {"product-formula orders", product_formula},
      {"assumption suite", assumption_suite},
      {"refinement stability", refinement},
      {"Favard identities", favard},
      {"variation-of-constants oracle", volterra},
      {"perturbed family axioms", perturbed_axioms},
      {"mollifier dichotomy", mollifier},
      {"Laplace-transform resolvent", laplace},
      {"upwind transport", transport},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.require(false, std::string("error: ") + e.what());
    }
    failures += c.ok ? 0 : 1;
    std::cout << (c.ok ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " | " << c.text()
              << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria pass" << std::endl;
  return failures == 0 ? 0 : 1;
}
