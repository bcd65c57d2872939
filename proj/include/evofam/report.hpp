#pragma once

// Verdicts and the report.json layout. Every verdict carries the measured
// constant, the size of its sample plan and the relative change of the
// constant when the plan density is multiplied by the refinement factor.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "evofam/assumptions.hpp"
#include "evofam/errors.hpp"
#include "evofam/numerics.hpp"

namespace evofam {

struct Verdict {
  Verdict() = default;
  Verdict(std::string n, double v, double b = std::numeric_limits<double>::quiet_NaN())
      : name(std::move(n)), value(v), bound(b) {}

  std::string name;
  double value = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  std::size_t samples = 0;
  double refinement_delta = std::numeric_limits<double>::quiet_NaN();
  nlohmann::json witness;  // null when there is nothing to point at
  std::string note;
};

struct RunReport {
  std::string command;
  std::vector<Verdict> verdicts;
  nlohmann::json details = nlohmann::json::object();
  std::vector<std::pair<std::string, double>> timings;  // seconds

  bool pass() const {
    for (const auto& v : verdicts)
      if (!v.pass) return false;
    return !verdicts.empty();
  }

  const Verdict& at(const std::string& name) const {
    for (const auto& v : verdicts)
      if (v.name == name) return v;
    throw DomainError("report: no verdict named " + name);
  }

  bool has(const std::string& name) const {
    for (const auto& v : verdicts)
      if (v.name == name) return true;
    return false;
  }
};

/// |refined - base| / |base|; 0 when both vanish, +inf when only base does.
inline double relative_delta(double base, double refined) {
  if (base == refined) return 0.0;
  if (!std::isfinite(base) || !std::isfinite(refined)) return std::numeric_limits<double>::infinity();
  if (base == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(refined - base) / std::abs(base);
}

inline nlohmann::json witness_json(const Witness& w) {
  return {{"t", w.t}, {"s", w.s}, {"lambda", {w.lambda.real(), w.lambda.imag()}}, {"xi", w.xi}};
}

/// Non-finite doubles become the strings "inf", "-inf", "nan" so they survive a round trip.
inline nlohmann::json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline nlohmann::json verdict_json(const Verdict& v) {
  nlohmann::json j{{"value", number_json(v.value)},
                   {"pass", v.pass},
                   {"samples", v.samples},
                   {"refinement_delta", number_json(v.refinement_delta)}};
  if (!std::isnan(v.bound)) j["bound"] = number_json(v.bound);
  if (!v.witness.is_null()) j["witness"] = v.witness;
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct ReportStamp {
  std::uint64_t seed = 0;
  std::string config_text;
  std::string config_name;
  int refine = 2;
  bool stable = false;
};

inline nlohmann::json report_json(const RunReport& r, const ReportStamp& stamp) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["command"] = r.command;
  j["seed"] = stamp.seed;
  j["refine"] = stamp.refine;
  j["config"] = {{"name", stamp.config_name}, {"fnv1a", hex64(fnv1a(stamp.config_text))}};
  j["pass"] = r.pass();
  nlohmann::json verdicts = nlohmann::json::object();
  for (const auto& v : r.verdicts) verdicts[v.name] = verdict_json(v);
  j["verdicts"] = verdicts;
  j["details"] = r.details;
  if (!stamp.stable) {
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [k, v] : r.timings) t[k] = v;
    j["timings"] = t;
    j["environment"] = {{"compiler", __VERSION__},
                        {"cplusplus", static_cast<long>(__cplusplus)},
                        {"unix_time", std::chrono::duration_cast<std::chrono::seconds>(
                                          std::chrono::system_clock::now().time_since_epoch())
                                          .count()}};
  }
  return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Runs f and appends its wall-clock duration to the report.
template <class F>
auto timed(RunReport& r, const std::string& label, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  if constexpr (std::is_void_v<decltype(f())>) {
    f();
    r.timings.emplace_back(label, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  } else {
    auto out = f();
    r.timings.emplace_back(label, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return out;
  }
}

}  // namespace evofam
