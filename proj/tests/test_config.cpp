#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "evofam/config.hpp"
#include "evofam/io.hpp"
#include "evofam/pipelines.hpp"
#include "evofam/report.hpp"
#include "fixtures.hpp"

using namespace evofam;
namespace fs = std::filesystem;

namespace {

const std::string small_h1 = R"({
  "schema_version": 1, "dim": 1, "order": 2, "horizon": 1.0,
  "coefficients": [{"alpha": [2], "const": -1.0}, {"alpha": [0], "const": 1.0}],
  "grid": {"n": 64, "box": 6.283185307179586},
  "test_vectors": {"count": 2, "kmax": 4, "seed": 3},
  "evolve": {"s": 0.0, "t": 0.5}
})";

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("evofam_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Config, ParsesSymbolAndDefaults) {
  const auto cfg = parse_run_config(small_h1);
  ASSERT_TRUE(cfg.symbol.has_value());
  EXPECT_EQ(cfg.symbol->dim(), 1);
  EXPECT_EQ(cfg.grid.n, 64);
  EXPECT_EQ(cfg.vectors.count, 2);
  EXPECT_DOUBLE_EQ(cfg.evolve.t, 0.5);
  const std::vector<double> xi{2.0};
  EXPECT_NEAR(std::abs(cfg.symbol->eval(0.3, xi) - 5.0), 0.0, 1e-14);
  EXPECT_FALSE(cfg.transport.has_value());
}

TEST(Config, CoefficientForms) {
  const auto c = parse_coefficient(
      nlohmann::json::parse(R"({"const": [1, 2], "poly": [[1, 3, 0]], "trig": [[2, 1, 0, 0, 1]], "step": [[0.5, 4, 0]]})"),
      "c");
  EXPECT_EQ(c(0.0), complex(2.0, 2.0));
  EXPECT_NEAR(std::abs(c(1.0) - complex(1.0 + 3.0 + std::cos(2.0) + 4.0, 2.0 + std::sin(2.0))), 0.0, 1e-14);
  EXPECT_EQ(parse_coefficient(nlohmann::json(2.5), "c")(0.7), complex(2.5));
}

TEST(Config, MissingHorizonNamesTheField) {
  EXPECT_NE(error_of(R"({"dim": 1, "order": 2, "coefficients": [{"alpha": [2], "const": -1}]})").find("'horizon'"),
            std::string::npos);
}

TEST(Config, FieldPathsInMessages) {
  const auto e = error_of(R"({"dim": 1, "order": 2, "horizon": 1,
    "coefficients": [{"alpha": [2], "const": "x"}]})");
  EXPECT_NE(e.find("coefficients[0]"), std::string::npos) << e;
  const auto k = error_of(R"({"dim": 1, "order": 2, "horizon": 1,
    "coefficients": [{"alpha": [2], "const": -1}], "perturbation": {"kind": "sideways"}})");
  EXPECT_NE(k.find("perturbation.kind"), std::string::npos) << k;
  EXPECT_NE(error_of(R"({"schema_version": 2})").find("schema_version"), std::string::npos);
  EXPECT_NE(error_of(R"([1, 2])").find("object"), std::string::npos);
}

TEST(Config, MalformedJsonReportsLineAndColumn) {
  const auto e = error_of("{\n  \"dim\": 1,,\n}");
  EXPECT_NE(e.find("cfg.json:2:"), std::string::npos) << e;
  EXPECT_NE(e.find("malformed JSON"), std::string::npos);
}

TEST(Config, TransportDetection) {
  const auto cfg = parse_run_config(
      R"({"T": 1, "xmax": 8, "cells": 100, "g": 1, "mu": 1, "initial": {"kind": "gaussian", "center": 2, "width": 0.3}})");
  ASSERT_TRUE(cfg.transport.has_value());
  EXPECT_FALSE(cfg.symbol.has_value());
  EXPECT_EQ(cfg.transport->cells, 100);
  EXPECT_THROW(run_subcommand("check", cfg, RunOptions{scratch("detect"), 2}), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
  for (const auto& entry : fs::directory_iterator(EVOFAM_CONFIGS)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_run_config(entry.path())) << entry.path();
  }
  EXPECT_THROW(load_run_config("/nonexistent/evofam.json"), ConfigError);
}

TEST(GridFunctionIo, RoundTrip) {
  const auto dir = scratch("io");
  const auto g = fixtures::grid(32, 2.0, 2);
  auto f = band_limited_test_set(g, 1, 3, 5)[0];
  write_grid_function(dir / "f", f);
  const auto back = read_grid_function(dir / "f");
  EXPECT_TRUE(back.grid() == f.grid());
  EXPECT_EQ(back.representation(), Representation::frequency);
  for (std::size_t j = 0; j < f.size(); ++j) EXPECT_EQ(back.values()[j], f.values()[j]);
}

TEST(GridFunctionIo, RejectsTrailingAndShortData) {
  const auto dir = scratch("io_bad");
  const auto g = fixtures::grid(16);
  write_grid_function(dir / "f", fixtures::mode(g, 1));
  {
    std::ofstream extra(dir / "f.bin", std::ios::binary | std::ios::app);
    extra << 'x';
  }
  EXPECT_THROW(read_grid_function(dir / "f"), ConfigError);
  fs::resize_file(dir / "f.bin", 16);
  EXPECT_THROW(read_grid_function(dir / "f"), ConfigError);
}

TEST(Report, NumbersAndVerdictKeys) {
  EXPECT_EQ(number_json(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(number_json(std::nan("")), "nan");
  EXPECT_EQ(number_json(1.5), 1.5);
  EXPECT_NEAR(relative_delta(2.0, 2.5), 0.25, 1e-15);
  EXPECT_TRUE(std::isinf(relative_delta(0.0, 1.0)));
  EXPECT_EQ(relative_delta(0.0, 0.0), 0.0);
  Verdict v("x", 1.0, 2.0);
  v.pass = true;
  const auto j = verdict_json(v);
  for (const char* key : {"value", "bound", "pass", "samples", "refinement_delta"}) EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Report, StableReportsAreByteIdentical) {
  const auto cfg = parse_run_config(small_h1, "h1.json");
  std::string dumps[2];
  for (int k = 0; k < 2; ++k) {
    const auto dir = scratch("stable" + std::to_string(k));
    const auto r = run_subcommand("evolve", cfg, RunOptions{dir, 2});
    ASSERT_TRUE(r.pass());
    ReportStamp stamp{3, cfg.text, "h1.json", 2, true};
    dumps[k] = report_json(r, stamp).dump(2);
    const auto j = nlohmann::json::parse(dumps[k]);
    EXPECT_FALSE(j.contains("timings"));
    for (const auto& [name, verdict] : j["verdicts"].items())
      for (const char* key : {"value", "pass", "samples", "refinement_delta"})
        EXPECT_TRUE(verdict.contains(key)) << name << ' ' << key;
    EXPECT_TRUE(fs::exists(dir / "trajectory.csv"));
  }
  EXPECT_EQ(dumps[0], dumps[1]);
  ReportStamp loud{3, cfg.text, "h1.json", 2, false};
  EXPECT_TRUE(report_json(run_subcommand("evolve", cfg, RunOptions{scratch("loud"), 2}), loud).contains("timings"));
}

TEST(Report, SeedDerivation) {
  auto cfg = parse_run_config(small_h1);
  apply_seed(cfg, 5);
  EXPECT_EQ(cfg.vectors.seed, 5u);
  EXPECT_EQ(cfg.pairs.seed, 11u);
  EXPECT_EQ(cfg.kato.seed, 12u);
}

TEST(Report, UnknownSubcommand) {
  const auto cfg = parse_run_config(small_h1);
  EXPECT_THROW(run_subcommand("dance", cfg, RunOptions{scratch("unknown"), 2}), ConfigError);
}
