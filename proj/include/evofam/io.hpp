#pragma once

// Grid-function files: <stem>.bin holds little-endian f64 pairs (re, im) in
// flat index order; <stem>.json is the sidecar {dim, n, box, representation}.

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "evofam/errors.hpp"
#include "evofam/spectral.hpp"

namespace evofam {

namespace detail {

inline std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
  return r;
}

}  // namespace detail

inline void write_grid_function(const std::filesystem::path& stem, const GridFunction& f) {
  std::ofstream bin(stem.string() + ".bin", std::ios::binary);
  if (!bin) throw ConfigError("cannot write " + stem.string() + ".bin");
  for (const auto& v : f.values()) {
    for (double x : {v.real(), v.imag()}) {
      const auto u = detail::to_le(std::bit_cast<std::uint64_t>(x));
      bin.write(reinterpret_cast<const char*>(&u), sizeof u);
    }
  }
  nlohmann::json side{{"dim", f.grid().dim()},
                      {"n", f.grid().n()},
                      {"box", f.grid().box()},
                      {"representation", f.representation() == Representation::physical ? "physical" : "frequency"}};
  std::ofstream js(stem.string() + ".json");
  if (!js) throw ConfigError("cannot write " + stem.string() + ".json");
  js << side.dump(2) << '\n';
}

inline GridFunction read_grid_function(const std::filesystem::path& stem) {
  std::ifstream js(stem.string() + ".json");
  if (!js) throw ConfigError("cannot read " + stem.string() + ".json");
  nlohmann::json side;
  try {
    js >> side;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(stem.string() + ".json: " + e.what());
  }
  for (const char* key : {"dim", "n", "box", "representation"})
    if (!side.contains(key)) throw ConfigError(stem.string() + ".json: missing field '" + key + "'");
  auto grid = std::make_shared<const Grid>(side["dim"].get<int>(), side["n"].get<int>(), side["box"].get<double>());
  const auto rep_name = side["representation"].get<std::string>();
  if (rep_name != "physical" && rep_name != "frequency")
    throw ConfigError(stem.string() + ".json: representation must be 'physical' or 'frequency'");
  std::ifstream bin(stem.string() + ".bin", std::ios::binary);
  if (!bin) throw ConfigError("cannot read " + stem.string() + ".bin");
  std::vector<complex> v(grid->size());
  for (auto& z : v) {
    std::uint64_t u[2];
    if (!bin.read(reinterpret_cast<char*>(u), sizeof u)) throw ConfigError(stem.string() + ".bin: too short");
    z = {std::bit_cast<double>(detail::to_le(u[0])), std::bit_cast<double>(detail::to_le(u[1]))};
  }
  if (bin.peek() != std::char_traits<char>::eof()) throw ConfigError(stem.string() + ".bin: trailing data");
  return {grid, rep_name == "physical" ? Representation::physical : Representation::frequency, std::move(v)};
}

/// x, re, im along axis 0 with the other indices fixed at N/2 (the origin).
inline void write_slice_csv(const std::filesystem::path& path, const GridFunction& f) {
  const auto phys = f.as_physical();
  const Grid& g = phys.grid();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "x,re,im\n" << std::setprecision(17);
  std::size_t stride = 1;
  for (int a = 1; a < g.dim(); ++a) stride *= static_cast<std::size_t>(g.n());
  std::size_t offset = 0;
  for (int a = 1; a < g.dim(); ++a) offset = offset * g.n() + static_cast<std::size_t>(g.n() / 2);
  for (int j = 0; j < g.n(); ++j) {
    const std::size_t flat = static_cast<std::size_t>(j) * stride + offset;
    const auto z = phys.values()[flat];
    out << g.point(flat)[0] << ',' << z.real() << ',' << z.imag() << '\n';
  }
}

}  // namespace evofam
