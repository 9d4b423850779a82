#pragma once
// Field dump format and small serialization helpers.
//
// A dumped field is one raw binary file per component -- little-endian
// float64 samples in row-major point order -- plus a JSON sidecar naming
// the grid shape, degree, and the 1-based multi-index of each component.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eclab/grid.hpp"

namespace eclab {

// Round to 12 significant digits; applied to every float written into a
// summary so identical runs serialize byte-identically.
inline double round_sig12(double v) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::strtod(buf, nullptr);
}

namespace detail {

inline void write_doubles_le(std::ofstream& os, const std::vector<double>& data) {
  static_assert(sizeof(double) == 8);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data.data()),
             std::streamsize(data.size() * sizeof(double)));
  } else {
    for (double v : data) {
      std::uint64_t u;
      std::memcpy(&u, &v, 8);
      char b[8];
      for (int i = 0; i < 8; ++i) b[i] = char((u >> (8 * i)) & 0xff);
      os.write(b, 8);
    }
  }
}

inline void read_doubles_le(std::ifstream& is, std::vector<double>& data) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size() * sizeof(double)));
  } else {
    for (double& v : data) {
      char b[8];
      is.read(b, 8);
      std::uint64_t u = 0;
      for (int i = 0; i < 8; ++i) u |= std::uint64_t(std::uint8_t(b[i])) << (8 * i);
      std::memcpy(&v, &u, 8);
    }
  }
  if (!is) throw std::runtime_error("field dump: component file truncated");
}

}  // namespace detail

// Writes <name>_c<k>.f64 per component and <name>.json; returns sidecar path.
inline std::filesystem::path dump_field(const FormField& f, const std::filesystem::path& dir,
                                        const std::string& name) {
  std::filesystem::create_directories(dir);
  nlohmann::json side;
  side["format"] = "eclab-field-v1";
  side["n"] = f.grid.n;
  side["N"] = f.grid.N;
  side["degree"] = f.degree;
  side["endianness"] = "little";
  side["order"] = "row-major";
  side["components"] = nlohmann::json::array();
  const auto table = f.indices();
  for (std::size_t c = 0; c < f.comp.size(); ++c) {
    const std::string fname = name + "_c" + std::to_string(c) + ".f64";
    std::ofstream os(dir / fname, std::ios::binary);
    if (!os) throw std::runtime_error("field dump: cannot open " + (dir / fname).string());
    detail::write_doubles_le(os, f.comp[c]);
    nlohmann::json entry;
    entry["file"] = fname;
    entry["multi_index"] = nlohmann::json::array();
    for (int axis : table[c]) entry["multi_index"].push_back(axis + 1);  // 1-based in files
    side["components"].push_back(entry);
  }
  const auto sidecar = dir / (name + ".json");
  std::ofstream js(sidecar);
  js << side.dump(2) << "\n";
  return sidecar;
}

inline FormField load_field(const std::filesystem::path& sidecar) {
  std::ifstream js(sidecar);
  if (!js) throw std::runtime_error("field load: cannot open " + sidecar.string());
  nlohmann::json side = nlohmann::json::parse(js);
  if (side.value("format", "") != "eclab-field-v1")
    throw std::runtime_error("field load: unrecognized format tag");
  if (side.value("endianness", "") != "little")
    throw std::runtime_error("field load: unsupported endianness");
  PeriodicGrid g(side.at("n").get<int>(), side.at("N").get<int>());
  FormField f(g, side.at("degree").get<int>());
  const auto table = f.indices();
  const auto& comps = side.at("components");
  if (comps.size() != f.comp.size())
    throw std::runtime_error("field load: component count mismatch");
  for (std::size_t c = 0; c < f.comp.size(); ++c) {
    MultiIndex mi;
    for (const auto& v : comps[std::size_t(c)].at("multi_index")) mi.push_back(v.get<int>() - 1);
    if (mi != table[c]) throw std::runtime_error("field load: component multi-index out of order");
    std::ifstream is(sidecar.parent_path() / comps[std::size_t(c)].at("file").get<std::string>(),
                     std::ios::binary);
    if (!is) throw std::runtime_error("field load: missing component file");
    detail::read_doubles_le(is, f.comp[c]);
  }
  return f;
}

}  // namespace eclab
