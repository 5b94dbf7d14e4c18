// File formats: HSC cubes, label CSVs, PGM shadow masks, ratio curves,
// dataset splits and probability rasters.
//
// HSC cube: `<name>.hsc.json` sidecar {height, width, bands, wavelengths_nm,
// dtype: "f32le", order: "bsq", classes?} plus `<name>.hsc.bin` holding
// H*W*D little-endian float32 values in band-major order.
#pragma once

#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectro/core.hpp"

namespace spectro::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64(const unsigned char* p) {
  return static_cast<std::uint64_t>(get_u32(p)) | (static_cast<std::uint64_t>(get_u32(p + 4)) << 32);
}

inline float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

inline json parse_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

/// Shortest round-trip decimal form of a double.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Strip a known multi-part suffix (".hsc.json", ".hsc.bin", ...) from a path.
inline fs::path stem_of(const fs::path& p, const std::string& kind) {
  const std::string s = p.string();
  for (const std::string& suf : {"." + kind + ".json", "." + kind + ".bin"})
    if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0)
      return fs::path(s.substr(0, s.size() - suf.size()));
  return p;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    while (!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) cur.pop_back();
    while (!cur.empty() && cur.front() == ' ') cur.erase(cur.begin());
    out.push_back(cur);
  }
  return out;
}

}  // namespace detail

inline fs::path cube_json_path(const fs::path& p) { return fs::path(detail::stem_of(p, "hsc").string() + ".hsc.json"); }
inline fs::path cube_bin_path(const fs::path& p) { return fs::path(detail::stem_of(p, "hsc").string() + ".hsc.bin"); }

/// Write `cube` as `<path>.hsc.json` + `<path>.hsc.bin`. Extra sidecar fields are merged in.
inline void save_cube(const HyperCube& cube, const fs::path& path, const json& extra = json::object()) {
  if (cube.height() == 0 || cube.width() == 0 || cube.bands() == 0) throw Error("refusing to save an empty cube");
  json meta = extra.is_object() ? extra : json::object();
  meta["height"] = cube.height();
  meta["width"] = cube.width();
  meta["bands"] = cube.bands();
  meta["wavelengths_nm"] = cube.grid().nm();
  meta["dtype"] = "f32le";
  meta["order"] = "bsq";

  std::string payload;
  payload.reserve(cube.data().size() * 4);
  for (std::size_t b = 0; b < cube.bands(); ++b)
    for (std::size_t r = 0; r < cube.height(); ++r)
      for (std::size_t c = 0; c < cube.width(); ++c) detail::put_f32(payload, cube.at(r, c, b));
  detail::write_file(cube_json_path(path), meta.dump(2) + "\n");
  detail::write_file(cube_bin_path(path), payload);
}

inline json load_cube_meta(const fs::path& path) { return detail::parse_json(cube_json_path(path)); }

inline HyperCube load_cube(const fs::path& path) {
  const json meta = load_cube_meta(path);
  std::size_t h = 0, w = 0, d = 0;
  std::vector<double> nm;
  try {
    h = meta.at("height").get<std::size_t>();
    w = meta.at("width").get<std::size_t>();
    d = meta.at("bands").get<std::size_t>();
    nm = meta.at("wavelengths_nm").get<std::vector<double>>();
    if (meta.value("dtype", "f32le") != "f32le") throw Error("unsupported dtype");
    if (meta.value("order", "bsq") != "bsq") throw Error("unsupported interleave order");
  } catch (const json::exception& e) {
    throw Error("malformed cube header " + cube_json_path(path).string() + ": " + e.what());
  }
  if (nm.size() != d) throw Error("header declares " + std::to_string(d) + " bands but lists " +
                                  std::to_string(nm.size()) + " wavelengths");
  WavelengthGrid grid(std::move(nm));
  const std::string bytes = detail::read_file(cube_bin_path(path));
  const std::size_t expect = h * w * d * 4;
  if (bytes.size() != expect)
    throw Error("payload size mismatch: header implies " + std::to_string(expect) + " bytes, file has " +
                std::to_string(bytes.size()));
  std::vector<float> data(h * w * d);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t b = 0; b < d; ++b)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c, p += 4) data[(r * w + c) * d + b] = detail::get_f32(p);
  return HyperCube(h, w, std::move(grid), std::move(data));
}

// ---- labels -------------------------------------------------------------

inline void save_labels_csv(const std::vector<LabelEntry>& entries, const fs::path& path) {
  std::string out = "row,col,class_id\n";
  for (const auto& e : entries)
    out += std::to_string(e.row) + "," + std::to_string(e.col) + "," + std::to_string(e.class_id) + "\n";
  detail::write_file(path, out);
}

/// Reads `row,col,class_id` rows. Negative class ids (unassigned) are kept.
inline std::vector<LabelEntry> load_labels_csv(const fs::path& path) {
  std::istringstream in(detail::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error("empty label file " + path.string());
  std::vector<LabelEntry> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 3) throw Error(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    try {
      out.push_back({std::stoul(f[0]), std::stoul(f[1]), std::stoi(f[2])});
    } catch (const std::exception&) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

// ---- shadow mask (PGM P5, maxval 255, nonzero = shadow) -----------------

inline void save_mask_pgm(const std::vector<std::uint8_t>& mask, std::size_t height, std::size_t width,
                          const fs::path& path) {
  if (mask.size() != height * width) throw Error("mask size mismatch");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (auto m : mask) out.push_back(static_cast<char>(m ? 255 : 0));
  detail::write_file(path, out);
}

struct MaskImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> mask;  // 1 = shadow
};

inline MaskImage load_mask_pgm(const fs::path& path) {
  const std::string bytes = detail::read_file(path);
  std::size_t pos = 0;
  auto token = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (token() != "P5") throw Error("not a binary PGM: " + path.string());
  MaskImage m;
  try {
    m.width = std::stoul(token());
    m.height = std::stoul(token());
    if (std::stoul(token()) != 255) throw Error("PGM maxval must be 255");
  } catch (const std::invalid_argument&) {
    throw Error("malformed PGM header: " + path.string());
  }
  ++pos;  // single whitespace after maxval
  if (bytes.size() - pos != m.width * m.height) throw Error("PGM payload size mismatch: " + path.string());
  m.mask.resize(m.width * m.height);
  for (std::size_t i = 0; i < m.mask.size(); ++i) m.mask[i] = bytes[pos + i] != 0 ? 1 : 0;
  return m;
}

/// Labels CSV + class names from the cube sidecar + optional shadow mask.
inline LabelMap load_label_map(const fs::path& cube_path, const fs::path& labels_csv,
                               const fs::path& mask_pgm = {}) {
  const json meta = load_cube_meta(cube_path);
  if (!meta.contains("classes")) throw Error("cube sidecar has no `classes` field");
  auto names = meta.at("classes").get<std::vector<std::string>>();
  std::optional<std::vector<std::uint8_t>> mask;
  if (!mask_pgm.empty()) {
    auto m = load_mask_pgm(mask_pgm);
    if (m.height != meta.at("height").get<std::size_t>() || m.width != meta.at("width").get<std::size_t>())
      throw Error("shadow mask dimensions do not match cube");
    mask = std::move(m.mask);
  }
  return LabelMap(meta.at("height").get<std::size_t>(), meta.at("width").get<std::size_t>(), std::move(names),
                  load_labels_csv(labels_csv), std::move(mask));
}

// ---- ratio curves (CSV wavelength_nm,ratio) -----------------------------

struct RatioCurve {
  std::vector<double> wavelengths_nm;
  std::vector<double> values;
};

inline void save_ratio_csv(const std::vector<double>& nm, const std::vector<double>& values, const fs::path& path) {
  if (nm.size() != values.size()) throw Error("ratio curve length mismatch");
  std::string out = "wavelength_nm,ratio\n";
  for (std::size_t i = 0; i < nm.size(); ++i) out += detail::fmt_double(nm[i]) + "," + detail::fmt_double(values[i]) + "\n";
  detail::write_file(path, out);
}

inline RatioCurve load_ratio_csv(const fs::path& path) {
  std::istringstream in(detail::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error("empty ratio file " + path.string());
  RatioCurve rc;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 2) throw Error("ratio rows need 2 fields: " + path.string());
    rc.wavelengths_nm.push_back(std::stod(f[0]));
    rc.values.push_back(std::stod(f[1]));
  }
  return rc;
}

// ---- dataset splits ------------------------------------------------------
//
// `<name>.split.json` {bands, wavelengths_nm, classes, parts: {train|validation|test:
// {count, labels, coords}}} plus `<name>.split.bin`: float32 LE spectra, train rows
// first, then validation, then test.

inline fs::path split_json_path(const fs::path& p) { return fs::path(detail::stem_of(p, "split").string() + ".split.json"); }
inline fs::path split_bin_path(const fs::path& p) { return fs::path(detail::stem_of(p, "split").string() + ".split.bin"); }

inline void save_split(const DatasetSplit& split, const fs::path& path, const json& extra = json::object()) {
  json meta = extra.is_object() ? extra : json::object();
  meta["bands"] = split.grid.size();
  meta["wavelengths_nm"] = split.grid.nm();
  meta["classes"] = split.class_names;
  std::string payload;
  auto part = [&](const std::vector<Sample>& v) {
    json j;
    j["count"] = v.size();
    std::vector<int> labels;
    std::vector<std::array<std::size_t, 2>> coords;
    for (const auto& s : v) {
      if (s.spectrum.size() != split.grid.size()) throw Error("sample spectrum length mismatch");
      labels.push_back(s.label);
      coords.push_back({s.coord.row, s.coord.col});
      for (double x : s.spectrum) detail::put_f32(payload, static_cast<float>(x));
    }
    j["labels"] = labels;
    j["coords"] = coords;
    return j;
  };
  meta["parts"]["train"] = part(split.train);
  meta["parts"]["validation"] = part(split.validation);
  meta["parts"]["test"] = part(split.test);
  detail::write_file(split_json_path(path), meta.dump(1) + "\n");
  detail::write_file(split_bin_path(path), payload);
}

inline DatasetSplit load_split(const fs::path& path) {
  const json meta = detail::parse_json(split_json_path(path));
  DatasetSplit split;
  const std::string bytes = detail::read_file(split_bin_path(path));
  try {
    split.grid = WavelengthGrid(meta.at("wavelengths_nm").get<std::vector<double>>());
    split.class_names = meta.at("classes").get<std::vector<std::string>>();
    const std::size_t d = split.grid.size();
    std::size_t total = 0;
    for (const char* name : {"train", "validation", "test"}) total += meta.at("parts").at(name).at("count").get<std::size_t>();
    if (bytes.size() != total * d * 4) throw Error("split payload size mismatch");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    auto read_part = [&](const char* name, std::vector<Sample>& out) {
      const json& j = meta.at("parts").at(name);
      const auto n = j.at("count").get<std::size_t>();
      const auto labels = j.at("labels").get<std::vector<int>>();
      const auto coords = j.at("coords").get<std::vector<std::array<std::size_t, 2>>>();
      if (labels.size() != n || coords.size() != n) throw Error(std::string("split part ") + name + " is inconsistent");
      out.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        out[i].label = labels[i];
        out[i].coord = {coords[i][0], coords[i][1]};
        out[i].spectrum.resize(d);
        for (std::size_t k = 0; k < d; ++k, p += 4) out[i].spectrum[k] = detail::get_f32(p);
      }
    };
    read_part("train", split.train);
    read_part("validation", split.validation);
    read_part("test", split.test);
  } catch (const json::exception& e) {
    throw Error("malformed split header " + split_json_path(path).string() + ": " + e.what());
  }
  return split;
}

// ---- probability rasters -------------------------------------------------
//
// "SPCP" magic, u32 version (1), u32 height, u32 width, u32 n_classes, then
// H*W*K float32 LE probabilities, pixel-major.

struct ProbRaster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t n_classes = 0;
  std::vector<float> probs;

  std::span<const float> at(std::size_t row, std::size_t col) const {
    return {probs.data() + (row * width + col) * n_classes, n_classes};
  }
};

inline void save_probs(const ProbRaster& pr, const fs::path& path) {
  if (pr.probs.size() != pr.height * pr.width * pr.n_classes) throw Error("probability raster size mismatch");
  std::string out = "SPCP";
  detail::put_u32(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(pr.height));
  detail::put_u32(out, static_cast<std::uint32_t>(pr.width));
  detail::put_u32(out, static_cast<std::uint32_t>(pr.n_classes));
  for (float f : pr.probs) detail::put_f32(out, f);
  detail::write_file(path, out);
}

inline ProbRaster load_probs(const fs::path& path) {
  const std::string bytes = detail::read_file(path);
  if (bytes.size() < 20 || bytes.compare(0, 4, "SPCP") != 0) throw Error("not a probability raster: " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (detail::get_u32(p + 4) != 1) throw Error("unsupported probability raster version");
  ProbRaster pr;
  pr.height = detail::get_u32(p + 8);
  pr.width = detail::get_u32(p + 12);
  pr.n_classes = detail::get_u32(p + 16);
  const std::size_t n = pr.height * pr.width * pr.n_classes;
  if (bytes.size() != 20 + 4 * n) throw Error("probability raster payload size mismatch");
  pr.probs.resize(n);
  for (std::size_t i = 0; i < n; ++i) pr.probs[i] = detail::get_f32(p + 20 + 4 * i);
  return pr;
}

}  // namespace spectro::io
