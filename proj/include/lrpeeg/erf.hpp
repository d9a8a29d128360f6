#pragma once

// ERF container: one line of UTF-8 JSON terminated by '\n', followed by a
// little-endian float32 payload.
//
//   recording: {"fs", "channels", "n_samples", "markers": [[sample, label]], "meta"}
//              payload is sample-major, n_samples * n_channels values.
//   epochs:    {"fs", "channels", "n_trials", "time_axis_ms", "labels", "meta"}
//              payload is trial, time, channel (channel fastest).

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "lrpeeg/types.hpp"

namespace lrpeeg {

namespace io {

inline void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

inline std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void put_f32(std::string& out, double v) { put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
inline void put_f64(std::string& out, double v) { put_u64le(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32le(p)); }
inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64le(p)); }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;  // failure surfaces at open below
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "write to '" + path.string() + "' failed");
}

/// Splits "json\npayload" and parses the header.
inline std::pair<Json, std::string_view> split_header(std::string_view bytes, const std::string& what) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) fail(ErrorKind::format, what + ": missing header line");
  Json header;
  try {
    header = Json::parse(bytes.substr(0, nl));
  } catch (const Json::exception& e) {
    fail(ErrorKind::format, what + ": header is not valid JSON (" + e.what() + ")");
  }
  if (!header.is_object()) fail(ErrorKind::format, what + ": header must be a JSON object");
  return {std::move(header), bytes.substr(nl + 1)};
}

inline const Json& field(const Json& h, const char* name, const std::string& what) {
  auto it = h.find(name);
  if (it == h.end()) fail(ErrorKind::format, what + ": missing field '" + name + "'");
  return *it;
}

inline std::int64_t int_field(const Json& h, const char* name, const std::string& what) {
  const auto& v = field(h, name, what);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    fail(ErrorKind::format, what + ": field '" + name + "' must be a non-negative integer");
  return v.get<std::int64_t>();
}

inline double number_field(const Json& h, const char* name, const std::string& what) {
  const auto& v = field(h, name, what);
  if (!v.is_number()) fail(ErrorKind::format, what + ": field '" + name + "' must be a number");
  return v.get<double>();
}

inline std::vector<std::string> channels_field(const Json& h, const std::string& what) {
  const auto& v = field(h, "channels", what);
  if (!v.is_array()) fail(ErrorKind::format, what + ": field 'channels' must be an array of strings");
  std::vector<std::string> names;
  for (const auto& c : v) {
    if (!c.is_string()) fail(ErrorKind::format, what + ": field 'channels' must be an array of strings");
    names.push_back(c.get<std::string>());
  }
  return names;
}

inline void check_payload(std::string_view payload, std::size_t n_values, const std::string& what) {
  const std::size_t expected = n_values * 4;
  if (payload.size() < expected)
    fail(ErrorKind::truncation, what + ": payload holds " + std::to_string(payload.size() / 4) +
                                    " float32 values, header declares " + std::to_string(n_values));
  if (payload.size() > expected)
    fail(ErrorKind::format, what + ": " + std::to_string(payload.size() - expected) +
                                " trailing bytes after payload");
}

inline Json meta_or_empty(const Json& h) {
  auto it = h.find("meta");
  if (it == h.end()) return Json::object();
  if (!it->is_object()) fail(ErrorKind::format, "field 'meta' must be an object");
  return *it;
}

}  // namespace io

inline std::string encode_recording(const Recording& rec) {
  validate(rec);
  Json h;
  h["fs"] = rec.fs;
  h["channels"] = rec.channel_names;
  h["n_samples"] = rec.n_samples();
  Json markers = Json::array();
  for (const auto& m : rec.markers) markers.push_back({m.sample, m.label});
  h["markers"] = std::move(markers);
  h["meta"] = rec.meta;
  std::string out = h.dump();
  out.push_back('\n');
  out.reserve(out.size() + static_cast<std::size_t>(rec.samples.size()) * 4);
  for (Eigen::Index s = 0; s < rec.n_samples(); ++s)
    for (Eigen::Index c = 0; c < rec.n_channels(); ++c) io::put_f32(out, rec.samples(s, c));
  return out;
}

inline Recording decode_recording(std::string_view bytes, const std::string& what = "recording") {
  auto [h, payload] = io::split_header(bytes, what);
  Recording rec;
  rec.fs = io::number_field(h, "fs", what);
  if (!(rec.fs > 0.0)) fail(ErrorKind::format, what + ": field 'fs' must be positive");
  rec.channel_names = io::channels_field(h, what);
  const auto n = io::int_field(h, "n_samples", what);
  const auto& mk = io::field(h, "markers", what);
  if (!mk.is_array()) fail(ErrorKind::format, what + ": field 'markers' must be an array");
  for (const auto& m : mk) {
    if (!m.is_array() || m.size() != 2 || !m[0].is_number_integer() || !m[1].is_number_integer())
      fail(ErrorKind::format, what + ": field 'markers' entries must be [sample, label] integer pairs");
    rec.markers.push_back({m[0].get<std::int64_t>(), m[1].get<int>()});
  }
  rec.meta = io::meta_or_empty(h);
  const auto n_ch = static_cast<Eigen::Index>(rec.channel_names.size());
  io::check_payload(payload, static_cast<std::size_t>(n * n_ch), what);
  rec.samples.resize(n, n_ch);
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  for (Eigen::Index s = 0; s < n; ++s)
    for (Eigen::Index c = 0; c < n_ch; ++c, p += 4) rec.samples(s, c) = io::get_f32(p);
  validate(rec);
  return rec;
}

inline void write_recording(const Recording& rec, const std::filesystem::path& path) {
  io::write_file(path, encode_recording(rec));
}

inline Recording read_recording(const std::filesystem::path& path) {
  return decode_recording(io::read_file(path), path.string());
}

inline std::string encode_epochs(const EpochSet& ep) {
  validate(ep);
  Json h;
  h["fs"] = ep.fs;
  h["channels"] = ep.channel_names;
  h["n_trials"] = ep.n_trials();
  h["time_axis_ms"] = ep.time_axis_ms;
  h["labels"] = ep.labels;
  Json meta = ep.meta;
  if (!ep.class_values.empty()) meta["class_values"] = ep.class_values;
  h["meta"] = std::move(meta);
  std::string out = h.dump();
  out.push_back('\n');
  out.reserve(out.size() + ep.n_trials() * static_cast<std::size_t>(ep.n_features()) * 4);
  for (const auto& m : ep.trials)
    for (Eigen::Index t = 0; t < m.rows(); ++t)
      for (Eigen::Index c = 0; c < m.cols(); ++c) io::put_f32(out, m(t, c));
  return out;
}

inline EpochSet decode_epochs(std::string_view bytes, const std::string& what = "epochs") {
  auto [h, payload] = io::split_header(bytes, what);
  EpochSet ep;
  ep.fs = io::number_field(h, "fs", what);
  if (!(ep.fs > 0.0)) fail(ErrorKind::format, what + ": field 'fs' must be positive");
  ep.channel_names = io::channels_field(h, what);
  const auto n_trials = io::int_field(h, "n_trials", what);
  const auto& ta = io::field(h, "time_axis_ms", what);
  if (!ta.is_array()) fail(ErrorKind::format, what + ": field 'time_axis_ms' must be an array");
  for (const auto& v : ta) {
    if (!v.is_number()) fail(ErrorKind::format, what + ": field 'time_axis_ms' must hold numbers");
    ep.time_axis_ms.push_back(v.get<double>());
  }
  const auto& lb = io::field(h, "labels", what);
  if (!lb.is_array() || static_cast<std::int64_t>(lb.size()) != n_trials)
    fail(ErrorKind::format, what + ": field 'labels' must be an array of n_trials integers");
  for (const auto& v : lb) {
    if (!v.is_number_integer()) fail(ErrorKind::format, what + ": field 'labels' must hold integers");
    ep.labels.push_back(v.get<int>());
  }
  ep.meta = io::meta_or_empty(h);
  if (auto it = ep.meta.find("class_values"); it != ep.meta.end()) {
    ep.class_values = it->get<std::vector<int>>();
    ep.meta.erase("class_values");
  }
  const auto n_tp = ep.n_timepoints();
  const auto n_ch = ep.n_channels();
  io::check_payload(payload, static_cast<std::size_t>(n_trials * n_tp * n_ch), what);
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  ep.trials.assign(static_cast<std::size_t>(n_trials), Matrix(n_tp, n_ch));
  for (auto& m : ep.trials)
    for (Eigen::Index t = 0; t < n_tp; ++t)
      for (Eigen::Index c = 0; c < n_ch; ++c, p += 4) m(t, c) = io::get_f32(p);
  validate(ep);
  return ep;
}

inline void write_epochs(const EpochSet& ep, const std::filesystem::path& path) {
  io::write_file(path, encode_epochs(ep));
}

inline EpochSet read_epochs(const std::filesystem::path& path) {
  return decode_epochs(io::read_file(path), path.string());
}

}  // namespace lrpeeg
