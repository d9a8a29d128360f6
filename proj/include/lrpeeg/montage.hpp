#pragma once

// Bundled electrode table for the 10-20, 10-10 and extended 10-5 naming
// systems (including the FAF/CFC/PCP/OPO spellings used by older 118-channel
// caps). Positions are placed on a unit sphere from the electrode name and
// flattened with an azimuthal equidistant projection: Cz at the origin, the
// Fpz-T7-Oz-T8 circumference on the unit circle, inferior rows compressed
// into the ring 1 < r <= 1.2.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lrpeeg/erf.hpp"
#include "lrpeeg/types.hpp"

namespace lrpeeg {

namespace montage_detail {

struct Row {
  const char* prefix;      // base prefix for numbers 1..6 and 'z'
  const char* lateral;     // prefix used for numbers >= 7, nullptr if same
  double midline_deg;      // signed polar angle of the midline electrode, + anterior
  int max_number;
};

// Intermediate rows are 11.25 deg apart along the sagittal midline.
inline constexpr Row kRows[] = {
    {"Fp", nullptr, 90.0, 2},      {"AFp", nullptr, 78.75, 10},  {"AF", nullptr, 67.5, 10},
    {"AFF", nullptr, 56.25, 10},   {"FAF", nullptr, 56.25, 10},  {"F", nullptr, 45.0, 10},
    {"FFC", nullptr, 33.75, 10},   {"FFT", nullptr, 33.75, 10},  {"FC", "FT", 22.5, 10},
    {"FCC", nullptr, 11.25, 10},   {"CFC", nullptr, 11.25, 10},  {"C", "T", 0.0, 10},
    {"CCP", nullptr, -11.25, 10},  {"CP", "TP", -22.5, 10},      {"CPP", nullptr, -33.75, 10},
    {"PCP", nullptr, -33.75, 10},  {"P", nullptr, -45.0, 10},    {"PPO", nullptr, -56.25, 10},
    {"PO", nullptr, -67.5, 10},    {"POO", nullptr, -78.75, 10}, {"OPO", nullptr, -78.75, 10},
    {"O", nullptr, -90.0, 2},      {"OI", nullptr, -101.25, 2},  {"I", nullptr, -112.5, 2},
};

using Vec3 = std::array<double, 3>;

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

inline Vec3 slerp(const Vec3& a, const Vec3& b, double f) {
  const double dot = std::clamp(a[0] * b[0] + a[1] * b[1] + a[2] * b[2], -1.0, 1.0);
  const double omega = std::acos(dot);
  if (omega < 1e-12) return a;
  const double s = std::sin(omega);
  const double wa = std::sin((1.0 - f) * omega) / s;
  const double wb = std::sin(f * omega) / s;
  return {wa * a[0] + wb * b[0], wa * a[1] + wb * b[1], wa * a[2] + wb * b[2]};
}

/// number: 0 for midline, odd left, even right.
inline Vec3 sphere_position(double midline_deg, int number) {
  const double steps = number == 0 ? 0.0 : (number % 2 == 1 ? (number + 1) / 2 : number / 2);
  const double side = number % 2 == 1 ? -1.0 : 1.0;  // x axis points right
  const double polar = std::abs(midline_deg);
  const bool anterior = midline_deg >= 0.0;
  if (polar >= 90.0) {
    // Rows on or below the circumference keep their polar angle and fan out
    // 18 deg per step in azimuth from the midline.
    const double az = deg((anterior ? 0.0 : 180.0) + (anterior ? 1.0 : -1.0) * 18.0 * steps);
    const double st = std::sin(deg(polar));
    return {side * st * std::sin(az), st * std::cos(az), std::cos(deg(polar))};
  }
  const Vec3 mid{0.0, (anterior ? 1.0 : -1.0) * std::sin(deg(polar)), std::cos(deg(polar))};
  const double az = deg(anterior ? 90.0 - 0.8 * polar : 90.0 + 0.8 * polar);
  const Vec3 equator{side * std::sin(az), std::cos(az), 0.0};
  return slerp(mid, equator, steps / 4.0);
}

inline std::array<double, 2> project(const Vec3& p) {
  const double polar = std::acos(std::clamp(p[2], -1.0, 1.0)) * 180.0 / std::numbers::pi;
  double r = polar <= 90.0 ? polar / 90.0 : 1.0 + 0.8 * (polar - 90.0) / 90.0;
  r = std::min(r, 1.2);
  const double h = std::hypot(p[0], p[1]);
  if (h < 1e-12) return {0.0, 0.0};
  return {r * p[0] / h, r * p[1] / h};
}

inline std::string upper(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

inline const std::map<std::string, std::pair<std::string, std::array<double, 2>>>& table() {
  static const auto built = [] {
    std::map<std::string, std::pair<std::string, std::array<double, 2>>> t;
    auto add = [&t](const std::string& name, std::array<double, 2> pos) { t.emplace(upper(name), std::make_pair(name, pos)); };
    for (const auto& row : kRows) {
      add(std::string(row.prefix) + "z", project(sphere_position(row.midline_deg, 0)));
      for (int n = 1; n <= row.max_number; ++n) {
        const char* prefix = (row.lateral != nullptr && n >= 7) ? row.lateral : row.prefix;
        add(prefix + std::to_string(n), project(sphere_position(row.midline_deg, n)));
      }
    }
    // Legacy 10-20 names.
    const std::pair<const char*, const char*> legacy[] = {{"T3", "T7"}, {"T4", "T8"}, {"T5", "P7"}, {"T6", "P8"}};
    for (auto [old_name, new_name] : legacy) add(old_name, t.at(upper(new_name)).second);
    return t;
  }();
  return built;
}

}  // namespace montage_detail

/// Position of a standard electrode (case-insensitive), if the table has it.
inline std::optional<std::array<double, 2>> standard_position(const std::string& name) {
  const auto& t = montage_detail::table();
  auto it = t.find(montage_detail::upper(name));
  if (it == t.end()) return std::nullopt;
  return it->second.second;
}

inline Montage standard_montage(const std::vector<std::string>& channel_names) {
  Montage m;
  for (const auto& name : channel_names) {
    auto pos = standard_position(name);
    if (!pos) fail(ErrorKind::montage, "channel '" + name + "' has no standard electrode position");
    m.channel_names.push_back(name);
    m.positions.push_back(*pos);
  }
  validate(m);
  return m;
}

/// Reads "name,x,y" lines; a first line starting with "name" is a header.
inline Montage read_montage_csv(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  Montage m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineno == 1 && line.rfind("name", 0) == 0)) continue;
    std::istringstream ls(line);
    std::string name, xs, ys;
    if (!std::getline(ls, name, ',') || !std::getline(ls, xs, ',') || !std::getline(ls, ys, ','))
      fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": expected name,x,y");
    try {
      m.positions.push_back({std::stod(xs), std::stod(ys)});
    } catch (const std::exception&) {
      fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": bad coordinate");
    }
    m.channel_names.push_back(name);
  }
  validate(m);
  return m;
}

/// Restricts a montage to the given channels, in the given order.
inline Montage select_channels(const Montage& montage, const std::vector<std::string>& channel_names) {
  Montage out;
  for (const auto& name : channel_names) {
    auto it = std::find(montage.channel_names.begin(), montage.channel_names.end(), name);
    if (it == montage.channel_names.end()) fail(ErrorKind::montage, "channel '" + name + "' missing from montage");
    out.channel_names.push_back(name);
    out.positions.push_back(montage.positions[static_cast<std::size_t>(it - montage.channel_names.begin())]);
  }
  return out;
}

}  // namespace lrpeeg
