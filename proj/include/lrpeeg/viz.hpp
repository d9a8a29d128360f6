#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <zlib.h>

#include "lrpeeg/erf.hpp"
#include "lrpeeg/types.hpp"

namespace lrpeeg::viz {

/// Shortest round-trip decimal, independent of the C locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// RGB8 image, rows top to bottom.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::array<std::uint8_t, 3> pixel(int x, int y) const {
    const auto i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
};

namespace detail {

inline void put_be32(std::string& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_chunk(std::string& out, const char* type, const std::string& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

/// 8-bit RGB PNG, filter type 0, deflate level 9.
inline std::string encode_png(const Image& img) {
  std::string raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (1 + 3 * static_cast<std::size_t>(img.width)));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back('\0');
    const auto* row = img.rgb.data() + 3 * static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width);
    raw.append(reinterpret_cast<const char*>(row), 3 * static_cast<std::size_t>(img.width));
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::string deflated(len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(deflated.data()), &len, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 9) != Z_OK)
    fail(ErrorKind::io, "PNG compression failed");
  deflated.resize(len);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // depth 8, truecolor, deflate, filter 0, no interlace
  detail::put_chunk(out, "IHDR", ihdr);
  detail::put_chunk(out, "IDAT", deflated);
  detail::put_chunk(out, "IEND", "");
  return out;
}

inline constexpr int kPaletteHalf = 127;

/// Diverging white-centered palette: negative blue, positive red. Values are
/// quantized to 255 symmetric levels, so color(-v) is color(v) with the red
/// and blue channels swapped.
inline std::array<std::uint8_t, 3> diverging_color(double v, double limit) {
  const double t = std::clamp(v / limit, -1.0, 1.0);
  const long q = std::lround(t * kPaletteHalf);
  const double u = static_cast<double>(std::labs(q)) / kPaletteHalf;
  const auto c = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - u)));
  if (q >= 0) return {255, c, c};
  return {c, c, 255};
}

inline constexpr double kMinScaleLimit = 1e-12;

/// Symmetric limit max|v| over finite entries, floored at 1e-12.
inline double symmetric_limit(const Matrix& values) {
  double lim = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (std::isfinite(values.data()[i])) lim = std::max(lim, std::abs(values.data()[i]));
  return std::max(lim, kMinScaleLimit);
}

/// One block x block pixel square per cell; rows = timepoints, columns = channels.
/// Non-finite cells render grey.
inline Image heatmap_image(const Matrix& values, int block, double limit) {
  if (block < 1) fail(ErrorKind::spec, "pixel block size must be >= 1");
  Image img;
  img.width = static_cast<int>(values.cols()) * block;
  img.height = static_cast<int>(values.rows()) * block;
  img.rgb.resize(3 * static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double v = values(y / block, x / block);
      const std::array<std::uint8_t, 3> color = std::isfinite(v) ? diverging_color(v, limit) : std::array<std::uint8_t, 3>{128, 128, 128};
      const auto i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) + static_cast<std::size_t>(x));
      std::copy(color.begin(), color.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>(i));
    }
  return img;
}

/// Writes `path` (PNG) and `path`.json with the color scale limits.
inline void render_matrix(const Matrix& values, const std::filesystem::path& path, int block = 2) {
  const double limit = symmetric_limit(values);
  io::write_file(path, encode_png(heatmap_image(values, block, limit)));
  Json side{{"vmin", -limit}, {"vmax", limit}, {"block", block}, {"rows", values.rows()}, {"cols", values.cols()},
            {"palette", "diverging-blue-white-red-255"}};
  io::write_file(path.string() + ".json", side.dump(2) + "\n");
}

inline void render_heatmap(const RelevanceMap& map, const std::filesystem::path& path, int block = 2) {
  render_matrix(map.values, path, block);
}

struct TopographyGrid {
  Matrix grid;  // [G x G], row 0 at y = +1 (front), NaN outside the head
  double extent = 1.0;
  int size = 64;

  /// Center of cell (row, col) in head coordinates.
  std::array<double, 2> cell_center(int row, int col) const {
    const double step = 2.0 * extent / size;
    return {-extent + (col + 0.5) * step, extent - (row + 0.5) * step};
  }
};

/// Inverse-distance-weighted (power 2, all electrodes) interpolation on a
/// G x G grid over [-1, 1]^2; cells outside the unit circle are NaN. The grid
/// cell nearest each electrode (if inside the head) is pinned to that
/// electrode's value, the closest electrode winning when two share a cell.
inline TopographyGrid topography(const Vector& values, const Montage& montage, int size = 64) {
  if (size < 2) fail(ErrorKind::spec, "grid size must be >= 2");
  if (static_cast<std::size_t>(values.size()) != montage.channel_names.size())
    fail(ErrorKind::montage, "montage has " + std::to_string(montage.channel_names.size()) + " channels, values have " +
                                 std::to_string(values.size()));
  TopographyGrid out;
  out.size = size;
  out.grid.resize(size, size);
  const auto n = montage.positions.size();
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const auto [x, y] = out.cell_center(r, c);
      if (std::hypot(x, y) > 1.0) {
        out.grid(r, c) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double wsum = 0.0, acc = 0.0;
      bool exact = false;
      for (std::size_t e = 0; e < n; ++e) {
        const double dx = x - montage.positions[e][0];
        const double dy = y - montage.positions[e][1];
        const double d2 = dx * dx + dy * dy;
        if (d2 == 0.0) {
          out.grid(r, c) = values(static_cast<Eigen::Index>(e));
          exact = true;
          break;
        }
        wsum += 1.0 / d2;
        acc += values(static_cast<Eigen::Index>(e)) / d2;
      }
      if (!exact) out.grid(r, c) = acc / wsum;
    }
  // Pin electrode cells; an electrode on a cell boundary pins every tied cell.
  const double step = 2.0 / size;
  Matrix best_dist = Matrix::Constant(size, size, std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < n; ++e) {
    const auto [ex, ey] = montage.positions[e];
    const int col0 = static_cast<int>(std::floor((ex + 1.0) / step));
    const int row0 = static_cast<int>(std::floor((1.0 - ey) / step));
    double nearest = std::numeric_limits<double>::infinity();
    std::vector<std::array<int, 2>> cells;
    for (int row = std::max(row0 - 1, 0); row <= std::min(row0 + 1, size - 1); ++row)
      for (int col = std::max(col0 - 1, 0); col <= std::min(col0 + 1, size - 1); ++col) {
        const auto [cx, cy] = out.cell_center(row, col);
        const double d = std::hypot(cx - ex, cy - ey);
        if (d < nearest - 1e-12) {
          nearest = d;
          cells.clear();
        }
        if (d <= nearest + 1e-12) cells.push_back({row, col});
      }
    for (const auto& [row, col] : cells) {
      if (std::isnan(out.grid(row, col)) || !(nearest < best_dist(row, col))) continue;
      best_dist(row, col) = nearest;
      out.grid(row, col) = values(static_cast<Eigen::Index>(e));
    }
  }
  return out;
}

inline Vector require_montage_values(const Vector& values, const std::vector<std::string>& channel_names, const Montage& montage) {
  // Reorders `values` (given in channel_names order) into montage order.
  if (static_cast<std::size_t>(values.size()) != channel_names.size()) fail(ErrorKind::shape, "value/channel count mismatch");
  Vector out(static_cast<Eigen::Index>(montage.channel_names.size()));
  for (std::size_t i = 0; i < montage.channel_names.size(); ++i) {
    auto it = std::find(channel_names.begin(), channel_names.end(), montage.channel_names[i]);
    if (it == channel_names.end()) fail(ErrorKind::montage, "channel '" + montage.channel_names[i] + "' has no value");
    out(static_cast<Eigen::Index>(i)) = values(static_cast<Eigen::Index>(it - channel_names.begin()));
  }
  return out;
}

/// CSV with "nan" for missing cells; rows top (front) to bottom.
inline std::string grid_csv(const TopographyGrid& g) {
  std::string out;
  for (Eigen::Index r = 0; r < g.grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.grid.cols(); ++c) {
      if (c) out.push_back(',');
      out += format_number(g.grid(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

/// First row "time_ms,<channels...>", first column time in ms.
inline std::string relevance_csv(const Matrix& values, const std::vector<double>& time_axis_ms,
                                 const std::vector<std::string>& channel_names) {
  if (static_cast<std::size_t>(values.rows()) != time_axis_ms.size() ||
      static_cast<std::size_t>(values.cols()) != channel_names.size())
    fail(ErrorKind::shape, "relevance map shape does not match time axis / channel list");
  std::string out = "time_ms";
  for (const auto& c : channel_names) out += "," + c;
  out.push_back('\n');
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    out += format_number(time_axis_ms[static_cast<std::size_t>(t)]);
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out.push_back(',');
      out += format_number(values(t, c));
    }
    out.push_back('\n');
  }
  return out;
}

struct CsvMatrix {
  std::vector<std::string> channel_names;
  std::vector<double> time_axis_ms;
  Matrix values;
};

inline CsvMatrix parse_relevance_csv(const std::string& text, const std::string& what = "relevance csv") {
  CsvMatrix m;
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0, lineno = 0;
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return cells;
  };
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (lineno++ == 0) {
      m.channel_names.assign(cells.begin() + 1, cells.end());
      continue;
    }
    if (cells.size() != m.channel_names.size() + 1)
      fail(ErrorKind::format, what + ": line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) + " cells");
    std::vector<double> row;
    for (const auto& cell : cells) {
      double v = 0.0;
      if (cell == "nan") v = std::numeric_limits<double>::quiet_NaN();
      else {
        auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
          fail(ErrorKind::format, what + ": bad number '" + cell + "' on line " + std::to_string(lineno));
      }
      row.push_back(v);
    }
    m.time_axis_ms.push_back(row.front());
    rows.push_back(std::move(row));
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.channel_names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < m.channel_names.size(); ++c)
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c + 1];
  return m;
}

}  // namespace lrpeeg::viz
