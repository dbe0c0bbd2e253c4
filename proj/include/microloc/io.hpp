#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "microloc/grid.hpp"

namespace microloc {

/// Shortest round-trip decimal representation; independent of locale.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("csv: cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

/// Columns: one integer index per axis, then re, im.
inline void write_field_csv(std::ostream& out, const Field& u) {
  const Grid& g = u.grid();
  out << (g.dim() == 1 ? "i0,re,im\n" : "i0,i1,re,im\n");
  for (std::size_t f = 0; f < u.size(); ++f) {
    auto [i, j] = g.indices(f);
    out << i << ',';
    if (g.dim() == 2) out << j << ',';
    out << format_double(u[f].real()) << ',' << format_double(u[f].imag()) << '\n';
  }
}

/// CSV does not carry the box size, so the caller supplies the grid. Lines starting with '#' are skipped.
inline Field read_field_csv(std::istream& in, const Grid& grid) {
  Field u(grid);
  std::vector<bool> seen(grid.size(), false);
  std::string line;
  bool header = true;
  const std::size_t columns = grid.dim() + 2;
  const int n = grid.points_per_axis();
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != columns) throw ValidationError("field csv: expected " + std::to_string(columns) + " columns");
    int i = static_cast<int>(parse_double(cells[0]));
    int j = grid.dim() == 2 ? static_cast<int>(parse_double(cells[1])) : 0;
    if (i < 0 || i >= n || j < 0 || j >= n) throw ValidationError("field csv: index out of range");
    std::size_t flat = grid.dim() == 1 ? std::size_t(i) : std::size_t(i) * n + j;
    u[flat] = cplx(parse_double(cells[columns - 2]), parse_double(cells[columns - 1]));
    seen[flat] = true;
  }
  for (std::size_t f = 0; f < seen.size(); ++f)
    if (!seen[f]) throw ValidationError("field csv: missing value at index " + detail::index_label(grid, f));
  return u;
}

namespace detail {

inline constexpr char kFieldMagic[4] = {'M', 'L', 'K', '1'};
inline constexpr std::size_t kFieldHeaderBytes = 32;

inline void put_le_double(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  out.write(bytes, 8);
}

inline double get_le_double(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ValidationError("field binary: truncated stream");
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

// Header layout (32 bytes): "MLK1", 4 zero bytes, dim, N, L as little-endian doubles.
// Payload: interleaved re/im little-endian doubles in row-major order.
inline void write_field_binary(std::ostream& out, const Field& u) {
  const Grid& g = u.grid();
  out.write(detail::kFieldMagic, 4);
  const char pad[4] = {0, 0, 0, 0};
  out.write(pad, 4);
  detail::put_le_double(out, g.dim());
  detail::put_le_double(out, g.points_per_axis());
  detail::put_le_double(out, g.half_length());
  for (const auto& z : u.values()) {
    detail::put_le_double(out, z.real());
    detail::put_le_double(out, z.imag());
  }
}

inline Field read_field_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, detail::kFieldMagic, 4) != 0)
    throw ValidationError("field binary: bad magic");
  char pad[4];
  if (!in.read(pad, 4)) throw ValidationError("field binary: truncated header");
  const double dim = detail::get_le_double(in);
  const double n = detail::get_le_double(in);
  const double half_length = detail::get_le_double(in);
  if (dim != 1.0 && dim != 2.0) throw ValidationError("field binary: bad dim");
  if (!(n >= 16.0 && n <= 1 << 20) || n != std::floor(n)) throw ValidationError("field binary: bad N");
  Grid g(static_cast<int>(dim), static_cast<int>(n), half_length);
  std::vector<cplx> values(g.size());
  for (auto& z : values) {
    double re = detail::get_le_double(in);
    double im = detail::get_le_double(in);
    z = cplx(re, im);
  }
  return Field(g, std::move(values));
}

}  // namespace microloc
