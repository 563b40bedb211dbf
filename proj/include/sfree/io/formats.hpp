#pragma once

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "sfree/core.hpp"
#include "sfree/freelimit/measure.hpp"
#include "sfree/matrix.hpp"
#include "sfree/spectral/cdf.hpp"
#include "sfree/spectral/support.hpp"

// File formats.
//
// Matrix binary (.sfmx), little-endian:
//   bytes 0-3   "SFMX"
//   u32         version (1)
//   u64         rows
//   u64         cols
//   u32         flags (bit 0 hermitian, bit 1 unitary, bit 2 selfdual)
//   f64 pairs   (re, im) for every entry, row-major
//
// Matrix CSV: one line per row, "re,im" per entry, so 2N numbers per line.
// StepFunction CSV: header "point,cumulative", then one jump per line.
// QuantileMap CSV: header "s,re,im", then one grid point per line.
// SupportSet JSON: [[a, b], ...].
// Measure file: one JSON header line {"format", "lo", "hi", "n", "atoms": [[x, m], ...]},
// then n lines "density,cumulative".
//
// Every real is written with 17 significant digits, so reading back is exact.

namespace sfree::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kMatrixVersion = 1;
inline constexpr const char* kMeasureFormat = "sfree-measure-1";

namespace io_detail {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw FormatError("not a number: '" + s + "'");
  }
  while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
  if (used != s.size()) throw FormatError("trailing characters in number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::vector<double> parse_row(const std::string& line) {
  std::vector<double> v;
  for (const auto& f : split(line, ',')) v.push_back(parse_real(f));
  return v;
}

template <class T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "binary format assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw FormatError("truncated binary matrix");
  return v;
}

inline std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

inline std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream f(path, mode);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

inline bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace io_detail

// ---- Matrices ----------------------------------------------------------------------------------

inline void write_matrix_binary(std::ostream& out, const SquareMatrix& m) {
  out.write("SFMX", 4);
  io_detail::put<std::uint32_t>(out, kMatrixVersion);
  io_detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.dimension()));
  io_detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.dimension()));
  io_detail::put<std::uint32_t>(out, m.flags().bits());
  const CMatrix& e = m.entries();
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
      io_detail::put<double>(out, e(i, j).real());
      io_detail::put<double>(out, e(i, j).imag());
    }
  }
}

inline SquareMatrix read_matrix_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "SFMX") throw FormatError("not an SFMX matrix file");
  const auto version = io_detail::get<std::uint32_t>(in);
  if (version != kMatrixVersion) throw FormatError("unsupported SFMX version " + std::to_string(version));
  const auto rows = io_detail::get<std::uint64_t>(in);
  const auto cols = io_detail::get<std::uint64_t>(in);
  if (rows != cols || rows == 0) throw FormatError("SFMX matrix must be square and nonempty");
  const auto flags = io_detail::get<std::uint32_t>(in);
  const auto n = static_cast<Eigen::Index>(rows);
  CMatrix e(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = io_detail::get<double>(in);
      const double im = io_detail::get<double>(in);
      e(i, j) = Complex(re, im);
    }
  }
  return SquareMatrix(std::move(e), MatrixFlags::from_bits(static_cast<std::uint8_t>(flags & 7u)));
}

inline void write_matrix_binary(const std::string& path, const SquareMatrix& m) {
  auto f = io_detail::open_out(path, std::ios::out | std::ios::binary);
  write_matrix_binary(f, m);
}

inline SquareMatrix read_matrix_binary(const std::string& path) {
  auto f = io_detail::open_in(path, std::ios::in | std::ios::binary);
  return read_matrix_binary(f);
}

inline void write_matrix_csv(std::ostream& out, const SquareMatrix& m) {
  const CMatrix& e = m.entries();
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
      if (j > 0) out << ',';
      out << io_detail::format_real(e(i, j).real()) << ',' << io_detail::format_real(e(i, j).imag());
    }
    out << '\n';
  }
}

/// Flags are not stored in CSV; they are detected from the entries.
inline SquareMatrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (io_detail::next_line(in, line)) {
    if (line.empty()) continue;
    rows.push_back(io_detail::parse_row(line));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw FormatError("empty matrix CSV");
  CMatrix e(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(r.size()) != 2 * n) throw FormatError("matrix CSV row " + std::to_string(i) + " has wrong length");
    for (Eigen::Index j = 0; j < n; ++j) e(i, j) = Complex(r[static_cast<std::size_t>(2 * j)], r[static_cast<std::size_t>(2 * j + 1)]);
  }
  return SquareMatrix::detect(std::move(e));
}

inline void write_matrix_csv(const std::string& path, const SquareMatrix& m) {
  auto f = io_detail::open_out(path);
  write_matrix_csv(f, m);
}

inline SquareMatrix read_matrix_csv(const std::string& path) {
  auto f = io_detail::open_in(path);
  return read_matrix_csv(f);
}

/// Binary when the path ends in ".sfmx", CSV otherwise.
inline void write_matrix(const std::string& path, const SquareMatrix& m) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".sfmx") {
    write_matrix_binary(path, m);
  } else {
    write_matrix_csv(path, m);
  }
}

inline SquareMatrix read_matrix(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".sfmx") return read_matrix_binary(path);
  return read_matrix_csv(path);
}

// ---- Step functions and quantile maps ----------------------------------------------------------

inline void write_step_csv(std::ostream& out, const spectral::StepFunction& f) {
  out << "point,cumulative\n";
  for (std::size_t i = 0; i < f.jump_points().size(); ++i) {
    out << io_detail::format_real(f.jump_points()[i]) << ',' << io_detail::format_real(f.cumulative_values()[i]) << '\n';
  }
}

inline spectral::StepFunction read_step_csv(std::istream& in) {
  std::string line;
  if (!io_detail::next_line(in, line) || line != "point,cumulative") throw FormatError("missing step CSV header");
  std::vector<double> pts, cum;
  while (io_detail::next_line(in, line)) {
    if (line.empty()) continue;
    const auto r = io_detail::parse_row(line);
    if (r.size() != 2) throw FormatError("step CSV rows need two columns");
    pts.push_back(r[0]);
    cum.push_back(r[1]);
  }
  return spectral::StepFunction(std::move(pts), std::move(cum));
}

inline void write_quantile_csv(std::ostream& out, const spectral::QuantileMap& q) {
  out << "s,re,im\n";
  for (std::size_t j = 0; j < q.size(); ++j) {
    out << io_detail::format_real(q.grid(j)) << ',' << io_detail::format_real(q.values()[j].real()) << ','
        << io_detail::format_real(q.values()[j].imag()) << '\n';
  }
}

inline spectral::QuantileMap read_quantile_csv(std::istream& in) {
  std::string line;
  if (!io_detail::next_line(in, line) || line != "s,re,im") throw FormatError("missing quantile CSV header");
  std::vector<Complex> v;
  std::vector<double> grid;
  while (io_detail::next_line(in, line)) {
    if (line.empty()) continue;
    const auto r = io_detail::parse_row(line);
    if (r.size() != 3) throw FormatError("quantile CSV rows need three columns");
    grid.push_back(r[0]);
    v.emplace_back(r[1], r[2]);
  }
  spectral::QuantileMap q(std::move(v));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid[j] != q.grid(j)) throw FormatError("quantile CSV grid is not uniform on [0, 1]");
  }
  return q;
}

// ---- Support sets ------------------------------------------------------------------------------

inline std::string support_to_json(const spectral::SupportSet& s) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [a, b] : s.intervals()) j.push_back({a, b});
  return j.dump();
}

inline spectral::SupportSet support_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("support JSON: ") + e.what());
  }
  if (!j.is_array()) throw FormatError("support JSON must be an array of [a, b] pairs");
  std::vector<spectral::SupportSet::Interval> iv;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw FormatError("support JSON entries must be [a, b] number pairs");
    }
    iv.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return spectral::SupportSet(std::move(iv));
}

// ---- Measures ----------------------------------------------------------------------------------

inline void write_measure(std::ostream& out, const freelimit::CompactMeasure& m) {
  nlohmann::json h;
  h["format"] = kMeasureFormat;
  h["lo"] = m.grid_lo();
  h["hi"] = m.grid_hi();
  h["n"] = m.grid_size();
  h["atoms"] = nlohmann::json::array();
  for (const auto& a : m.atoms()) h["atoms"].push_back({a.location, a.mass});
  out << h.dump() << '\n';
  for (std::size_t i = 0; i < m.grid_size(); ++i) {
    out << io_detail::format_real(m.density()[i]) << ',' << io_detail::format_real(m.cumulative()[i]) << '\n';
  }
}

inline freelimit::CompactMeasure read_measure(std::istream& in) {
  std::string line;
  if (!io_detail::next_line(in, line)) throw FormatError("empty measure file");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("measure header: ") + e.what());
  }
  if (!h.is_object() || h.value("format", "") != kMeasureFormat) throw FormatError("not an sfree measure file");
  std::vector<freelimit::Atom> atoms;
  for (const auto& a : h.at("atoms")) atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
  const auto n = h.at("n").get<std::size_t>();
  std::vector<double> dens, cum;
  while (io_detail::next_line(in, line)) {
    if (line.empty()) continue;
    const auto r = io_detail::parse_row(line);
    if (r.size() != 2) throw FormatError("measure rows need two columns");
    dens.push_back(r[0]);
    cum.push_back(r[1]);
  }
  if (dens.size() != n) throw FormatError("measure file row count differs from header");
  return freelimit::CompactMeasure(std::move(atoms), h.at("lo").get<double>(), h.at("hi").get<double>(), std::move(dens),
                                   std::move(cum));
}

inline void write_measure(const std::string& path, const freelimit::CompactMeasure& m) {
  auto f = io_detail::open_out(path);
  write_measure(f, m);
}

inline freelimit::CompactMeasure read_measure(const std::string& path) {
  auto f = io_detail::open_in(path);
  return read_measure(f);
}

}  // namespace sfree::io
