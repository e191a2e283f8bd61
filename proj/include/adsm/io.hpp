#pragma once

#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adsm/error.hpp"
#include "adsm/matrix.hpp"

namespace adsm::io {

// ---------------------------------------------------------------------------
// CRC32 (IEEE 802.3, reflected polynomial 0xEDB88320)
// ---------------------------------------------------------------------------

inline std::uint32_t crc32(const void* bytes, std::size_t len, std::uint32_t crc = 0) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int j = 0; j < 8; ++j) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  const auto* p = static_cast<const unsigned char*>(bytes);
  crc = ~crc;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
  return ~crc;
}

inline std::uint32_t crc32(const std::string& s, std::uint32_t crc = 0) {
  return crc32(s.data(), s.size(), crc);
}

// ---------------------------------------------------------------------------
// Little-endian scalar encoding (explicit, so files are portable)
// ---------------------------------------------------------------------------

inline void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void append_f64_le(std::string& out, double d) {
  append_u64_le(out, std::bit_cast<std::uint64_t>(d));
}

inline std::uint16_t read_u16_le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t read_u32_le(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline std::uint64_t read_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline double read_f64_le(const unsigned char* p) {
  return std::bit_cast<double>(read_u64_le(p));
}

// ---------------------------------------------------------------------------
// Whole-file helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::uint32_t file_crc32(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return crc32(bytes.data(), bytes.size());
}

// ---------------------------------------------------------------------------
// Feature matrix files (.fv)
//
// Binary layout: text header "ADSMFV1 <d> <rows>\n" followed by rows*d
// float64 values, row-major, little-endian. Round-trips bit-exactly.
// ---------------------------------------------------------------------------

inline constexpr const char* kFvMagic = "ADSMFV1";

inline std::string encode_fv(const Matrix& m) {
  if (m.empty()) throw ValidationError("export_features: matrix is empty");
  std::string out = std::string(kFvMagic) + " " + std::to_string(m.cols) + " " +
                    std::to_string(m.rows) + "\n";
  out.reserve(out.size() + m.data.size() * 8);
  for (double v : m.data) append_f64_le(out, v);
  return out;
}

inline void write_fv(const std::filesystem::path& path, const Matrix& m) {
  write_file(path, encode_fv(m));
}

inline Matrix decode_fv(const std::string& bytes, const std::string& origin) {
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string::npos) throw FormatError(origin + ": missing header line");
  std::istringstream header(bytes.substr(0, nl));
  std::string magic;
  std::size_t cols = 0, rows = 0;
  if (!(header >> magic >> cols >> rows) || magic != kFvMagic)
    throw FormatError(origin + ": bad header");
  if (cols == 0 || rows == 0) throw FormatError(origin + ": zero dimension in header");
  const std::size_t payload = bytes.size() - nl - 1;
  if (payload != rows * cols * 8)
    throw FormatError(origin + ": payload size " + std::to_string(payload) +
                      " does not match header dims " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  Matrix m(rows, cols);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + nl + 1;
  for (std::size_t i = 0; i < rows * cols; ++i) m.data[i] = read_f64_le(p + i * 8);
  return m;
}

inline bool looks_like_fv(const std::string& bytes) {
  return bytes.rfind(kFvMagic, 0) == 0;
}

/// Parse a CSV of numeric rows (the import fallback for externally
/// produced features, e.g. 24-column chroma+timbre dumps).
inline Matrix parse_csv_matrix(const std::string& text, const std::string& origin) {
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, lineno = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t ncols = 0;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      const std::string cell =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        values.push_back(v);
      } catch (const std::exception&) {
        throw ParseError(origin + ": non-numeric cell '" + cell + "'", lineno);
      }
      ++ncols;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cols == 0) cols = ncols;
    if (ncols != cols)
      throw FormatError(origin + ": row " + std::to_string(lineno) + " has " +
                        std::to_string(ncols) + " columns, expected " + std::to_string(cols));
    ++rows;
  }
  if (rows == 0) throw FormatError(origin + ": no data rows");
  Matrix m(rows, cols);
  m.data = std::move(values);
  return m;
}

inline void export_features(const std::filesystem::path& path, const Matrix& m) {
  write_fv(path, m);
}

/// Read a feature matrix: binary .fv when the magic matches, CSV otherwise.
inline Matrix import_features(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (looks_like_fv(bytes)) return decode_fv(bytes, path.string());
  return parse_csv_matrix(bytes, path.string());
}

}  // namespace adsm::io
