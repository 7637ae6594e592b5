#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "spdnet/errors.hpp"
#include "spdnet/linalg.hpp"

// Little-endian primitives shared by every binary file this project writes.
namespace spdnet::binio {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), 4);
}

inline void write_f64(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  os.write(b.data(), 8);
}

inline void write_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

// Row-major.
inline void write_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) write_f64(os, m(i, j));
}

inline void read_exact(std::istream& is, char* dst, std::size_t n, const std::string& what) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw ParseError(what, 0, "unexpected end of file");
}

inline std::uint32_t read_u32(std::istream& is, const std::string& what) {
  std::array<char, 4> b{};
  read_exact(is, b.data(), 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline double read_f64(std::istream& is, const std::string& what) {
  std::array<char, 8> b{};
  read_exact(is, b.data(), 8, what);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

inline void expect_magic(std::istream& is, std::string_view magic, const std::string& what) {
  std::string got(magic.size(), '\0');
  read_exact(is, got.data(), got.size(), what);
  if (got != magic) throw ParseError(what, 0, "bad magic, expected '" + std::string(magic) + "'");
}

inline Matrix read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols,
                          const std::string& what) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = read_f64(is, what);
  return m;
}

}  // namespace spdnet::binio
