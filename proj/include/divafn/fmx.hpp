#ifndef DIVAFN_FMX_HPP
#define DIVAFN_FMX_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "divafn/matrix.hpp"

namespace divafn {

// FMX1 matrix file: bytes 0-3 magic "FMX1", bytes 4-11 row count and bytes
// 12-19 column count as unsigned 64-bit little-endian, then rows*cols IEEE-754
// 64-bit little-endian values in column-major order. Round trips are
// bit-exact.

void save_fmx(const Matrix& m, const std::string& path);
Matrix load_fmx(const std::string& path);

/// In-memory encode/decode of the same layout (used for embedded blocks).
std::vector<std::uint8_t> encode_fmx(const Matrix& m);
Matrix decode_fmx(const std::uint8_t* bytes, std::size_t length,
                  std::size_t base_offset = 0);

/// Comma-separated text, one row per feature dimension.
Matrix load_csv_matrix(const std::string& path);

/// Loads `<stem>.fmx` if present, otherwise `<stem>.csv`.
Matrix load_matrix_auto(const std::string& stem);

std::vector<int> load_labels(const std::string& path);
void save_labels(const std::vector<int>& labels, const std::string& path);

std::vector<std::string> load_lines(const std::string& path);
void save_lines(const std::vector<std::string>& lines,
                const std::string& path);

}  // namespace divafn

#endif  // DIVAFN_FMX_HPP
