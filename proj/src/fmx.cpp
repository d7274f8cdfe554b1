#include "divafn/fmx.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace divafn {

namespace {

constexpr char kMagic[4] = {'F', 'M', 'X', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::uint8_t* bytes) {
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i)
    value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return value;
}

void put_f64(std::vector<std::uint8_t>& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  put_u64(out, bits);
}

double get_f64(const std::uint8_t* bytes) {
  const std::uint64_t bits = get_u64(bytes);
  double value;
  std::memcpy(&value, &bits, 8);
  return value;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("cannot open '" + path + "' for reading");
  in.seekg(0, std::ios::end);
  const auto length = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(length));
  if (length > 0)
    in.read(reinterpret_cast<char*>(bytes.data()), length);
  if (!in)
    throw FormatError("failed reading '" + path + "'");
  return bytes;
}

void write_file(const std::vector<std::uint8_t>& bytes,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw FormatError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw FormatError("failed writing '" + path + "'");
}

}  // namespace

std::vector<std::uint8_t> encode_fmx(const Matrix& m) {
  std::vector<std::uint8_t> out;
  out.reserve(20 + 8 * m.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u64(out, m.rows());
  put_u64(out, m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
  return out;
}

Matrix decode_fmx(const std::uint8_t* bytes, std::size_t length,
                  std::size_t base_offset) {
  const auto at = [base_offset](std::size_t offset) {
    return std::to_string(base_offset + offset);
  };
  if (length < 4 || std::memcmp(bytes, kMagic, 4) != 0)
    throw FormatError("bad magic at offset " + at(0) +
                      " (expected \"FMX1\")");
  if (length < 20)
    throw FormatError("truncated header at offset " + at(length) +
                      " (need 20 bytes)");
  const std::uint64_t rows = get_u64(bytes + 4);
  const std::uint64_t cols = get_u64(bytes + 12);
  if (rows == 0 || cols == 0)
    throw FormatError("zero dimension in header at offset " + at(4));
  if (rows > (std::numeric_limits<std::uint64_t>::max() / 8) / cols ||
      rows * cols > (1ull << 40))
    throw FormatError("dimension overflow in header at offset " + at(4) +
                      " (" + std::to_string(rows) + "x" +
                      std::to_string(cols) + ")");
  const std::uint64_t payload = rows * cols * 8;
  if (length < 20 + payload)
    throw FormatError("truncated payload at offset " + at(length) +
                      " (expected " + std::to_string(20 + payload) +
                      " bytes)");
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double value = get_f64(bytes + 20 + 8 * i);
    if (!std::isfinite(value))
      throw FormatError("non-finite value at offset " + at(20 + 8 * i));
    m.data()[i] = value;
  }
  return m;
}

void save_fmx(const Matrix& m, const std::string& path) {
  if (m.empty()) throw ContractViolation("save_fmx: empty matrix");
  write_file(encode_fmx(m), path);
}

Matrix load_fmx(const std::string& path) {
  const auto bytes = read_file(path);
  Matrix m = decode_fmx(bytes.data(), bytes.size());
  if (bytes.size() != 20 + 8 * m.size())
    throw FormatError("trailing bytes at offset " +
                      std::to_string(20 + 8 * m.size()) + " in '" + path +
                      "'");
  return m;
}

Matrix load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double value = std::stod(cell, &used);
        while (used < cell.size() &&
               std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        if (!std::isfinite(value)) throw std::invalid_argument(cell);
        row.push_back(value);
      } catch (const std::exception&) {
        throw FormatError("bad numeric cell '" + cell + "' at line " +
                          std::to_string(line_no) + " of '" + path + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError("ragged row at line " + std::to_string(line_no) +
                        " of '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty())
    throw FormatError("no data in '" + path + "'");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Matrix load_matrix_auto(const std::string& stem) {
  namespace fs = std::filesystem;
  const std::string fmx = stem + ".fmx";
  const std::string csv = stem + ".csv";
  if (fs::exists(fmx)) return load_fmx(fmx);
  if (fs::exists(csv)) return load_csv_matrix(csv);
  throw FormatError("no matrix file found for '" + stem +
                    "' (tried .fmx and .csv)");
}

std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      const int value = std::stoi(line, &used);
      while (used < line.size() &&
             std::isspace(static_cast<unsigned char>(line[used])))
        ++used;
      if (used != line.size() || value < 0) throw std::invalid_argument(line);
      labels.push_back(value);
    } catch (const std::exception&) {
      throw FormatError("bad label '" + line + "' at line " +
                        std::to_string(line_no) + " of '" + path + "'");
    }
  }
  if (labels.empty()) throw FormatError("no labels in '" + path + "'");
  return labels;
}

void save_labels(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  for (int label : labels) out << label << '\n';
  if (!out) throw FormatError("failed writing '" + path + "'");
}

std::vector<std::string> load_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

void save_lines(const std::vector<std::string>& lines,
                const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  for (const auto& line : lines) out << line << '\n';
  if (!out) throw FormatError("failed writing '" + path + "'");
}

}  // namespace divafn
