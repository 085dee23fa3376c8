#include "lanid/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lanid {

namespace {

constexpr char kMagic[4] = {'L', 'E', 'M', 'B'};

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

float read_f32_le(std::istream& in) {
  std::uint32_t bits = read_u32_le(in);
  return std::bit_cast<float>(bits);
}

void write_f32_le(std::ostream& out, float v) { write_u32_le(out, std::bit_cast<std::uint32_t>(v)); }

EmbeddingMatrix load_binary(std::istream& in, const std::string& origin) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(origin + ": bad magic, not an embedding matrix file");
  std::uint32_t n = read_u32_le(in);
  std::uint32_t dim = read_u32_le(in);
  if (!in) throw std::runtime_error(origin + ": truncated header");
  if (dim == 0) throw std::runtime_error(origin + ": zero dimension");
  EmbeddingMatrix m(n, dim);
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    m.data()[i] = static_cast<double>(read_f32_le(in));
    if (!in) throw std::runtime_error(origin + ": truncated data section");
  }
  return m;
}

EmbeddingMatrix load_csv(std::istream& in, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size() && cell.find_first_not_of(" \t", used) != std::string::npos)
          throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw std::runtime_error(origin + ": line " + std::to_string(lineno) +
                                 ": not a number: " + cell);
      }
    }
    if (row.empty())
      throw std::runtime_error(origin + ": line " + std::to_string(lineno) + ": empty row");
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(origin + ": line " + std::to_string(lineno) +
                               ": dimension mismatch, expected " +
                               std::to_string(rows.front().size()) + " got " +
                               std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(origin + ": no rows");
  EmbeddingMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return m;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t n, std::size_t dim)
    : n_(n), dim_(dim), data_(n * dim, 0.0) {}

std::span<const double> EmbeddingMatrix::row(std::size_t i) const {
  if (i >= n_) throw std::out_of_range("embedding row out of range: " + std::to_string(i));
  return {data_.data() + i * dim_, dim_};
}

std::span<double> EmbeddingMatrix::row(std::size_t i) {
  if (i >= n_) throw std::out_of_range("embedding row out of range: " + std::to_string(i));
  return {data_.data() + i * dim_, dim_};
}

void EmbeddingMatrix::check_finite(const std::string& origin) const {
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (!std::isfinite(data_[i]))
      throw std::runtime_error(origin + ": non-finite entry at row " + std::to_string(i / dim_) +
                               " column " + std::to_string(i % dim_));
}

void EmbeddingMatrix::normalize_rows() {
  for (std::size_t i = 0; i < n_; ++i) {
    auto r = row(i);
    double sq = 0.0;
    for (double v : r) sq += v * v;
    if (sq == 0.0)
      throw std::runtime_error("cannot normalize zero embedding row " + std::to_string(i));
    double inv = 1.0 / std::sqrt(sq);
    for (double& v : r) v *= inv;
  }
  normalized = true;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, std::size_t expected_n,
                                bool normalize) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path.string());
  const std::string origin = path.string();

  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  EmbeddingMatrix m = std::memcmp(magic, kMagic, 4) == 0 ? load_binary(in, origin)
                                                         : load_csv(in, origin);
  if (m.size() != expected_n)
    throw std::runtime_error(origin + ": row count " + std::to_string(m.size()) +
                             " does not match dataset size " + std::to_string(expected_n));
  m.check_finite(origin);
  if (normalize) m.normalize_rows();
  return m;
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path,
                     EmbeddingFileFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
  if (format == EmbeddingFileFormat::binary) {
    out.write(kMagic, 4);
    write_u32_le(out, static_cast<std::uint32_t>(matrix.size()));
    write_u32_le(out, static_cast<std::uint32_t>(matrix.dim()));
    for (double v : matrix.data()) write_f32_le(out, static_cast<float>(v));
  } else {
    for (std::size_t i = 0; i < matrix.size(); ++i) {
      auto r = matrix.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (j) out << ',';
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", r[j]);
        out << buf;
      }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    sq += d * d;
  }
  return sq;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

}  // namespace lanid
