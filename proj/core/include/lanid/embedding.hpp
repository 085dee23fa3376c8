#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lanid {

/// Dense row-major matrix of embedding vectors. Row i belongs to utterance
/// id i of the split identified by `fingerprint` (0 when unbound).
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t n, std::size_t dim);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return n_ == 0; }

  std::span<const double> row(std::size_t i) const;
  std::span<double> row(std::size_t i);

  double at(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool normalized = false;
  std::uint64_t fingerprint = 0;

  /// Throws if any entry is NaN or infinite.
  void check_finite(const std::string& origin) const;

  /// Scales every row to unit Euclidean norm. Zero rows raise.
  void normalize_rows();

 private:
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

enum class EmbeddingFileFormat { binary, csv };

/// Reads an embedding matrix. Binary files carry a "LEMB" magic followed by
/// u32 row count, u32 dimension and float32 little-endian data; anything
/// else is parsed as CSV, one row per line. Row count must match
/// expected_n and every entry must be finite.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, std::size_t expected_n,
                                bool normalize = true);

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path,
                     EmbeddingFileFormat format);

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

}  // namespace lanid
