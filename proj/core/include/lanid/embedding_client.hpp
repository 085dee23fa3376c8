#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "lanid/embedding.hpp"

namespace lanid {

struct EmbeddingClientConfig {
  std::string url;  // e.g. http://127.0.0.1:8080/embed (path defaults to /embed)
  std::size_t batch_size = 64;
  int max_retries = 3;
  int backoff_ms = 100;
  std::size_t parallelism = 4;
  int timeout_sec = 60;
  std::filesystem::path cache_path;  // empty disables the disk cache
};

/// Client for the embedding service: POST {"texts": [...]} returns
/// {"vectors": [[...], ...]}. Results are cached in memory and, when a cache
/// path is configured, appended to a line-delimited file keyed by text hash
/// so interrupted runs resume without refetching.
class EmbeddingClient {
 public:
  explicit EmbeddingClient(EmbeddingClientConfig config);

  /// One vector per input text, order preserving. Retries transient
  /// failures with exponential backoff; a batch whose response row count
  /// disagrees with its request is an error, never a truncation.
  EmbeddingMatrix fetch(const std::vector<std::string>& texts);

  /// Number of HTTP requests actually issued (cache hits excluded).
  std::size_t requests_sent() const { return requests_; }

 private:
  EmbeddingClientConfig config_;
  std::string base_url_;
  std::string path_;
  std::unordered_map<std::uint64_t, std::vector<double>> cache_;
  std::mutex mutex_;
  std::size_t requests_ = 0;

  void load_disk_cache();
  void append_disk_cache(const std::vector<std::pair<std::uint64_t, std::vector<double>>>& rows);
};

/// Convenience wrapper around a throwaway client.
EmbeddingMatrix fetch_embeddings(const std::string& url, const std::vector<std::string>& texts,
                                 const EmbeddingClientConfig& config = {});

}  // namespace lanid
