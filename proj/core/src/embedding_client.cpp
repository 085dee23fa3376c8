#include "lanid/embedding_client.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lanid/rng.hpp"

namespace lanid {

using nlohmann::json;

namespace {

// Splits "http://host:port/some/path" into base url and path. A missing
// path falls back to /embed, the service's single endpoint.
std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, "/embed"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

const char* api_key_from_env() {
  if (const char* key = std::getenv("LANID_API_KEY")) return key;
  return std::getenv("OPENAI_API_KEY");
}

}  // namespace

EmbeddingClient::EmbeddingClient(EmbeddingClientConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) throw std::invalid_argument("embedding service url is empty");
  if (config_.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (config_.parallelism == 0) throw std::invalid_argument("parallelism must be positive");
  std::tie(base_url_, path_) = split_url(config_.url);
  load_disk_cache();
}

void EmbeddingClient::load_disk_cache() {
  if (config_.cache_path.empty()) return;
  std::ifstream in(config_.cache_path);
  if (!in) return;  // nothing cached yet
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("h") || !rec.contains("v")) continue;
    std::uint64_t h = std::stoull(rec["h"].get<std::string>(), nullptr, 16);
    cache_[h] = rec["v"].get<std::vector<double>>();
  }
}

void EmbeddingClient::append_disk_cache(
    const std::vector<std::pair<std::uint64_t, std::vector<double>>>& rows) {
  if (config_.cache_path.empty() || rows.empty()) return;
  std::ofstream out(config_.cache_path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append embedding cache: " + config_.cache_path.string());
  char hex[17];
  for (const auto& [h, v] : rows) {
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    json rec;
    rec["h"] = hex;
    rec["v"] = v;
    out << rec.dump() << '\n';
  }
}

EmbeddingMatrix EmbeddingClient::fetch(const std::vector<std::string>& texts) {
  if (texts.empty()) throw std::invalid_argument("fetch called with no texts");

  std::vector<std::uint64_t> hashes(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) hashes[i] = hash_string(texts[i]);

  // Unique texts missing from the cache, in first-occurrence order.
  std::vector<std::size_t> miss_indices;
  {
    std::unordered_map<std::uint64_t, std::size_t> seen;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (cache_.count(hashes[i]) || seen.count(hashes[i])) continue;
      seen.emplace(hashes[i], i);
      miss_indices.push_back(i);
    }
  }

  if (!miss_indices.empty()) {
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < miss_indices.size(); start += config_.batch_size) {
      std::size_t end = std::min(start + config_.batch_size, miss_indices.size());
      batches.emplace_back(miss_indices.begin() + start, miss_indices.begin() + end);
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::string first_error;
    std::vector<std::pair<std::uint64_t, std::vector<double>>> fetched;

    auto worker = [&] {
      httplib::Client client(base_url_);
      client.set_connection_timeout(config_.timeout_sec, 0);
      client.set_read_timeout(config_.timeout_sec, 0);
      httplib::Headers headers;
      if (const char* key = api_key_from_env())
        headers.emplace("Authorization", std::string("Bearer ") + key);

      for (;;) {
        std::size_t b = next.fetch_add(1);
        if (b >= batches.size()) return;
        {
          std::lock_guard lock(error_mutex);
          if (!first_error.empty()) return;  // stop early, a batch already failed
        }
        const auto& batch = batches[b];
        json request;
        auto& arr = request["texts"] = json::array();
        for (std::size_t idx : batch) arr.push_back(texts[idx]);
        const std::string body = request.dump();

        std::string error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
          if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config_.backoff_ms << (attempt - 1)));
          {
            std::lock_guard lock(mutex_);
            ++requests_;
          }
          auto res = client.Post(path_, headers, body, "application/json");
          if (!res) {
            error = "transport error: " + httplib::to_string(res.error());
            continue;
          }
          if (res->status != 200) {
            error = "http status " + std::to_string(res->status);
            continue;
          }
          json parsed = json::parse(res->body, nullptr, false);
          if (parsed.is_discarded() || !parsed.contains("vectors") ||
              !parsed["vectors"].is_array()) {
            error = "malformed response body";
            continue;
          }
          const auto& vectors = parsed["vectors"];
          if (vectors.size() != batch.size()) {
            // A short response is a contract violation, not retryable noise.
            error = "partial batch: requested " + std::to_string(batch.size()) + " vectors, got " +
                    std::to_string(vectors.size());
            break;
          }
          std::vector<std::vector<double>> rows;
          try {
            rows.reserve(batch.size());
            for (std::size_t j = 0; j < batch.size(); ++j)
              rows.push_back(vectors[j].get<std::vector<double>>());
          } catch (const json::exception& e) {
            error = std::string("malformed vector in response: ") + e.what();
            continue;
          }
          std::lock_guard lock(mutex_);
          for (std::size_t j = 0; j < batch.size(); ++j) {
            cache_[hashes[batch[j]]] = rows[j];
            fetched.emplace_back(hashes[batch[j]], std::move(rows[j]));
          }
          error.clear();
          break;
        }
        if (!error.empty()) {
          std::lock_guard lock(error_mutex);
          if (first_error.empty())
            first_error = "embedding fetch failed for batch " + std::to_string(b) + ": " + error;
          return;
        }
      }
    };

    std::size_t n_workers = std::min(config_.parallelism, batches.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (!first_error.empty()) throw std::runtime_error(first_error);
    append_disk_cache(fetched);
  }

  std::size_t dim = cache_.at(hashes[0]).size();
  EmbeddingMatrix out(texts.size(), dim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto& v = cache_.at(hashes[i]);
    if (v.size() != dim)
      throw std::runtime_error("embedding dimension mismatch: row " + std::to_string(i) + " has " +
                               std::to_string(v.size()) + ", expected " + std::to_string(dim));
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  out.check_finite("embedding service response");
  return out;
}

EmbeddingMatrix fetch_embeddings(const std::string& url, const std::vector<std::string>& texts,
                                 const EmbeddingClientConfig& config) {
  EmbeddingClientConfig cfg = config;
  cfg.url = url;
  EmbeddingClient client(std::move(cfg));
  return client.fetch(texts);
}

}  // namespace lanid
