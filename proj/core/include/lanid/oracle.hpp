#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "lanid/dataset.hpp"
#include "lanid/pairs.hpp"

namespace lanid {

/// Prompt = schema (task framing) + regulations (answer-format constraint)
/// + pair slot with {a} and {b} placeholders for the two utterance texts.
struct PromptTemplate {
  std::string name = "default";
  std::string schema_text;
  std::string regulations_text;
  std::string pair_slot_format;

  /// Stable content hash, part of every oracle cache key.
  std::uint64_t hash() const;
};

/// Built-in template: binary same-intent question, yes/no regulations.
PromptTemplate default_template();

/// Plain-text template file with [schema] / [regulations] / [input]
/// section headers; all three sections required.
PromptTemplate load_template(const std::filesystem::path& path);

/// Throws when the template is malformed: regulations must contain the
/// phrase "just answer yes or no" and the input slot exactly one {a} and
/// one {b}.
void validate_template(const PromptTemplate& tmpl);

/// schema + regulations + filled pair slot. Empty utterance text is an
/// error; so is exceeding max_chars (0 disables the limit). No truncation.
std::string build_prompt(const PromptTemplate& tmpl, const Utterance& a, const Utterance& b,
                         std::size_t max_chars = 0);

/// 1 iff the response contains "yes" as a word (case-insensitive, neighbors
/// must not be word characters, so "Eyes" does not count). Total function.
int parse_response(const std::string& raw);

enum class OracleProvider { llm, simulated, labeled_shortcut };

std::string to_string(OracleProvider provider);
OracleProvider provider_from_string(const std::string& name);

struct RelationLabel {
  CandidatePair pair;
  int r = 0;
  std::string raw_response;
  OracleProvider provider = OracleProvider::simulated;
};

struct OracleConfig {
  OracleProvider provider = OracleProvider::simulated;
  /// Underlying provider for pairs the labeled shortcut cannot decide.
  OracleProvider fallback = OracleProvider::simulated;
  std::string endpoint;  // llm only, chat-completion URL
  std::string model_name = "gpt-3.5-turbo";
  double noise_rate = 0.0;  // simulated only
  int max_retries = 3;
  int backoff_ms = 100;
  std::size_t request_parallelism = 4;
  std::uint64_t seed = 0;
  std::size_t max_prompt_chars = 8000;
  std::size_t schema_eval_pairs = 50;  // per polarity, for select_schema
  std::filesystem::path cache_path;    // empty disables the disk cache
};

/// Transport for one chat completion round trip. Injectable so tests can
/// count dispatches and script responses.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Returns the assistant message text; throws on failure.
  virtual std::string complete(const std::string& model, const std::string& prompt) = 0;
};

/// HTTP chat-completion transport: POST {"model", "messages":[{"role":
/// "user","content"}]}; reads choices[0].message.content. API key from
/// LANID_API_KEY (or OPENAI_API_KEY) when present. Retries with
/// exponential backoff.
std::unique_ptr<ChatTransport> make_http_transport(const std::string& url, int max_retries,
                                                   int backoff_ms, int timeout_sec = 60);

struct AnnotateResult {
  std::vector<RelationLabel> labels;  // input order, failed pairs excluded
  std::size_t failed = 0;             // input pairs dropped by dispatch failure
  std::size_t dispatched = 0;         // provider calls actually made
  std::size_t cache_hits = 0;         // input pairs answered from cache
  std::size_t shortcut_hits = 0;      // pairs decided by the labeled shortcut
};

/// Labels candidate pairs r(i, j) in {0, 1}. Results are cached under
/// (model, schema hash, unordered text-hash pair), in memory and optionally
/// on disk, so a pair is dispatched at most once per run and reruns resume
/// for free. Failed dispatches are excluded and counted, never defaulted.
class OracleManager {
 public:
  OracleManager(OracleConfig config, PromptTemplate tmpl,
                std::shared_ptr<ChatTransport> transport = nullptr);

  AnnotateResult annotate_pairs(const std::vector<CandidatePair>& pairs,
                                const DatasetBundle& bundle);

  std::size_t dispatch_count() const { return dispatched_total_; }
  const PromptTemplate& prompt_template() const { return template_; }

 private:
  struct CacheEntry {
    int r = 0;
    std::string raw_response;
    OracleProvider provider = OracleProvider::simulated;
  };

  OracleConfig config_;
  PromptTemplate template_;
  std::shared_ptr<ChatTransport> transport_;
  std::unordered_map<std::string, CacheEntry> cache_;
  std::mutex mutex_;
  std::size_t dispatched_total_ = 0;

  std::string cache_key(const CandidatePair& pair, const DatasetBundle& bundle) const;
  void load_disk_cache();
  void append_disk_cache(const std::vector<std::pair<std::string, CacheEntry>>& rows);
};

/// Scores every candidate template on seeded same/different-label pairs
/// from the labeled subset and returns the most accurate one, earlier
/// candidate winning ties. Requires semi-supervised mode with labels.
PromptTemplate select_schema(const std::vector<PromptTemplate>& candidates,
                             const DatasetBundle& bundle, const OracleConfig& config,
                             std::shared_ptr<ChatTransport> transport = nullptr);

}  // namespace lanid
