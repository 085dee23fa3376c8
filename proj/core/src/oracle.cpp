#include "lanid/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lanid/rng.hpp"

namespace lanid {

using nlohmann::json;

namespace {

constexpr const char* kYesNoPhrase = "just answer yes or no";

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_'; }

std::size_t count_placeholder(const std::string& text, const std::string& placeholder) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(placeholder); pos != std::string::npos;
       pos = text.find(placeholder, pos + placeholder.size()))
    ++count;
  return count;
}

std::string replace_once(std::string text, const std::string& placeholder,
                         const std::string& value) {
  auto pos = text.find(placeholder);
  text.replace(pos, placeholder.size(), value);
  return text;
}

const char* api_key_from_env() {
  if (const char* key = std::getenv("LANID_API_KEY")) return key;
  return std::getenv("OPENAI_API_KEY");
}

}  // namespace

std::uint64_t PromptTemplate::hash() const {
  std::uint64_t h = hash_string(schema_text);
  h = hash_combine(h, hash_string(regulations_text));
  h = hash_combine(h, hash_string(pair_slot_format));
  return h;
}

PromptTemplate default_template() {
  PromptTemplate t;
  t.name = "default";
  t.schema_text = "Do the following two user utterances express the same intent?";
  t.regulations_text = "Please just answer yes or no.";
  t.pair_slot_format = "Utterance 1: \"{a}\"\nUtterance 2: \"{b}\"";
  return t;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open template file: " + path.string());
  PromptTemplate t;
  t.name = path.stem().string();
  std::map<std::string, std::string> sections;
  std::string current;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
      current = line.substr(1, line.size() - 2);
      continue;
    }
    if (current.empty()) {
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      throw std::runtime_error(path.string() + ": text before the first section header");
    }
    auto& body = sections[current];
    if (!body.empty()) body += '\n';
    body += line;
  }
  for (const char* name : {"schema", "regulations", "input"})
    if (!sections.count(name))
      throw std::runtime_error(path.string() + ": missing [" + name + "] section");
  auto trim = [](std::string s) {
    auto begin = s.find_first_not_of(" \t\n");
    auto end = s.find_last_not_of(" \t\n");
    return begin == std::string::npos ? std::string() : s.substr(begin, end - begin + 1);
  };
  t.schema_text = trim(sections["schema"]);
  t.regulations_text = trim(sections["regulations"]);
  t.pair_slot_format = trim(sections["input"]);
  validate_template(t);
  return t;
}

void validate_template(const PromptTemplate& tmpl) {
  if (tmpl.schema_text.empty()) throw std::invalid_argument("template schema is empty");
  if (tmpl.regulations_text.find(kYesNoPhrase) == std::string::npos)
    throw std::invalid_argument(std::string("template regulations must contain the phrase \"") +
                                kYesNoPhrase + "\"");
  if (count_placeholder(tmpl.pair_slot_format, "{a}") != 1 ||
      count_placeholder(tmpl.pair_slot_format, "{b}") != 1)
    throw std::invalid_argument(
        "template input slot must contain exactly one {a} and one {b} placeholder");
}

std::string build_prompt(const PromptTemplate& tmpl, const Utterance& a, const Utterance& b,
                         std::size_t max_chars) {
  validate_template(tmpl);
  if (a.text.empty() || b.text.empty())
    throw std::invalid_argument("cannot build a prompt from an empty utterance text");
  std::string slot = replace_once(tmpl.pair_slot_format, "{a}", a.text);
  slot = replace_once(slot, "{b}", b.text);
  std::string prompt = tmpl.schema_text + "\n" + tmpl.regulations_text + "\n" + slot;
  if (max_chars > 0 && prompt.size() > max_chars)
    throw std::runtime_error("prompt for pair (" + std::to_string(a.id) + ", " +
                             std::to_string(b.id) + ") exceeds the provider limit of " +
                             std::to_string(max_chars) + " characters");
  return prompt;
}

int parse_response(const std::string& raw) {
  for (std::size_t i = 0; i + 3 <= raw.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(raw[i])) != 'y' ||
        std::tolower(static_cast<unsigned char>(raw[i + 1])) != 'e' ||
        std::tolower(static_cast<unsigned char>(raw[i + 2])) != 's')
      continue;
    bool left_ok = i == 0 || !is_word_char(static_cast<unsigned char>(raw[i - 1]));
    bool right_ok = i + 3 == raw.size() || !is_word_char(static_cast<unsigned char>(raw[i + 3]));
    if (left_ok && right_ok) return 1;
  }
  return 0;
}

std::string to_string(OracleProvider provider) {
  switch (provider) {
    case OracleProvider::llm: return "llm";
    case OracleProvider::simulated: return "simulated";
    case OracleProvider::labeled_shortcut: return "labeled_shortcut";
  }
  return "simulated";
}

OracleProvider provider_from_string(const std::string& name) {
  if (name == "llm") return OracleProvider::llm;
  if (name == "simulated") return OracleProvider::simulated;
  if (name == "labeled_shortcut") return OracleProvider::labeled_shortcut;
  throw std::invalid_argument("unknown oracle provider: " + name);
}

namespace {

class HttpChatTransport : public ChatTransport {
 public:
  HttpChatTransport(std::string url, int max_retries, int backoff_ms, int timeout_sec)
      : max_retries_(max_retries), backoff_ms_(backoff_ms), timeout_sec_(timeout_sec) {
    auto scheme_end = url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
      base_url_ = url;
      path_ = "/v1/chat/completions";
    } else {
      base_url_ = url.substr(0, path_start);
      path_ = url.substr(path_start);
    }
  }

  std::string complete(const std::string& model, const std::string& prompt) override {
    json request;
    request["model"] = model;
    request["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
    const std::string body = request.dump();

    std::string error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms_ << (attempt - 1)));
      // One client per call keeps concurrent dispatch threads independent.
      httplib::Client client(base_url_);
      client.set_connection_timeout(timeout_sec_, 0);
      client.set_read_timeout(timeout_sec_, 0);
      httplib::Headers headers;
      if (const char* key = api_key_from_env())
        headers.emplace("Authorization", std::string("Bearer ") + key);
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
      if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty() ||
          !parsed["choices"][0].contains("message") ||
          !parsed["choices"][0]["message"].contains("content")) {
        error = "malformed chat completion response";
        continue;
      }
      return parsed["choices"][0]["message"]["content"].get<std::string>();
    }
    throw std::runtime_error("chat completion failed after " + std::to_string(max_retries_ + 1) +
                             " attempts: " + error);
  }

 private:
  std::string base_url_;
  std::string path_;
  int max_retries_;
  int backoff_ms_;
  int timeout_sec_;
};

}  // namespace

std::unique_ptr<ChatTransport> make_http_transport(const std::string& url, int max_retries,
                                                   int backoff_ms, int timeout_sec) {
  return std::make_unique<HttpChatTransport>(url, max_retries, backoff_ms, timeout_sec);
}

OracleManager::OracleManager(OracleConfig config, PromptTemplate tmpl,
                             std::shared_ptr<ChatTransport> transport)
    : config_(std::move(config)), template_(std::move(tmpl)), transport_(std::move(transport)) {
  if (config_.noise_rate < 0.0 || config_.noise_rate > 1.0)
    throw std::invalid_argument("noise_rate must lie in [0, 1]");
  if (config_.request_parallelism == 0)
    throw std::invalid_argument("request_parallelism must be positive");
  validate_template(template_);
  auto needs_llm = [](OracleProvider p) { return p == OracleProvider::llm; };
  if ((needs_llm(config_.provider) ||
       (config_.provider == OracleProvider::labeled_shortcut && needs_llm(config_.fallback))) &&
      !transport_) {
    if (config_.endpoint.empty())
      throw std::invalid_argument("llm provider requires an endpoint or an injected transport");
    transport_ = make_http_transport(config_.endpoint, config_.max_retries, config_.backoff_ms);
  }
  load_disk_cache();
}

std::string OracleManager::cache_key(const CandidatePair& pair, const DatasetBundle& bundle) const {
  std::uint64_t h1 = hash_string(bundle.train_at(pair.anchor_id).text);
  std::uint64_t h2 = hash_string(bundle.train_at(pair.other_id).text);
  if (h1 > h2) std::swap(h1, h2);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s|%016llx|%016llx|%016llx", config_.model_name.c_str(),
                static_cast<unsigned long long>(template_.hash()),
                static_cast<unsigned long long>(h1), static_cast<unsigned long long>(h2));
  return buf;
}

void OracleManager::load_disk_cache() {
  if (config_.cache_path.empty()) return;
  std::ifstream in(config_.cache_path);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("key") || !rec.contains("r")) continue;
    CacheEntry entry;
    entry.r = rec["r"].get<int>();
    entry.raw_response = rec.value("raw", "");
    entry.provider = provider_from_string(rec.value("provider", "simulated"));
    cache_[rec["key"].get<std::string>()] = std::move(entry);
  }
}

void OracleManager::append_disk_cache(
    const std::vector<std::pair<std::string, CacheEntry>>& rows) {
  if (config_.cache_path.empty() || rows.empty()) return;
  std::ofstream out(config_.cache_path, std::ios::app);
  if (!out)
    throw std::runtime_error("cannot append oracle cache: " + config_.cache_path.string());
  for (const auto& [key, entry] : rows) {
    json rec;
    rec["key"] = key;
    rec["r"] = entry.r;
    rec["raw"] = entry.raw_response;
    rec["provider"] = to_string(entry.provider);
    out << rec.dump() << '\n';
  }
}

AnnotateResult OracleManager::annotate_pairs(const std::vector<CandidatePair>& pairs,
                                             const DatasetBundle& bundle) {
  if (pairs.empty()) throw std::invalid_argument("annotate_pairs called with no pairs");

  AnnotateResult result;
  const bool shortcut = config_.provider == OracleProvider::labeled_shortcut;
  const OracleProvider effective =
      shortcut ? config_.fallback : config_.provider;

  auto ground_truth = [&](const CandidatePair& p) {
    const auto& la = bundle.true_label(p.anchor_id);
    const auto& lb = bundle.true_label(p.other_id);
    if (!la || !lb)
      throw std::runtime_error("simulated oracle needs ground-truth labels for pair (" +
                               std::to_string(p.anchor_id) + ", " +
                               std::to_string(p.other_id) + ")");
    return *la == *lb ? 1 : 0;
  };

  // Pass 1: resolve shortcut pairs, split the rest into cache hits and
  // unique misses (first occurrence keeps the slot, duplicates share it).
  std::vector<int> shortcut_r(pairs.size(), -1);
  std::vector<std::string> keys(pairs.size());
  std::vector<std::string> miss_keys;
  std::vector<std::size_t> miss_pair_index;  // representative input index per miss
  std::unordered_map<std::string, std::size_t> miss_slot;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.anchor_id == p.other_id)
      throw std::invalid_argument("self-pair in annotate input: id " +
                                  std::to_string(p.anchor_id));
    if (shortcut && bundle.is_labeled(p.anchor_id) && bundle.is_labeled(p.other_id)) {
      shortcut_r[i] = ground_truth(p);
      ++result.shortcut_hits;
      continue;
    }
    keys[i] = cache_key(p, bundle);
    if (cache_.count(keys[i])) {
      ++result.cache_hits;
    } else if (!miss_slot.count(keys[i])) {
      miss_slot.emplace(keys[i], miss_keys.size());
      miss_keys.push_back(keys[i]);
      miss_pair_index.push_back(i);
    }
  }

  // Pass 2: dispatch unique misses through the effective provider.
  std::vector<std::optional<CacheEntry>> outcomes(miss_keys.size());
  if (!miss_keys.empty()) {
    if (effective == OracleProvider::simulated) {
      for (std::size_t m = 0; m < miss_keys.size(); ++m) {
        const auto& p = pairs[miss_pair_index[m]];
        int equal = ground_truth(p);
        // Per-pair seeded flip: reproducible and independent of both input
        // order and cache state.
        auto noise_rng = make_rng(derive_seed(config_.seed, "noise", hash_string(miss_keys[m])));
        bool flip = config_.noise_rate > 0.0 && uniform_unit(noise_rng) < config_.noise_rate;
        CacheEntry entry;
        entry.r = flip ? 1 - equal : equal;
        entry.raw_response = entry.r ? "yes" : "no";
        entry.provider = OracleProvider::simulated;
        outcomes[m] = std::move(entry);
        ++result.dispatched;
      }
    } else {
      std::atomic<std::size_t> next{0};
      std::atomic<std::size_t> dispatched{0};
      auto worker = [&] {
        for (;;) {
          std::size_t m = next.fetch_add(1);
          if (m >= miss_keys.size()) return;
          const auto& p = pairs[miss_pair_index[m]];
          try {
            std::string prompt = build_prompt(template_, bundle.train_at(p.anchor_id),
                                              bundle.train_at(p.other_id),
                                              config_.max_prompt_chars);
            dispatched.fetch_add(1);
            std::string raw = transport_->complete(config_.model_name, prompt);
            CacheEntry entry;
            entry.r = parse_response(raw);
            entry.raw_response = std::move(raw);
            entry.provider = OracleProvider::llm;
            outcomes[m] = std::move(entry);
          } catch (const std::exception&) {
            // Leave the outcome empty; the pair is excluded and counted.
          }
        }
      };
      std::size_t n_workers = std::min(config_.request_parallelism, miss_keys.size());
      std::vector<std::thread> threads;
      for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
      result.dispatched = dispatched.load();
    }

    std::vector<std::pair<std::string, CacheEntry>> fresh;
    {
      std::lock_guard lock(mutex_);
      for (std::size_t m = 0; m < miss_keys.size(); ++m) {
        if (!outcomes[m]) continue;
        cache_[miss_keys[m]] = *outcomes[m];
        fresh.emplace_back(miss_keys[m], *outcomes[m]);
      }
      dispatched_total_ += result.dispatched;
    }
    append_disk_cache(fresh);
  }

  // Pass 3: assemble in input order; unresolved keys were failures.
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (shortcut_r[i] >= 0) {
      RelationLabel label;
      label.pair = pairs[i];
      label.r = shortcut_r[i];
      label.raw_response = shortcut_r[i] ? "yes" : "no";
      label.provider = OracleProvider::labeled_shortcut;
      result.labels.push_back(std::move(label));
      continue;
    }
    auto it = cache_.find(keys[i]);
    if (it == cache_.end()) {
      ++result.failed;
      continue;
    }
    RelationLabel label;
    label.pair = pairs[i];
    label.r = it->second.r;
    label.raw_response = it->second.raw_response;
    label.provider = it->second.provider;
    result.labels.push_back(std::move(label));
  }
  return result;
}

PromptTemplate select_schema(const std::vector<PromptTemplate>& candidates,
                             const DatasetBundle& bundle, const OracleConfig& config,
                             std::shared_ptr<ChatTransport> transport) {
  if (candidates.empty()) throw std::invalid_argument("select_schema needs at least one candidate");
  if (bundle.mode != Mode::semi_supervised || bundle.labeled_subset.empty())
    throw std::runtime_error("schema selection requires labels");
  if (candidates.size() == 1) return candidates.front();

  // Group the labeled subset by class to draw evaluation pairs.
  std::map<std::string, std::vector<int>> by_class;
  for (int id : bundle.labeled_subset) {
    const auto& label = bundle.true_label(id);
    if (label) by_class[*label].push_back(id);
  }
  std::vector<const std::vector<int>*> classes;
  for (const auto& [label, ids] : by_class) classes.push_back(&ids);

  auto rng = make_rng(derive_seed(config.seed, "schema-eval"));
  std::set<std::pair<int, int>> seen;
  std::vector<CandidatePair> eval_pairs;
  auto add_pair = [&](int a, int b) {
    if (a == b) return;
    auto key = std::minmax(a, b);
    if (!seen.insert({key.first, key.second}).second) return;
    eval_pairs.push_back({a, b, PairSource::knn, 0});
  };

  const std::size_t target = std::max<std::size_t>(1, config.schema_eval_pairs);
  std::vector<const std::vector<int>*> rich;  // classes with >= 2 labeled members
  for (auto* ids : classes)
    if (ids->size() >= 2) rich.push_back(ids);
  for (std::size_t attempt = 0, made = 0; made < target && attempt < target * 20; ++attempt) {
    if (rich.empty()) break;
    const auto& ids = *rich[uniform_index(rng, rich.size())];
    auto picks = sample_without_replacement(rng, ids.size(), 2);
    std::size_t before = eval_pairs.size();
    add_pair(ids[picks[0]], ids[picks[1]]);
    made += eval_pairs.size() - before;
  }
  for (std::size_t attempt = 0, made = 0; made < target && attempt < target * 20; ++attempt) {
    if (classes.size() < 2) break;
    auto cls = sample_without_replacement(rng, classes.size(), 2);
    const auto& ca = *classes[cls[0]];
    const auto& cb = *classes[cls[1]];
    std::size_t before = eval_pairs.size();
    add_pair(ca[uniform_index(rng, ca.size())], cb[uniform_index(rng, cb.size())]);
    made += eval_pairs.size() - before;
  }
  if (eval_pairs.empty())
    throw std::runtime_error("schema selection requires labels forming at least one pair");

  std::size_t best = 0;
  double best_accuracy = -1.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    OracleConfig eval_config = config;
    eval_config.cache_path.clear();  // keep evaluation out of the run cache
    if (eval_config.provider == OracleProvider::labeled_shortcut)
      eval_config.provider = eval_config.fallback;  // shortcut would trivialize the score
    OracleManager manager(eval_config, candidates[c], transport);
    auto outcome = manager.annotate_pairs(eval_pairs, bundle);
    std::size_t correct = 0;
    for (const auto& label : outcome.labels) {
      int truth = *bundle.true_label(label.pair.anchor_id) ==
                          *bundle.true_label(label.pair.other_id)
                      ? 1
                      : 0;
      if (label.r == truth) ++correct;
    }
    double accuracy = outcome.labels.empty()
                          ? 0.0
                          : static_cast<double>(correct) / static_cast<double>(outcome.labels.size());
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      best = c;
    }
  }
  return candidates[best];
}

}  // namespace lanid
