#include "lanid/config.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lanid/rng.hpp"

namespace lanid {

using nlohmann::json;

std::string to_string(EmbeddingSource source) {
  return source == EmbeddingSource::file ? "file" : "service";
}

EmbeddingSource embedding_source_from_string(const std::string& name) {
  if (name == "file") return EmbeddingSource::file;
  if (name == "service") return EmbeddingSource::service;
  throw std::invalid_argument("unknown embedding source: " + name);
}

RunConfig preset(const std::string& name) {
  RunConfig config;
  config.name = name;
  config.sampler.knn_k = 50;
  config.sampler.pairs_per_anchor = 2;
  config.sampler.min_pts = 4;
  config.train.negatives_per_pair = 2;
  if (name == "banking") {
    config.sampler.sample_fraction = 0.1;
    config.sampler.core_neighbors = 5;
    config.train.resample_period = 3;
    config.train.epochs = 10;
  } else if (name == "stackoverflow") {
    config.sampler.sample_fraction = 0.05;
    config.sampler.core_neighbors = 8;
    config.train.resample_period = 2;
    config.train.epochs = 10;
  } else if (name == "mcid") {
    config.sampler.sample_fraction = 0.2;
    config.sampler.core_neighbors = 5;
    config.train.resample_period = 3;
    config.train.epochs = 20;
  } else {
    throw std::invalid_argument("unknown preset: " + name +
                                " (expected banking, stackoverflow or mcid)");
  }
  return config;
}

std::vector<std::string> preset_names() { return {"banking", "stackoverflow", "mcid"}; }

std::vector<std::string> validate_config(const RunConfig& config) {
  std::vector<std::string> violations;
  auto complain = [&](const std::string& message) { violations.push_back(message); };

  if (config.dataset_path.empty()) complain("dataset_path must be set");
  if (config.embedding_source == EmbeddingSource::file && config.train_embeddings.empty())
    complain("train_embeddings must be set when embedding_source is file");
  if (config.embedding_source == EmbeddingSource::service && config.embedding_url.empty())
    complain("embedding_url must be set when embedding_source is service");

  if (config.mode == Mode::semi_supervised) {
    if (config.kcr <= 0.0 || config.kcr >= 1.0)
      complain("kcr must lie strictly between 0 and 1 in semi-supervised mode");
    if (config.labeled_fraction <= 0.0 || config.labeled_fraction > 1.0)
      complain("labeled_fraction must lie in (0, 1]");
  }

  const auto& s = config.sampler;
  if (s.sample_fraction <= 0.0 || s.sample_fraction > 1.0)
    complain("sampler.sample_fraction (p) must lie in (0, 1]");
  if (s.knn_k == 0) complain("sampler.knn_k (K) must be positive");
  if (s.pairs_per_anchor == 0) complain("sampler.pairs_per_anchor (n_k) must be positive");
  if (s.pairs_per_anchor >= s.knn_k) complain("sampler.pairs_per_anchor (n_k) must be < knn_k (K)");
  if (s.core_neighbors == 0) complain("sampler.core_neighbors (m) must be positive");
  if (s.min_pts == 0) complain("sampler.min_pts must be positive");
  if (s.eps && *s.eps <= 0.0) complain("sampler.eps must be positive when set");
  if (s.eps_quantile <= 0.0 || s.eps_quantile >= 1.0)
    complain("sampler.eps_quantile must lie strictly between 0 and 1");

  const auto& o = config.oracle;
  if (o.noise_rate < 0.0 || o.noise_rate > 1.0) complain("oracle.noise_rate must lie in [0, 1]");
  if (o.request_parallelism == 0) complain("oracle.request_parallelism must be >= 1");
  if (o.provider == OracleProvider::llm && o.endpoint.empty())
    complain("oracle.endpoint must be set for the llm provider");
  if (o.provider == OracleProvider::labeled_shortcut) {
    if (config.mode != Mode::semi_supervised)
      complain("oracle.provider labeled_shortcut requires semi-supervised mode");
    if (o.fallback == OracleProvider::labeled_shortcut)
      complain("oracle.fallback must be llm or simulated");
    if (o.fallback == OracleProvider::llm && o.endpoint.empty())
      complain("oracle.endpoint must be set for the llm fallback");
  }

  const auto& t = config.train;
  if (t.negatives_per_pair == 0) complain("train.negatives_per_pair (k_n) must be >= 1");
  if (t.margin < 0.0) complain("train.margin must be nonnegative");
  if (t.resample_period == 0) complain("train.resample_period (T) must be >= 1");
  if (t.epochs == 0) complain("train.epochs must be >= 1");
  if (t.learning_rate <= 0.0) complain("train.learning_rate must be positive");
  if (t.batch_size == 0) complain("train.batch_size must be positive");
  if (t.hidden_dim == 0) complain("train.hidden_dim must be positive");

  if (config.kmeans.restarts == 0) complain("kmeans.restarts must be positive");
  if (config.kmeans.max_iter == 0) complain("kmeans.max_iter must be positive");
  if (config.kmeans.tol <= 0.0) complain("kmeans.tol must be positive");
  if (config.output_dir.empty()) complain("output_dir must be set");
  return violations;
}

namespace {

json to_json(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  j["dataset"] = {{"path", c.dataset_path.string()}, {"format", to_string(c.dataset_format)}};
  j["embeddings"] = {{"source", to_string(c.embedding_source)},
                     {"train", c.train_embeddings.string()},
                     {"test", c.test_embeddings.string()},
                     {"validation", c.validation_embeddings.string()},
                     {"url", c.embedding_url},
                     {"normalize", c.normalize_embeddings}};
  j["mode"] = to_string(c.mode);
  j["kcr"] = c.kcr;
  j["labeled_fraction"] = c.labeled_fraction;
  j["variant"] = to_string(c.variant);
  j["sampler"] = {{"knn_k", c.sampler.knn_k},
                  {"sample_fraction", c.sampler.sample_fraction},
                  {"pairs_per_anchor", c.sampler.pairs_per_anchor},
                  {"core_neighbors", c.sampler.core_neighbors},
                  {"min_pts", c.sampler.min_pts},
                  {"eps", c.sampler.eps ? json(*c.sampler.eps) : json(nullptr)},
                  {"eps_quantile", c.sampler.eps_quantile}};
  j["oracle"] = {{"provider", to_string(c.oracle.provider)},
                 {"fallback", to_string(c.oracle.fallback)},
                 {"endpoint", c.oracle.endpoint},
                 {"model_name", c.oracle.model_name},
                 {"noise_rate", c.oracle.noise_rate},
                 {"max_retries", c.oracle.max_retries},
                 {"backoff_ms", c.oracle.backoff_ms},
                 {"request_parallelism", c.oracle.request_parallelism},
                 {"max_prompt_chars", c.oracle.max_prompt_chars},
                 {"schema_eval_pairs", c.oracle.schema_eval_pairs},
                 {"cache_path", c.oracle.cache_path.string()}};
  j["train"] = {{"negatives_per_pair", c.train.negatives_per_pair},
                {"margin", c.train.margin},
                {"resample_period", c.train.resample_period},
                {"epochs", c.train.epochs},
                {"learning_rate", c.train.learning_rate},
                {"batch_size", c.train.batch_size},
                {"hidden_dim", c.train.hidden_dim}};
  j["templates"] = json::array();
  for (const auto& path : c.template_paths) j["templates"].push_back(path.string());
  j["cluster"] = {{"k", c.cluster_k},
                  {"restarts", c.kmeans.restarts},
                  {"max_iter", c.kmeans.max_iter},
                  {"tol", c.kmeans.tol}};
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir.string();
  return j;
}

RunConfig from_json(const json& j) {
  RunConfig c;
  c.name = j.value("name", c.name);
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    c.dataset_path = d.value("path", std::string());
    if (d.contains("format")) c.dataset_format = format_from_string(d["format"].get<std::string>());
  }
  if (j.contains("embeddings")) {
    const auto& e = j["embeddings"];
    if (e.contains("source"))
      c.embedding_source = embedding_source_from_string(e["source"].get<std::string>());
    c.train_embeddings = e.value("train", std::string());
    c.test_embeddings = e.value("test", std::string());
    c.validation_embeddings = e.value("validation", std::string());
    c.embedding_url = e.value("url", std::string());
    c.normalize_embeddings = e.value("normalize", c.normalize_embeddings);
  }
  if (j.contains("mode")) c.mode = mode_from_string(j["mode"].get<std::string>());
  c.kcr = j.value("kcr", c.kcr);
  c.labeled_fraction = j.value("labeled_fraction", c.labeled_fraction);
  if (j.contains("variant")) c.variant = variant_from_string(j["variant"].get<std::string>());
  if (j.contains("sampler")) {
    const auto& s = j["sampler"];
    c.sampler.knn_k = s.value("knn_k", c.sampler.knn_k);
    c.sampler.sample_fraction = s.value("sample_fraction", c.sampler.sample_fraction);
    c.sampler.pairs_per_anchor = s.value("pairs_per_anchor", c.sampler.pairs_per_anchor);
    c.sampler.core_neighbors = s.value("core_neighbors", c.sampler.core_neighbors);
    c.sampler.min_pts = s.value("min_pts", c.sampler.min_pts);
    if (s.contains("eps") && !s["eps"].is_null()) c.sampler.eps = s["eps"].get<double>();
    c.sampler.eps_quantile = s.value("eps_quantile", c.sampler.eps_quantile);
  }
  if (j.contains("oracle")) {
    const auto& o = j["oracle"];
    if (o.contains("provider"))
      c.oracle.provider = provider_from_string(o["provider"].get<std::string>());
    if (o.contains("fallback"))
      c.oracle.fallback = provider_from_string(o["fallback"].get<std::string>());
    c.oracle.endpoint = o.value("endpoint", c.oracle.endpoint);
    c.oracle.model_name = o.value("model_name", c.oracle.model_name);
    c.oracle.noise_rate = o.value("noise_rate", c.oracle.noise_rate);
    c.oracle.max_retries = o.value("max_retries", c.oracle.max_retries);
    c.oracle.backoff_ms = o.value("backoff_ms", c.oracle.backoff_ms);
    c.oracle.request_parallelism = o.value("request_parallelism", c.oracle.request_parallelism);
    c.oracle.max_prompt_chars = o.value("max_prompt_chars", c.oracle.max_prompt_chars);
    c.oracle.schema_eval_pairs = o.value("schema_eval_pairs", c.oracle.schema_eval_pairs);
    c.oracle.cache_path = o.value("cache_path", std::string());
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    c.train.negatives_per_pair = t.value("negatives_per_pair", c.train.negatives_per_pair);
    c.train.margin = t.value("margin", c.train.margin);
    c.train.resample_period = t.value("resample_period", c.train.resample_period);
    c.train.epochs = t.value("epochs", c.train.epochs);
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.hidden_dim = t.value("hidden_dim", c.train.hidden_dim);
  }
  if (j.contains("templates"))
    for (const auto& path : j["templates"]) c.template_paths.emplace_back(path.get<std::string>());
  if (j.contains("cluster")) {
    const auto& k = j["cluster"];
    c.cluster_k = k.value("k", c.cluster_k);
    c.kmeans.restarts = k.value("restarts", c.kmeans.restarts);
    c.kmeans.max_iter = k.value("max_iter", c.kmeans.max_iter);
    c.kmeans.tol = k.value("tol", c.kmeans.tol);
  }
  c.master_seed = j.value("master_seed", c.master_seed);
  c.output_dir = j.value("output_dir", c.output_dir.string());
  return c;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return from_json(j);
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open config for writing: " + path.string());
  out << to_json(config).dump(2) << '\n';
}

std::string config_to_json_string(const RunConfig& config) { return to_json(config).dump(2); }

RunConfig config_from_json_string(const std::string& text) { return from_json(json::parse(text)); }

std::uint64_t config_hash(const RunConfig& config) {
  return hash_string(config_to_json_string(config));
}

}  // namespace lanid
