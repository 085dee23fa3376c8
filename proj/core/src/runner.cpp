#include "lanid/runner.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lanid/embedding_client.hpp"
#include "lanid/rng.hpp"

namespace lanid {

using nlohmann::json;

namespace {

struct PreparedRun {
  DatasetBundle bundle;
  EmbeddingMatrix train;
  EmbeddingMatrix test;
  std::vector<int> truth;  // encoded test labels
  std::size_t k = 0;
  PromptTemplate tmpl;
};

EmbeddingMatrix embeddings_for_split(const RunConfig& config,
                                     const std::vector<Utterance>& split,
                                     const std::filesystem::path& file) {
  if (config.embedding_source == EmbeddingSource::file)
    return load_embeddings(file, split.size(), config.normalize_embeddings);
  EmbeddingClientConfig client_config;
  client_config.url = config.embedding_url;
  std::vector<std::string> texts;
  texts.reserve(split.size());
  for (const auto& u : split) texts.push_back(u.text);
  EmbeddingClient client(client_config);
  EmbeddingMatrix matrix = client.fetch(texts);
  if (config.normalize_embeddings) matrix.normalize_rows();
  return matrix;
}

PreparedRun prepare(const RunConfig& config, std::shared_ptr<ChatTransport> transport) {
  // epochs = 0 is accepted here as the explicit no-training sentinel;
  // every other config rule still applies.
  RunConfig checked = config;
  if (checked.train.epochs == 0) checked.train.epochs = 1;
  auto violations = validate_config(checked);
  if (!violations.empty()) {
    std::ostringstream message;
    message << "invalid config (" << violations.size() << " violations):";
    for (const auto& v : violations) message << "\n  - " << v;
    throw std::invalid_argument(message.str());
  }

  PreparedRun run;
  run.bundle = load_dataset(config.dataset_path, config.dataset_format);
  if (config.mode == Mode::semi_supervised)
    apply_known_class_split(run.bundle, config.kcr, config.labeled_fraction,
                            derive_seed(config.master_seed, "kcr-split"));

  run.train = embeddings_for_split(config, run.bundle.train, config.train_embeddings);
  run.train.fingerprint = run.bundle.train_fingerprint();

  if (run.bundle.test.empty()) {
    // Single-split dataset: evaluation reuses the train utterances.
    run.bundle.test = run.bundle.train;
    run.test = run.train;
    run.test.fingerprint = run.bundle.test_fingerprint();
  } else {
    if (config.embedding_source == EmbeddingSource::file && config.test_embeddings.empty())
      throw std::runtime_error("dataset has a test split but test_embeddings is not set");
    run.test = embeddings_for_split(config, run.bundle.test, config.test_embeddings);
    run.test.fingerprint = run.bundle.test_fingerprint();
  }

  std::vector<std::string> labels;
  labels.reserve(run.bundle.test.size());
  for (const auto& u : run.bundle.test) {
    if (!u.label)
      throw std::runtime_error("test utterance " + std::to_string(u.id) +
                               " has no label; scoring needs ground truth");
    labels.push_back(*u.label);
  }
  run.truth = encode_labels(labels);

  run.k = config.cluster_k;
  if (run.k == 0) run.k = distinct_labels(run.bundle.test).size();
  if (run.k == 0 || run.k > run.bundle.test.size())
    throw std::runtime_error("cluster count " + std::to_string(run.k) +
                             " is outside [1, test size]");

  if (config.template_paths.empty()) {
    run.tmpl = default_template();
  } else {
    std::vector<PromptTemplate> candidates;
    for (const auto& path : config.template_paths) candidates.push_back(load_template(path));
    if (candidates.size() == 1 || config.mode != Mode::semi_supervised) {
      run.tmpl = candidates.front();
    } else {
      OracleConfig eval = config.oracle;
      eval.seed = derive_seed(config.master_seed, "oracle");
      run.tmpl = select_schema(candidates, run.bundle, eval, transport);
    }
  }
  return run;
}

std::string make_run_id(const RunConfig& config) {
  auto now = std::chrono::system_clock::now().time_since_epoch();
  auto nanos = std::chrono::duration_cast<std::chrono::nanoseconds>(now).count();
  std::uint64_t h = hash_combine(config_hash(config), static_cast<std::uint64_t>(nanos));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json epoch_to_json(const EpochReport& report) {
  return json{{"mean_loss", report.mean_loss}, {"active_fraction", report.active_fraction}};
}

json iteration_to_json(const IterationLog& log) {
  json j;
  j["iteration"] = log.iteration;
  j["epoch_start"] = log.epoch_start;
  j["knn_pairs"] = log.knn_pairs;
  j["density_pairs"] = log.density_pairs;
  j["annotated"] = log.annotated;
  j["positives"] = log.positives;
  j["positive_rate"] = log.positive_rate;
  j["dispatched"] = log.dispatched;
  j["cache_hits"] = log.cache_hits;
  j["shortcut_hits"] = log.shortcut_hits;
  j["failed"] = log.failed;
  j["new_triplets"] = log.new_triplets;
  j["df_size"] = log.df_size;
  j["epochs"] = json::array();
  for (const auto& e : log.epoch_reports) j["epochs"].push_back(epoch_to_json(e));
  j["warnings"] = log.warnings;
  return j;
}

RunArtifacts write_artifacts(const RunConfig& config, const PreparedRun& run,
                             const Adapter& adapter, const ClusterAssignment& assignment,
                             const std::vector<IterationLog>& iterations) {
  RunArtifacts artifacts;
  artifacts.report = score_report(assignment, run.truth);

  artifacts.run_dir = config.output_dir / make_run_id(config);
  std::filesystem::create_directories(artifacts.run_dir);

  save_config(config, artifacts.run_dir / "config.json");

  {
    json report;
    report["nmi"] = artifacts.report.nmi;
    report["ari"] = artifacts.report.ari;
    report["acc"] = artifacts.report.acc;
    report["k"] = artifacts.report.k;
    report["n"] = artifacts.report.n;
    std::ofstream out(artifacts.run_dir / "report.json");
    out << report.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write report.json");
  }
  {
    std::ofstream out(artifacts.run_dir / "assignment.csv");
    out << "utterance_id,cluster_id\n";
    for (std::size_t i = 0; i < assignment.labels.size(); ++i)
      out << i << ',' << assignment.labels[i] << '\n';
    if (!out) throw std::runtime_error("cannot write assignment.csv");
  }
  save_adapter(adapter, artifacts.run_dir / "adapter.ckpt", config_hash(config));
  {
    std::ofstream out(artifacts.run_dir / "log.jsonl");
    for (const auto& log : iterations) out << iteration_to_json(log).dump() << '\n';
    if (!out) throw std::runtime_error("cannot write log.jsonl");
  }
  return artifacts;
}

}  // namespace

RunArtifacts run_experiment(const RunConfig& config, std::shared_ptr<ChatTransport> transport) {
  PreparedRun run = prepare(config, transport);

  SamplerConfig sampler = config.sampler;
  sampler.seed = derive_seed(config.master_seed, "sampler");
  TrainConfig train = config.train;
  train.seed = derive_seed(config.master_seed, "train");
  OracleConfig oracle_config = config.oracle;
  oracle_config.seed = derive_seed(config.master_seed, "oracle");

  Adapter adapter;
  std::vector<IterationLog> iterations;
  if (train.epochs == 0) {
    // Degenerate budget: identity adapter, no sampling; equals run_baseline.
    adapter = Adapter(run.train.dim(), train.hidden_dim, derive_seed(train.seed, "adapter-init"));
  } else {
    OracleManager oracle(oracle_config, run.tmpl, transport);
    auto loop = run_loop(run.bundle, run.train, sampler, train, config.variant, oracle);
    adapter = std::move(loop.adapter);
    iterations = std::move(loop.iterations);
  }

  auto assignment =
      predict(adapter, run.test, run.k, derive_seed(config.master_seed, "kmeans"), config.kmeans);
  return write_artifacts(config, run, adapter, assignment, iterations);
}

RunArtifacts run_baseline(const RunConfig& config) {
  PreparedRun run = prepare(config, nullptr);
  Adapter identity(run.train.dim(), config.train.hidden_dim,
                   derive_seed(derive_seed(config.master_seed, "train"), "adapter-init"));
  auto assignment = predict(identity, run.test, run.k,
                            derive_seed(config.master_seed, "kmeans"), config.kmeans);
  return write_artifacts(config, run, identity, assignment, {});
}

}  // namespace lanid
