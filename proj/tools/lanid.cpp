// Command line front end: run experiments, baselines, config validation and
// report inspection over the lanid core library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lanid/config.hpp"
#include "lanid/runner.hpp"

namespace {

struct CliOverrides {
  std::optional<std::string> preset_name;
  std::optional<std::string> config_path;

  std::optional<std::string> dataset;
  std::optional<std::string> format;
  std::optional<std::string> embeddings;
  std::optional<std::string> test_embeddings;
  std::optional<std::string> validation_embeddings;
  std::optional<std::string> embedding_url;
  std::optional<bool> normalize;
  std::optional<std::string> mode;
  std::optional<double> kcr;
  std::optional<double> labeled_fraction;
  std::optional<std::string> variant;

  std::optional<std::size_t> knn_k;
  std::optional<double> sample_frac;
  std::optional<std::size_t> nk;
  std::optional<std::size_t> density_m;
  std::optional<std::size_t> min_pts;
  std::optional<std::string> eps;  // number or "auto"
  std::optional<double> eps_quantile;

  std::optional<std::string> provider;
  std::optional<std::string> fallback;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::optional<double> noise_rate;
  std::optional<std::string> oracle_cache;
  std::optional<std::size_t> parallelism;
  std::vector<std::string> templates;

  std::optional<std::size_t> kn;
  std::optional<double> margin;
  std::optional<std::size_t> resample_period;
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> hidden;

  std::optional<std::size_t> cluster_k;
  std::optional<std::size_t> restarts;
  std::optional<std::uint64_t> master_seed;
  std::optional<std::string> output_dir;
};

void add_override_flags(CLI::App& cmd, CliOverrides& o) {
  cmd.add_option("--config", o.config_path, "Config file to start from");
  cmd.add_option("--preset", o.preset_name, "Parameter preset: banking, stackoverflow or mcid");

  cmd.add_option("--dataset", o.dataset, "Dataset file or directory");
  cmd.add_option("--format", o.format, "Dataset format: tsv or jsonl");
  cmd.add_option("--embeddings", o.embeddings, "Train embedding matrix file");
  cmd.add_option("--test-embeddings", o.test_embeddings, "Test embedding matrix file");
  cmd.add_option("--validation-embeddings", o.validation_embeddings,
                 "Validation embedding matrix file");
  cmd.add_option("--embedding-url", o.embedding_url, "Embedding service URL (switches source)");
  cmd.add_flag("--normalize,!--no-normalize", o.normalize, "L2-normalize embeddings (default on)");
  cmd.add_option("--mode", o.mode, "unsupervised or semi_supervised");
  cmd.add_option("--kcr", o.kcr, "Known class ratio (semi-supervised)");
  cmd.add_option("--labeled-fraction", o.labeled_fraction, "Labeled share of each known class");
  cmd.add_option("--variant", o.variant, "lanid_near, lanid_dbscan or lanid_both");

  cmd.add_option("--knn-k", o.knn_k, "Neighborhood size K");
  cmd.add_option("--sample-frac", o.sample_frac, "Anchor sample fraction p");
  cmd.add_option("--nk", o.nk, "Pairs per anchor n_k");
  cmd.add_option("--density-m", o.density_m, "Core partners per non-core point m");
  cmd.add_option("--min-pts", o.min_pts, "DBSCAN MinPts");
  cmd.add_option("--eps", o.eps, "DBSCAN radius, or 'auto' for the k-distance heuristic");
  cmd.add_option("--eps-quantile", o.eps_quantile, "Quantile for the auto eps heuristic");

  cmd.add_option("--provider", o.provider, "Oracle: llm, simulated or labeled_shortcut");
  cmd.add_option("--fallback", o.fallback, "Provider behind the labeled shortcut");
  cmd.add_option("--endpoint", o.endpoint, "LLM chat completion URL");
  cmd.add_option("--model", o.model, "LLM model name");
  cmd.add_option("--noise-rate", o.noise_rate, "Simulated oracle flip probability");
  cmd.add_option("--oracle-cache", o.oracle_cache, "Oracle disk cache file");
  cmd.add_option("--parallelism", o.parallelism, "Concurrent oracle requests");
  cmd.add_option("--template", o.templates, "Prompt template file (repeatable)");

  cmd.add_option("--kn", o.kn, "Negatives per positive pair k_n");
  cmd.add_option("--margin", o.margin, "Triplet margin");
  cmd.add_option("--resample-period", o.resample_period, "Epochs between sampling rounds T");
  cmd.add_option("--epochs", o.epochs, "Total training epochs");
  cmd.add_option("--lr", o.learning_rate, "Learning rate");
  cmd.add_option("--batch-size", o.batch_size, "Mini-batch size");
  cmd.add_option("--hidden", o.hidden, "Adapter hidden width");

  cmd.add_option("--cluster-k", o.cluster_k, "Cluster count (0 = distinct test labels)");
  cmd.add_option("--restarts", o.restarts, "k-means restarts");
  cmd.add_option("--master-seed", o.master_seed, "Master seed for the whole run");
  cmd.add_option("--output-dir", o.output_dir, "Artifact directory");
}

lanid::RunConfig build_config(const CliOverrides& o) {
  lanid::RunConfig config;
  if (o.config_path) config = lanid::load_config(*o.config_path);
  if (o.preset_name) {
    lanid::RunConfig base = lanid::preset(*o.preset_name);
    if (o.config_path) {
      // Preset supplies the loop-shape parameters, the file the rest.
      config.sampler = base.sampler;
      config.train.negatives_per_pair = base.train.negatives_per_pair;
      config.train.resample_period = base.train.resample_period;
      config.train.epochs = base.train.epochs;
      config.name = base.name;
    } else {
      config = base;
    }
  }

  if (o.dataset) config.dataset_path = *o.dataset;
  if (o.format) config.dataset_format = lanid::format_from_string(*o.format);
  if (o.embeddings) config.train_embeddings = *o.embeddings;
  if (o.test_embeddings) config.test_embeddings = *o.test_embeddings;
  if (o.validation_embeddings) config.validation_embeddings = *o.validation_embeddings;
  if (o.embedding_url) {
    config.embedding_url = *o.embedding_url;
    config.embedding_source = lanid::EmbeddingSource::service;
  }
  if (o.normalize) config.normalize_embeddings = *o.normalize;
  if (o.mode) config.mode = lanid::mode_from_string(*o.mode);
  if (o.kcr) config.kcr = *o.kcr;
  if (o.labeled_fraction) config.labeled_fraction = *o.labeled_fraction;
  if (o.variant) config.variant = lanid::variant_from_string(*o.variant);

  if (o.knn_k) config.sampler.knn_k = *o.knn_k;
  if (o.sample_frac) config.sampler.sample_fraction = *o.sample_frac;
  if (o.nk) config.sampler.pairs_per_anchor = *o.nk;
  if (o.density_m) config.sampler.core_neighbors = *o.density_m;
  if (o.min_pts) config.sampler.min_pts = *o.min_pts;
  if (o.eps) {
    if (*o.eps == "auto")
      config.sampler.eps.reset();
    else
      config.sampler.eps = std::stod(*o.eps);
  }
  if (o.eps_quantile) config.sampler.eps_quantile = *o.eps_quantile;

  if (o.provider) config.oracle.provider = lanid::provider_from_string(*o.provider);
  if (o.fallback) config.oracle.fallback = lanid::provider_from_string(*o.fallback);
  if (o.endpoint) config.oracle.endpoint = *o.endpoint;
  if (o.model) config.oracle.model_name = *o.model;
  if (o.noise_rate) config.oracle.noise_rate = *o.noise_rate;
  if (o.oracle_cache) config.oracle.cache_path = *o.oracle_cache;
  if (o.parallelism) config.oracle.request_parallelism = *o.parallelism;
  for (const auto& t : o.templates) config.template_paths.emplace_back(t);

  if (o.kn) config.train.negatives_per_pair = *o.kn;
  if (o.margin) config.train.margin = *o.margin;
  if (o.resample_period) config.train.resample_period = *o.resample_period;
  if (o.epochs) config.train.epochs = *o.epochs;
  if (o.learning_rate) config.train.learning_rate = *o.learning_rate;
  if (o.batch_size) config.train.batch_size = *o.batch_size;
  if (o.hidden) config.train.hidden_dim = *o.hidden;

  if (o.cluster_k) config.cluster_k = *o.cluster_k;
  if (o.restarts) config.kmeans.restarts = *o.restarts;
  if (o.master_seed) config.master_seed = *o.master_seed;
  if (o.output_dir) config.output_dir = *o.output_dir;
  return config;
}

void print_report(const lanid::RunArtifacts& artifacts) {
  std::printf("run dir: %s\n", artifacts.run_dir.string().c_str());
  std::printf("nmi=%.6f ari=%.6f acc=%.6f k=%zu n=%zu\n", artifacts.report.nmi,
              artifacts.report.ari, artifacts.report.acc, artifacts.report.k,
              artifacts.report.n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LANID: new intent discovery via sampled pair annotation"};
  app.require_subcommand(1);

  CliOverrides run_opts;
  auto* run_cmd = app.add_subcommand("run", "Run the full iterative experiment");
  add_override_flags(*run_cmd, run_opts);

  CliOverrides baseline_opts;
  auto* baseline_cmd = app.add_subcommand("baseline", "Cluster the frozen base embeddings");
  add_override_flags(*baseline_cmd, baseline_opts);

  CliOverrides validate_opts;
  auto* validate_cmd = app.add_subcommand("validate", "Check a config and list violations");
  add_override_flags(*validate_cmd, validate_opts);

  std::string report_path;
  auto* report_cmd = app.add_subcommand("report", "Print a run report");
  report_cmd->add_option("path", report_path, "Run directory or report.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      print_report(lanid::run_experiment(build_config(run_opts)));
    } else if (baseline_cmd->parsed()) {
      print_report(lanid::run_baseline(build_config(baseline_opts)));
    } else if (validate_cmd->parsed()) {
      auto violations = lanid::validate_config(build_config(validate_opts));
      if (violations.empty()) {
        std::printf("config ok\n");
      } else {
        for (const auto& v : violations) std::fprintf(stderr, "violation: %s\n", v.c_str());
        return 1;
      }
    } else if (report_cmd->parsed()) {
      std::filesystem::path path = report_path;
      if (std::filesystem::is_directory(path)) path /= "report.json";
      std::ifstream in(path);
      if (!in) {
        std::fprintf(stderr, "cannot open %s\n", path.string().c_str());
        return 1;
      }
      nlohmann::json report;
      in >> report;
      std::printf("%s\n", report.dump(2).c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
