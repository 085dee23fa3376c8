#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lanid/dataset.hpp"
#include "lanid/kmeans.hpp"
#include "lanid/oracle.hpp"
#include "lanid/pairs.hpp"
#include "lanid/trainer.hpp"

namespace lanid {

enum class EmbeddingSource { file, service };

std::string to_string(EmbeddingSource source);
EmbeddingSource embedding_source_from_string(const std::string& name);

struct RunConfig {
  std::string name = "custom";

  std::filesystem::path dataset_path;
  DatasetFormat dataset_format = DatasetFormat::tsv;

  EmbeddingSource embedding_source = EmbeddingSource::file;
  std::filesystem::path train_embeddings;
  std::filesystem::path test_embeddings;       // empty: test reuses train rows
  std::filesystem::path validation_embeddings;  // optional
  std::string embedding_url;  // service source
  bool normalize_embeddings = true;

  Mode mode = Mode::unsupervised;
  double kcr = 0.75;              // semi-supervised only
  double labeled_fraction = 0.1;  // share of each known class labeled

  Variant variant = Variant::lanid_both;

  SamplerConfig sampler;
  OracleConfig oracle;
  TrainConfig train;

  std::vector<std::filesystem::path> template_paths;  // empty: built-in template

  std::size_t cluster_k = 0;  // 0: use the number of distinct test labels
  KmeansOptions kmeans;

  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "runs";
};

/// Named parameter profiles: banking, stackoverflow, mcid.
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Every violated invariant across the config and its sub-configs, one
/// message per violation naming the field and rule. Empty means valid.
std::vector<std::string> validate_config(const RunConfig& config);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

/// Canonical JSON snapshot; equal configs serialize identically.
std::string config_to_json_string(const RunConfig& config);
RunConfig config_from_json_string(const std::string& text);

/// Stable hash of the canonical snapshot.
std::uint64_t config_hash(const RunConfig& config);

}  // namespace lanid
