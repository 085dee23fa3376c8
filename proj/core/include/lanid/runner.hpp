#pragma once

#include <filesystem>
#include <memory>

#include "lanid/config.hpp"
#include "lanid/metrics.hpp"
#include "lanid/oracle.hpp"

namespace lanid {

struct RunArtifacts {
  std::filesystem::path run_dir;
  ScoreReport report;
};

/// Full pipeline: load data and embeddings, run the iterative loop, cluster
/// the adapted test embeddings, score, and write the reproducibility bundle
/// (config.json, report.json, assignment.csv, adapter.ckpt, log.jsonl)
/// under output_dir/<run_id>. An injected transport replaces the HTTP
/// chat client (tests). train.epochs = 0 skips training entirely, which
/// makes the run identical to run_baseline.
RunArtifacts run_experiment(const RunConfig& config,
                            std::shared_ptr<ChatTransport> transport = nullptr);

/// Clustering and scoring on the unadapted base embeddings; same artifact
/// bundle and report schema as run_experiment.
RunArtifacts run_baseline(const RunConfig& config);

}  // namespace lanid
