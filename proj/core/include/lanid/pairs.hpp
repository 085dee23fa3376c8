#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lanid/embedding.hpp"

namespace lanid {

enum class PairSource { knn, density };

std::string to_string(PairSource source);

/// Candidate utterance pair for oracle annotation. Identity is unordered:
/// (a, b) and (b, a) are the same pair for deduplication and caching.
struct CandidatePair {
  int anchor_id = 0;
  int other_id = 0;
  PairSource source = PairSource::knn;
  int iteration = 0;
};

/// Canonical (min, max) id key for unordered pair identity.
inline std::pair<int, int> pair_key(const CandidatePair& p) {
  return p.anchor_id < p.other_id ? std::pair{p.anchor_id, p.other_id}
                                  : std::pair{p.other_id, p.anchor_id};
}

struct SamplerConfig {
  std::size_t knn_k = 50;          // neighborhood size K
  double sample_fraction = 0.1;    // anchor fraction p, in (0, 1]
  std::size_t pairs_per_anchor = 2;  // n_k, must be < knn_k
  std::size_t core_neighbors = 5;  // m, core partners per non-core anchor
  std::size_t min_pts = 4;         // DBSCAN density threshold
  std::optional<double> eps;       // DBSCAN radius; absent = auto_eps
  double eps_quantile = 0.5;
  std::uint64_t seed = 0;
};

inline constexpr int kNoise = -1;

struct DbscanResult {
  std::vector<int> assignment;   // cluster id in [0, cluster_count) or kNoise
  std::vector<bool> core_flags;  // true = core point
  int cluster_count = 0;
};

/// Sampler output plus non-fatal condition reports (e.g. a density pass
/// that found no core points).
struct PairBatch {
  std::vector<CandidatePair> pairs;
  std::vector<std::string> warnings;
};

/// Ids of the k nearest rows to query_id under Euclidean distance, query
/// excluded, ascending distance, ties by ascending id. Requires k < n.
std::vector<int> knn_query(const EmbeddingMatrix& matrix, int query_id, std::size_t k);

/// Local strategy: ceil(p * n) seeded anchors, each contributing
/// pairs_per_anchor partners drawn without replacement from its top-K
/// neighborhood. Deduplicated on unordered identity.
PairBatch sample_knn_pairs(const EmbeddingMatrix& matrix, const SamplerConfig& config,
                           int iteration = 0);

/// Standard DBSCAN under Euclidean distance. A point is core when its
/// closed eps-ball holds at least min_pts points (itself included).
/// Clusters are numbered from 0 in order of their lowest core id; border
/// points join the lowest-numbered adjacent cluster; the rest are kNoise.
DbscanResult dbscan(const EmbeddingMatrix& matrix, double eps, std::size_t min_pts);

/// k-distance heuristic: the given quantile (linear interpolation) of every
/// point's distance to its min_pts-th nearest other point. Requires
/// n > min_pts; all-coincident data raises "zero radius".
double auto_eps(const EmbeddingMatrix& matrix, std::size_t min_pts, double quantile = 0.5);

/// Global-density strategy: DBSCAN splits points into core and non-core;
/// a seeded fraction of the non-core points each pair with their
/// core_neighbors nearest core points. Degenerate splits (no core or no
/// non-core points) yield an empty batch with a warning.
PairBatch sample_density_pairs(const EmbeddingMatrix& matrix, const SamplerConfig& config,
                               int iteration = 0);

/// Order-preserving dedup on unordered pair identity (first occurrence
/// wins, so earlier sources keep their attribution).
std::vector<CandidatePair> dedupe_pairs(std::vector<CandidatePair> pairs);

}  // namespace lanid
