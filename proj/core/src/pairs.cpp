#include "lanid/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

#include "lanid/rng.hpp"

namespace lanid {

std::string to_string(PairSource source) {
  return source == PairSource::knn ? "knn" : "density";
}

namespace {

std::size_t anchor_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
}

void check_sampler(const SamplerConfig& config, std::size_t n) {
  if (config.sample_fraction <= 0.0 || config.sample_fraction > 1.0)
    throw std::invalid_argument("sample_fraction must lie in (0, 1]");
  if (config.knn_k == 0 || config.pairs_per_anchor == 0 || config.core_neighbors == 0 ||
      config.min_pts == 0)
    throw std::invalid_argument("sampler counts must be positive");
  if (config.pairs_per_anchor >= config.knn_k)
    throw std::invalid_argument("pairs_per_anchor (n_k) must be < knn_k (K)");
  if (config.knn_k >= n)
    throw std::invalid_argument("knn_k must be smaller than the number of points");
  if (anchor_count(config.sample_fraction, n) == 0)
    throw std::invalid_argument("sample_fraction selects zero anchors");
}

}  // namespace

std::vector<int> knn_query(const EmbeddingMatrix& matrix, int query_id, std::size_t k) {
  const std::size_t n = matrix.size();
  if (query_id < 0 || static_cast<std::size_t>(query_id) >= n)
    throw std::out_of_range("knn query id out of range");
  if (k == 0) throw std::invalid_argument("knn k must be positive");
  if (k >= n) throw std::invalid_argument("knn k must be smaller than the number of points");

  auto q = matrix.row(static_cast<std::size_t>(query_id));
  std::vector<std::pair<double, int>> dist;
  dist.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<int>(i) == query_id) continue;
    dist.emplace_back(squared_distance(q, matrix.row(i)), static_cast<int>(i));
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<int> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

PairBatch sample_knn_pairs(const EmbeddingMatrix& matrix, const SamplerConfig& config,
                           int iteration) {
  const std::size_t n = matrix.size();
  check_sampler(config, n);

  auto anchor_rng = make_rng(derive_seed(config.seed, "knn-anchors", static_cast<std::uint64_t>(iteration)));
  auto anchors = sample_without_replacement(anchor_rng, n, anchor_count(config.sample_fraction, n));

  PairBatch batch;
  batch.pairs.reserve(anchors.size() * config.pairs_per_anchor);
  for (std::size_t anchor : anchors) {
    auto neighbors = knn_query(matrix, static_cast<int>(anchor), config.knn_k);
    // Per-anchor rng keeps the draw independent of anchor visit order.
    auto pick_rng = make_rng(derive_seed(config.seed, "knn-pick",
                                         hash_combine(static_cast<std::uint64_t>(anchor),
                                                      static_cast<std::uint64_t>(iteration))));
    auto picks = sample_without_replacement(pick_rng, neighbors.size(), config.pairs_per_anchor);
    for (std::size_t p : picks)
      batch.pairs.push_back({static_cast<int>(anchor), neighbors[p], PairSource::knn, iteration});
  }
  batch.pairs = dedupe_pairs(std::move(batch.pairs));
  return batch;
}

DbscanResult dbscan(const EmbeddingMatrix& matrix, double eps, std::size_t min_pts) {
  if (eps <= 0.0) throw std::invalid_argument("dbscan eps must be positive");
  if (min_pts == 0) throw std::invalid_argument("dbscan min_pts must be positive");
  const std::size_t n = matrix.size();
  const double eps_sq = eps * eps;

  std::vector<std::vector<int>> neighborhood(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto ri = matrix.row(i);
    for (std::size_t j = 0; j < n; ++j)
      if (squared_distance(ri, matrix.row(j)) <= eps_sq)
        neighborhood[i].push_back(static_cast<int>(j));
  }

  DbscanResult result;
  result.assignment.assign(n, kNoise);
  result.core_flags.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) result.core_flags[i] = neighborhood[i].size() >= min_pts;

  // Expand clusters over core points only, in ascending id order so cluster
  // numbers are deterministic (cluster c's lowest core id grows with c).
  int next_cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!result.core_flags[i] || result.assignment[i] != kNoise) continue;
    int cluster = next_cluster++;
    std::deque<int> frontier{static_cast<int>(i)};
    result.assignment[i] = cluster;
    while (!frontier.empty()) {
      int j = frontier.front();
      frontier.pop_front();
      for (int u : neighborhood[static_cast<std::size_t>(j)]) {
        if (!result.core_flags[static_cast<std::size_t>(u)]) continue;
        if (result.assignment[static_cast<std::size_t>(u)] != kNoise) continue;
        result.assignment[static_cast<std::size_t>(u)] = cluster;
        frontier.push_back(u);
      }
    }
  }
  result.cluster_count = next_cluster;

  // Border points: non-core, within eps of some core; they join the
  // lowest-numbered adjacent cluster, which is also the first discovered.
  for (std::size_t i = 0; i < n; ++i) {
    if (result.core_flags[i]) continue;
    int best = kNoise;
    for (int u : neighborhood[i]) {
      if (!result.core_flags[static_cast<std::size_t>(u)]) continue;
      int c = result.assignment[static_cast<std::size_t>(u)];
      if (best == kNoise || c < best) best = c;
    }
    result.assignment[i] = best;
  }
  return result;
}

double auto_eps(const EmbeddingMatrix& matrix, std::size_t min_pts, double quantile) {
  const std::size_t n = matrix.size();
  if (min_pts == 0) throw std::invalid_argument("min_pts must be positive");
  if (n <= min_pts) throw std::invalid_argument("auto_eps needs more points than min_pts");
  if (quantile <= 0.0 || quantile >= 1.0)
    throw std::invalid_argument("quantile must lie strictly between 0 and 1");

  std::vector<double> kdist(n);
  std::vector<double> scratch;
  for (std::size_t i = 0; i < n; ++i) {
    scratch.clear();
    auto ri = matrix.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      scratch.push_back(squared_distance(ri, matrix.row(j)));
    }
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(min_pts - 1),
                     scratch.end());
    kdist[i] = std::sqrt(scratch[min_pts - 1]);
  }
  std::sort(kdist.begin(), kdist.end());

  double h = quantile * static_cast<double>(n - 1);
  std::size_t lo = static_cast<std::size_t>(h);
  double frac = h - static_cast<double>(lo);
  double eps = lo + 1 < n ? kdist[lo] + frac * (kdist[lo + 1] - kdist[lo]) : kdist[lo];
  if (eps <= 0.0) throw std::runtime_error("auto_eps: zero radius, all points coincide");
  return eps;
}

PairBatch sample_density_pairs(const EmbeddingMatrix& matrix, const SamplerConfig& config,
                               int iteration) {
  const std::size_t n = matrix.size();
  check_sampler(config, n);

  double eps = config.eps ? *config.eps : auto_eps(matrix, config.min_pts, config.eps_quantile);
  DbscanResult split = dbscan(matrix, eps, config.min_pts);

  std::vector<int> cores;
  std::vector<int> non_cores;
  for (std::size_t i = 0; i < n; ++i)
    (split.core_flags[i] ? cores : non_cores).push_back(static_cast<int>(i));

  PairBatch batch;
  if (cores.empty()) {
    batch.warnings.push_back("density sampler: no core points at eps=" + std::to_string(eps) +
                             ", emitting no pairs");
    return batch;
  }
  if (non_cores.empty()) {
    batch.warnings.push_back("density sampler: every point is core, emitting no pairs");
    return batch;
  }

  auto anchor_rng = make_rng(derive_seed(config.seed, "density-anchors", static_cast<std::uint64_t>(iteration)));
  auto picks = sample_without_replacement(
      anchor_rng, non_cores.size(),
      std::min(anchor_count(config.sample_fraction, non_cores.size()), non_cores.size()));

  std::size_t m = std::min(config.core_neighbors, cores.size());
  std::vector<std::pair<double, int>> dist;
  for (std::size_t pick : picks) {
    int anchor = non_cores[pick];
    auto ra = matrix.row(static_cast<std::size_t>(anchor));
    dist.clear();
    for (int c : cores) dist.emplace_back(squared_distance(ra, matrix.row(static_cast<std::size_t>(c))), c);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(m), dist.end());
    for (std::size_t j = 0; j < m; ++j)
      batch.pairs.push_back({anchor, dist[j].second, PairSource::density, iteration});
  }
  batch.pairs = dedupe_pairs(std::move(batch.pairs));
  return batch;
}

std::vector<CandidatePair> dedupe_pairs(std::vector<CandidatePair> pairs) {
  std::set<std::pair<int, int>> seen;
  std::vector<CandidatePair> out;
  out.reserve(pairs.size());
  for (auto& p : pairs) {
    if (p.anchor_id == p.other_id)
      throw std::logic_error("self-pair produced by sampler: id " + std::to_string(p.anchor_id));
    if (seen.insert(pair_key(p)).second) out.push_back(p);
  }
  return out;
}

}  // namespace lanid
