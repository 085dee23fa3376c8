#pragma once

#include <cstdint>
#include <vector>

#include "lanid/embedding.hpp"
#include "lanid/trainer.hpp"

namespace lanid {

struct ClusterAssignment {
  std::vector<int> labels;    // cluster id in [0, k) per point
  EmbeddingMatrix centroids;  // k rows
  double inertia = 0.0;       // sum of squared point-to-centroid distances
  std::size_t iterations = 0;
  std::vector<double> inertia_history;  // assignment-step inertia per Lloyd round
};

struct KmeansOptions {
  std::size_t max_iter = 300;
  double tol = 1e-6;  // convergence threshold on max centroid displacement
  std::size_t restarts = 10;
};

/// Single k-means run: k-means++ seeding, Lloyd iterations until the
/// largest centroid displacement drops below tol or max_iter is reached.
/// Empty clusters are reseeded at the point farthest from its centroid;
/// assignment ties go to the lowest centroid id. Deterministic under seed.
ClusterAssignment kmeans(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed,
                         std::size_t max_iter = 300, double tol = 1e-6);

/// Best of `restarts` runs under seeds derived from `seed`, lowest
/// (inertia, restart index) wins.
ClusterAssignment kmeans_best(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed,
                              const KmeansOptions& options = {});

/// Adapter applied to the test embeddings, then kmeans_best.
ClusterAssignment predict(const Adapter& adapter, const EmbeddingMatrix& base_test, std::size_t k,
                          std::uint64_t seed, const KmeansOptions& options = {});

}  // namespace lanid
