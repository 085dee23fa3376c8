#include "lanid/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lanid/rng.hpp"

namespace lanid {

namespace {

// k-means++ seeding: first centroid uniform, the rest weighted by squared
// distance to the nearest chosen centroid. A zero total weight (all
// remaining points coincide with centroids) falls back to the lowest
// unchosen id.
std::vector<std::size_t> plus_plus_seeds(const EmbeddingMatrix& matrix, std::size_t k,
                                         std::mt19937_64& rng) {
  const std::size_t n = matrix.size();
  std::vector<std::size_t> chosen;
  std::vector<bool> is_chosen(n, false);
  std::vector<double> best_sq(n, std::numeric_limits<double>::infinity());

  std::size_t first = uniform_index(rng, n);
  chosen.push_back(first);
  is_chosen[first] = true;

  while (chosen.size() < k) {
    auto last = matrix.row(chosen.back());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (is_chosen[i]) {
        best_sq[i] = 0.0;
        continue;
      }
      best_sq[i] = std::min(best_sq[i], squared_distance(last, matrix.row(i)));
      total += best_sq[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double r = uniform_unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (is_chosen[i]) continue;
        acc += best_sq[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
      // Floating point slack can leave r unreached; take the last candidate.
      if (pick == n)
        for (std::size_t i = n; i-- > 0;)
          if (!is_chosen[i]) {
            pick = i;
            break;
          }
    } else {
      for (std::size_t i = 0; i < n; ++i)
        if (!is_chosen[i]) {
          pick = i;
          break;
        }
    }
    chosen.push_back(pick);
    is_chosen[pick] = true;
  }
  return chosen;
}

}  // namespace

ClusterAssignment kmeans(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed,
                         std::size_t max_iter, double tol) {
  const std::size_t n = matrix.size();
  const std::size_t d = matrix.dim();
  if (k == 0) throw std::invalid_argument("kmeans k must be positive");
  if (k > n)
    throw std::invalid_argument("kmeans k=" + std::to_string(k) + " exceeds point count " +
                                std::to_string(n));

  auto rng = make_rng(seed);
  ClusterAssignment result;
  result.centroids = EmbeddingMatrix(k, d);
  auto seeds = plus_plus_seeds(matrix, k, rng);
  for (std::size_t c = 0; c < k; ++c) {
    auto src = matrix.row(seeds[c]);
    std::copy(src.begin(), src.end(), result.centroids.row(c).begin());
  }

  result.labels.assign(n, 0);
  std::vector<double> sums(k * d);
  std::vector<std::size_t> counts(k);

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // Assignment step; ties go to the lowest centroid id because the scan
    // only replaces on strictly smaller distance.
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto point = matrix.row(i);
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        double sq = squared_distance(point, result.centroids.row(c));
        if (sq < best) {
          best = sq;
          best_c = static_cast<int>(c);
        }
      }
      result.labels[i] = best_c;
      inertia += best;
    }
    result.inertia = inertia;
    result.inertia_history.push_back(inertia);
    result.iterations = iter + 1;

    // Update step.
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto point = matrix.row(i);
      auto c = static_cast<std::size_t>(result.labels[i]);
      ++counts[c];
      double* sum = sums.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) sum[j] += point[j];
    }

    double max_shift_sq = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      auto centroid = result.centroids.row(c);
      if (counts[c] == 0) {
        // Reseed the dead centroid at the point farthest from its current
        // centroid (lowest id on ties).
        double far_sq = -1.0;
        std::size_t far_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
          double sq = squared_distance(
              matrix.row(i), result.centroids.row(static_cast<std::size_t>(result.labels[i])));
          if (sq > far_sq) {
            far_sq = sq;
            far_i = i;
          }
        }
        auto src = matrix.row(far_i);
        double shift_sq = squared_distance(src, centroid);
        std::copy(src.begin(), src.end(), centroid.begin());
        max_shift_sq = std::max(max_shift_sq, shift_sq);
        continue;
      }
      const double* sum = sums.data() + c * d;
      double inv = 1.0 / static_cast<double>(counts[c]);
      double shift_sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double next = sum[j] * inv;
        double delta = next - centroid[j];
        shift_sq += delta * delta;
        centroid[j] = next;
      }
      max_shift_sq = std::max(max_shift_sq, shift_sq);
    }
    if (std::sqrt(max_shift_sq) < tol) break;
  }

  // Final assignment against the converged centroids so labels, inertia and
  // centroids are mutually consistent.
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto point = matrix.row(i);
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
      double sq = squared_distance(point, result.centroids.row(c));
      if (sq < best) {
        best = sq;
        best_c = static_cast<int>(c);
      }
    }
    result.labels[i] = best_c;
    inertia += best;
  }
  result.inertia = inertia;
  result.inertia_history.push_back(inertia);
  return result;
}

ClusterAssignment kmeans_best(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed,
                              const KmeansOptions& options) {
  if (options.restarts == 0) throw std::invalid_argument("kmeans restarts must be positive");
  ClusterAssignment best;
  bool have = false;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    auto run = kmeans(matrix, k, derive_seed(seed, "kmeans-restart", r), options.max_iter,
                      options.tol);
    // Earlier restart wins ties, making the merge order-independent.
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

ClusterAssignment predict(const Adapter& adapter, const EmbeddingMatrix& base_test, std::size_t k,
                          std::uint64_t seed, const KmeansOptions& options) {
  if (adapter.dim() != base_test.dim())
    throw std::invalid_argument("adapter dimension " + std::to_string(adapter.dim()) +
                                " does not match test embedding dimension " +
                                std::to_string(base_test.dim()));
  EmbeddingMatrix adapted = adapter.transform(base_test);
  return kmeans_best(adapted, k, seed, options);
}

}  // namespace lanid
