#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lanid/kmeans.hpp"

namespace lanid {

/// Joint count table between two labelings of the same points.
struct ContingencyTable {
  std::vector<std::vector<std::int64_t>> counts;  // [true class][pred cluster]
  std::vector<std::int64_t> row_sums;
  std::vector<std::int64_t> col_sums;
  std::int64_t total = 0;
};

/// Maps string labels to dense integer codes in first-occurrence order.
std::vector<int> encode_labels(const std::vector<std::string>& labels);

ContingencyTable contingency(const std::vector<int>& truth, const std::vector<int>& predicted);

/// Mutual information normalized by the arithmetic mean of the two
/// entropies (natural log). Both partitions trivial (zero entropy) scores
/// 1.0; exactly one trivial scores 0.0. Clamped to [0, 1].
double nmi(const std::vector<int>& truth, const std::vector<int>& predicted);

/// Adjusted Rand index under the permutation model; 1.0 when the
/// adjustment denominator vanishes (identical degenerate partitions).
double ari(const std::vector<int>& truth, const std::vector<int>& predicted);

/// Clustering accuracy: best one-to-one matching of predicted clusters to
/// true classes (exact assignment solver on the zero-padded contingency
/// table), matched count over N.
double hungarian_acc(const std::vector<int>& truth, const std::vector<int>& predicted);

/// Exact minimum-cost square assignment (potentials method). Returns the
/// column matched to each row. Exposed for direct testing.
std::vector<std::size_t> solve_assignment(const std::vector<std::vector<std::int64_t>>& cost);

struct ScoreReport {
  double nmi = 0.0;
  double ari = 0.0;
  double acc = 0.0;
  std::size_t k = 0;  // requested cluster count
  std::size_t n = 0;  // scored points
};

ScoreReport score_report(const ClusterAssignment& assignment, const std::vector<int>& truth);

}  // namespace lanid
