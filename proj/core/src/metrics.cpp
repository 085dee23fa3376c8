#include "lanid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace lanid {

namespace {

void check_lengths(const std::vector<int>& truth, const std::vector<int>& predicted,
                   std::size_t minimum) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("label vectors differ in length: " +
                                std::to_string(truth.size()) + " vs " +
                                std::to_string(predicted.size()));
  if (truth.size() < minimum)
    throw std::invalid_argument("need at least " + std::to_string(minimum) + " labeled points");
}

std::vector<int> densify(const std::vector<int>& labels) {
  std::unordered_map<int, int> codes;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = codes.emplace(labels[i], static_cast<int>(codes.size()));
    out[i] = it->second;
  }
  return out;
}

double entropy(const std::vector<std::int64_t>& sums, std::int64_t total) {
  double h = 0.0;
  for (std::int64_t s : sums) {
    if (s == 0) continue;
    double p = static_cast<double>(s) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

std::int64_t choose2(std::int64_t x) { return x * (x - 1) / 2; }

}  // namespace

std::vector<int> encode_labels(const std::vector<std::string>& labels) {
  std::unordered_map<std::string, int> codes;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = codes.emplace(labels[i], static_cast<int>(codes.size()));
    out[i] = it->second;
  }
  return out;
}

ContingencyTable contingency(const std::vector<int>& truth, const std::vector<int>& predicted) {
  check_lengths(truth, predicted, 1);
  auto t = densify(truth);
  auto p = densify(predicted);
  int rows = *std::max_element(t.begin(), t.end()) + 1;
  int cols = *std::max_element(p.begin(), p.end()) + 1;

  ContingencyTable table;
  table.counts.assign(static_cast<std::size_t>(rows),
                      std::vector<std::int64_t>(static_cast<std::size_t>(cols), 0));
  table.row_sums.assign(static_cast<std::size_t>(rows), 0);
  table.col_sums.assign(static_cast<std::size_t>(cols), 0);
  table.total = static_cast<std::int64_t>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto u = static_cast<std::size_t>(t[i]);
    auto v = static_cast<std::size_t>(p[i]);
    ++table.counts[u][v];
    ++table.row_sums[u];
    ++table.col_sums[v];
  }
  return table;
}

double nmi(const std::vector<int>& truth, const std::vector<int>& predicted) {
  check_lengths(truth, predicted, 1);
  auto table = contingency(truth, predicted);
  double hu = entropy(table.row_sums, table.total);
  double hv = entropy(table.col_sums, table.total);
  if (hu == 0.0 && hv == 0.0) return 1.0;  // both partitions trivial
  if (hu == 0.0 || hv == 0.0) return 0.0;  // one trivial, no shared structure

  double mi = 0.0;
  double n = static_cast<double>(table.total);
  for (std::size_t u = 0; u < table.counts.size(); ++u) {
    for (std::size_t v = 0; v < table.counts[u].size(); ++v) {
      std::int64_t count = table.counts[u][v];
      if (count == 0) continue;
      double joint = static_cast<double>(count) / n;
      mi += joint * std::log(n * static_cast<double>(count) /
                             (static_cast<double>(table.row_sums[u]) *
                              static_cast<double>(table.col_sums[v])));
    }
  }
  double value = mi / (0.5 * (hu + hv));
  return std::clamp(value, 0.0, 1.0);
}

double ari(const std::vector<int>& truth, const std::vector<int>& predicted) {
  check_lengths(truth, predicted, 2);
  auto table = contingency(truth, predicted);

  std::int64_t index = 0;
  for (const auto& row : table.counts)
    for (std::int64_t count : row) index += choose2(count);
  std::int64_t sum_rows = 0;
  for (std::int64_t s : table.row_sums) sum_rows += choose2(s);
  std::int64_t sum_cols = 0;
  for (std::int64_t s : table.col_sums) sum_cols += choose2(s);

  double pairs = static_cast<double>(choose2(table.total));
  double expected = static_cast<double>(sum_rows) * static_cast<double>(sum_cols) / pairs;
  double max_index = 0.5 * static_cast<double>(sum_rows + sum_cols);
  double denom = max_index - expected;
  if (denom == 0.0) return 1.0;  // degenerate agreement (e.g. both all-singleton)
  return (static_cast<double>(index) - expected) / denom;
}

std::vector<std::size_t> solve_assignment(const std::vector<std::vector<std::int64_t>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) throw std::invalid_argument("empty assignment problem");
  for (const auto& row : cost)
    if (row.size() != n) throw std::invalid_argument("assignment cost matrix must be square");

  const std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  // Potentials method, 1-indexed; p[j] is the row matched to column j.
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      std::size_t i0 = p[j0], j1 = 0;
      std::int64_t delta = kInf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double hungarian_acc(const std::vector<int>& truth, const std::vector<int>& predicted) {
  check_lengths(truth, predicted, 1);
  auto table = contingency(truth, predicted);
  std::size_t rows = table.counts.size();
  std::size_t cols = table.counts.front().size();
  std::size_t side = std::max(rows, cols);

  // Maximize matched counts = minimize negated counts on the padded square.
  std::vector<std::vector<std::int64_t>> cost(side, std::vector<std::int64_t>(side, 0));
  for (std::size_t u = 0; u < rows; ++u)
    for (std::size_t v = 0; v < cols; ++v) cost[u][v] = -table.counts[u][v];

  auto match = solve_assignment(cost);
  std::int64_t matched = 0;
  for (std::size_t u = 0; u < rows; ++u)
    if (match[u] < cols) matched += table.counts[u][match[u]];
  return static_cast<double>(matched) / static_cast<double>(table.total);
}

ScoreReport score_report(const ClusterAssignment& assignment, const std::vector<int>& truth) {
  if (assignment.labels.size() != truth.size())
    throw std::invalid_argument("assignment and truth lengths differ");
  ScoreReport report;
  report.nmi = nmi(truth, assignment.labels);
  report.ari = ari(truth, assignment.labels);
  report.acc = hungarian_acc(truth, assignment.labels);
  report.k = assignment.centroids.size();
  report.n = truth.size();
  return report;
}

}  // namespace lanid
