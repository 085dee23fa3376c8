#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "lanid/pairs.hpp"
#include "lanid/rng.hpp"
#include "reference.hpp"
#include "synthetic.hpp"

using namespace lanid;

namespace {

EmbeddingMatrix random_cloud(std::size_t n, std::size_t dim, std::uint64_t seed) {
  EmbeddingMatrix m(n, dim);
  auto rng = make_rng(seed);
  for (double& v : m.data()) v = gaussian(rng);
  return m;
}

EmbeddingMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  EmbeddingMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return m;
}

}  // namespace

TEST_SUITE("pairs") {

TEST_CASE("knn_query agrees with the exhaustive sort") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto m = random_cloud(40, 5, seed);
    for (int q : {0, 7, 39}) {
      auto full = refimpl::brute_knn(m, q);
      for (std::size_t k : {1ul, 5ul, 39ul}) {
        auto got = knn_query(m, q, k);
        REQUIRE(got.size() == k);
        CHECK(std::equal(got.begin(), got.end(), full.begin()));
      }
    }
  }
}

TEST_CASE("knn distance ties break by ascending id") {
  // Points 1, 2, 3 coincide; 4 sits farther out.
  auto m = from_rows({{0.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, {5.0, 0.0}});
  CHECK(knn_query(m, 0, 3) == std::vector<int>{1, 2, 3});
  CHECK(knn_query(m, 2, 2) == std::vector<int>{1, 3});  // zero-distance ties too
}

TEST_CASE("knn_query validates its arguments") {
  auto m = random_cloud(5, 2, 9);
  CHECK_THROWS_AS(knn_query(m, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(knn_query(m, 0, 5), std::invalid_argument);
  CHECK_THROWS_AS(knn_query(m, -1, 2), std::out_of_range);
  CHECK_THROWS_AS(knn_query(m, 5, 2), std::out_of_range);
}

TEST_CASE("knn sampler draws the configured number of local pairs") {
  auto m = random_cloud(100, 4, 17);
  SamplerConfig config;
  config.knn_k = 50;
  config.sample_fraction = 0.1;
  config.pairs_per_anchor = 2;
  config.seed = 5;
  auto batch = sample_knn_pairs(m, config, 0);
  CHECK(batch.warnings.empty());
  CHECK(batch.pairs.size() <= 20);  // 10 anchors x 2, minus unordered dupes
  CHECK(batch.pairs.size() >= 16);

  std::set<std::pair<int, int>> keys;
  for (const auto& p : batch.pairs) {
    CHECK(p.source == PairSource::knn);
    CHECK(p.iteration == 0);
    CHECK(p.anchor_id != p.other_id);
    CHECK(keys.insert(pair_key(p)).second);  // dedupe really happened

    // Locality: the partner must come from the anchor's top-K neighborhood.
    auto neighborhood = knn_query(m, p.anchor_id, config.knn_k);
    CHECK(std::count(neighborhood.begin(), neighborhood.end(), p.other_id) == 1);
  }
}

TEST_CASE("knn sampler is deterministic per iteration") {
  auto m = random_cloud(60, 3, 21);
  SamplerConfig config;
  config.knn_k = 20;
  config.sample_fraction = 0.2;
  config.seed = 9;
  auto a = sample_knn_pairs(m, config, 1);
  auto b = sample_knn_pairs(m, config, 1);
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].anchor_id == b.pairs[i].anchor_id);
    CHECK(a.pairs[i].other_id == b.pairs[i].other_id);
  }
  auto c = sample_knn_pairs(m, config, 2);
  std::set<std::pair<int, int>> ka, kc;
  for (const auto& p : a.pairs) ka.insert(pair_key(p));
  for (const auto& p : c.pairs) kc.insert(pair_key(p));
  CHECK(ka != kc);  // a later round explores different anchors
}

TEST_CASE("sampler configuration is validated") {
  auto m = random_cloud(30, 2, 3);
  SamplerConfig config;
  config.knn_k = 10;

  SamplerConfig bad = config;
  bad.sample_fraction = 0.0;
  CHECK_THROWS_AS(sample_knn_pairs(m, bad, 0), std::invalid_argument);
  bad = config;
  bad.pairs_per_anchor = 10;  // must stay below knn_k
  CHECK_THROWS_WITH_AS(sample_knn_pairs(m, bad, 0), doctest::Contains("n_k"),
                       std::invalid_argument);
  bad = config;
  bad.knn_k = 30;
  CHECK_THROWS_AS(sample_knn_pairs(m, bad, 0), std::invalid_argument);
}

TEST_CASE("dbscan matches the union-find reference on random clouds") {
  for (std::uint64_t seed : {4u, 5u, 6u, 7u, 8u}) {
    auto set = testsupport::make_gaussian_intents(3, 20, 3, 6.0, 1.0, seed);
    const auto& m = set.matrix;
    double eps = auto_eps(m, 4);
    auto mine = dbscan(m, eps, 4);
    auto ref = refimpl::dbscan_reference(m, eps, 4);
    CHECK(mine.assignment == ref.assignment);  // numbering convention matches exactly
    CHECK(refimpl::same_partition(mine.assignment, ref.assignment));
    REQUIRE(mine.core_flags.size() == ref.core.size());
    for (std::size_t i = 0; i < ref.core.size(); ++i)
      CHECK(mine.core_flags[i] == ref.core[i]);
    int max_id = *std::max_element(mine.assignment.begin(), mine.assignment.end());
    CHECK(mine.cluster_count == max_id + 1);
  }
}

TEST_CASE("dbscan worked example with borders and noise") {
  auto m = from_rows({{0.0}, {1.0}, {2.0}, {10.0}, {11.0}, {12.0}, {100.0}});
  auto result = dbscan(m, 1.5, 3);
  CHECK(result.assignment == std::vector<int>{0, 0, 0, 1, 1, 1, kNoise});
  CHECK(result.core_flags == std::vector<bool>{false, true, false, false, true, false, false});
  CHECK(result.cluster_count == 2);
}

TEST_CASE("dbscan degenerate settings") {
  // min_pts=1 turns every point into its own core.
  auto sparse = from_rows({{0.0}, {50.0}, {100.0}});
  auto singles = dbscan(sparse, 1.0, 1);
  CHECK(singles.assignment == std::vector<int>{0, 1, 2});
  CHECK(singles.cluster_count == 3);

  auto lone = dbscan(from_rows({{3.0}}), 1.0, 4);
  CHECK(lone.assignment == std::vector<int>{kNoise});
  CHECK(lone.cluster_count == 0);

  CHECK_THROWS_AS(dbscan(sparse, 0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(dbscan(sparse, 1.0, 0), std::invalid_argument);
}

TEST_CASE("auto_eps interpolates the k-distance quantile") {
  auto m = from_rows({{0.0}, {1.0}, {3.0}, {7.0}});
  // Distances to each point's nearest other: [1, 1, 2, 4].
  CHECK(auto_eps(m, 1, 0.5) == doctest::Approx(1.5));
  CHECK(auto_eps(m, 1, 0.25) == doctest::Approx(1.0));
  CHECK(auto_eps(m, 1, 0.9) == doctest::Approx(3.4));  // between 2 and 4

  CHECK_THROWS_AS(auto_eps(m, 4, 0.5), std::invalid_argument);  // needs n > min_pts
  CHECK_THROWS_AS(auto_eps(m, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(auto_eps(m, 1, 1.0), std::invalid_argument);

  auto coincident = from_rows({{2.0}, {2.0}, {2.0}});
  CHECK_THROWS_WITH_AS(auto_eps(coincident, 1, 0.5), doctest::Contains("zero radius"),
                       std::runtime_error);
}

TEST_CASE("density sampler pairs outskirt points with nearby cores") {
  // Tight blob of 20 plus 6 scattered outliers.
  std::vector<std::vector<double>> rows;
  auto rng = make_rng(31);
  for (int i = 0; i < 20; ++i) rows.push_back({0.05 * gaussian(rng), 0.05 * gaussian(rng)});
  for (int i = 0; i < 6; ++i) rows.push_back({10.0 + 3.0 * i, -5.0});
  auto m = from_rows(rows);

  SamplerConfig config;
  config.knn_k = 10;
  config.sample_fraction = 0.5;
  config.core_neighbors = 3;
  config.min_pts = 4;
  config.eps = 1.0;
  config.seed = 77;
  auto batch = sample_density_pairs(m, config, 0);
  CHECK(batch.warnings.empty());

  auto split = dbscan(m, 1.0, 4);
  std::set<int> anchors;
  for (const auto& p : batch.pairs) {
    CHECK(p.source == PairSource::density);
    CHECK_FALSE(split.core_flags[static_cast<std::size_t>(p.anchor_id)]);
    CHECK(split.core_flags[static_cast<std::size_t>(p.other_id)]);
    anchors.insert(p.anchor_id);
  }
  CHECK(anchors.size() == 3);  // ceil(0.5 * 6) non-core anchors
  CHECK(batch.pairs.size() == 9);  // each pairs with its 3 nearest cores

  // The cores picked for an anchor are its nearest ones.
  for (const auto& p : batch.pairs) {
    double d = squared_distance(m.row(static_cast<std::size_t>(p.anchor_id)),
                                m.row(static_cast<std::size_t>(p.other_id)));
    std::size_t closer = 0;
    for (std::size_t c = 0; c < m.size(); ++c)
      if (split.core_flags[c] &&
          squared_distance(m.row(static_cast<std::size_t>(p.anchor_id)), m.row(c)) < d)
        ++closer;
    CHECK(closer < config.core_neighbors);
  }
}

TEST_CASE("density sampler clamps partner count to available cores") {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 5; ++i) rows.push_back({0.1 * i, 0.0});  // one small core clump
  for (int i = 0; i < 8; ++i) rows.push_back({40.0 + 5.0 * i, 0.0});
  auto m = from_rows(rows);

  SamplerConfig config;
  config.knn_k = 5;
  config.pairs_per_anchor = 2;
  config.sample_fraction = 0.25;
  config.core_neighbors = 50;  // far more than exist
  config.min_pts = 4;
  config.eps = 0.5;
  config.seed = 3;
  auto batch = sample_density_pairs(m, config, 0);
  auto split = dbscan(m, 0.5, 4);
  std::size_t n_cores = static_cast<std::size_t>(
      std::count(split.core_flags.begin(), split.core_flags.end(), true));
  REQUIRE(n_cores > 0);
  std::size_t n_non = m.size() - n_cores;
  std::size_t anchors_expected = (n_non + 3) / 4;  // ceil(0.25 * n_non)
  CHECK(batch.pairs.size() == anchors_expected * n_cores);
}

TEST_CASE("density sampler reports degenerate splits instead of failing") {
  SamplerConfig config;
  config.knn_k = 8;
  config.min_pts = 4;
  config.seed = 1;

  // Everything core: one dense clump, giant radius.
  auto dense = random_cloud(12, 2, 41);
  config.eps = 1e6;
  auto all_core = sample_density_pairs(dense, config, 0);
  CHECK(all_core.pairs.empty());
  REQUIRE(all_core.warnings.size() == 1);
  CHECK(all_core.warnings[0].find("every point is core") != std::string::npos);

  // Nothing core: scattered points, tiny radius.
  config.eps = 1e-9;
  auto no_core = sample_density_pairs(dense, config, 0);
  CHECK(no_core.pairs.empty());
  REQUIRE(no_core.warnings.size() == 1);
  CHECK(no_core.warnings[0].find("no core points") != std::string::npos);
}

TEST_CASE("density sampler is deterministic") {
  auto set = testsupport::make_gaussian_intents(2, 25, 3, 8.0, 1.0, 13);
  SamplerConfig config;
  config.knn_k = 10;
  config.sample_fraction = 0.3;
  config.min_pts = 4;
  config.seed = 55;
  auto a = sample_density_pairs(set.matrix, config, 2);
  auto b = sample_density_pairs(set.matrix, config, 2);
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i)
    CHECK(pair_key(a.pairs[i]) == pair_key(b.pairs[i]));
}

TEST_CASE("dedupe keeps first occurrence and rejects self pairs") {
  std::vector<CandidatePair> pairs;
  pairs.push_back({3, 7, PairSource::knn, 0});
  pairs.push_back({7, 3, PairSource::density, 0});  // same unordered identity
  pairs.push_back({1, 2, PairSource::density, 0});
  auto out = dedupe_pairs(pairs);
  REQUIRE(out.size() == 2);
  CHECK(out[0].anchor_id == 3);
  CHECK(out[0].source == PairSource::knn);  // first writer wins attribution
  CHECK(out[1].anchor_id == 1);

  std::vector<CandidatePair> self;
  self.push_back({4, 4, PairSource::knn, 0});
  CHECK_THROWS_AS(dedupe_pairs(self), std::logic_error);
}

TEST_CASE("pair sources stringify") {
  CHECK(to_string(PairSource::knn) == "knn");
  CHECK(to_string(PairSource::density) == "density");
}

}  // TEST_SUITE
