#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "lanid/rng.hpp"

using namespace lanid;

TEST_SUITE("rng") {

TEST_CASE("fnv1a matches published vectors") {
  CHECK(hash_string("") == 0xcbf29ce484222325ULL);
  CHECK(hash_string("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hash_string("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("hash_string is chainable and order sensitive") {
  auto h1 = hash_string("world", hash_string("hello"));
  auto h2 = hash_string("hello", hash_string("world"));
  CHECK(h1 != h2);
  CHECK(hash_string("helloworld") == h1);  // FNV folds bytes left to right
}

TEST_CASE("derive_seed separates tags and indices") {
  auto a = derive_seed(42, "sampler");
  auto b = derive_seed(42, "train");
  auto c = derive_seed(43, "sampler");
  CHECK(a != b);
  CHECK(a != c);
  CHECK(derive_seed(42, "sampler") == a);

  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(42, "epoch-shuffle", i));
  CHECK(seen.size() == 100);
  CHECK(derive_seed(42, "epoch-shuffle", 7) != derive_seed(42, "negatives", 7));
}

TEST_CASE("hash_combine is not symmetric and has no trivial fixed point") {
  CHECK(hash_combine(1, 2) != hash_combine(2, 1));
  CHECK(hash_combine(0, 0) != 0);
}

TEST_CASE("uniform_index stays in range and is deterministic") {
  auto rng = make_rng(derive_seed(7, "test"));
  for (std::size_t n : {1ul, 2ul, 3ul, 10ul, 1000ul}) {
    for (int i = 0; i < 500; ++i) {
      auto v = uniform_index(rng, n);
      CHECK(v < n);
    }
  }
  auto r1 = make_rng(99);
  auto r2 = make_rng(99);
  for (int i = 0; i < 100; ++i) CHECK(uniform_index(r1, 37) == uniform_index(r2, 37));
  CHECK_THROWS(uniform_index(r1, 0));
}

TEST_CASE("uniform_index covers all buckets roughly evenly") {
  auto rng = make_rng(123);
  std::vector<int> buckets(10, 0);
  for (int i = 0; i < 10000; ++i) ++buckets[uniform_index(rng, 10)];
  for (int count : buckets) {
    CHECK(count > 800);
    CHECK(count < 1200);
  }
}

TEST_CASE("uniform_unit lies in [0,1)") {
  auto rng = make_rng(5);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double u = uniform_unit(rng);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / 20000.0 - 0.5) < 0.01);
}

TEST_CASE("gaussian has standard moments") {
  auto rng = make_rng(derive_seed(1, "gaussian-check"));
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = gaussian(rng);
    sum += g;
    sq += g * g;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("sample_without_replacement yields distinct in-range indices") {
  auto rng = make_rng(11);
  auto picked = sample_without_replacement(rng, 50, 20);
  REQUIRE(picked.size() == 20);
  std::set<std::size_t> unique(picked.begin(), picked.end());
  CHECK(unique.size() == 20);
  for (auto v : picked) CHECK(v < 50);

  auto all = sample_without_replacement(rng, 8, 8);
  std::set<std::size_t> eight(all.begin(), all.end());
  CHECK(eight.size() == 8);
  CHECK_THROWS(sample_without_replacement(rng, 3, 4));
}

TEST_CASE("sample_without_replacement is seed reproducible") {
  auto r1 = make_rng(77);
  auto r2 = make_rng(77);
  CHECK(sample_without_replacement(r1, 100, 10) == sample_without_replacement(r2, 100, 10));
}

TEST_CASE("shuffle_in_place permutes deterministically") {
  std::vector<int> a(20), b(20);
  for (int i = 0; i < 20; ++i) a[i] = b[i] = i;
  auto r1 = make_rng(31);
  auto r2 = make_rng(31);
  shuffle_in_place(r1, a);
  shuffle_in_place(r2, b);
  CHECK(a == b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i);

  std::vector<int> c(20);
  for (int i = 0; i < 20; ++i) c[i] = i;
  auto r3 = make_rng(32);
  shuffle_in_place(r3, c);
  CHECK(c != a);  // different seed, different order
}

}  // TEST_SUITE
