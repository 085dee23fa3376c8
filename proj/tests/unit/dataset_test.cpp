#include <doctest.h>

#include <fstream>
#include <map>
#include <string>

#include "lanid/dataset.hpp"
#include "tempdir.hpp"

using namespace lanid;
using testsupport::TempDir;

namespace {

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

std::vector<Utterance> make_labeled(std::size_t intents, std::size_t per) {
  std::vector<Utterance> split;
  for (std::size_t c = 0; c < intents; ++c)
    for (std::size_t j = 0; j < per; ++j) {
      Utterance u;
      u.id = static_cast<int>(split.size());
      u.text = "intent" + std::to_string(c) + " utterance" + std::to_string(j);
      u.label = "intent" + std::to_string(c);
      split.push_back(u);
    }
  return split;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("tsv round trip preserves text and labels") {
  TempDir dir;
  std::vector<Utterance> split;
  split.push_back({0, "check my balance", "balance"});
  split.push_back({1, "what is the weather", std::nullopt});
  split.push_back({2, "text with  double spaces", "odd"});
  auto path = dir.file("split.tsv");
  save_split(split, path, DatasetFormat::tsv);
  auto loaded = load_split(path, DatasetFormat::tsv);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[0].text == "check my balance");
  CHECK(loaded[0].label == "balance");
  CHECK(loaded[1].text == "what is the weather");
  CHECK_FALSE(loaded[1].label.has_value());
  CHECK(loaded[2].label == "odd");
  for (int i = 0; i < 3; ++i) CHECK(loaded[static_cast<std::size_t>(i)].id == i);
}

TEST_CASE("tsv parser handles crlf, blank lines and missing tab") {
  TempDir dir;
  auto path = dir.file("split.tsv");
  write_file(path, "hello there\tgreet\r\n\nno label line\n");
  auto loaded = load_split(path, DatasetFormat::tsv);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].text == "hello there");
  CHECK(loaded[0].label == "greet");
  CHECK(loaded[1].text == "no label line");
  CHECK_FALSE(loaded[1].label.has_value());
}

TEST_CASE("tsv parser reports the failing line number") {
  TempDir dir;
  auto path = dir.file("bad.tsv");
  write_file(path, "fine\tok\n\tmissing text\n");
  CHECK_THROWS_WITH_AS(load_split(path, DatasetFormat::tsv),
                       doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("jsonl round trip with null labels") {
  TempDir dir;
  std::vector<Utterance> split;
  split.push_back({0, "transfer money", "transfer"});
  split.push_back({1, "hm?", std::nullopt});
  auto path = dir.file("split.jsonl");
  save_split(split, path, DatasetFormat::jsonl);
  auto loaded = load_split(path, DatasetFormat::jsonl);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].label == "transfer");
  CHECK_FALSE(loaded[1].label.has_value());
}

TEST_CASE("jsonl parser rejects malformed records with line numbers") {
  TempDir dir;
  auto path = dir.file("bad.jsonl");

  write_file(path, "{\"text\": \"ok\"}\nnot json\n");
  CHECK_THROWS_WITH_AS(load_split(path, DatasetFormat::jsonl),
                       doctest::Contains("line 2"), std::runtime_error);

  write_file(path, "{\"label\": \"x\"}\n");
  CHECK_THROWS_WITH_AS(load_split(path, DatasetFormat::jsonl),
                       doctest::Contains("\"text\""), std::runtime_error);

  write_file(path, "{\"text\": 42}\n");
  CHECK_THROWS_AS(load_split(path, DatasetFormat::jsonl), std::runtime_error);

  write_file(path, "{\"text\": \"a\", \"label\": 3}\n");
  CHECK_THROWS_WITH_AS(load_split(path, DatasetFormat::jsonl),
                       doctest::Contains("\"label\""), std::runtime_error);

  write_file(path, "{\"text\": \"a\", \"id\": \"x\"}\n");
  CHECK_THROWS_WITH_AS(load_split(path, DatasetFormat::jsonl),
                       doctest::Contains("integer"), std::runtime_error);

  write_file(path, "{\"text\": \"a\", \"id\": 5}\n{\"text\": \"b\", \"id\": 5}\n");
  CHECK_THROWS_WITH_AS(load_split(path, DatasetFormat::jsonl),
                       doctest::Contains("duplicate"), std::runtime_error);

  write_file(path, "{\"text\": \"\"}\n");
  CHECK_THROWS_WITH_AS(load_split(path, DatasetFormat::jsonl),
                       doctest::Contains("empty text"), std::runtime_error);
}

TEST_CASE("empty split file is an error") {
  TempDir dir;
  auto path = dir.file("empty.tsv");
  write_file(path, "");
  CHECK_THROWS_WITH_AS(load_split(path, DatasetFormat::tsv), doctest::Contains("no records"),
                       std::runtime_error);
  CHECK_THROWS(load_split(dir.file("missing.tsv"), DatasetFormat::tsv));
}

TEST_CASE("load_dataset from a single file fills only train") {
  TempDir dir;
  auto path = dir.file("all.tsv");
  write_file(path, "a\tx\nb\ty\n");
  auto bundle = load_dataset(path, DatasetFormat::tsv);
  CHECK(bundle.train.size() == 2);
  CHECK(bundle.test.empty());
  CHECK(bundle.validation.empty());
  CHECK(bundle.intents.known.empty());
  CHECK(bundle.intents.unknown == std::set<std::string>{"x", "y"});
  CHECK(bundle.mode == Mode::unsupervised);
}

TEST_CASE("load_dataset from a directory picks up optional splits") {
  TempDir dir;
  write_file(dir.file("train.tsv"), "a\tx\nb\ty\n");
  write_file(dir.file("test.tsv"), "c\tz\n");
  auto bundle = load_dataset(dir.path(), DatasetFormat::tsv);
  CHECK(bundle.train.size() == 2);
  CHECK(bundle.test.size() == 1);
  CHECK(bundle.validation.empty());
  CHECK(bundle.intents.unknown == std::set<std::string>{"x", "y", "z"});

  TempDir empty;
  CHECK_THROWS(load_dataset(empty.path(), DatasetFormat::tsv));
}

TEST_CASE("known class split respects ratios and labels every known class") {
  DatasetBundle bundle;
  bundle.train = make_labeled(10, 20);
  apply_known_class_split(bundle, 0.75, 0.1, 42);

  CHECK(bundle.mode == Mode::semi_supervised);
  CHECK(bundle.intents.known.size() == 8);  // round(0.75 * 10)
  CHECK(bundle.intents.unknown.size() == 2);

  // 10% of each 20-member known class = exactly 2 labeled ids per class.
  std::map<std::string, int> per_class;
  for (int id : bundle.labeled_subset) {
    REQUIRE(bundle.true_label(id).has_value());
    ++per_class[*bundle.true_label(id)];
  }
  CHECK(per_class.size() == 8);
  for (auto& [intent, count] : per_class) {
    CHECK(count == 2);
    CHECK(bundle.intents.known.count(intent) == 1);
  }
  CHECK(std::is_sorted(bundle.labeled_subset.begin(), bundle.labeled_subset.end()));
}

TEST_CASE("known class split is seed deterministic") {
  DatasetBundle a, b, c;
  a.train = b.train = c.train = make_labeled(12, 16);
  apply_known_class_split(a, 0.5, 0.25, 7);
  apply_known_class_split(b, 0.5, 0.25, 7);
  apply_known_class_split(c, 0.5, 0.25, 8);
  CHECK(a.intents.known == b.intents.known);
  CHECK(a.labeled_subset == b.labeled_subset);
  bool differs = a.intents.known != c.intents.known || a.labeled_subset != c.labeled_subset;
  CHECK(differs);
}

TEST_CASE("known class split validates its arguments") {
  DatasetBundle bundle;
  bundle.train = make_labeled(4, 5);
  CHECK_THROWS_AS(apply_known_class_split(bundle, 0.0, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(apply_known_class_split(bundle, 1.0, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(apply_known_class_split(bundle, 0.5, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(apply_known_class_split(bundle, 0.5, 1.5, 1), std::invalid_argument);

  DatasetBundle unlabeled;
  unlabeled.train.push_back({0, "no label", std::nullopt});
  CHECK_THROWS(apply_known_class_split(unlabeled, 0.5, 0.5, 1));
}

TEST_CASE("visible_label masks by mode and subset") {
  DatasetBundle bundle;
  bundle.train = make_labeled(4, 10);
  CHECK_FALSE(bundle.visible_label(0).has_value());  // unsupervised hides all

  apply_known_class_split(bundle, 0.5, 0.2, 3);
  int labeled_id = bundle.labeled_subset.front();
  CHECK(bundle.visible_label(labeled_id) == bundle.true_label(labeled_id));
  for (const auto& u : bundle.train)
    if (!bundle.is_labeled(u.id)) {
      CHECK_FALSE(bundle.visible_label(u.id).has_value());
      CHECK(bundle.true_label(u.id).has_value());  // ground truth never erased
      break;
    }
}

TEST_CASE("fingerprints track text content only") {
  std::vector<Utterance> a = make_labeled(3, 4);
  std::vector<Utterance> b = a;
  CHECK(split_fingerprint(a) == split_fingerprint(b));

  b[5].label = "relabeled";
  CHECK(split_fingerprint(a) == split_fingerprint(b));  // labels don't matter

  b[5].text += "!";
  CHECK(split_fingerprint(a) != split_fingerprint(b));

  std::vector<Utterance> shorter(a.begin(), a.end() - 1);
  CHECK(split_fingerprint(a) != split_fingerprint(shorter));
}

TEST_CASE("distinct_labels keeps first occurrence order") {
  std::vector<Utterance> split;
  split.push_back({0, "a", "zeta"});
  split.push_back({1, "b", "alpha"});
  split.push_back({2, "c", "zeta"});
  split.push_back({3, "d", std::nullopt});
  split.push_back({4, "e", "mid"});
  auto labels = distinct_labels(split);
  CHECK(labels == std::vector<std::string>{"zeta", "alpha", "mid"});
}

TEST_CASE("summary and bounds checks") {
  DatasetBundle bundle;
  bundle.train = make_labeled(3, 5);
  bundle.test = make_labeled(2, 4);
  auto s = bundle.summary();
  CHECK(s.train == 15);
  CHECK(s.test == 8);
  CHECK(s.validation == 0);
  CHECK(s.labeled == 0);
  CHECK(s.distinct_labels == 3);  // test reuses intent0/intent1

  CHECK_THROWS_AS(bundle.train_at(-1), std::out_of_range);
  CHECK_THROWS_AS(bundle.train_at(15), std::out_of_range);
  CHECK_THROWS_AS(bundle.test_at(8), std::out_of_range);
}

}  // TEST_SUITE
