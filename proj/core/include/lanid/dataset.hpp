#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lanid {

/// One dialogue utterance. `id` is the 0-based position within its split and
/// stays stable for the lifetime of the bundle; embedding row i belongs to
/// utterance id i of the same split.
struct Utterance {
  int id = 0;
  std::string text;
  std::optional<std::string> label;
};

enum class DatasetFormat { tsv, jsonl };

DatasetFormat format_from_string(const std::string& name);
std::string to_string(DatasetFormat format);

enum class Mode { unsupervised, semi_supervised };

Mode mode_from_string(const std::string& name);
std::string to_string(Mode mode);

/// Partition of the intent inventory into seen and unseen classes.
struct IntentSets {
  std::set<std::string> known;
  std::set<std::string> unknown;
};

struct DatasetSummary {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t validation = 0;
  std::size_t labeled = 0;
  std::size_t distinct_labels = 0;
};

/// Train/test/validation splits plus the labeled-subset bookkeeping for the
/// semi-supervised setting. Label hiding is a view: true labels are always
/// kept so evaluation can score against ground truth, and `visible_label`
/// applies the mode's masking at access time.
struct DatasetBundle {
  std::vector<Utterance> train;
  std::vector<Utterance> test;
  std::vector<Utterance> validation;
  std::vector<int> labeled_subset;  // train ids, sorted ascending
  IntentSets intents;
  Mode mode = Mode::unsupervised;

  const Utterance& train_at(int id) const;
  const Utterance& test_at(int id) const;

  /// Ground truth, independent of mode.
  const std::optional<std::string>& true_label(int train_id) const;

  /// Mode-aware view: unsupervised hides everything, semi-supervised shows
  /// labels only for ids in the labeled subset.
  std::optional<std::string> visible_label(int train_id) const;

  bool is_labeled(int train_id) const;

  DatasetSummary summary() const;

  /// Hash over the train split texts; embedding matrices carry the same
  /// value so row/utterance alignment can be checked downstream.
  std::uint64_t train_fingerprint() const;
  std::uint64_t test_fingerprint() const;
};

std::uint64_t split_fingerprint(const std::vector<Utterance>& split);

/// Distinct labels of a split in first-occurrence order.
std::vector<std::string> distinct_labels(const std::vector<Utterance>& split);

/// Parses one split file. TSV rows are `text<TAB>label` with the label
/// optional; JSONL rows are {"text": ..., "label": ...} with label optional
/// or null, plus an optional "id" that must be unique when present.
/// Malformed records raise with the 1-based line number.
std::vector<Utterance> load_split(const std::filesystem::path& path, DatasetFormat format);

void save_split(const std::vector<Utterance>& split, const std::filesystem::path& path,
                DatasetFormat format);

/// Loads a bundle. A regular file becomes the train split; a directory is
/// expected to contain train.<ext> (required) and test.<ext> /
/// validation.<ext> (optional), with <ext> matching the format.
DatasetBundle load_dataset(const std::filesystem::path& path, DatasetFormat format);

/// Semi-supervised split construction: a seeded shuffle of the intent list
/// selects round(kcr * |intents|) known classes, and `labeled_fraction` of
/// each known class is sampled into the labeled subset.
void apply_known_class_split(DatasetBundle& bundle, double kcr, double labeled_fraction,
                             std::uint64_t seed);

}  // namespace lanid
