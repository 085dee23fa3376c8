#include "lanid/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "lanid/rng.hpp"

namespace lanid {

using nlohmann::json;

DatasetFormat format_from_string(const std::string& name) {
  if (name == "tsv") return DatasetFormat::tsv;
  if (name == "jsonl") return DatasetFormat::jsonl;
  throw std::invalid_argument("unknown dataset format: " + name);
}

std::string to_string(DatasetFormat format) {
  return format == DatasetFormat::tsv ? "tsv" : "jsonl";
}

Mode mode_from_string(const std::string& name) {
  if (name == "unsupervised") return Mode::unsupervised;
  if (name == "semi_supervised") return Mode::semi_supervised;
  throw std::invalid_argument("unknown mode: " + name);
}

std::string to_string(Mode mode) {
  return mode == Mode::unsupervised ? "unsupervised" : "semi_supervised";
}

const Utterance& DatasetBundle::train_at(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= train.size())
    throw std::out_of_range("train utterance id out of range: " + std::to_string(id));
  return train[static_cast<std::size_t>(id)];
}

const Utterance& DatasetBundle::test_at(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= test.size())
    throw std::out_of_range("test utterance id out of range: " + std::to_string(id));
  return test[static_cast<std::size_t>(id)];
}

const std::optional<std::string>& DatasetBundle::true_label(int train_id) const {
  return train_at(train_id).label;
}

std::optional<std::string> DatasetBundle::visible_label(int train_id) const {
  if (mode == Mode::unsupervised) return std::nullopt;
  if (!is_labeled(train_id)) return std::nullopt;
  return train_at(train_id).label;
}

bool DatasetBundle::is_labeled(int train_id) const {
  return std::binary_search(labeled_subset.begin(), labeled_subset.end(), train_id);
}

DatasetSummary DatasetBundle::summary() const {
  DatasetSummary s;
  s.train = train.size();
  s.test = test.size();
  s.validation = validation.size();
  s.labeled = labeled_subset.size();
  std::set<std::string> labels;
  for (const auto* split : {&train, &test, &validation})
    for (const auto& u : *split)
      if (u.label) labels.insert(*u.label);
  s.distinct_labels = labels.size();
  return s;
}

std::uint64_t split_fingerprint(const std::vector<Utterance>& split) {
  std::uint64_t h = hash_string("lanid-split");
  h = hash_combine(h, split.size());
  for (const auto& u : split) h = hash_combine(h, hash_string(u.text));
  return h;
}

std::uint64_t DatasetBundle::train_fingerprint() const { return split_fingerprint(train); }
std::uint64_t DatasetBundle::test_fingerprint() const { return split_fingerprint(test); }

std::vector<std::string> distinct_labels(const std::vector<Utterance>& split) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& u : split)
    if (u.label && seen.insert(*u.label).second) out.push_back(*u.label);
  return out;
}

namespace {

std::vector<Utterance> parse_tsv(std::istream& in, const std::string& origin) {
  std::vector<Utterance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Utterance u;
    u.id = static_cast<int>(out.size());
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      u.text = line;
    } else {
      u.text = line.substr(0, tab);
      std::string label = line.substr(tab + 1);
      if (!label.empty()) u.label = std::move(label);
    }
    if (u.text.empty())
      throw std::runtime_error(origin + ": line " + std::to_string(lineno) + ": empty text field");
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<Utterance> parse_jsonl(std::istream& in, const std::string& origin) {
  std::vector<Utterance> out;
  std::unordered_set<long long> explicit_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(origin + ": line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string())
      throw std::runtime_error(origin + ": line " + std::to_string(lineno) +
                               ": record must be an object with a string \"text\" field");
    Utterance u;
    u.id = static_cast<int>(out.size());
    u.text = rec["text"].get<std::string>();
    if (u.text.empty())
      throw std::runtime_error(origin + ": line " + std::to_string(lineno) + ": empty text field");
    if (rec.contains("label") && !rec["label"].is_null()) {
      if (!rec["label"].is_string())
        throw std::runtime_error(origin + ": line " + std::to_string(lineno) +
                                 ": \"label\" must be a string or null");
      u.label = rec["label"].get<std::string>();
    }
    if (rec.contains("id") && !rec["id"].is_null()) {
      if (!rec["id"].is_number_integer())
        throw std::runtime_error(origin + ": line " + std::to_string(lineno) +
                                 ": \"id\" must be an integer");
      long long explicit_id = rec["id"].get<long long>();
      if (!explicit_ids.insert(explicit_id).second)
        throw std::runtime_error(origin + ": line " + std::to_string(lineno) +
                                 ": duplicate explicit id " + std::to_string(explicit_id));
    }
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace

std::vector<Utterance> load_split(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
  const std::string origin = path.string();
  auto records =
      format == DatasetFormat::tsv ? parse_tsv(in, origin) : parse_jsonl(in, origin);
  if (records.empty()) throw std::runtime_error(origin + ": no records");
  return records;
}

void save_split(const std::vector<Utterance>& split, const std::filesystem::path& path,
                DatasetFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
  for (const auto& u : split) {
    if (format == DatasetFormat::tsv) {
      out << u.text << '\t' << (u.label ? *u.label : "") << '\n';
    } else {
      json rec;
      rec["text"] = u.text;
      rec["label"] = u.label ? json(*u.label) : json(nullptr);
      out << rec.dump() << '\n';
    }
  }
}

DatasetBundle load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  DatasetBundle bundle;
  if (std::filesystem::is_directory(path)) {
    const std::string ext = "." + to_string(format);
    auto split_path = [&](const char* name) { return path / (name + ext); };
    bundle.train = load_split(split_path("train"), format);
    if (std::filesystem::exists(split_path("test")))
      bundle.test = load_split(split_path("test"), format);
    if (std::filesystem::exists(split_path("validation")))
      bundle.validation = load_split(split_path("validation"), format);
  } else {
    bundle.train = load_split(path, format);
  }
  // All labels seen anywhere start out as unseen intents; the semi-supervised
  // split moves a subset into the known set.
  for (const auto* split : {&bundle.train, &bundle.test, &bundle.validation})
    for (const auto& u : *split)
      if (u.label) bundle.intents.unknown.insert(*u.label);
  return bundle;
}

void apply_known_class_split(DatasetBundle& bundle, double kcr, double labeled_fraction,
                             std::uint64_t seed) {
  if (kcr <= 0.0 || kcr >= 1.0)
    throw std::invalid_argument("kcr must lie strictly between 0 and 1");
  if (labeled_fraction <= 0.0 || labeled_fraction > 1.0)
    throw std::invalid_argument("labeled_fraction must lie in (0, 1]");

  std::vector<std::string> intents = distinct_labels(bundle.train);
  std::sort(intents.begin(), intents.end());
  if (intents.empty())
    throw std::runtime_error("known-class split requires labeled training data");

  auto rng = make_rng(derive_seed(seed, "kcr-intents"));
  shuffle_in_place(rng, intents);

  std::size_t n_known = static_cast<std::size_t>(
      std::llround(kcr * static_cast<double>(intents.size())));
  n_known = std::max<std::size_t>(1, std::min(n_known, intents.size()));

  bundle.intents.known.clear();
  bundle.intents.unknown.clear();
  for (std::size_t i = 0; i < intents.size(); ++i)
    (i < n_known ? bundle.intents.known : bundle.intents.unknown).insert(intents[i]);

  // Collect member ids per known class in id order, then sample the labeled
  // subset class by class.
  std::map<std::string, std::vector<int>> members;
  for (const auto& u : bundle.train)
    if (u.label && bundle.intents.known.count(*u.label)) members[*u.label].push_back(u.id);

  bundle.labeled_subset.clear();
  for (auto& [intent, ids] : members) {
    std::size_t take = static_cast<std::size_t>(
        std::llround(labeled_fraction * static_cast<double>(ids.size())));
    take = std::max<std::size_t>(1, std::min(take, ids.size()));
    auto class_rng = make_rng(derive_seed(seed, "kcr-labeled", hash_string(intent)));
    auto picks = sample_without_replacement(class_rng, ids.size(), take);
    for (std::size_t p : picks) bundle.labeled_subset.push_back(ids[p]);
  }
  std::sort(bundle.labeled_subset.begin(), bundle.labeled_subset.end());
  bundle.mode = Mode::semi_supervised;
}

}  // namespace lanid
