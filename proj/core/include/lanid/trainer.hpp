#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lanid/dataset.hpp"
#include "lanid/embedding.hpp"
#include "lanid/oracle.hpp"
#include "lanid/pairs.hpp"

namespace lanid {

struct Triplet {
  int anchor = 0;
  int positive = 0;
  int negative = 0;
  auto operator<=>(const Triplet&) const = default;
};

/// Residual two-layer map over a frozen base embedding:
///   out = e + W2 * tanh(W1 * e + b1) + b2.
/// Identity-initialized: W2 and b2 start at zero so the initial output
/// equals the base embedding exactly; W1 starts at seeded Gaussian noise
/// scaled by 1/sqrt(dim) so training has a direction to move in.
class Adapter {
 public:
  Adapter() = default;
  Adapter(std::size_t dim, std::size_t hidden, std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t param_count() const { return params_.size(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Flat parameter layout: W1 (hidden x dim), b1, W2 (dim x hidden), b2.
  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return hidden_ * dim_; }
  std::size_t w2_offset() const { return hidden_ * dim_ + hidden_; }
  std::size_t b2_offset() const { return hidden_ * dim_ + hidden_ + dim_ * hidden_; }

  /// Hidden activations tanh(W1 e + b1).
  void hidden_layer(std::span<const double> input, std::span<double> hidden_out) const;

  void apply(std::span<const double> input, std::span<double> output) const;
  std::vector<double> apply(std::span<const double> input) const;

  /// Adapter applied to every row; fingerprint and flags carried over.
  EmbeddingMatrix transform(const EmbeddingMatrix& base) const;

  /// True while W2 and b2 are still exactly zero (output = input).
  bool is_identity() const;

 private:
  std::size_t dim_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> params_;
};

/// Checkpoint layout: "LADP" magic, format version, dims, config hash,
/// parameters as little-endian 64-bit floats.
void save_adapter(const Adapter& adapter, const std::filesystem::path& path,
                  std::uint64_t config_hash);
Adapter load_adapter(const std::filesystem::path& path, std::uint64_t* config_hash = nullptr);

struct TrainConfig {
  std::size_t negatives_per_pair = 2;  // k_n
  double margin = 0.5;
  std::size_t resample_period = 3;  // T, epochs between sampling rounds
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t hidden_dim = 64;
  std::uint64_t seed = 0;
};

/// Expands positive pairs (r = 1) into negatives_per_pair triplets each,
/// negatives drawn seeded-uniform from the train split excluding the
/// anchor and positive. No positives at all is an error ("empty D_f").
std::vector<Triplet> build_triplets(const std::vector<RelationLabel>& labels,
                                    const DatasetBundle& bundle, const TrainConfig& config,
                                    int iteration = 0);

/// max(|a - p| - |a - n| + margin, 0) with Euclidean norms.
double triplet_loss(std::span<const double> a, std::span<const double> p,
                    std::span<const double> n, double margin);

struct TripletGradient {
  double loss = 0.0;
  bool active = false;  // hinge engaged; inactive means all grads are zero
  std::vector<double> param_grads;  // same layout as Adapter::params()
  std::array<std::vector<double>, 3> output_grads;  // dL wrt f(e_a), f(e_p), f(e_n)
};

/// Exact gradient of the triplet loss through the adapter, subgradient 0
/// at the hinge kink and at zero-distance norm kinks.
TripletGradient triplet_loss_grad(const Adapter& adapter, const Triplet& triplet,
                                  const EmbeddingMatrix& base, double margin);

struct EpochReport {
  double mean_loss = 0.0;
  double active_fraction = 0.0;
};

/// One seeded-shuffled pass of mini-batch gradient descent (mean-gradient
/// updates). Throws on a non-finite loss.
EpochReport train_epoch(Adapter& adapter, const std::vector<Triplet>& triplets,
                        const EmbeddingMatrix& base, const TrainConfig& config,
                        std::size_t epoch_index);

enum class Variant { lanid_near, lanid_dbscan, lanid_both };

std::string to_string(Variant variant);
Variant variant_from_string(const std::string& name);

struct IterationLog {
  int iteration = 0;
  std::size_t epoch_start = 0;
  std::size_t knn_pairs = 0;
  std::size_t density_pairs = 0;
  std::size_t annotated = 0;
  std::size_t positives = 0;
  double positive_rate = 0.0;
  std::size_t dispatched = 0;
  std::size_t cache_hits = 0;
  std::size_t shortcut_hits = 0;
  std::size_t failed = 0;
  std::size_t new_triplets = 0;
  std::size_t df_size = 0;
  std::vector<EpochReport> epoch_reports;
  std::vector<std::string> warnings;
};

struct RunLoopResult {
  Adapter adapter;
  std::vector<IterationLog> iterations;
};

/// The iterative loop: sample pairs from the current adapted representation
/// (sources per variant), annotate, grow the deduplicated triplet set, train
/// resample_period epochs, repeat until the epoch budget is spent.
RunLoopResult run_loop(const DatasetBundle& bundle, const EmbeddingMatrix& base,
                       const SamplerConfig& sampler_config, const TrainConfig& train_config,
                       Variant variant, OracleManager& oracle);

}  // namespace lanid
