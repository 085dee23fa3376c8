#include "lanid/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "lanid/rng.hpp"

namespace lanid {

Adapter::Adapter(std::size_t dim, std::size_t hidden, std::uint64_t seed)
    : dim_(dim), hidden_(hidden) {
  if (dim == 0 || hidden == 0)
    throw std::invalid_argument("adapter dimensions must be positive");
  params_.assign(hidden * dim + hidden + dim * hidden + dim, 0.0);
  auto rng = make_rng(seed);
  double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t i = 0; i < hidden * dim; ++i) params_[i] = gaussian(rng) * scale;
  // b1, W2, b2 stay zero: output starts as the identity map.
}

void Adapter::hidden_layer(std::span<const double> input, std::span<double> hidden_out) const {
  const double* w1 = params_.data() + w1_offset();
  const double* b1 = params_.data() + b1_offset();
  for (std::size_t j = 0; j < hidden_; ++j) {
    double z = b1[j];
    const double* row = w1 + j * dim_;
    for (std::size_t k = 0; k < dim_; ++k) z += row[k] * input[k];
    hidden_out[j] = std::tanh(z);
  }
}

void Adapter::apply(std::span<const double> input, std::span<double> output) const {
  if (input.size() != dim_)
    throw std::invalid_argument("adapter input dimension mismatch: got " +
                                std::to_string(input.size()) + ", expected " +
                                std::to_string(dim_));
  std::vector<double> h(hidden_);
  hidden_layer(input, h);
  const double* w2 = params_.data() + w2_offset();
  const double* b2 = params_.data() + b2_offset();
  for (std::size_t i = 0; i < dim_; ++i) {
    double v = input[i] + b2[i];
    const double* row = w2 + i * hidden_;
    for (std::size_t j = 0; j < hidden_; ++j) v += row[j] * h[j];
    output[i] = v;
  }
}

std::vector<double> Adapter::apply(std::span<const double> input) const {
  std::vector<double> out(dim_);
  apply(input, out);
  return out;
}

EmbeddingMatrix Adapter::transform(const EmbeddingMatrix& base) const {
  if (base.dim() != dim_)
    throw std::invalid_argument("adapter dimension " + std::to_string(dim_) +
                                " does not match embedding dimension " +
                                std::to_string(base.dim()));
  EmbeddingMatrix out(base.size(), dim_);
  for (std::size_t i = 0; i < base.size(); ++i) apply(base.row(i), out.row(i));
  out.fingerprint = base.fingerprint;
  out.normalized = false;
  return out;
}

bool Adapter::is_identity() const {
  for (std::size_t i = w2_offset(); i < params_.size(); ++i)
    if (params_[i] != 0.0) return false;
  return true;
}

namespace {

constexpr char kCheckpointMagic[4] = {'L', 'A', 'D', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  write_u32(out, static_cast<std::uint32_t>(v));
  write_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t lo = read_u32(in);
  std::uint64_t hi = read_u32(in);
  return lo | hi << 32;
}

}  // namespace

void save_adapter(const Adapter& adapter, const std::filesystem::path& path,
                  std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  out.write(kCheckpointMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<std::uint32_t>(adapter.dim()));
  write_u32(out, static_cast<std::uint32_t>(adapter.hidden()));
  write_u64(out, config_hash);
  for (double v : adapter.params()) write_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

Adapter load_adapter(const std::filesystem::path& path, std::uint64_t* config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw std::runtime_error(path.string() + ": not an adapter checkpoint");
  std::uint32_t version = read_u32(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " +
                             std::to_string(version));
  std::uint32_t dim = read_u32(in);
  std::uint32_t hidden = read_u32(in);
  std::uint64_t hash = read_u64(in);
  if (config_hash) *config_hash = hash;
  Adapter adapter(dim, hidden, 0);
  for (double& v : adapter.params()) {
    v = std::bit_cast<double>(read_u64(in));
    if (!in) throw std::runtime_error(path.string() + ": truncated checkpoint");
  }
  return adapter;
}

std::vector<Triplet> build_triplets(const std::vector<RelationLabel>& labels,
                                    const DatasetBundle& bundle, const TrainConfig& config,
                                    int iteration) {
  if (config.negatives_per_pair == 0)
    throw std::invalid_argument("negatives_per_pair must be positive");
  const std::size_t n = bundle.train.size();
  if (n < 3) throw std::invalid_argument("triplet building needs at least 3 utterances");

  bool any_positive = false;
  for (const auto& label : labels)
    if (label.r == 1) {
      any_positive = true;
      break;
    }
  if (!any_positive) throw std::runtime_error("empty D_f: no positive pairs to train on");

  auto rng = make_rng(derive_seed(config.seed, "negatives", static_cast<std::uint64_t>(iteration)));
  std::vector<Triplet> out;
  for (const auto& label : labels) {
    if (label.r != 1) continue;
    int anchor = label.pair.anchor_id;
    int positive = label.pair.other_id;
    for (std::size_t j = 0; j < config.negatives_per_pair; ++j) {
      // Resample on collision, bounded; skipping is vanishingly rare for
      // non-degenerate train sizes.
      for (int attempt = 0; attempt < 100; ++attempt) {
        int negative = static_cast<int>(uniform_index(rng, n));
        if (negative == anchor || negative == positive) continue;
        out.push_back({anchor, positive, negative});
        break;
      }
    }
  }
  return out;
}

double triplet_loss(std::span<const double> a, std::span<const double> p,
                    std::span<const double> n, double margin) {
  if (a.size() != p.size() || a.size() != n.size())
    throw std::invalid_argument("triplet vectors must share one dimension");
  double value = euclidean_distance(a, p) - euclidean_distance(a, n) + margin;
  return value > 0.0 ? value : 0.0;
}

TripletGradient triplet_loss_grad(const Adapter& adapter, const Triplet& triplet,
                                  const EmbeddingMatrix& base, double margin) {
  const std::size_t d = adapter.dim();
  const std::size_t h = adapter.hidden();
  if (base.dim() != d) throw std::invalid_argument("adapter/embedding dimension mismatch");

  std::array<std::span<const double>, 3> inputs = {
      base.row(static_cast<std::size_t>(triplet.anchor)),
      base.row(static_cast<std::size_t>(triplet.positive)),
      base.row(static_cast<std::size_t>(triplet.negative))};
  std::array<std::vector<double>, 3> hiddens;
  std::array<std::vector<double>, 3> outputs;
  for (int x = 0; x < 3; ++x) {
    hiddens[x].resize(h);
    adapter.hidden_layer(inputs[x], hiddens[x]);
    outputs[x] = adapter.apply(inputs[x]);
  }

  TripletGradient grad;
  grad.param_grads.assign(adapter.param_count(), 0.0);
  for (auto& g : grad.output_grads) g.assign(d, 0.0);

  double dap = euclidean_distance(outputs[0], outputs[1]);
  double dan = euclidean_distance(outputs[0], outputs[2]);
  double hinge = dap - dan + margin;
  grad.loss = hinge > 0.0 ? hinge : 0.0;
  grad.active = hinge > 0.0;
  if (!grad.active) return grad;

  // Unit difference directions; subgradient 0 where a distance vanishes.
  std::vector<double> u_ap(d, 0.0);
  std::vector<double> u_an(d, 0.0);
  if (dap > 0.0)
    for (std::size_t i = 0; i < d; ++i) u_ap[i] = (outputs[0][i] - outputs[1][i]) / dap;
  if (dan > 0.0)
    for (std::size_t i = 0; i < d; ++i) u_an[i] = (outputs[0][i] - outputs[2][i]) / dan;

  for (std::size_t i = 0; i < d; ++i) {
    grad.output_grads[0][i] = u_ap[i] - u_an[i];
    grad.output_grads[1][i] = -u_ap[i];
    grad.output_grads[2][i] = u_an[i];
  }

  const auto& params = adapter.params();
  const double* w2 = params.data() + adapter.w2_offset();
  double* dW1 = grad.param_grads.data() + adapter.w1_offset();
  double* db1 = grad.param_grads.data() + adapter.b1_offset();
  double* dW2 = grad.param_grads.data() + adapter.w2_offset();
  double* db2 = grad.param_grads.data() + adapter.b2_offset();

  std::vector<double> dz(h);
  for (int x = 0; x < 3; ++x) {
    const auto& g = grad.output_grads[x];
    const auto& hv = hiddens[x];
    const auto& e = inputs[x];
    for (std::size_t i = 0; i < d; ++i) {
      double gi = g[i];
      if (gi == 0.0) continue;
      db2[i] += gi;
      double* w2row = dW2 + i * h;
      for (std::size_t j = 0; j < h; ++j) w2row[j] += gi * hv[j];
    }
    for (std::size_t j = 0; j < h; ++j) {
      double dh = 0.0;
      for (std::size_t i = 0; i < d; ++i) dh += w2[i * h + j] * g[i];
      dz[j] = dh * (1.0 - hv[j] * hv[j]);
    }
    for (std::size_t j = 0; j < h; ++j) {
      double dzj = dz[j];
      if (dzj == 0.0) continue;
      db1[j] += dzj;
      double* w1row = dW1 + j * d;
      for (std::size_t k = 0; k < d; ++k) w1row[k] += dzj * e[k];
    }
  }
  return grad;
}

EpochReport train_epoch(Adapter& adapter, const std::vector<Triplet>& triplets,
                        const EmbeddingMatrix& base, const TrainConfig& config,
                        std::size_t epoch_index) {
  if (triplets.empty()) throw std::invalid_argument("train_epoch called with no triplets");
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be positive");

  std::vector<std::size_t> order(triplets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rng = make_rng(derive_seed(config.seed, "epoch-shuffle", epoch_index));
  shuffle_in_place(rng, order);

  auto& params = adapter.params();
  std::vector<double> batch_grad(params.size());
  double loss_sum = 0.0;
  std::size_t active = 0;

  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    std::size_t end = std::min(start + config.batch_size, order.size());
    std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
    for (std::size_t i = start; i < end; ++i) {
      auto grad = triplet_loss_grad(adapter, triplets[order[i]], base, config.margin);
      if (!std::isfinite(grad.loss))
        throw std::runtime_error("non-finite triplet loss; lower the learning rate");
      loss_sum += grad.loss;
      if (grad.active) {
        ++active;
        for (std::size_t k = 0; k < params.size(); ++k) batch_grad[k] += grad.param_grads[k];
      }
    }
    double scale = config.learning_rate / static_cast<double>(end - start);
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= scale * batch_grad[k];
  }

  EpochReport report;
  report.mean_loss = loss_sum / static_cast<double>(triplets.size());
  report.active_fraction = static_cast<double>(active) / static_cast<double>(triplets.size());
  if (!std::isfinite(report.mean_loss))
    throw std::runtime_error("non-finite epoch loss; lower the learning rate");
  return report;
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::lanid_near: return "lanid_near";
    case Variant::lanid_dbscan: return "lanid_dbscan";
    case Variant::lanid_both: return "lanid_both";
  }
  return "lanid_both";
}

Variant variant_from_string(const std::string& name) {
  if (name == "lanid_near") return Variant::lanid_near;
  if (name == "lanid_dbscan") return Variant::lanid_dbscan;
  if (name == "lanid_both") return Variant::lanid_both;
  throw std::invalid_argument("unknown variant: " + name);
}

RunLoopResult run_loop(const DatasetBundle& bundle, const EmbeddingMatrix& base,
                       const SamplerConfig& sampler_config, const TrainConfig& train_config,
                       Variant variant, OracleManager& oracle) {
  if (train_config.epochs == 0) throw std::invalid_argument("run_loop needs at least one epoch");
  if (train_config.resample_period == 0)
    throw std::invalid_argument("resample_period must be positive");
  if (bundle.train.size() != base.size())
    throw std::invalid_argument("train split and embedding row counts differ");
  if (base.fingerprint != 0 && base.fingerprint != bundle.train_fingerprint())
    throw std::invalid_argument("embedding matrix is bound to a different split");

  RunLoopResult result;
  result.adapter = Adapter(base.dim(), train_config.hidden_dim,
                           derive_seed(train_config.seed, "adapter-init"));

  std::set<Triplet> seen;
  std::vector<Triplet> fine_tune_set;
  std::size_t epoch = 0;
  int iteration = 0;

  while (epoch < train_config.epochs) {
    IterationLog log;
    log.iteration = iteration;
    log.epoch_start = epoch;

    EmbeddingMatrix current = result.adapter.transform(base);

    std::vector<CandidatePair> pairs;
    if (variant != Variant::lanid_dbscan) {
      auto batch = sample_knn_pairs(current, sampler_config, iteration);
      pairs.insert(pairs.end(), batch.pairs.begin(), batch.pairs.end());
      log.warnings.insert(log.warnings.end(), batch.warnings.begin(), batch.warnings.end());
    }
    if (variant != Variant::lanid_near) {
      auto batch = sample_density_pairs(current, sampler_config, iteration);
      pairs.insert(pairs.end(), batch.pairs.begin(), batch.pairs.end());
      log.warnings.insert(log.warnings.end(), batch.warnings.begin(), batch.warnings.end());
    }
    pairs = dedupe_pairs(std::move(pairs));
    for (const auto& p : pairs)
      (p.source == PairSource::knn ? log.knn_pairs : log.density_pairs) += 1;

    if (pairs.empty()) {
      if (fine_tune_set.empty())
        throw std::runtime_error("empty D_f: the first sampling round produced no pairs");
      log.warnings.push_back("sampling produced no pairs; training on the accumulated set");
    } else {
      auto annotated = oracle.annotate_pairs(pairs, bundle);
      log.annotated = annotated.labels.size();
      log.dispatched = annotated.dispatched;
      log.cache_hits = annotated.cache_hits;
      log.shortcut_hits = annotated.shortcut_hits;
      log.failed = annotated.failed;
      for (const auto& label : annotated.labels)
        if (label.r == 1) ++log.positives;
      log.positive_rate = annotated.labels.empty()
                              ? 0.0
                              : static_cast<double>(log.positives) /
                                    static_cast<double>(annotated.labels.size());
      if (log.positives == 0) {
        if (fine_tune_set.empty())
          throw std::runtime_error("empty D_f: no positive pairs in the first sampling round");
        log.warnings.push_back("no positive pairs this round; training on the accumulated set");
      } else {
        auto fresh = build_triplets(annotated.labels, bundle, train_config, iteration);
        for (const auto& t : fresh)
          if (seen.insert(t).second) {
            fine_tune_set.push_back(t);
            ++log.new_triplets;
          }
      }
    }
    log.df_size = fine_tune_set.size();

    std::size_t to_run = std::min(train_config.resample_period, train_config.epochs - epoch);
    for (std::size_t t = 0; t < to_run; ++t) {
      log.epoch_reports.push_back(
          train_epoch(result.adapter, fine_tune_set, base, train_config, epoch));
      ++epoch;
    }
    result.iterations.push_back(std::move(log));
    ++iteration;
  }
  return result;
}

}  // namespace lanid
