#include "reid/train.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "reid/error.hpp"
#include "reid/manifest.hpp"

namespace reid {

namespace {

constexpr std::uint64_t kValidationStream = 0xFFFF'FFFFULL;

struct BatchPass {
  std::vector<Vector> embeddings;
  std::vector<ForwardTrace> traces;
  std::vector<Label> labels;
};

BatchPass forward_batch(const EmbeddingNet& net, const LabeledFeatures& data,
                        std::span<const std::size_t> indices, const AugmentConfig* augment,
                        RngStream& augment_rng) {
  BatchPass pass;
  for (std::size_t idx : indices) {
    const Vector* input = &data.features[idx];
    Vector augmented;
    if (augment != nullptr && data.raster_shape) {
      RngStream sample_rng = augment_rng.derive(pass.labels.size());
      augmented = reid::augment(Raster::unflatten(*input, *data.raster_shape), *augment, sample_rng)
                      .flatten();
      input = &augmented;
    }
    ForwardResult fr = net.forward(*input);
    pass.embeddings.push_back(std::move(fr.embedding));
    pass.traces.push_back(std::move(fr.trace));
    pass.labels.push_back(data.labels[idx]);
  }
  return pass;
}

BatchLoss batch_objective(const BatchPass& pass, const TrainOptions& options, RngStream& mine_rng) {
  LabeledBatch batch{pass.embeddings, pass.labels};
  if (options.loss_kind == LossKind::triplet) {
    const auto triplets = mine_semi_hard_triplets(batch, options.loss, mine_rng);
    return triplet_objective(pass.embeddings, triplets, options.loss);
  }
  const auto pairs = sample_pairs(batch, mine_rng);
  return pair_objective(pass.embeddings, pairs, options.loss);
}

std::size_t batches_per_epoch(std::size_t samples, std::size_t batch_size) {
  return std::max<std::size_t>(1, (samples + batch_size - 1) / batch_size);
}

bool can_form_batches(const std::vector<std::vector<std::size_t>>& groups) {
  std::size_t nonempty = 0;
  bool repeated = false;
  for (const auto& g : groups) {
    if (!g.empty()) ++nonempty;
    if (g.size() >= 2) repeated = true;
  }
  return nonempty >= 2 && repeated;
}

std::optional<double> validation_loss(const EmbeddingNet& net, const LabeledFeatures& val,
                                      const TrainOptions& options, const RngStream& stream) {
  const auto groups = val.indices_by_label();
  if (!can_form_batches(groups)) return std::nullopt;
  const std::size_t k = options.optim.images_per_individual;
  const std::size_t p = std::max<std::size_t>(1, options.optim.batch_size / k);
  const std::size_t batches = batches_per_epoch(val.size(), options.optim.batch_size);
  double sum = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    RngStream batch_rng = stream.derive(b);
    RngStream sampler = batch_rng.derive(0);
    RngStream unused = batch_rng.derive(1);
    RngStream miner = batch_rng.derive(2);
    const auto indices = sample_pk_batch(groups, p, k, sampler);
    const BatchPass pass = forward_batch(net, val, indices, nullptr, unused);
    sum += batch_objective(pass, options, miner).loss;
  }
  return sum / static_cast<double>(batches);
}

}  // namespace

std::string_view to_string(LossKind kind) {
  return kind == LossKind::triplet ? "triplet" : "siamese";
}

LossKind parse_loss_kind(std::string_view text) {
  if (text == "triplet") return LossKind::triplet;
  if (text == "siamese" || text == "contrastive") return LossKind::siamese;
  throw ConfigError("loss.kind must be 'siamese' or 'triplet', got '" + std::string(text) + "'");
}

BatchLoss pair_objective(std::span<const Vector> embeddings, std::span<const Pair> pairs,
                         const LossConfig& cfg) {
  BatchLoss out;
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().dim();
  out.embedding_grads.assign(embeddings.size(), Vector(dim));
  if (pairs.empty()) return out;
  const double scale = 1.0 / static_cast<double>(pairs.size());
  for (const auto& pair : pairs) {
    const Vector& a = embeddings[pair.first];
    const Vector& b = embeddings[pair.second];
    out.loss += contrastive_loss(a, b, pair.same, cfg);
    PairGrad g = contrastive_grad(a, b, pair.same, cfg);
    out.embedding_grads[pair.first] += g.first * scale;
    out.embedding_grads[pair.second] += g.second * scale;
  }
  out.loss *= scale;
  return out;
}

BatchLoss triplet_objective(std::span<const Vector> embeddings, std::span<const Triplet> triplets,
                            const LossConfig& cfg) {
  BatchLoss out;
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().dim();
  out.embedding_grads.assign(embeddings.size(), Vector(dim));
  if (triplets.empty()) return out;
  const double scale = 1.0 / static_cast<double>(triplets.size());
  for (const auto& t : triplets) {
    const Vector& a = embeddings[t.anchor];
    const Vector& p = embeddings[t.positive];
    const Vector& n = embeddings[t.negative];
    out.loss += triplet_loss(a, p, n, cfg);
    TripletGrad g = triplet_grad(a, p, n, cfg);
    out.embedding_grads[t.anchor] += g.anchor * scale;
    out.embedding_grads[t.positive] += g.positive * scale;
    out.embedding_grads[t.negative] += g.negative * scale;
  }
  out.loss *= scale;
  return out;
}

ParamGrads backprop_batch(const EmbeddingNet& net, std::span<const ForwardTrace> traces,
                          std::span<const Vector> embedding_grads) {
  if (traces.size() != embedding_grads.size()) {
    throw DimensionError("backprop: " + std::to_string(traces.size()) + " traces but " +
                         std::to_string(embedding_grads.size()) + " gradients");
  }
  ParamGrads total = net.zero_grads();
  for (std::size_t i = 0; i < traces.size(); ++i) total += net.backward(traces[i], embedding_grads[i]);
  return total;
}

std::vector<std::size_t> sample_pk_batch(const std::vector<std::vector<std::size_t>>& indices_by_label,
                                         std::size_t individuals, std::size_t images_per_individual,
                                         RngStream& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t label = 0; label < indices_by_label.size(); ++label) {
    if (indices_by_label[label].size() >= 2) eligible.push_back(label);
  }
  if (eligible.size() < 2) {
    eligible.clear();
    for (std::size_t label = 0; label < indices_by_label.size(); ++label) {
      if (!indices_by_label[label].empty()) eligible.push_back(label);
    }
  }
  rng.shuffle(eligible);
  eligible.resize(std::min(eligible.size(), individuals));

  std::vector<std::size_t> batch;
  for (std::size_t label : eligible) {
    std::vector<std::size_t> images = indices_by_label[label];
    rng.shuffle(images);
    images.resize(std::min(images.size(), images_per_individual));
    batch.insert(batch.end(), images.begin(), images.end());
  }
  return batch;
}

void TrainOptions::validate() const {
  loss.validate();
  optim.validate();
  augment.validate();
}

TrainResult train(EmbeddingNet net, const LabeledFeatures& train_set,
                  const LabeledFeatures* validation, const TrainOptions& options, RngStream& rng) {
  options.validate();
  if (train_set.size() == 0) throw DataError("training set is empty");
  require_same_dim(net.input_dim(), train_set.feature_dim(), "training features vs model input");
  if (validation != nullptr && validation->size() > 0) {
    require_same_dim(net.input_dim(), validation->feature_dim(), "validation features vs model input");
  }

  const auto groups = train_set.indices_by_label();
  const std::size_t k = options.optim.images_per_individual;
  const std::size_t p = std::max<std::size_t>(1, options.optim.batch_size / k);
  const std::size_t batches = batches_per_epoch(train_set.size(), options.optim.batch_size);
  const AugmentConfig* augment = options.augment.any_enabled() ? &options.augment : nullptr;
  const RngStream val_stream = rng.derive(kValidationStream);

  TrainResult result{net, {}, false};
  AdamState state = AdamState::for_params(net.parameters());
  std::optional<double> best_val;
  std::size_t stale_epochs = 0;

  for (std::size_t epoch = 0; epoch < options.optim.epochs; ++epoch) {
    const RngStream epoch_rng = rng.derive(epoch);
    double sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const RngStream batch_rng = epoch_rng.derive(b);
      RngStream sampler = batch_rng.derive(0);
      RngStream augment_rng = batch_rng.derive(1);
      RngStream miner = batch_rng.derive(2);
      const auto indices = sample_pk_batch(groups, p, k, sampler);
      const BatchPass pass = forward_batch(net, train_set, indices, augment, augment_rng);
      const BatchLoss objective = batch_objective(pass, options, miner);
      const ParamGrads grads = backprop_batch(net, pass.traces, objective.embedding_grads);
      const auto params = net.parameters();
      const auto views = grads.views();
      adam_step(params, views, state, options.optim, epoch);
      sum += objective.loss;
    }

    EpochLog log{epoch, sum / static_cast<double>(batches), std::nullopt};
    if (validation != nullptr && validation->size() > 0) {
      log.val_loss = validation_loss(net, *validation, options, val_stream);
    }
    result.history.push_back(log);

    if (options.optim.early_stopping_patience > 0 && log.val_loss) {
      if (!best_val || *log.val_loss < *best_val) {
        best_val = log.val_loss;
        stale_epochs = 0;
        result.net = net;
      } else if (++stale_epochs >= options.optim.early_stopping_patience) {
        result.stopped_early = true;
        return result;
      }
    }
  }
  if (!best_val) result.net = std::move(net);
  return result;
}

void write_loss_log(std::ostream& out, std::span<const EpochLog> history) {
  out << "epoch,mean_train_loss,mean_val_loss\n";
  for (const auto& e : history) {
    out << e.epoch << ',' << format_real(e.train_loss) << ',';
    if (e.val_loss) out << format_real(*e.val_loss);
    out << '\n';
  }
}

}  // namespace reid
