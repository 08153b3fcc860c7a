#include "ptcl/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "ptcl/evaluation.hpp"

namespace ptcl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

enum SeedTag : std::uint64_t {
  kEncoderInit = 1,
  kDecoderInit,
  kAuxDecoderInit,
  kLinkHeadInit,
  kWarmupNegatives,
  kWarmupValidation,
  kEStepDropout,
  kMStepDropout,
  kSupervisedDropout,
  kNplDropout,
};

std::vector<std::int64_t> index_range(std::size_t begin, std::size_t end) {
  std::vector<std::int64_t> out(end - begin);
  std::iota(out.begin(), out.end(), static_cast<std::int64_t>(begin));
  return out;
}

void check_finite_loss(const ag::Var& loss, const std::string& phase, std::size_t epoch) {
  if (!std::isfinite(loss->value(0, 0))) {
    throw TrainingError(phase + " diverged: non-finite loss at epoch " + std::to_string(epoch));
  }
}

/// Best-so-far tracking with patience over a parameter set.
class EarlyStopper {
 public:
  EarlyStopper(const nn::ParameterSet& params, std::size_t patience) : params_(params), patience_(patience) {}

  /// Returns true when training should stop. NaN metrics (no validation
  /// data) never stop training and always keep the latest parameters.
  bool update(double metric) {
    if (std::isnan(metric)) {
      best_ = params_.snapshot();
      return false;
    }
    if (!has_best_ || metric > best_metric_) {
      has_best_ = true;
      best_metric_ = metric;
      best_ = params_.snapshot();
      stale_ = 0;
      return false;
    }
    return ++stale_ >= patience_;
  }

  void restore() const {
    if (!best_.empty()) params_.restore(best_);
  }

 private:
  const nn::ParameterSet& params_;
  std::size_t patience_;
  bool has_best_ = false;
  double best_metric_ = -std::numeric_limits<double>::infinity();
  std::size_t stale_ = 0;
  std::vector<Matrix> best_;
};

struct LinkHead {
  nn::Linear fc1, fc2;
  nn::ParameterSet params;

  LinkHead(std::size_t dim, std::mt19937_64& rng)
      : fc1(static_cast<Eigen::Index>(2 * dim), static_cast<Eigen::Index>(dim), rng),
        fc2(static_cast<Eigen::Index>(dim), 1, rng) {
    fc1.collect(params, "fc1");
    fc2.collect(params, "fc2");
  }

  ag::Var operator()(const ag::Var& left, const ag::Var& right) const {
    return fc2(ag::relu(fc1(ag::concat_cols({left, right}))));
  }
};

/// Scores (positive, negative) link pairs; embeddings rows are [src; dst; neg].
ag::Var link_logits(const LinkHead& head, const ag::Var& h, std::size_t n) {
  std::vector<std::int64_t> left = index_range(0, n);
  left.insert(left.end(), left.begin(), left.end());
  std::vector<std::int64_t> right = index_range(n, 3 * n);
  return head(ag::gather_rows(h, left), ag::gather_rows(h, right));
}

double link_validation_auc(const TrainContext& ctx, const Encoder& encoder, const LinkHead& head,
                           std::span<const Interaction> positives, std::span<const Interaction> negatives) {
  if (positives.empty()) return std::nan("");
  ag::NoGradGuard guard;
  const std::size_t n = positives.size();
  std::vector<NodeId> nodes;
  std::vector<Timestamp> times;
  for (const auto& p : positives) nodes.push_back(p.source);
  for (const auto& p : positives) nodes.push_back(p.destination);
  for (const auto& p : negatives) nodes.push_back(p.destination);
  for (int r = 0; r < 3; ++r) {
    for (const auto& p : positives) times.push_back(p.timestamp);
  }
  const Matrix h = encoder.embed_values(ctx.data.graph, ctx.sampler, nodes, times);
  const Matrix logits = link_logits(head, ag::constant(h), n)->value;
  std::vector<double> scores(logits.data(), logits.data() + logits.size());
  std::vector<int> labels(2 * n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n), 1);
  return auc(scores, labels);
}

std::vector<NodeId> entry_nodes(std::span<const LabelEntry> entries) {
  std::vector<NodeId> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.node);
  return out;
}

std::vector<Timestamp> entry_times(std::span<const LabelEntry> entries) {
  std::vector<Timestamp> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.time);
  return out;
}

double validation_metric(const TrainContext& ctx, const Encoder& encoder, const Decoder& decoder) {
  if (ctx.split.val_nodes.empty()) return std::nan("");
  return score_predictions(predict(ctx, encoder, decoder, ctx.split.val_nodes), ctx.data);
}

Predictions predictions_from(std::span<const NodeId> nodes, std::vector<Timestamp> times, Matrix probabilities) {
  Predictions p;
  p.nodes.assign(nodes.begin(), nodes.end());
  p.times = std::move(times);
  p.labels = argmax_rows(probabilities);
  p.probabilities = std::move(probabilities);
  return p;
}

std::vector<Timestamp> final_times(const DynamicGraph& graph, std::span<const NodeId> nodes) {
  std::vector<Timestamp> out;
  out.reserve(nodes.size());
  for (NodeId u : nodes) out.push_back(graph.final_timestamp(u));
  return out;
}

/// One pass of joint training over fixed batches.
double joint_epoch(const TrainContext& ctx, Encoder& encoder, const Decoder& decoder,
                   const std::vector<std::vector<LabelEntry>>& batches, nn::Adam& adam, std::mt19937_64& rng,
                   const std::string& phase, std::size_t epoch, std::vector<double>* batch_losses) {
  double total = 0.0;
  for (const auto& batch : batches) {
    const ag::Var loss = label_loss(encoder, decoder, ctx, batch, &rng);
    check_finite_loss(loss, phase, epoch);
    total += loss->value(0, 0);
    if (batch_losses != nullptr) batch_losses->push_back(loss->value(0, 0));
    ag::backward(loss);
    adam.step();
  }
  return batches.empty() ? 0.0 : total / static_cast<double>(batches.size());
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::ptcl: return "ptcl";
    case Method::cft: return "cft";
    case Method::dls: return "dls";
    case Method::npl: return "npl";
    case Method::ptcl2d: return "ptcl2d";
    case Method::sem: return "sem";
  }
  return "ptcl";
}

Method parse_method(const std::string& text) {
  for (Method m : {Method::ptcl, Method::cft, Method::dls, Method::npl, Method::ptcl2d, Method::sem}) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown method '" + text + "' (expected ptcl, cft, dls, npl, ptcl2d or sem)");
}

void MethodSpec::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must be in [0, 1]");
  if (alpha != 0.0 && method != Method::sem) {
    throw std::invalid_argument("alpha is fixed to 0 for method " + to_string(method) + "; only sem mixes pseudo-labels into the E-step");
  }
  curriculum.validate();
  if (epochs_per_step == 0) throw std::invalid_argument("epochs_per_step must be positive");
  if (patience == 0 || em_patience == 0) throw std::invalid_argument("patience values must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (npl_refresh_every == 0) throw std::invalid_argument("npl_refresh_every must be positive");
  if (decoder.hidden_dim == 0) throw std::invalid_argument("decoder hidden_dim must be positive");
  if (decoder.dropout < 0.0 || decoder.dropout >= 1.0) throw std::invalid_argument("decoder dropout must be in [0, 1)");
}

nn::ParameterSet Model::parameters() const {
  nn::ParameterSet all;
  if (encoder) all.extend(encoder->parameters(), "encoder.");
  if (decoder) all.extend(decoder->parameters(), "decoder.");
  if (aux_decoder) all.extend(aux_decoder->parameters(), "aux_decoder.");
  return all;
}

Model make_model(const EncoderConfig& encoder_config, const MethodSpec& spec, const LabeledDataset& data) {
  Model model;
  const DynamicGraph& g = data.graph;
  model.encoder = make_encoder(encoder_config, g.node_feature_dim(), g.edge_feature_dim(), derive_seed(spec.seed, kEncoderInit));
  model.decoder = std::make_unique<Decoder>(encoder_config.output_dim, data.class_count(), spec.decoder,
                                            derive_seed(spec.seed, kDecoderInit));
  if (spec.method == Method::ptcl2d) {
    model.aux_decoder = std::make_unique<Decoder>(encoder_config.output_dim, data.class_count(), spec.decoder,
                                                  derive_seed(spec.seed, kAuxDecoderInit));
  }
  return model;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a running combination
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ tag);
  h = mix(h ^ a);
  return mix(h ^ b);
}

std::vector<std::vector<LabelEntry>> chronological_batches(std::vector<LabelEntry> entries, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  std::erase_if(entries, [](const LabelEntry& e) { return e.coefficient == 0.0; });
  std::stable_sort(entries.begin(), entries.end(), [](const LabelEntry& a, const LabelEntry& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.node != b.node) return a.node < b.node;
    return a.label < b.label;
  });
  std::vector<std::vector<LabelEntry>> batches;
  for (std::size_t begin = 0; begin < entries.size(); begin += batch_size) {
    const std::size_t end = std::min(entries.size(), begin + batch_size);
    batches.emplace_back(entries.begin() + static_cast<std::ptrdiff_t>(begin), entries.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

ag::Var label_loss(const Decoder& decoder, const ag::Var& embeddings, std::span<const LabelEntry> entries,
                   std::mt19937_64* dropout_rng) {
  if (entries.empty()) throw TrainingError("label loss over an empty batch");
  if (static_cast<std::size_t>(embeddings->value.rows()) != entries.size()) {
    throw std::invalid_argument("label loss: one embedding row per entry expected");
  }
  std::vector<std::int32_t> targets;
  std::vector<double> coefs;
  targets.reserve(entries.size());
  coefs.reserve(entries.size());
  for (const auto& e : entries) {
    targets.push_back(e.label);
    coefs.push_back(e.coefficient);
  }
  return ag::softmax_cross_entropy(decoder.logits(embeddings, dropout_rng), targets, coefs,
                                   static_cast<double>(entries.size()));
}

ag::Var label_loss(const Encoder& encoder, const Decoder& decoder, const TrainContext& ctx,
                   std::span<const LabelEntry> entries, std::mt19937_64* dropout_rng) {
  const auto nodes = entry_nodes(entries);
  const auto times = entry_times(entries);
  return label_loss(decoder, encoder.embed(ctx.data.graph, ctx.sampler, nodes, times), entries, dropout_rng);
}

std::vector<LabelEntry> final_label_entries(const TrainContext& ctx, double coefficient) {
  std::vector<LabelEntry> out;
  for (NodeId u : ctx.split.train_nodes) {
    const ClassId y = ctx.data.final_labels.at(static_cast<std::size_t>(u));
    if (y == kUnlabeled) continue;
    out.push_back({u, ctx.data.graph.final_timestamp(u), y, coefficient});
  }
  return out;
}

std::vector<LabelEntry> pseudo_label_entries(const PseudoLabelSet& pseudo, double coefficient) {
  std::vector<LabelEntry> out;
  out.reserve(pseudo.entries.size());
  for (const auto& e : pseudo.entries) out.push_back({e.node, e.time, e.label, coefficient * e.weight});
  return out;
}

std::vector<LabelEntry> m_step_entries(const TrainContext& ctx, const PseudoLabelSet& pseudo, double beta) {
  std::vector<LabelEntry> out = pseudo_label_entries(pseudo, beta);
  const auto finals = final_label_entries(ctx, 1.0 - beta);
  out.insert(out.end(), finals.begin(), finals.end());
  return out;
}

std::vector<LabelEntry> replicated_final_entries(const TrainContext& ctx) {
  std::vector<LabelEntry> out;
  for (NodeId u : ctx.split.train_nodes) {
    const ClassId y = ctx.data.final_labels.at(static_cast<std::size_t>(u));
    if (y == kUnlabeled) continue;
    for (Timestamp t : ctx.data.graph.timeline(u)) {
      if (t <= ctx.split.boundary_time) out.push_back({u, t, y, 1.0});
    }
  }
  return out;
}

std::vector<LabelEntry> dynamic_label_entries(const TrainContext& ctx) {
  if (!ctx.data.dynamic_labels) throw UnsupportedMethodError("dataset '" + ctx.data.name + "' has no dynamic labels");
  std::vector<LabelEntry> out;
  for (NodeId u : ctx.split.train_nodes) {
    for (Timestamp t : ctx.data.graph.timeline(u)) {
      if (t > ctx.split.boundary_time) continue;
      if (const auto y = ctx.data.dynamic_label(u, t)) out.push_back({u, t, *y, 1.0});
    }
  }
  return out;
}

std::vector<EpochRecord> warmup(const TrainContext& ctx, Encoder& encoder, const MethodSpec& spec) {
  const DynamicGraph& g = ctx.data.graph;
  const auto stamps = g.timestamps();
  const auto train_end = static_cast<std::size_t>(
      std::upper_bound(stamps.begin(), stamps.end(), ctx.split.boundary_time) - stamps.begin());
  if (train_end == 0) throw TrainingError("warmup: no events at or before the boundary time");

  std::vector<Interaction> val_pos;
  for (std::size_t e = train_end; e < g.event_count(); ++e) {
    if (spec.warmup_validation_events != 0 && val_pos.size() >= spec.warmup_validation_events) break;
    val_pos.push_back({g.source(e), g.destination(e), g.timestamp(e)});
  }
  const auto val_neg = val_pos.empty() ? std::vector<Interaction>{}
                                       : negative_sample(g, val_pos, derive_seed(spec.seed, kWarmupValidation));

  std::mt19937_64 head_rng(derive_seed(spec.seed, kLinkHeadInit));
  const LinkHead head(encoder.output_dim(), head_rng);
  nn::ParameterSet params;
  params.extend(encoder.parameters(), "encoder.");
  params.extend(head.params, "head.");
  nn::Adam adam(params.trainable(), spec.learning_rate);
  EarlyStopper stopper(encoder.parameters(), spec.patience);

  std::vector<EpochRecord> records;
  for (std::size_t epoch = 0; epoch < spec.warmup_epochs; ++epoch) {
    const auto start = Clock::now();
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < train_end; begin += spec.batch_size, ++batches) {
      const std::size_t end = std::min(train_end, begin + spec.batch_size);
      std::vector<Interaction> pos;
      for (std::size_t e = begin; e < end; ++e) pos.push_back({g.source(e), g.destination(e), g.timestamp(e)});
      const auto neg = negative_sample(g, pos, derive_seed(spec.seed, kWarmupNegatives, epoch, batches));
      const std::size_t n = pos.size();
      std::vector<NodeId> nodes;
      std::vector<Timestamp> times;
      nodes.reserve(3 * n);
      times.reserve(3 * n);
      for (const auto& p : pos) nodes.push_back(p.source);
      for (const auto& p : pos) nodes.push_back(p.destination);
      for (const auto& p : neg) nodes.push_back(p.destination);
      for (int r = 0; r < 3; ++r) {
        for (const auto& p : pos) times.push_back(p.timestamp);
      }
      const ag::Var h = encoder.embed(g, ctx.sampler, nodes, times);
      std::vector<double> labels(2 * n, 0.0);
      std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n), 1.0);
      const ag::Var loss = ag::binary_cross_entropy(link_logits(head, h, n), labels, static_cast<double>(2 * n));
      check_finite_loss(loss, "warmup", epoch);
      total += loss->value(0, 0);
      ag::backward(loss);
      adam.step();
    }
    EpochRecord rec{"warmup", 0, epoch, total / static_cast<double>(batches),
                    link_validation_auc(ctx, encoder, head, val_pos, val_neg), seconds_since(start)};
    records.push_back(rec);
    if (stopper.update(rec.val_metric)) break;
  }
  stopper.restore();
  return records;
}

std::vector<EpochRecord> e_step(const TrainContext& ctx, const Encoder& encoder, Decoder& decoder,
                                const MethodSpec& spec, const EStepOptions& options) {
  if (ctx.split.train_nodes.empty()) throw TrainingError("E-step: no labeled train nodes");
  const bool mix = spec.method == Method::sem && spec.alpha > 0.0 && options.pseudo != nullptr;
  std::vector<LabelEntry> entries = final_label_entries(ctx, spec.method == Method::sem ? 1.0 - spec.alpha : 1.0);
  if (mix) {
    const auto extra = pseudo_label_entries(*options.pseudo, spec.alpha);
    entries.insert(entries.end(), extra.begin(), extra.end());
  }
  const auto batches = chronological_batches(std::move(entries), spec.batch_size);
  if (batches.empty()) throw TrainingError("E-step: every label term has zero weight");

  // The encoder is frozen: embed every entry once.
  std::vector<LabelEntry> flat;
  for (const auto& b : batches) flat.insert(flat.end(), b.begin(), b.end());
  const Matrix h = encoder.embed_values(ctx.data.graph, ctx.sampler, entry_nodes(flat), entry_times(flat));
  const auto val_times = final_times(ctx.data.graph, ctx.split.val_nodes);
  const Matrix h_val = ctx.split.val_nodes.empty()
                           ? Matrix()
                           : encoder.embed_values(ctx.data.graph, ctx.sampler, ctx.split.val_nodes, val_times);

  nn::Adam adam(decoder.parameters().trainable(), spec.learning_rate);
  std::mt19937_64 rng(derive_seed(spec.seed, kEStepDropout, options.iteration));
  EarlyStopper stopper(decoder.parameters(), spec.patience);
  std::vector<EpochRecord> records;
  for (std::size_t epoch = 0; epoch < spec.epochs_per_step; ++epoch) {
    const auto start = Clock::now();
    double total = 0.0;
    Eigen::Index row = 0;
    for (const auto& batch : batches) {
      const auto len = static_cast<Eigen::Index>(batch.size());
      const ag::Var loss = label_loss(decoder, ag::constant(h.middleRows(row, len)), batch, &rng);
      row += len;
      check_finite_loss(loss, "E-step", epoch);
      total += loss->value(0, 0);
      if (options.batch_losses != nullptr) options.batch_losses->push_back(loss->value(0, 0));
      ag::backward(loss);
      adam.step();
    }
    double val = std::nan("");
    if (h_val.rows() > 0) {
      val = score_predictions(predictions_from(ctx.split.val_nodes, val_times, decode(decoder, h_val)), ctx.data);
    }
    records.push_back({"e_step", options.iteration, epoch, total / static_cast<double>(batches.size()), val,
                       seconds_since(start)});
    if (stopper.update(val)) break;
  }
  stopper.restore();
  return records;
}

std::vector<EpochRecord> m_step(const TrainContext& ctx, Encoder& encoder, const Decoder& decoder,
                                const PseudoLabelSet& pseudo, const MethodSpec& spec, const MStepOptions& options) {
  if (spec.beta == 1.0 && pseudo.entries.empty()) {
    throw TrainingError("M-step: empty pseudo-label set with beta = 1 leaves no objective");
  }
  const auto batches = chronological_batches(m_step_entries(ctx, pseudo, spec.beta), spec.batch_size);
  if (batches.empty()) throw TrainingError("M-step: every label term has zero weight");

  nn::FreezeGuard freeze(decoder.parameters());
  nn::ParameterSet trained;
  trained.extend(encoder.parameters(), "encoder.");
  if (options.co_trained != nullptr) trained.extend(options.co_trained->parameters(), "aux_decoder.");
  nn::Adam adam(trained.trainable(), spec.learning_rate);
  std::mt19937_64 rng(derive_seed(spec.seed, kMStepDropout, options.iteration));
  EarlyStopper stopper(trained, spec.patience);

  std::vector<EpochRecord> records;
  for (std::size_t epoch = 0; epoch < spec.epochs_per_step; ++epoch) {
    const auto start = Clock::now();
    double total = 0.0;
    for (const auto& batch : batches) {
      // The frozen head runs in evaluation mode; a co-trained head uses dropout.
      const ag::Var loss = options.co_trained != nullptr
                               ? label_loss(encoder, *options.co_trained, ctx, batch, &rng)
                               : label_loss(encoder, decoder, ctx, batch, nullptr);
      check_finite_loss(loss, "M-step", epoch);
      total += loss->value(0, 0);
      if (options.batch_losses != nullptr) options.batch_losses->push_back(loss->value(0, 0));
      ag::backward(loss);
      adam.step();
    }
    const double val = validation_metric(ctx, encoder, decoder);
    records.push_back({"m_step", options.iteration, epoch, total / static_cast<double>(batches.size()), val,
                       seconds_since(start)});
    if (stopper.update(val)) break;
  }
  stopper.restore();
  return records;
}

std::vector<EpochRecord> supervised_phase(const TrainContext& ctx, Encoder& encoder, Decoder& decoder,
                                          std::vector<LabelEntry> entries, const MethodSpec& spec,
                                          const std::string& phase) {
  const auto batches = chronological_batches(std::move(entries), spec.batch_size);
  if (batches.empty()) throw TrainingError(phase + ": no training labels");
  nn::ParameterSet params;
  params.extend(encoder.parameters(), "encoder.");
  params.extend(decoder.parameters(), "decoder.");
  nn::Adam adam(params.trainable(), spec.learning_rate);
  std::mt19937_64 rng(derive_seed(spec.seed, kSupervisedDropout));
  EarlyStopper stopper(params, spec.patience);
  std::vector<EpochRecord> records;
  for (std::size_t epoch = 0; epoch < spec.epochs_per_step; ++epoch) {
    const auto start = Clock::now();
    const double loss = joint_epoch(ctx, encoder, decoder, batches, adam, rng, phase, epoch, nullptr);
    const double val = validation_metric(ctx, encoder, decoder);
    records.push_back({phase, 0, epoch, loss, val, seconds_since(start)});
    if (stopper.update(val)) break;
  }
  stopper.restore();
  return records;
}

Predictions predict(const TrainContext& ctx, const Encoder& encoder, const Decoder& decoder,
                    std::span<const NodeId> nodes) {
  auto times = final_times(ctx.data.graph, nodes);
  Matrix probs = nodes.empty() ? Matrix(0, static_cast<Eigen::Index>(decoder.class_count()))
                               : decode(decoder, encoder.embed_values(ctx.data.graph, ctx.sampler, nodes, times));
  return predictions_from(nodes, std::move(times), std::move(probs));
}

std::string metric_name(std::size_t class_count) { return class_count == 2 ? "auc" : "acc"; }

double score_predictions(const Predictions& predictions, const LabeledDataset& data, std::string* used) {
  std::vector<double> scores;
  std::vector<int> binary;
  std::vector<ClassId> predicted, truth;
  for (std::size_t i = 0; i < predictions.nodes.size(); ++i) {
    const auto u = static_cast<std::size_t>(predictions.nodes[i]);
    if (!data.eval_mask.empty() && !data.eval_mask[u]) continue;
    const ClassId y = data.final_labels.at(u);
    if (y == kUnlabeled) continue;
    predicted.push_back(predictions.labels[i]);
    truth.push_back(y);
    if (data.class_count() == 2) {
      scores.push_back(predictions.probabilities(static_cast<Eigen::Index>(i), 1));
      binary.push_back(y);
    }
  }
  if (truth.empty()) throw MetricError("no evaluable nodes among the predictions");
  if (data.class_count() == 2) {
    const bool both = std::find(binary.begin(), binary.end(), 0) != binary.end() &&
                      std::find(binary.begin(), binary.end(), 1) != binary.end();
    if (both) {
      if (used) *used = "auc";
      return auc(scores, binary);
    }
  }
  if (used) *used = "acc";
  return accuracy(predicted, truth);
}

RunResult run_method(const TrainContext& ctx, const EncoderConfig& encoder_config, const MethodSpec& spec,
                     const std::vector<Matrix>* warm_encoder, const RunHooks& hooks) {
  spec.validate();
  encoder_config.validate();
  if (spec.method == Method::dls && !ctx.data.dynamic_labels) {
    throw UnsupportedMethodError("dls needs dynamic labels, but dataset '" + ctx.data.name + "' has none");
  }
  if (ctx.split.train_nodes.empty()) throw TrainingError("split has no train nodes");

  RunResult result;
  result.metric_name = metric_name(ctx.data.class_count());
  Model& model = result.model;
  model = make_model(encoder_config, spec, ctx.data);
  TrainHistory& history = result.history;
  const auto log = [&](const std::vector<EpochRecord>& records) {
    for (const auto& r : records) {
      history.epochs.push_back(r);
      history.phase_seconds[r.phase] += r.seconds;
      if (hooks.on_epoch) hooks.on_epoch(r);
    }
  };

  if (warm_encoder != nullptr) {
    model.encoder->parameters().restore(*warm_encoder);
  } else {
    log(warmup(ctx, *model.encoder, spec));
  }

  Encoder& encoder = *model.encoder;
  Decoder& decoder = *model.decoder;
  const std::vector<NodeId> labeled = split_node_union(ctx.split);

  switch (spec.method) {
    case Method::cft:
      log(supervised_phase(ctx, encoder, decoder, replicated_final_entries(ctx), spec, "cft"));
      break;
    case Method::dls:
      log(supervised_phase(ctx, encoder, decoder, dynamic_label_entries(ctx), spec, "dls"));
      break;
    case Method::npl: {
      log(e_step(ctx, encoder, decoder, spec));
      CurriculumState curriculum(spec.curriculum, ctx.data.class_count());
      nn::ParameterSet params = model.parameters();
      nn::Adam adam(params.trainable(), spec.learning_rate);
      std::mt19937_64 rng(derive_seed(spec.seed, kNplDropout));
      EarlyStopper stopper(params, spec.patience);
      std::vector<std::vector<LabelEntry>> batches;
      for (std::size_t epoch = 0; epoch < spec.epochs_per_step; ++epoch) {
        const auto start = Clock::now();
        if (epoch % spec.npl_refresh_every == 0) {
          curriculum.iteration = static_cast<std::int64_t>(epoch / spec.npl_refresh_every + 1);
          PseudoLabelSet pseudo = generate_pseudo_labels(ctx.data.graph, encoder, decoder, ctx.sampler, labeled,
                                                         ctx.split.boundary_time, static_cast<std::size_t>(curriculum.iteration));
          curriculum.record(pseudo);
          curriculum.assign_weights(pseudo, ctx.data.graph);
          if (hooks.on_pseudo_labels) hooks.on_pseudo_labels(pseudo);
          batches = chronological_batches(m_step_entries(ctx, pseudo, spec.beta), spec.batch_size);
          result.last_pseudo_labels = std::move(pseudo);
        }
        const double loss = joint_epoch(ctx, encoder, decoder, batches, adam, rng, "npl", epoch, nullptr);
        const double val = validation_metric(ctx, encoder, decoder);
        log({{"npl", static_cast<std::size_t>(curriculum.iteration), epoch, loss, val, seconds_since(start)}});
        if (stopper.update(val)) break;
      }
      stopper.restore();
      break;
    }
    case Method::ptcl:
    case Method::ptcl2d:
    case Method::sem: {
      log(e_step(ctx, encoder, decoder, spec));
      CurriculumState curriculum(spec.curriculum, ctx.data.class_count());
      const nn::ParameterSet params = model.parameters();
      double best = validation_metric(ctx, encoder, decoder);
      history.iterations.push_back({0, best, 0, 0.0, 0.0});
      history.best_iteration = 0;
      std::vector<Matrix> best_params = params.snapshot();
      std::size_t stale = 0;
      for (std::size_t tau = 1; tau <= spec.em_iterations; ++tau) {
        const auto start = Clock::now();
        curriculum.iteration = static_cast<std::int64_t>(tau);
        const auto gen_start = Clock::now();
        PseudoLabelSet pseudo = generate_pseudo_labels(ctx.data.graph, encoder, decoder, ctx.sampler, labeled,
                                                       ctx.split.boundary_time, tau);
        curriculum.record(pseudo);
        curriculum.assign_weights(pseudo, ctx.data.graph);
        history.phase_seconds["generate"] += seconds_since(gen_start);
        if (hooks.on_pseudo_labels) hooks.on_pseudo_labels(pseudo);

        MStepOptions m_options;
        m_options.iteration = tau;
        m_options.co_trained = model.aux_decoder.get();
        log(m_step(ctx, encoder, decoder, pseudo, spec, m_options));
        EStepOptions e_options;
        e_options.iteration = tau;
        e_options.pseudo = &pseudo;
        log(e_step(ctx, encoder, decoder, spec, e_options));

        const double val = validation_metric(ctx, encoder, decoder);
        double weight_sum = 0.0;
        for (const auto& e : pseudo.entries) weight_sum += e.weight;
        const double mean_weight = pseudo.entries.empty() ? 0.0 : weight_sum / static_cast<double>(pseudo.entries.size());
        history.iterations.push_back({tau, val, pseudo.entries.size(), mean_weight, seconds_since(start)});
        result.last_pseudo_labels = std::move(pseudo);
        if (val > best || (std::isnan(best) && !std::isnan(val))) {
          best = val;
          history.best_iteration = tau;
          best_params = params.snapshot();
          stale = 0;
        } else if (++stale >= spec.em_patience) {
          break;
        }
      }
      params.restore(best_params);
      history.best_val_metric = best;
      break;
    }
  }

  if (spec.method != Method::ptcl && spec.method != Method::ptcl2d && spec.method != Method::sem) {
    history.best_val_metric = validation_metric(ctx, encoder, decoder);
  }
  result.val_metric = history.best_val_metric;
  result.test_predictions = predict(ctx, encoder, decoder, ctx.split.test_nodes);
  result.test_metric = ctx.split.test_nodes.empty()
                           ? std::nan("")
                           : score_predictions(result.test_predictions, ctx.data, &result.metric_name);
  return result;
}

}  // namespace ptcl
