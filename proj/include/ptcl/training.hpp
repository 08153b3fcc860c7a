#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ptcl/curriculum.hpp"
#include "ptcl/datasets.hpp"
#include "ptcl/decoder.hpp"
#include "ptcl/encoders.hpp"
#include "ptcl/sampler.hpp"

namespace ptcl {

enum class Method { ptcl, cft, dls, npl, ptcl2d, sem };

std::string to_string(Method method);
Method parse_method(const std::string& text);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedMethodError : public TrainingError {
 public:
  using TrainingError::TrainingError;
};

struct MethodSpec {
  Method method = Method::ptcl;
  /// E-step pseudo-label share; only sem may set it.
  double alpha = 0.0;
  /// M-step pseudo-label share.
  double beta = 0.5;
  CurriculumConfig curriculum;
  std::size_t em_iterations = 10;
  std::size_t epochs_per_step = 100;
  std::size_t warmup_epochs = 100;
  std::size_t patience = 15;
  /// EM iterations without validation improvement before stopping.
  std::size_t em_patience = 2;
  double learning_rate = 1e-4;
  std::size_t batch_size = 200;
  std::uint64_t seed = 0;
  std::size_t npl_refresh_every = 1;
  /// Post-boundary events scored for warmup early stopping (0 = all).
  std::size_t warmup_validation_events = 2000;
  DecoderConfig decoder;

  void validate() const;
};

/// One supervised term: coefficient * CE(label | h_node^time).
struct LabelEntry {
  NodeId node = 0;
  Timestamp time = 0.0;
  ClassId label = 0;
  double coefficient = 1.0;
};

/// Everything a training phase reads.
struct TrainContext {
  const LabeledDataset& data;
  const SplitSpec& split;
  const NeighborSampler& sampler;
};

struct Model {
  std::unique_ptr<Encoder> encoder;
  std::unique_ptr<Decoder> decoder;
  /// Second head co-trained with the encoder by ptcl2d.
  std::unique_ptr<Decoder> aux_decoder;

  nn::ParameterSet parameters() const;
};

Model make_model(const EncoderConfig& encoder_config, const MethodSpec& spec, const LabeledDataset& data);

struct EpochRecord {
  std::string phase;
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_metric = 0.0;
  double seconds = 0.0;
};

struct IterationRecord {
  std::size_t tau = 0;
  double val_metric = 0.0;
  std::size_t pseudo_count = 0;
  double mean_weight = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<IterationRecord> iterations;
  std::size_t best_iteration = 0;
  double best_val_metric = 0.0;
  std::map<std::string, double> phase_seconds;
};

struct Predictions {
  std::vector<NodeId> nodes;
  std::vector<Timestamp> times;
  Matrix probabilities;
  std::vector<ClassId> labels;
};

struct RunResult {
  Model model;
  TrainHistory history;
  Predictions test_predictions;
  double val_metric = 0.0;
  double test_metric = 0.0;
  std::string metric_name;
  /// Pseudo-labels of the last EM iteration (empty for cft and dls).
  PseudoLabelSet last_pseudo_labels;
};

struct RunHooks {
  std::function<void(const PseudoLabelSet&)> on_pseudo_labels;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Mixes a run seed with stream tags into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0);

/// Sorts entries by (time, node, label), drops zero coefficients and cuts
/// consecutive batches.
std::vector<std::vector<LabelEntry>> chronological_batches(std::vector<LabelEntry> entries, std::size_t batch_size);

/// sum coefficient * CE / entries.size() for embeddings already computed.
ag::Var label_loss(const Decoder& decoder, const ag::Var& embeddings, std::span<const LabelEntry> entries,
                   std::mt19937_64* dropout_rng);
/// Same, embedding the entries with the encoder first.
ag::Var label_loss(const Encoder& encoder, const Decoder& decoder, const TrainContext& ctx,
                   std::span<const LabelEntry> entries, std::mt19937_64* dropout_rng);

/// Train nodes at their final timestamps with their final labels.
std::vector<LabelEntry> final_label_entries(const TrainContext& ctx, double coefficient);
/// Pseudo-labels with coefficient * weight.
std::vector<LabelEntry> pseudo_label_entries(const PseudoLabelSet& pseudo, double coefficient);
/// Weighted pseudo-label term plus final-label term.
std::vector<LabelEntry> m_step_entries(const TrainContext& ctx, const PseudoLabelSet& pseudo, double beta);
/// Every (u, t), t <= T_B, of the train nodes labeled with y_u^{T_u}.
std::vector<LabelEntry> replicated_final_entries(const TrainContext& ctx);
/// Every (u, t), t <= T_B, of the train nodes with its true dynamic label.
std::vector<LabelEntry> dynamic_label_entries(const TrainContext& ctx);

/// Link-prediction pretraining of the encoder through a temporary scoring
/// head. Returns the per-epoch records.
std::vector<EpochRecord> warmup(const TrainContext& ctx, Encoder& encoder, const MethodSpec& spec);

/// Options for one decoder-only phase.
struct EStepOptions {
  std::size_t iteration = 0;
  /// Used only by sem with alpha > 0.
  const PseudoLabelSet* pseudo = nullptr;
  /// Receives every batch loss in order when set.
  std::vector<double>* batch_losses = nullptr;
};

/// Trains the decoder on frozen embeddings. The encoder is not modified.
std::vector<EpochRecord> e_step(const TrainContext& ctx, const Encoder& encoder, Decoder& decoder,
                                const MethodSpec& spec, const EStepOptions& options = {});

struct MStepOptions {
  std::size_t iteration = 0;
  /// ptcl2d: an extra head trained together with the encoder.
  Decoder* co_trained = nullptr;
  std::vector<double>* batch_losses = nullptr;
};

/// Trains the encoder against the frozen decoder on the weighted objective.
std::vector<EpochRecord> m_step(const TrainContext& ctx, Encoder& encoder, const Decoder& decoder,
                                const PseudoLabelSet& pseudo, const MethodSpec& spec,
                                const MStepOptions& options = {});

/// Jointly trains encoder and decoder on fixed entries (cft and dls).
std::vector<EpochRecord> supervised_phase(const TrainContext& ctx, Encoder& encoder, Decoder& decoder,
                                          std::vector<LabelEntry> entries, const MethodSpec& spec,
                                          const std::string& phase);

/// Class probabilities at each node's final timestamp.
Predictions predict(const TrainContext& ctx, const Encoder& encoder, const Decoder& decoder,
                    std::span<const NodeId> nodes);

/// AUC on class 1 for binary tasks, accuracy otherwise.
std::string metric_name(std::size_t class_count);
/// AUC for binary tasks, accuracy otherwise or when only one class is present.
/// The metric actually used is written to `used` when given.
double score_predictions(const Predictions& predictions, const LabeledDataset& data, std::string* used = nullptr);

/// Full method dispatch. When warm_encoder is given it replaces warmup with
/// those encoder parameter values.
RunResult run_method(const TrainContext& ctx, const EncoderConfig& encoder_config, const MethodSpec& spec,
                     const std::vector<Matrix>* warm_encoder = nullptr, const RunHooks& hooks = {});

}  // namespace ptcl
