#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "ptcl/encoders.hpp"
#include "ptcl/graph.hpp"
#include "ptcl/nn.hpp"
#include "ptcl/sampler.hpp"

namespace ptcl {

struct DecoderConfig {
  std::size_t hidden_dim = 80;
  double dropout = 0.1;
};

/// Label head q_phi: Linear -> ReLU -> Dropout -> Linear.
class Decoder {
 public:
  Decoder(std::size_t input_dim, std::size_t class_count, const DecoderConfig& config, std::uint64_t seed);

  /// Class logits. Dropout is applied only when dropout_rng is given.
  ag::Var logits(const ag::Var& embeddings, std::mt19937_64* dropout_rng = nullptr) const;

  std::size_t input_dim() const { return static_cast<std::size_t>(hidden_.in_dim()); }
  std::size_t class_count() const { return static_cast<std::size_t>(out_.out_dim()); }
  const nn::ParameterSet& parameters() const { return params_; }
  const DecoderConfig& config() const { return config_; }

  /// Zeros the output layer so every input decodes to the uniform distribution.
  void zero_output_layer() const;

 private:
  DecoderConfig config_;
  nn::Linear hidden_;
  nn::Linear out_;
  nn::ParameterSet params_;
};

/// Evaluation-mode class probabilities, one row per embedding row.
Matrix decode(const Decoder& decoder, const Matrix& embeddings);

/// Row-wise argmax; ties go to the lowest class index.
std::vector<ClassId> argmax_rows(const Matrix& scores);

struct PseudoLabel {
  NodeId node = 0;
  Timestamp time = 0.0;
  ClassId label = 0;
  double weight = 1.0;
};

struct PseudoLabelSet {
  std::vector<PseudoLabel> entries;
  /// Decoder probabilities behind each entry, row-aligned with entries.
  Matrix probabilities;
  std::size_t iteration = 0;
};

/// Every (u, t) with t in T_u \ {T_u} and t <= T_B for u in nodes, ordered
/// by (t, u).
std::vector<std::pair<NodeId, Timestamp>> pseudo_label_index(const DynamicGraph& graph, std::span<const NodeId> nodes,
                                                              Timestamp boundary_time);

/// Hard argmax pseudo-labels over pseudo_label_index with unit weights.
PseudoLabelSet generate_pseudo_labels(const DynamicGraph& graph, const Encoder& encoder, const Decoder& decoder,
                                      const NeighborSampler& sampler, std::span<const NodeId> nodes,
                                      Timestamp boundary_time, std::size_t iteration);

/// Labeled nodes of a split (train, val and test together).
std::vector<NodeId> split_node_union(const SplitSpec& split);

/// Writes node_id,timestamp,pseudo_label,weight,iteration rows.
void write_pseudo_labels_csv(const std::filesystem::path& path, const PseudoLabelSet& set);
/// Reads a dump back; probabilities are left empty.
PseudoLabelSet read_pseudo_labels_csv(const std::filesystem::path& path);

}  // namespace ptcl
