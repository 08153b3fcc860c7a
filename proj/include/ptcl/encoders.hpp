#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>

#include "ptcl/graph.hpp"
#include "ptcl/nn.hpp"
#include "ptcl/sampler.hpp"

namespace ptcl {

enum class EncoderKind { tgat, graphmixer };

std::string to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(const std::string& text);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::tgat;
  std::size_t time_dim = 100;
  std::size_t output_dim = 172;
  std::size_t attention_heads = 2;
  /// Graph attention layers (tgat) or mixer blocks (graphmixer).
  std::size_t layers = 2;
  std::size_t neighbor_k = 20;
  /// Node-encoder window for graphmixer, counted in interactions of the node.
  std::size_t time_gap = 2000;

  void validate() const;
};

class EncoderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// z(dt) = cos(dt * w + b).
struct TimeEncoding {
  ag::Var frequencies;  // 1 x d_T
  ag::Var phases;       // 1 x d_T

  RowVector encode(double delta_t) const;
  /// One row per entry of delta_t.
  Matrix encode(std::span<const double> delta_t) const;
  std::size_t dim() const { return static_cast<std::size_t>(frequencies->value.cols()); }
};

/// Time-aware node embedding function h_u^t.
class Encoder {
 public:
  virtual ~Encoder() = default;

  /// Differentiable embeddings, one row per (node, time) query.
  ag::Var embed(const DynamicGraph& graph, const NeighborSampler& sampler, std::span<const NodeId> nodes,
                std::span<const Timestamp> times) const;

  /// Plain values computed without recording a graph, in chunks.
  Matrix embed_values(const DynamicGraph& graph, const NeighborSampler& sampler, std::span<const NodeId> nodes,
                      std::span<const Timestamp> times, std::size_t chunk = 2048) const;

  const EncoderConfig& config() const { return config_; }
  const nn::ParameterSet& parameters() const { return params_; }
  std::size_t output_dim() const { return config_.output_dim; }

 protected:
  explicit Encoder(EncoderConfig config) : config_(config) {}
  virtual ag::Var forward(const DynamicGraph& graph, const NeighborSampler& sampler, std::span<const NodeId> nodes,
                          std::span<const Timestamp> times) const = 0;

  EncoderConfig config_;
  nn::ParameterSet params_;
};

/// Builds an encoder sized for the graph's node and edge feature dimensions.
std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config, std::size_t node_feature_dim,
                                      std::size_t edge_feature_dim, std::uint64_t seed);

/// Fixed graphmixer frequencies, w_i = 10^(-2i/d).
RowVector fixed_frequencies(std::size_t dim);

/// Rows of a feature table at the given ids; ids outside the table give zero
/// rows.
Matrix gather_feature_rows(const Matrix& table, std::span<const std::int64_t> ids);

}  // namespace ptcl
