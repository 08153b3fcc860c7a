#include "ptcl/encoders.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace ptcl {

namespace {

std::vector<std::int64_t> index_range(std::size_t begin, std::size_t end) {
  std::vector<std::int64_t> out(end - begin);
  std::iota(out.begin(), out.end(), static_cast<std::int64_t>(begin));
  return out;
}

// concat_cols that tolerates zero-width parts (non-attributed graphs).
ag::Var concat(std::vector<ag::Var> parts) {
  std::vector<ag::Var> kept;
  for (auto& p : parts) {
    if (p->value.cols() > 0) kept.push_back(std::move(p));
  }
  if (kept.size() == 1) return kept.front();
  return ag::concat_cols(kept);
}

std::vector<std::int64_t> widen(std::span<const std::int32_t> idx) { return {idx.begin(), idx.end()}; }

// Query time minus neighbor time for valid slots, zero for padding.
Matrix slot_deltas(const NeighborBatch& nb, std::span<const Timestamp> times) {
  Matrix dt = Matrix::Zero(static_cast<Eigen::Index>(nb.query_count * nb.k), 1);
  for (std::size_t q = 0; q < nb.query_count; ++q) {
    for (std::size_t j = 0; j < static_cast<std::size_t>(nb.valid_counts[q]); ++j) {
      const std::size_t slot = q * nb.k + j;
      dt(static_cast<Eigen::Index>(slot), 0) = times[q] - nb.neighbor_times[slot];
    }
  }
  return dt;
}

class TgatEncoder final : public Encoder {
 public:
  TgatEncoder(const EncoderConfig& config, std::size_t node_dim, std::size_t edge_dim, std::mt19937_64& rng)
      : Encoder(config) {
    const auto dt = static_cast<Eigen::Index>(config.time_dim);
    const auto d = static_cast<Eigen::Index>(config.output_dim);
    time_.frequencies = ag::leaf(nn::uniform_fan_in(1, dt, 1, rng), true);
    time_.phases = ag::leaf(nn::uniform_fan_in(1, dt, 1, rng), true);
    params_.add("time.frequencies", time_.frequencies);
    params_.add("time.phases", time_.phases);
    auto in_dim = static_cast<Eigen::Index>(node_dim);
    const auto de = static_cast<Eigen::Index>(edge_dim);
    for (std::size_t l = 0; l < config.layers; ++l) {
      Layer layer;
      layer.query = nn::Linear(in_dim + dt, d, rng);
      layer.key = nn::Linear(in_dim + de + dt, d, rng);
      layer.value = nn::Linear(in_dim + de + dt, d, rng);
      layer.merge1 = nn::Linear(d + in_dim, d, rng);
      layer.merge2 = nn::Linear(d, d, rng);
      const std::string prefix = "layers." + std::to_string(l);
      layer.query.collect(params_, prefix + ".query");
      layer.key.collect(params_, prefix + ".key");
      layer.value.collect(params_, prefix + ".value");
      layer.merge1.collect(params_, prefix + ".merge1");
      layer.merge2.collect(params_, prefix + ".merge2");
      layers_.push_back(std::move(layer));
      in_dim = d;
    }
  }

 protected:
  ag::Var forward(const DynamicGraph& graph, const NeighborSampler& sampler, std::span<const NodeId> nodes,
                  std::span<const Timestamp> times) const override {
    return represent(graph, sampler, nodes, times, layers_.size());
  }

 private:
  struct Layer {
    nn::Linear query, key, value, merge1, merge2;
  };

  ag::Var represent(const DynamicGraph& graph, const NeighborSampler& sampler, std::span<const NodeId> nodes,
                    std::span<const Timestamp> times, std::size_t level) const {
    if (level == 0) return ag::constant(gather_feature_rows(graph.node_features(), nodes));
    const Layer& layer = layers_[level - 1];
    const std::size_t n = nodes.size();
    const std::size_t k = config_.neighbor_k;
    const NeighborBatch nb = sampler.recent_neighbors(nodes, times, k);

    std::vector<NodeId> all_nodes(nodes.begin(), nodes.end());
    all_nodes.insert(all_nodes.end(), nb.neighbor_ids.begin(), nb.neighbor_ids.end());
    std::vector<Timestamp> all_times(times.begin(), times.end());
    all_times.insert(all_times.end(), nb.neighbor_times.begin(), nb.neighbor_times.end());
    const ag::Var h_all = represent(graph, sampler, all_nodes, all_times, level - 1);
    const auto self_idx = index_range(0, n);
    const auto nbr_idx = index_range(n, n + n * k);
    const ag::Var h_self = ag::gather_rows(h_all, self_idx);
    const ag::Var h_nbr = ag::gather_rows(h_all, nbr_idx);

    const ag::Var z_self = ag::cos_time(Matrix::Zero(static_cast<Eigen::Index>(n), 1), time_.frequencies, time_.phases);
    const ag::Var z_nbr = ag::cos_time(slot_deltas(nb, times), time_.frequencies, time_.phases);
    const auto edge_rows = widen(nb.edge_indices);
    const ag::Var e_nbr = ag::constant(gather_feature_rows(graph.edge_features(), edge_rows));

    const ag::Var q = layer.query(concat({h_self, z_self}));
    const ag::Var kv = concat({h_nbr, e_nbr, z_nbr});
    const ag::Var att = ag::attention(q, layer.key(kv), layer.value(kv), nb.valid_counts, k, config_.attention_heads);
    return layer.merge2(ag::relu(layer.merge1(concat({att, h_self}))));
  }

  TimeEncoding time_;
  std::vector<Layer> layers_;
};

class GraphMixerEncoder final : public Encoder {
 public:
  GraphMixerEncoder(const EncoderConfig& config, std::size_t node_dim, std::size_t edge_dim, std::mt19937_64& rng)
      : Encoder(config) {
    const auto dt = static_cast<Eigen::Index>(config.time_dim);
    const auto d = static_cast<Eigen::Index>(config.output_dim);
    const auto k = static_cast<Eigen::Index>(config.neighbor_k);
    const Eigen::Index channels = d;
    const Eigen::Index token_hidden = std::max<Eigen::Index>(1, k / 2);
    time_.frequencies = ag::leaf(fixed_frequencies(config.time_dim), false);
    time_.phases = ag::leaf(Matrix::Zero(1, dt), false);
    params_.add("time.frequencies", time_.frequencies);
    params_.add("time.phases", time_.phases);

    token_in_ = nn::Linear(static_cast<Eigen::Index>(edge_dim) + dt, channels, rng);
    token_in_.collect(params_, "link.token_in");
    for (std::size_t b = 0; b < config.layers; ++b) {
      Block block;
      block.token_norm = nn::LayerNorm(channels);
      block.token_fc1 = nn::Linear(k, token_hidden, rng);
      block.token_fc2 = nn::Linear(token_hidden, k, rng);
      block.channel_norm = nn::LayerNorm(channels);
      block.channel_fc1 = nn::Linear(channels, 4 * channels, rng);
      block.channel_fc2 = nn::Linear(4 * channels, channels, rng);
      const std::string prefix = "link.blocks." + std::to_string(b);
      block.token_norm.collect(params_, prefix + ".token_norm");
      block.token_fc1.collect(params_, prefix + ".token_fc1");
      block.token_fc2.collect(params_, prefix + ".token_fc2");
      block.channel_norm.collect(params_, prefix + ".channel_norm");
      block.channel_fc1.collect(params_, prefix + ".channel_fc1");
      block.channel_fc2.collect(params_, prefix + ".channel_fc2");
      blocks_.push_back(std::move(block));
    }
    link_out_ = nn::Linear(channels, d, rng);
    link_out_.collect(params_, "link.out");
    output_ = nn::Linear(d + static_cast<Eigen::Index>(node_dim), d, rng);
    output_.collect(params_, "output");
  }

 protected:
  ag::Var forward(const DynamicGraph& graph, const NeighborSampler& sampler, std::span<const NodeId> nodes,
                  std::span<const Timestamp> times) const override {
    const std::size_t n = nodes.size();
    const std::size_t k = config_.neighbor_k;
    const NeighborBatch nb = sampler.recent_neighbors(nodes, times, k);

    // Link tokens [edge || z(dt)] with padded slots zeroed.
    const Matrix deltas = slot_deltas(nb, times);
    Matrix z = Matrix::Zero(deltas.rows(), static_cast<Eigen::Index>(config_.time_dim));
    for (std::size_t q = 0; q < n; ++q) {
      for (std::size_t j = 0; j < static_cast<std::size_t>(nb.valid_counts[q]); ++j) {
        const auto row = static_cast<Eigen::Index>(q * k + j);
        z.row(row) = time_.encode(deltas(row, 0));
      }
    }
    const auto edge_rows = widen(nb.edge_indices);
    ag::Var x = token_in_(concat({ag::constant(gather_feature_rows(graph.edge_features(), edge_rows)), ag::constant(z)}));

    const std::size_t channels = static_cast<std::size_t>(x->value.cols());
    for (const Block& block : blocks_) {
      ag::Var t = ag::block_transpose(block.token_norm(x), k);
      t = block.token_fc2(ag::relu(block.token_fc1(t)));
      x = ag::add(x, ag::block_transpose(t, channels));
      ag::Var c = block.channel_fc2(ag::relu(block.channel_fc1(block.channel_norm(x))));
      x = ag::add(x, c);
    }
    const std::vector<std::int32_t> all_slots(n, static_cast<std::int32_t>(k));
    const ag::Var link = link_out_(ag::segment_mean(x, all_slots, k));

    // Node encoder: own features plus the mean over the last time_gap neighbors.
    Matrix node = gather_feature_rows(graph.node_features(), nodes);
    if (node.cols() > 0) {
      const NeighborBatch window =
          config_.time_gap == k ? nb : sampler.recent_neighbors(nodes, times, config_.time_gap);
      const Matrix& features = graph.node_features();
      for (std::size_t q = 0; q < n; ++q) {
        const auto count = static_cast<std::size_t>(window.valid_counts[q]);
        if (count == 0) continue;
        RowVector mean = RowVector::Zero(features.cols());
        for (std::size_t j = 0; j < count; ++j) mean += features.row(window.neighbor_ids[q * window.k + j]);
        node.row(static_cast<Eigen::Index>(q)) += mean / static_cast<double>(count);
      }
    }
    return output_(concat({link, ag::constant(std::move(node))}));
  }

 private:
  struct Block {
    nn::LayerNorm token_norm;
    nn::Linear token_fc1, token_fc2;
    nn::LayerNorm channel_norm;
    nn::Linear channel_fc1, channel_fc2;
  };

  TimeEncoding time_;
  nn::Linear token_in_;
  std::vector<Block> blocks_;
  nn::Linear link_out_;
  nn::Linear output_;
};

}  // namespace

std::string to_string(EncoderKind kind) { return kind == EncoderKind::tgat ? "tgat" : "graphmixer"; }

EncoderKind parse_encoder_kind(const std::string& text) {
  if (text == "tgat") return EncoderKind::tgat;
  if (text == "graphmixer") return EncoderKind::graphmixer;
  throw std::invalid_argument("unknown encoder kind '" + text + "' (expected tgat or graphmixer)");
}

void EncoderConfig::validate() const {
  if (time_dim == 0 || output_dim == 0 || attention_heads == 0 || layers == 0 || neighbor_k == 0 || time_gap == 0) {
    throw std::invalid_argument("encoder dimensions must be positive");
  }
  if (kind == EncoderKind::tgat && output_dim % attention_heads != 0) {
    throw std::invalid_argument("output_dim must be divisible by attention_heads");
  }
}

RowVector TimeEncoding::encode(double delta_t) const {
  return (delta_t * frequencies->value.row(0) + phases->value.row(0)).array().cos().matrix();
}

Matrix TimeEncoding::encode(std::span<const double> delta_t) const {
  Matrix out(static_cast<Eigen::Index>(delta_t.size()), frequencies->value.cols());
  for (std::size_t i = 0; i < delta_t.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = encode(delta_t[i]);
  return out;
}

RowVector fixed_frequencies(std::size_t dim) {
  RowVector w(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    w(static_cast<Eigen::Index>(i)) = std::pow(10.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
  }
  return w;
}

Matrix gather_feature_rows(const Matrix& table, std::span<const std::int64_t> ids) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(ids.size()), table.cols());
  if (table.cols() == 0) return out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= 0 && ids[i] < table.rows()) out.row(static_cast<Eigen::Index>(i)) = table.row(ids[i]);
  }
  return out;
}

ag::Var Encoder::embed(const DynamicGraph& graph, const NeighborSampler& sampler, std::span<const NodeId> nodes,
                       std::span<const Timestamp> times) const {
  if (nodes.size() != times.size()) throw std::invalid_argument("embed: node and time columns differ in length");
  if (const std::string bad = params_.first_non_finite(); !bad.empty()) {
    throw EncoderError("non-finite value in encoder parameter '" + bad + "'");
  }
  return forward(graph, sampler, nodes, times);
}

Matrix Encoder::embed_values(const DynamicGraph& graph, const NeighborSampler& sampler, std::span<const NodeId> nodes,
                             std::span<const Timestamp> times, std::size_t chunk) const {
  ag::NoGradGuard guard;
  Matrix out(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(config_.output_dim));
  for (std::size_t begin = 0; begin < nodes.size(); begin += chunk) {
    const std::size_t len = std::min(chunk, nodes.size() - begin);
    const ag::Var h = embed(graph, sampler, nodes.subspan(begin, len), times.subspan(begin, len));
    out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(len)) = h->value;
  }
  return out;
}

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config, std::size_t node_feature_dim,
                                      std::size_t edge_feature_dim, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  if (config.kind == EncoderKind::tgat) {
    return std::make_unique<TgatEncoder>(config, node_feature_dim, edge_feature_dim, rng);
  }
  return std::make_unique<GraphMixerEncoder>(config, node_feature_dim, edge_feature_dim, rng);
}

}  // namespace ptcl
