#include "ptcl/decoder.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ptcl {

Decoder::Decoder(std::size_t input_dim, std::size_t class_count, const DecoderConfig& config, std::uint64_t seed)
    : config_(config) {
  if (input_dim == 0 || class_count < 2 || config.hidden_dim == 0) {
    throw std::invalid_argument("decoder needs positive input/hidden dims and at least two classes");
  }
  if (config.dropout < 0.0 || config.dropout >= 1.0) throw std::invalid_argument("decoder dropout must be in [0, 1)");
  std::mt19937_64 rng(seed);
  hidden_ = nn::Linear(static_cast<Eigen::Index>(input_dim), static_cast<Eigen::Index>(config.hidden_dim), rng);
  out_ = nn::Linear(static_cast<Eigen::Index>(config.hidden_dim), static_cast<Eigen::Index>(class_count), rng);
  hidden_.collect(params_, "hidden");
  out_.collect(params_, "out");
}

ag::Var Decoder::logits(const ag::Var& embeddings, std::mt19937_64* dropout_rng) const {
  if (static_cast<std::size_t>(embeddings->value.cols()) != input_dim()) {
    throw std::invalid_argument("decoder input width " + std::to_string(embeddings->value.cols()) +
                                " does not match embedding dim " + std::to_string(input_dim()));
  }
  ag::Var h = ag::relu(hidden_(embeddings));
  if (dropout_rng != nullptr) h = ag::dropout(h, config_.dropout, *dropout_rng);
  return out_(h);
}

void Decoder::zero_output_layer() const {
  out_.weight->value.setZero();
  out_.bias->value.setZero();
}

Matrix decode(const Decoder& decoder, const Matrix& embeddings) {
  ag::NoGradGuard guard;
  return ag::softmax_rows(decoder.logits(ag::constant(embeddings))->value);
}

std::vector<ClassId> argmax_rows(const Matrix& scores) {
  std::vector<ClassId> out(static_cast<std::size_t>(scores.rows()), 0);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<ClassId>(best);
  }
  return out;
}

std::vector<std::pair<NodeId, Timestamp>> pseudo_label_index(const DynamicGraph& graph, std::span<const NodeId> nodes,
                                                              Timestamp boundary_time) {
  std::vector<std::pair<NodeId, Timestamp>> out;
  for (NodeId u : nodes) {
    const auto timeline = graph.timeline(u);
    if (timeline.empty()) continue;
    for (std::size_t i = 0; i + 1 < timeline.size() && timeline[i] <= boundary_time; ++i) {
      out.emplace_back(u, timeline[i]);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PseudoLabelSet generate_pseudo_labels(const DynamicGraph& graph, const Encoder& encoder, const Decoder& decoder,
                                      const NeighborSampler& sampler, std::span<const NodeId> nodes,
                                      Timestamp boundary_time, std::size_t iteration) {
  const auto index = pseudo_label_index(graph, nodes, boundary_time);
  std::vector<NodeId> qn;
  std::vector<Timestamp> qt;
  qn.reserve(index.size());
  qt.reserve(index.size());
  for (const auto& [u, t] : index) {
    qn.push_back(u);
    qt.push_back(t);
  }
  PseudoLabelSet set;
  set.iteration = iteration;
  set.probabilities = Matrix::Zero(0, static_cast<Eigen::Index>(decoder.class_count()));
  if (index.empty()) return set;
  set.probabilities = decode(decoder, encoder.embed_values(graph, sampler, qn, qt));
  const auto labels = argmax_rows(set.probabilities);
  set.entries.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) set.entries.push_back({qn[i], qt[i], labels[i], 1.0});
  return set;
}

std::vector<NodeId> split_node_union(const SplitSpec& split) {
  std::vector<NodeId> out = split.train_nodes;
  out.insert(out.end(), split.val_nodes.begin(), split.val_nodes.end());
  out.insert(out.end(), split.test_nodes.begin(), split.test_nodes.end());
  std::sort(out.begin(), out.end());
  return out;
}

void write_pseudo_labels_csv(const std::filesystem::path& path, const PseudoLabelSet& set) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write " + path.string());
  std::fprintf(f, "node_id,timestamp,pseudo_label,weight,iteration\n");
  for (const auto& e : set.entries) {
    std::fprintf(f, "%" PRId64 ",%.17g,%d,%.17g,%zu\n", e.node, e.time, e.label, e.weight, set.iteration);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("failed writing " + path.string());
}

PseudoLabelSet read_pseudo_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pseudo-label dump " + path.string());
  PseudoLabelSet set;
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    PseudoLabel e;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    std::size_t iteration = 0;
    if (!(row >> e.node >> c1 >> e.time >> c2 >> e.label >> c3 >> e.weight >> c4 >> iteration) || c1 != ',' ||
        c2 != ',' || c3 != ',' || c4 != ',') {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": malformed pseudo-label row");
    }
    set.iteration = iteration;
    set.entries.push_back(e);
  }
  return set;
}

}  // namespace ptcl
