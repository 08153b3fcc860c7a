#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ptcl/graph.hpp"

namespace ptcl {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Class of node u at each of its timestamps.
using DynamicLabels = std::map<std::pair<NodeId, Timestamp>, ClassId>;

struct LabeledDataset {
  std::string name;
  DynamicGraph graph;
  /// One entry per node; kUnlabeled for nodes outside the label space.
  std::vector<ClassId> final_labels;
  std::optional<DynamicLabels> dynamic_labels;
  bool bipartite = false;
  /// Nodes that count towards metrics. Background nodes are false.
  std::vector<bool> eval_mask;

  std::size_t class_count() const { return graph.class_count(); }
  std::size_t labeled_count() const;
  std::optional<ClassId> dynamic_label(NodeId u, Timestamp t) const;
};

/// Wikipedia/Reddit style file: header, then
/// user_id,item_id,timestamp,state_label,f1..fD per row.
LabeledDataset load_jodie_csv(const std::filesystem::path& path);

/// Directory with edges.csv (src,dst,t,f...), nodes.csv (id,f...) and
/// labels.csv (id,label[,t]). Rows with t are dynamic labels; nodes without
/// any label row are background nodes.
LabeledDataset load_dsub_like(const std::filesystem::path& dir);

/// Writes the generic three-file format readable by load_dsub_like.
void save_generic(const LabeledDataset& data, const std::filesystem::path& dir, bool include_dynamic_labels = true);

struct DriftConfig {
  std::size_t node_count = 2000;
  std::size_t event_count = 40000;
  std::size_t class_count = 2;
  double switch_probability = 0.002;
  double homophily = 0.8;
  double feature_noise = 0.5;
  std::uint64_t seed = 0;
  std::size_t node_feature_dim = 8;
  std::size_t edge_feature_dim = 8;
  /// Initial class distribution; empty means uniform.
  std::vector<double> class_prior;

  void validate() const;
};

/// Synthetic stream with planted, drifting latent classes.
///
/// Event e happens at time e + 1. Its source is drawn uniformly, flips to a
/// different class with probability switch_probability, and connects to a
/// same-class destination with probability homophily. Edge features are the
/// source's current class centroid plus noise; node features are the
/// initial class centroid plus noise.
LabeledDataset generate_drift(const DriftConfig& config);

/// Number of latent switches recorded by the generator (for diagnostics).
std::size_t count_label_switches(const LabeledDataset& data);

/// Centroid of class c: unit entries on the dimensions congruent to c.
RowVector class_centroid(std::size_t c, std::size_t class_count, std::size_t dim);

}  // namespace ptcl
