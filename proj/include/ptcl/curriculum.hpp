#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "ptcl/decoder.hpp"
#include "ptcl/graph.hpp"

namespace ptcl {

enum class CurriculumStrategy { temporal, naive, cst, est };

std::string to_string(CurriculumStrategy strategy);
CurriculumStrategy parse_curriculum_strategy(const std::string& text);

/// 1 when d <= tau, otherwise exp(-gamma * (d - tau)). Throws for gamma <= 0
/// or tau < 1.
double temporal_weight(std::int64_t d, std::int64_t tau, double gamma);

struct CurriculumConfig {
  CurriculumStrategy strategy = CurriculumStrategy::temporal;
  double gamma = 0.5;
  double cst_threshold = 0.8;
  /// Entropy threshold for est; non-positive means 0.5 * log(class_count).
  double est_threshold = 0.0;

  void validate() const;
};

class CurriculumState {
 public:
  CurriculumState(const CurriculumConfig& config, std::size_t class_count);

  /// EM iteration counter tau; starts at 1.
  std::int64_t iteration = 1;

  const CurriculumConfig& config() const { return config_; }
  double est_threshold() const;

  /// Appends one round of softmax rows to the est history.
  void record(const PseudoLabelSet& set);
  std::size_t rounds() const { return rounds_; }
  /// Accumulated softmax row for (u, t); empty when never recorded.
  RowVector history(NodeId u, Timestamp t) const;

  /// Rewrites every entry's weight according to the strategy.
  void assign_weights(PseudoLabelSet& set, const DynamicGraph& graph) const;

 private:
  CurriculumConfig config_;
  std::size_t class_count_;
  std::size_t rounds_ = 0;
  std::map<std::pair<NodeId, Timestamp>, Eigen::Index> rows_;
  Matrix history_;
};

/// Shannon entropy (natural log) of a non-negative row normalized to sum 1.
double normalized_entropy(const RowVector& row);

}  // namespace ptcl
