#include "ptcl/curriculum.hpp"

#include <cmath>
#include <stdexcept>

namespace ptcl {

std::string to_string(CurriculumStrategy strategy) {
  switch (strategy) {
    case CurriculumStrategy::temporal: return "temporal";
    case CurriculumStrategy::naive: return "naive";
    case CurriculumStrategy::cst: return "cst";
    case CurriculumStrategy::est: return "est";
  }
  return "temporal";
}

CurriculumStrategy parse_curriculum_strategy(const std::string& text) {
  if (text == "temporal") return CurriculumStrategy::temporal;
  if (text == "naive") return CurriculumStrategy::naive;
  if (text == "cst") return CurriculumStrategy::cst;
  if (text == "est") return CurriculumStrategy::est;
  throw std::invalid_argument("unknown curriculum strategy '" + text + "' (expected temporal, naive, cst or est)");
}

double temporal_weight(std::int64_t d, std::int64_t tau, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("curriculum decay gamma must be positive");
  if (tau < 1) throw std::invalid_argument("curriculum iteration tau must be at least 1");
  if (d < 0) throw std::invalid_argument("temporal distance must be non-negative");
  if (d <= tau) return 1.0;
  return std::exp(-gamma * static_cast<double>(d - tau));
}

void CurriculumConfig::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("curriculum gamma must be positive");
  if (!(cst_threshold > 0.0 && cst_threshold < 1.0)) throw std::invalid_argument("cst_threshold must be in (0, 1)");
  if (!std::isfinite(est_threshold)) throw std::invalid_argument("est_threshold must be finite");
}

double normalized_entropy(const RowVector& row) {
  const double total = row.sum();
  if (!(total > 0.0)) throw std::invalid_argument("entropy of an all-zero row");
  double h = 0.0;
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    const double p = row(c) / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

CurriculumState::CurriculumState(const CurriculumConfig& config, std::size_t class_count)
    : config_(config), class_count_(class_count) {
  config_.validate();
  if (class_count < 2) throw std::invalid_argument("curriculum needs at least two classes");
}

double CurriculumState::est_threshold() const {
  return config_.est_threshold > 0.0 ? config_.est_threshold : 0.5 * std::log(static_cast<double>(class_count_));
}

void CurriculumState::record(const PseudoLabelSet& set) {
  if (static_cast<std::size_t>(set.probabilities.rows()) != set.entries.size() ||
      static_cast<std::size_t>(set.probabilities.cols()) != class_count_) {
    throw std::invalid_argument("pseudo-label probabilities are not aligned with entries");
  }
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    const auto key = std::make_pair(set.entries[i].node, set.entries[i].time);
    auto it = rows_.find(key);
    if (it == rows_.end()) {
      const Eigen::Index row = history_.rows();
      history_.conservativeResize(row + 1, static_cast<Eigen::Index>(class_count_));
      history_.row(row).setZero();
      it = rows_.emplace(key, row).first;
    }
    history_.row(it->second) += set.probabilities.row(static_cast<Eigen::Index>(i));
  }
  ++rounds_;
}

RowVector CurriculumState::history(NodeId u, Timestamp t) const {
  const auto it = rows_.find({u, t});
  if (it == rows_.end()) return {};
  return history_.row(it->second);
}

void CurriculumState::assign_weights(PseudoLabelSet& set, const DynamicGraph& graph) const {
  switch (config_.strategy) {
    case CurriculumStrategy::temporal:
      for (auto& e : set.entries) e.weight = temporal_weight(temporal_distance(graph, e.node, e.time), iteration, config_.gamma);
      break;
    case CurriculumStrategy::naive:
      for (auto& e : set.entries) e.weight = 1.0;
      break;
    case CurriculumStrategy::cst:
      if (static_cast<std::size_t>(set.probabilities.rows()) != set.entries.size()) {
        throw std::invalid_argument("cst needs decoder probabilities for every entry");
      }
      for (std::size_t i = 0; i < set.entries.size(); ++i) {
        set.entries[i].weight = set.probabilities.row(static_cast<Eigen::Index>(i)).maxCoeff() >= config_.cst_threshold ? 1.0 : 0.0;
      }
      break;
    case CurriculumStrategy::est: {
      if (rounds_ == 0) throw std::invalid_argument("est weighting needs at least one recorded round");
      const double threshold = est_threshold();
      for (auto& e : set.entries) {
        const RowVector row = history(e.node, e.time);
        if (row.size() == 0) throw std::invalid_argument("est history has no row for a pseudo-label entry");
        e.weight = normalized_entropy(row) <= threshold ? 1.0 : 0.0;
      }
      break;
    }
  }
}

}  // namespace ptcl
