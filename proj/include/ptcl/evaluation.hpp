#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ptcl/datasets.hpp"
#include "ptcl/decoder.hpp"
#include "ptcl/graph.hpp"
#include "ptcl/training.hpp"

namespace ptcl {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rank-based ROC AUC with midranks for tied scores. labels are 0/1.
double auc(std::span<const double> scores, std::span<const int> labels);

double accuracy(std::span<const ClassId> predictions, std::span<const ClassId> labels);

/// Trailing run of non-final labels equal to the final label, divided by
/// the number of non-final labels. Needs at least two labels.
double consistency(std::span<const ClassId> labels);

/// Counts of values in `bins` uniform bins over [0, 1]; 1.0 lands in the last bin.
std::vector<std::size_t> histogram(std::span<const double> values, std::size_t bins = 10);

/// Per node: pseudo-labels in time order followed by the final label.
/// Nodes without pseudo-labels are skipped.
std::map<NodeId, std::vector<ClassId>> label_sequences(const PseudoLabelSet& pseudo,
                                                       std::span<const ClassId> final_labels);
/// Per node: true labels at every timestamp up to and including T_u.
std::map<NodeId, std::vector<ClassId>> dynamic_label_sequences(const LabeledDataset& data,
                                                               std::span<const NodeId> nodes);
/// consistency() of every sequence with at least two labels.
std::vector<double> consistency_values(const std::map<NodeId, std::vector<ClassId>>& sequences);

/// Fraction of pseudo-labels of the given nodes matching the true dynamic
/// labels. Entries without ground truth are ignored.
double pseudo_label_agreement(const PseudoLabelSet& pseudo, const LabeledDataset& data, std::span<const NodeId> nodes);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  double value = 0.0;
  std::string error;
};

struct EvalReport {
  std::string method;
  std::string metric_name;
  std::vector<SeedOutcome> seeds;
  std::vector<double> per_seed_values;
  double mean = 0.0;
  /// Population standard deviation; absent for fewer than two values.
  std::optional<double> standard_deviation;
  std::vector<std::size_t> consistency_histogram;
  /// Validation metric per EM iteration, averaged over successful seeds.
  std::vector<double> convergence_curve;
};

/// Fills mean and standard deviation from per_seed_values.
void finalize_report(EvalReport& report);

/// "81.23 ± 1.05" style cell (values scaled by 100).
std::string format_cell(const EvalReport& report);

struct SplitOptions {
  SplitRatios ratios;
  SplitMode mode = SplitMode::chronological;
};

/// Trains spec once per seed and scores the test split. Failed seeds are
/// recorded in the report instead of aborting the rest.
EvalReport multi_seed_run(const LabeledDataset& data, const EncoderConfig& encoder_config, const MethodSpec& spec,
                          std::span<const std::uint64_t> seeds, const SplitOptions& split_options = {},
                          const SamplerOptions& sampler_options = {});

}  // namespace ptcl
