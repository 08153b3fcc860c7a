#include "ptcl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace ptcl {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw MetricError("auc: scores and labels differ in length");
  std::size_t pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw MetricError("auc: labels must be 0 or 1");
    pos += static_cast<std::size_t>(y);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw MetricError("auc: both classes must be present");
  for (double s : scores) {
    if (std::isnan(s)) throw MetricError("auc: NaN score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks (1-based) of the positives.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t r = i; r <= j; ++r) {
      if (labels[order[r]] == 1) rank_sum += midrank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double accuracy(std::span<const ClassId> predictions, std::span<const ClassId> labels) {
  if (predictions.size() != labels.size()) throw MetricError("accuracy: lengths differ");
  if (predictions.empty()) throw MetricError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double consistency(std::span<const ClassId> labels) {
  if (labels.size() < 2) throw MetricError("consistency needs at least two timestamps");
  const ClassId final_label = labels.back();
  std::size_t run = 0;
  for (std::size_t i = labels.size() - 1; i-- > 0;) {
    if (labels[i] != final_label) break;
    ++run;
  }
  return static_cast<double>(run) / static_cast<double>(labels.size() - 1);
}

std::vector<std::size_t> histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw MetricError("histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw MetricError("histogram values must lie in [0, 1]");
    const auto b = std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
    ++counts[b];
  }
  return counts;
}

std::map<NodeId, std::vector<ClassId>> label_sequences(const PseudoLabelSet& pseudo,
                                                       std::span<const ClassId> final_labels) {
  std::map<NodeId, std::vector<std::pair<Timestamp, ClassId>>> by_node;
  for (const auto& e : pseudo.entries) by_node[e.node].emplace_back(e.time, e.label);
  std::map<NodeId, std::vector<ClassId>> out;
  for (auto& [u, items] : by_node) {
    if (u < 0 || static_cast<std::size_t>(u) >= final_labels.size() || final_labels[u] == kUnlabeled) continue;
    std::sort(items.begin(), items.end());
    auto& seq = out[u];
    for (const auto& [t, c] : items) seq.push_back(c);
    seq.push_back(final_labels[u]);
  }
  return out;
}

std::map<NodeId, std::vector<ClassId>> dynamic_label_sequences(const LabeledDataset& data,
                                                               std::span<const NodeId> nodes) {
  std::map<NodeId, std::vector<ClassId>> out;
  if (!data.dynamic_labels) return out;
  for (NodeId u : nodes) {
    std::vector<ClassId> seq;
    for (Timestamp t : data.graph.timeline(u)) {
      const auto label = data.dynamic_label(u, t);
      if (!label) {
        seq.clear();
        break;
      }
      seq.push_back(*label);
    }
    if (!seq.empty()) out[u] = std::move(seq);
  }
  return out;
}

std::vector<double> consistency_values(const std::map<NodeId, std::vector<ClassId>>& sequences) {
  std::vector<double> out;
  for (const auto& [u, seq] : sequences) {
    if (seq.size() >= 2) out.push_back(consistency(seq));
  }
  return out;
}

double pseudo_label_agreement(const PseudoLabelSet& pseudo, const LabeledDataset& data, std::span<const NodeId> nodes) {
  std::vector<NodeId> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t total = 0, hits = 0;
  for (const auto& e : pseudo.entries) {
    if (!std::binary_search(sorted.begin(), sorted.end(), e.node)) continue;
    const auto truth = data.dynamic_label(e.node, e.time);
    if (!truth) continue;
    ++total;
    hits += *truth == e.label ? 1 : 0;
  }
  if (total == 0) throw MetricError("no pseudo-labels with ground truth for the requested nodes");
  return static_cast<double>(hits) / static_cast<double>(total);
}

void finalize_report(EvalReport& report) {
  const auto& v = report.per_seed_values;
  report.standard_deviation.reset();
  if (v.empty()) {
    report.mean = std::nan("");
    return;
  }
  report.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - report.mean) * (x - report.mean);
    report.standard_deviation = std::sqrt(ss / static_cast<double>(v.size()));
  }
}

std::string format_cell(const EvalReport& report) {
  char buf[64];
  if (report.standard_deviation) {
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100.0 * report.mean, 100.0 * *report.standard_deviation);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * report.mean);
  }
  return buf;
}

EvalReport multi_seed_run(const LabeledDataset& data, const EncoderConfig& encoder_config, const MethodSpec& spec,
                          std::span<const std::uint64_t> seeds, const SplitOptions& split_options,
                          const SamplerOptions& sampler_options) {
  if (seeds.empty()) throw std::invalid_argument("multi_seed_run needs at least one seed");
  EvalReport report;
  report.method = to_string(spec.method);
  report.metric_name = metric_name(data.class_count());
  const auto sampler = make_sampler(data.graph, sampler_options);
  std::vector<std::vector<double>> curves;
  for (std::uint64_t seed : seeds) {
    SeedOutcome outcome;
    outcome.seed = seed;
    try {
      const SplitSpec split = split_nodes(data.graph, data.final_labels, split_options.ratios, seed, split_options.mode);
      MethodSpec run_spec = spec;
      run_spec.seed = seed;
      const TrainContext ctx{data, split, *sampler};
      const RunResult run = run_method(ctx, encoder_config, run_spec);
      outcome.ok = true;
      outcome.value = run.test_metric;
      report.per_seed_values.push_back(run.test_metric);
      std::vector<double> curve;
      for (const auto& it : run.history.iterations) curve.push_back(it.val_metric);
      curves.push_back(std::move(curve));
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    report.seeds.push_back(std::move(outcome));
  }
  std::size_t longest = 0;
  for (const auto& c : curves) longest = std::max(longest, c.size());
  for (std::size_t i = 0; i < longest; ++i) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : curves) {
      if (i < c.size()) {
        sum += c[i];
        ++n;
      }
    }
    report.convergence_curve.push_back(sum / static_cast<double>(n));
  }
  finalize_report(report);
  return report;
}

}  // namespace ptcl
