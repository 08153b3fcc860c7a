#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ptcl/evaluation.hpp"
#include "test_util.hpp"

using namespace ptcl;

namespace {

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double hits = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      hits += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return hits / pairs;
}

}  // namespace

TEST(Auc, MatchesPairwiseCountWithTies) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 7);
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1, y[1] = 0;
    EXPECT_NEAR(auc(s, y), pairwise_auc(s, y), 1e-12);
  }
}

TEST(Auc, ErrorsAndExtremes) {
  EXPECT_EQ(auc(std::vector<double>{0.1, 0.9}, std::vector<int>{0, 1}), 1.0);
  EXPECT_EQ(auc(std::vector<double>{0.9, 0.1}, std::vector<int>{0, 1}), 0.0);
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), MetricError);
  EXPECT_THROW(auc(std::vector<double>{std::nan(""), 0.2}, std::vector<int>{0, 1}), MetricError);
  EXPECT_THROW(auc(std::vector<double>{0.1}, std::vector<int>{0, 1}), MetricError);
}

TEST(Accuracy, CountsMatches) {
  EXPECT_DOUBLE_EQ(accuracy(std::vector<ClassId>{0, 1, 2, 2}, std::vector<ClassId>{0, 1, 1, 2}), 0.75);
  EXPECT_THROW(accuracy(std::vector<ClassId>{}, std::vector<ClassId>{}), MetricError);
}

TEST(Consistency, TrailingRunOverEarlierPositions) {
  EXPECT_EQ(consistency(std::vector<ClassId>{1, 1, 1, 1}), 1.0);
  EXPECT_EQ(consistency(std::vector<ClassId>{0, 0, 0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(consistency(std::vector<ClassId>{1, 0, 1, 1, 1}), 0.5);
  EXPECT_THROW(consistency(std::vector<ClassId>{1}), MetricError);
}

TEST(Consistency, BoundedOnRandomSequences) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    std::vector<ClassId> seq(2 + rng() % 20);
    for (auto& c : seq) c = static_cast<ClassId>(rng() % 3);
    const double c = consistency(seq);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
  }
}

TEST(Histogram, PutsOneInTheLastBin) {
  const auto h = histogram(std::vector<double>{0.0, 0.05, 0.1, 0.99, 1.0}, 10);
  EXPECT_EQ(h, (std::vector<std::size_t>{2, 1, 0, 0, 0, 0, 0, 0, 0, 2}));
  EXPECT_THROW(histogram(std::vector<double>{1.5}, 10), MetricError);
}

TEST(Sequences, PseudoLabelsAppendTheFinalLabel) {
  PseudoLabelSet set;
  set.entries = {{0, 2.0, 1, 1.0}, {0, 1.0, 0, 1.0}, {1, 1.0, 1, 1.0}, {2, 1.0, 0, 1.0}};
  const std::vector<ClassId> finals{1, 1, kUnlabeled};
  const auto seqs = label_sequences(set, finals);
  ASSERT_EQ(seqs.size(), 2u);
  EXPECT_EQ(seqs.at(0), (std::vector<ClassId>{0, 1, 1}));
  EXPECT_EQ(seqs.at(1), (std::vector<ClassId>{1, 1}));
}

TEST(Agreement, ComparesAgainstDynamicLabels) {
  const auto d = ptcl::testing::tiny_drift(1, 0.0);
  const std::vector<NodeId> nodes{0, 1, 2};
  PseudoLabelSet set;
  for (NodeId u : nodes) {
    for (Timestamp t : d.graph.timeline(u)) set.entries.push_back({u, t, d.final_labels[u], 1.0});
  }
  EXPECT_EQ(pseudo_label_agreement(set, d, nodes), 1.0);
  for (auto& e : set.entries) e.label = 1 - e.label;
  EXPECT_EQ(pseudo_label_agreement(set, d, nodes), 0.0);
  EXPECT_THROW(pseudo_label_agreement(set, d, std::vector<NodeId>{}), MetricError);
}

TEST(Report, PopulationStdAndFormatting) {
  EvalReport r;
  r.per_seed_values = {0.80, 0.90};
  finalize_report(r);
  EXPECT_NEAR(r.mean, 0.85, 1e-15);
  ASSERT_TRUE(r.standard_deviation.has_value());
  EXPECT_NEAR(*r.standard_deviation, 0.05, 1e-15);
  EXPECT_EQ(format_cell(r), "85.00 ± 5.00");
  r.per_seed_values = {0.5};
  finalize_report(r);
  EXPECT_FALSE(r.standard_deviation.has_value());
  EXPECT_EQ(format_cell(r), "50.00");
}
