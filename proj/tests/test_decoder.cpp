#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "gradcheck.hpp"
#include "ptcl/decoder.hpp"
#include "ptcl/encoders.hpp"
#include "ptcl/sampler.hpp"
#include "test_util.hpp"

using namespace ptcl;
using ptcl::testing::gradient_error;
using ptcl::testing::random_graph;
using ptcl::testing::random_matrix;

TEST(Decoder, GradientsMatchFiniteDifferences) {
  DecoderConfig cfg;
  cfg.hidden_dim = 5;
  const Decoder dec(4, 3, cfg, 1);
  auto h = ag::leaf(random_matrix(6, 4, 2), true);
  const std::vector<std::int32_t> t{0, 1, 2, 2, 1, 0};
  const std::vector<double> c{1, 0.5, 1, 0.25, 1, 1};
  auto params = dec.parameters().trainable();
  params.push_back(h);
  EXPECT_LT(gradient_error(params, [&] { return ag::softmax_cross_entropy(dec.logits(h), t, c, 6.0); }), 1e-5);
}

TEST(Decoder, ZeroOutputLayerGivesUniform) {
  const Decoder dec(4, 3, {}, 1);
  dec.zero_output_layer();
  const Matrix p = decode(dec, random_matrix(5, 4, 3));
  EXPECT_TRUE(p.isApprox(Matrix::Constant(5, 3, 1.0 / 3.0), 1e-15));
  EXPECT_EQ(argmax_rows(p), std::vector<ClassId>(5, 0));
}

TEST(Decoder, DropoutOnlyWithRng) {
  const Decoder dec(4, 2, {}, 1);
  const auto h = ag::constant(random_matrix(50, 4, 3));
  EXPECT_EQ(dec.logits(h)->value, dec.logits(h)->value);
  std::mt19937_64 rng(0);
  EXPECT_NE(dec.logits(h, &rng)->value, dec.logits(h)->value);
}

TEST(PseudoLabels, IndexMatchesOracle) {
  const auto g = random_graph(15, 120, 8, 30);
  std::vector<NodeId> nodes{0, 3, 4, 9, 14};
  const Timestamp boundary = 20.0;
  std::vector<std::pair<NodeId, Timestamp>> oracle;
  for (NodeId u : nodes) {
    const auto tl = g.timeline(u);
    if (tl.empty()) continue;
    for (Timestamp t : tl) {
      if (t != tl.back() && t <= boundary) oracle.emplace_back(u, t);
    }
  }
  std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  EXPECT_EQ(pseudo_label_index(g, nodes, boundary), oracle);
}

TEST(PseudoLabels, GeneratedLabelsAreArgmaxWithUnitWeights) {
  const auto g = random_graph(10, 100, 9, 30, 2, 3);
  const ReferenceSampler sampler(g);
  EncoderConfig ec;
  ec.time_dim = 4;
  ec.output_dim = 4;
  ec.layers = 1;
  ec.neighbor_k = 3;
  const auto enc = make_encoder(ec, 3, 2, 1);
  const Decoder dec(4, 2, {}, 2);
  const std::vector<NodeId> nodes{0, 1, 2, 3};
  const auto set = generate_pseudo_labels(g, *enc, dec, sampler, nodes, 25.0, 3);
  const auto index = pseudo_label_index(g, nodes, 25.0);
  ASSERT_EQ(set.entries.size(), index.size());
  ASSERT_EQ(set.probabilities.rows(), static_cast<Eigen::Index>(index.size()));
  EXPECT_EQ(set.iteration, 3u);
  const auto argmax = argmax_rows(set.probabilities);
  for (std::size_t i = 0; i < index.size(); ++i) {
    EXPECT_EQ(set.entries[i].node, index[i].first);
    EXPECT_EQ(set.entries[i].time, index[i].second);
    EXPECT_EQ(set.entries[i].label, argmax[i]);
    EXPECT_EQ(set.entries[i].weight, 1.0);
  }
}

TEST(PseudoLabels, CsvRoundTripIsExact) {
  PseudoLabelSet set;
  set.iteration = 4;
  set.entries = {{3, 1.0 / 3.0, 1, 0.1234567890123456789}, {7, 2e10, 0, 1.0}};
  const auto path = std::filesystem::temp_directory_path() / "ptcl_pseudo_roundtrip.csv";
  write_pseudo_labels_csv(path, set);
  const auto back = read_pseudo_labels_csv(path);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.iteration, 4u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.entries[i].node, set.entries[i].node);
    EXPECT_EQ(back.entries[i].time, set.entries[i].time);
    EXPECT_EQ(back.entries[i].label, set.entries[i].label);
    EXPECT_EQ(back.entries[i].weight, set.entries[i].weight);
  }
  std::filesystem::remove(path);
  EXPECT_THROW(read_pseudo_labels_csv(path), std::runtime_error);
}
