#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gradcheck.hpp"
#include "ptcl/encoders.hpp"
#include "ptcl/sampler.hpp"
#include "test_util.hpp"

using namespace ptcl;
using ptcl::testing::gradient_error;
using ptcl::testing::make_event;
using ptcl::testing::random_matrix;

namespace {

// Two nodes, three events.
DynamicGraph two_node_graph() {
  std::vector<Event> ev{make_event(0, 1, 1.0, {0.3, -0.7}), make_event(1, 0, 2.5, {1.1, 0.4}),
                        make_event(0, 1, 4.0, {-0.5, 0.9})};
  return build_graph(ev, random_matrix(2, 3, 21), 2, 2);
}

ag::Var readout(const ag::Var& h) {
  const auto proj = ag::constant(random_matrix(h->value.cols(), 2, 22));
  const std::vector<std::int32_t> t{0, 1, 1};
  const std::vector<double> c{1.0, 1.0, 1.0};
  return ag::softmax_cross_entropy(ag::matmul(h, proj), t, c, 3.0);
}

EncoderConfig small(EncoderKind kind) {
  EncoderConfig c;
  c.kind = kind;
  c.time_dim = 4;
  c.output_dim = 4;
  c.attention_heads = 2;
  c.layers = 2;
  c.neighbor_k = 3;
  c.time_gap = 2;
  return c;
}

double encoder_gradient_error(EncoderKind kind) {
  const auto g = two_node_graph();
  const ReferenceSampler sampler(g);
  const auto enc = make_encoder(small(kind), 3, 2, 5);
  const std::vector<NodeId> nodes{0, 1, 0};
  const std::vector<Timestamp> times{4.0, 2.5, 5.0};
  return gradient_error(enc->parameters().trainable(), [&] { return readout(enc->embed(g, sampler, nodes, times)); });
}

}  // namespace

TEST(Encoders, TgatGradientsMatchFiniteDifferences) { EXPECT_LT(encoder_gradient_error(EncoderKind::tgat), 1e-4); }

TEST(Encoders, GraphMixerGradientsMatchFiniteDifferences) {
  EXPECT_LT(encoder_gradient_error(EncoderKind::graphmixer), 1e-4);
}

TEST(Encoders, GraphMixerTimeEncodingIsFrozen) {
  const auto g = two_node_graph();
  const ReferenceSampler sampler(g);
  const auto enc = make_encoder(small(EncoderKind::graphmixer), 3, 2, 5);
  const auto* freq = enc->parameters().find("time.frequencies");
  ASSERT_NE(freq, nullptr);
  EXPECT_FALSE(freq->var->requires_grad);
  const RowVector expected = fixed_frequencies(4);
  EXPECT_EQ(freq->var->value, expected);
  ag::backward(readout(enc->embed(g, sampler, std::vector<NodeId>{0, 1, 1}, std::vector<Timestamp>{4.0, 4.0, 5.0})));
  EXPECT_EQ(freq->var->grad.size(), 0);
  for (const auto& p : enc->parameters().items()) {
    if (p.var->requires_grad) p.var->zero_grad();
  }
}

TEST(Encoders, FixedFrequenciesFollowPowerLaw) {
  const RowVector w = fixed_frequencies(10);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(w(i), std::pow(10.0, -2.0 * i / 10.0), 1e-15);
}

TEST(Encoders, EmbeddingsDependOnlyOnThePast) {
  const auto g = two_node_graph();
  const ReferenceSampler sampler(g);
  for (auto kind : {EncoderKind::tgat, EncoderKind::graphmixer}) {
    const auto enc = make_encoder(small(kind), 3, 2, 5);
    const std::vector<NodeId> nodes{0};
    const std::vector<Timestamp> times{2.5};
    const Matrix before = enc->embed_values(g, sampler, nodes, times);
    // Appending a later event cannot change an embedding at t = 2.5.
    std::vector<Event> ev = g.events();
    ev.push_back(make_event(0, 1, 9.0, {5.0, 5.0}));
    const auto g2 = build_graph(ev, g.node_features(), 2, 2);
    const ReferenceSampler sampler2(g2);
    EXPECT_EQ(enc->embed_values(g2, sampler2, nodes, times), before);
  }
}

TEST(Encoders, OutputShapeAndChunkingAgree) {
  const auto g = ptcl::testing::random_graph(20, 200, 3, 40, 2, 3);
  const ReferenceSampler sampler(g);
  for (auto kind : {EncoderKind::tgat, EncoderKind::graphmixer}) {
    const auto enc = make_encoder(small(kind), 3, 2, 8);
    std::vector<NodeId> nodes;
    std::vector<Timestamp> times;
    for (int i = 0; i < 37; ++i) nodes.push_back(i % 20), times.push_back(1.0 + i);
    const Matrix all = enc->embed_values(g, sampler, nodes, times, 1000);
    const Matrix chunked = enc->embed_values(g, sampler, nodes, times, 5);
    EXPECT_EQ(all.rows(), 37);
    EXPECT_EQ(all.cols(), 4);
    EXPECT_TRUE(all.isApprox(chunked, 1e-12));
  }
}

TEST(Encoders, NonFiniteParameterIsNamed) {
  const auto g = two_node_graph();
  const ReferenceSampler sampler(g);
  const auto enc = make_encoder(small(EncoderKind::tgat), 3, 2, 5);
  enc->parameters().items()[3].var->value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const std::string name = enc->parameters().items()[3].name;
  try {
    enc->embed(g, sampler, std::vector<NodeId>{0}, std::vector<Timestamp>{3.0});
    FAIL() << "expected EncoderError";
  } catch (const EncoderError& e) {
    EXPECT_NE(std::string(e.what()).find(name), std::string::npos);
  }
}

TEST(Encoders, ConfigValidation) {
  EncoderConfig c = small(EncoderKind::tgat);
  c.output_dim = 5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small(EncoderKind::graphmixer);
  c.neighbor_k = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(parse_encoder_kind("graphmixer"), EncoderKind::graphmixer);
  EXPECT_THROW(parse_encoder_kind("gat"), std::invalid_argument);
}
