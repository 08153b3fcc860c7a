#pragma once

// Minimal reverse-mode differentiation over dense matrices. Every op works
// on whole batches; backward closures accumulate into their inputs' grads.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "ptcl/matrix.hpp"

namespace ptcl::ag {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<Var> inputs;
  std::function<void(Node&)> backward;

  void accumulate(const Matrix& g);
  void zero_grad() { grad.resize(0, 0); }
};

/// Leaf holding a value; parameters pass requires_grad = true.
Var leaf(Matrix value, bool requires_grad = false);
inline Var constant(Matrix value) { return leaf(std::move(value), false); }

/// Runs reverse accumulation from a 1x1 root.
void backward(const Var& root);

/// While alive, ops record no graph (results are constants).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
bool grad_enabled();

Var matmul(const Var& a, const Var& b);
/// x * w + b with b a 1 x out row broadcast over rows.
Var affine(const Var& x, const Var& w, const Var& b);
Var add(const Var& a, const Var& b);
Var relu(const Var& a);
Var concat_cols(const std::vector<Var>& parts);
/// Rows of table at idx; indices outside [0, rows) produce zero rows.
Var gather_rows(const Var& table, std::span<const std::int64_t> idx);
/// cos(dt * w + b) for a column of time deltas; w, b are 1 x d.
Var cos_time(const Matrix& dt, const Var& w, const Var& b);
/// Masked multi-head dot-product attention. q is n x D, k and v are
/// (n * slots) x D / Dv; query i attends to its first valid[i] slots. Queries
/// without valid slots produce zeros.
Var attention(const Var& q, const Var& k, const Var& v, std::span<const std::int32_t> valid, std::size_t slots,
              std::size_t heads);
/// Mean over the first counts[i] rows of each block of `slots` rows.
Var segment_mean(const Var& x, std::span<const std::int32_t> counts, std::size_t slots);
/// Row-wise layer normalization with 1 x C gain and bias.
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
/// Reinterprets (n * slots) x C as n blocks and transposes each block,
/// giving (n * C) x slots.
Var block_transpose(const Var& x, std::size_t slots);
/// Inverted dropout; identity when p == 0.
Var dropout(const Var& x, double p, std::mt19937_64& rng);

/// sum_i coef_i * -log softmax(logits_i)[target_i] / normalizer, as 1 x 1.
Var softmax_cross_entropy(const Var& logits, std::span<const std::int32_t> targets, std::span<const double> coefs,
                          double normalizer);
/// (sum_pos softplus(-z) + sum_neg softplus(z)) / normalizer, as 1 x 1.
/// logits is n x 1 and labels holds 0/1 per row.
Var binary_cross_entropy(const Var& logits, std::span<const double> labels, double normalizer);

/// Numerically stable log(1 + exp(x)), including x = +-inf.
double softplus(double x);
/// Row-wise softmax of a plain matrix.
Matrix softmax_rows(const Matrix& logits);

}  // namespace ptcl::ag
