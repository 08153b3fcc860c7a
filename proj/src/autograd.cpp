#include "ptcl/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace ptcl::ag {

namespace {

thread_local bool g_grad_enabled = true;

bool needs_grad(std::initializer_list<const Var*> inputs) {
  if (!g_grad_enabled) return false;
  for (const Var* v : inputs) {
    if ((*v)->requires_grad) return true;
  }
  return false;
}

Var make_result(Matrix value, std::vector<Var> inputs, bool track, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (track) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(fn);
  }
  return node;
}

}  // namespace

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Var leaf(Matrix value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

void backward(const Var& root) {
  if (root->value.rows() != 1 || root->value.cols() != 1) {
    throw std::invalid_argument("backward: root must be a scalar");
  }
  if (!root->requires_grad) return;
  // Iterative post-order DFS for a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && child->backward && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->grad.size() == 0) continue;
    node->backward(*node);
  }
  // Interior grads are no longer needed; parameters keep theirs.
  for (Node* node : order) {
    if (node != root.get()) node->grad.resize(0, 0);
  }
}

Var matmul(const Var& a, const Var& b) {
  if (a->value.cols() != b->value.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  const bool track = needs_grad({&a, &b});
  Matrix out = a->value * b->value;
  return make_result(std::move(out), {a, b}, track, [](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    if (x.requires_grad) x.accumulate(self.grad * y.value.transpose());
    if (y.requires_grad) y.accumulate(x.value.transpose() * self.grad);
  });
}

Var affine(const Var& x, const Var& w, const Var& b) {
  if (x->value.cols() != w->value.rows()) throw std::invalid_argument("affine: input width does not match weight");
  if (b->value.rows() != 1 || b->value.cols() != w->value.cols()) throw std::invalid_argument("affine: bias shape");
  const bool track = needs_grad({&x, &w, &b});
  Matrix out = x->value * w->value;
  out.rowwise() += b->value.row(0);
  return make_result(std::move(out), {x, w, b}, track, [](Node& self) {
    Node& in = *self.inputs[0];
    Node& weight = *self.inputs[1];
    Node& bias = *self.inputs[2];
    if (in.requires_grad) in.accumulate(self.grad * weight.value.transpose());
    if (weight.requires_grad) weight.accumulate(in.value.transpose() * self.grad);
    if (bias.requires_grad) bias.accumulate(self.grad.colwise().sum());
  });
}

Var add(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols()) {
    throw std::invalid_argument("add: shape mismatch");
  }
  const bool track = needs_grad({&a, &b});
  Matrix out = a->value + b->value;
  return make_result(std::move(out), {a, b}, track, [](Node& self) {
    for (auto& in : self.inputs) {
      if (in->requires_grad) in->accumulate(self.grad);
    }
  });
}

Var relu(const Var& a) {
  const bool track = needs_grad({&a});
  Matrix out = a->value.cwiseMax(0.0);
  return make_result(std::move(out), {a}, track, [](Node& self) {
    Node& in = *self.inputs[0];
    in.accumulate((in.value.array() > 0.0).cast<double>().matrix().cwiseProduct(self.grad));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Eigen::Index rows = parts.front()->value.rows();
  Eigen::Index cols = 0;
  bool track = false;
  for (const auto& p : parts) {
    if (p->value.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    cols += p->value.cols();
    track = track || (g_grad_enabled && p->requires_grad);
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p->value.cols()) = p->value;
    offset += p->value.cols();
  }
  return make_result(std::move(out), parts, track, [](Node& self) {
    Eigen::Index off = 0;
    for (auto& in : self.inputs) {
      const Eigen::Index c = in->value.cols();
      if (in->requires_grad) in->accumulate(self.grad.middleCols(off, c));
      off += c;
    }
  });
}

Var gather_rows(const Var& table, std::span<const std::int64_t> idx) {
  const bool track = needs_grad({&table});
  const Eigen::Index rows = table->value.rows();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(idx.size()), table->value.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= 0 && idx[i] < rows) out.row(static_cast<Eigen::Index>(i)) = table->value.row(idx[i]);
  }
  std::vector<std::int64_t> saved;
  if (track) saved.assign(idx.begin(), idx.end());
  return make_result(std::move(out), {table}, track, [saved = std::move(saved)](Node& self) {
    Node& in = *self.inputs[0];
    Matrix g = Matrix::Zero(in.value.rows(), in.value.cols());
    for (std::size_t i = 0; i < saved.size(); ++i) {
      if (saved[i] >= 0 && saved[i] < g.rows()) g.row(saved[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    }
    in.accumulate(g);
  });
}

Var cos_time(const Matrix& dt, const Var& w, const Var& b) {
  if (dt.cols() != 1) throw std::invalid_argument("cos_time: dt must be a column");
  if (w->value.rows() != 1 || b->value.rows() != 1 || w->value.cols() != b->value.cols()) {
    throw std::invalid_argument("cos_time: frequency/phase shape");
  }
  const bool track = needs_grad({&w, &b});
  Matrix arg = dt * w->value;
  arg.rowwise() += b->value.row(0);
  Matrix out = arg.array().cos().matrix();
  Matrix sin_arg;
  Matrix saved_dt;
  if (track) {
    sin_arg = arg.array().sin().matrix();
    saved_dt = dt;
  }
  return make_result(std::move(out), {w, b}, track,
                     [sin_arg = std::move(sin_arg), saved_dt = std::move(saved_dt)](Node& self) {
                       Matrix d_arg = -(self.grad.cwiseProduct(sin_arg));
                       Node& freq = *self.inputs[0];
                       Node& phase = *self.inputs[1];
                       if (freq.requires_grad) freq.accumulate(saved_dt.transpose() * d_arg);
                       if (phase.requires_grad) phase.accumulate(d_arg.colwise().sum());
                     });
}

Var attention(const Var& q, const Var& k, const Var& v, std::span<const std::int32_t> valid, std::size_t slots,
              std::size_t heads) {
  const auto n = static_cast<std::size_t>(q->value.rows());
  const auto dq = static_cast<std::size_t>(q->value.cols());
  const auto dv = static_cast<std::size_t>(v->value.cols());
  if (valid.size() != n) throw std::invalid_argument("attention: valid counts do not match queries");
  if (static_cast<std::size_t>(k->value.rows()) != n * slots || static_cast<std::size_t>(v->value.rows()) != n * slots) {
    throw std::invalid_argument("attention: key/value rows must be queries * slots");
  }
  if (static_cast<std::size_t>(k->value.cols()) != dq || heads == 0 || dq % heads != 0 || dv % heads != 0) {
    throw std::invalid_argument("attention: head dimensions");
  }
  const std::size_t hq = dq / heads;
  const std::size_t hv = dv / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hq));
  const bool track = needs_grad({&q, &k, &v});

  const Matrix& Q = q->value;
  const Matrix& K = k->value;
  const Matrix& V = v->value;
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dv));
  // weights[(i * heads + h) * slots + j]
  std::vector<double> weights(n * heads * slots, 0.0);
  std::vector<double> scores(slots);
  for (std::size_t i = 0; i < n; ++i) {
    const auto count = static_cast<std::size_t>(std::max(0, valid[i]));
    if (count == 0) continue;
    for (std::size_t h = 0; h < heads; ++h) {
      double max_score = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < count; ++j) {
        const auto row = static_cast<Eigen::Index>(i * slots + j);
        scores[j] = scale * Q.row(static_cast<Eigen::Index>(i)).segment(h * hq, hq).dot(K.row(row).segment(h * hq, hq));
        max_score = std::max(max_score, scores[j]);
      }
      double denom = 0.0;
      for (std::size_t j = 0; j < count; ++j) {
        scores[j] = std::exp(scores[j] - max_score);
        denom += scores[j];
      }
      double* w = &weights[(i * heads + h) * slots];
      for (std::size_t j = 0; j < count; ++j) {
        w[j] = scores[j] / denom;
        out.row(static_cast<Eigen::Index>(i)).segment(h * hv, hv) +=
            w[j] * V.row(static_cast<Eigen::Index>(i * slots + j)).segment(h * hv, hv);
      }
    }
  }
  std::vector<std::int32_t> saved_valid;
  if (track) saved_valid.assign(valid.begin(), valid.end());
  return make_result(
      std::move(out), {q, k, v}, track,
      [weights = std::move(weights), saved_valid = std::move(saved_valid), slots, heads, hq, hv, scale](Node& self) {
        Node& qn = *self.inputs[0];
        Node& kn = *self.inputs[1];
        Node& vn = *self.inputs[2];
        Matrix dQ = Matrix::Zero(qn.value.rows(), qn.value.cols());
        Matrix dK = Matrix::Zero(kn.value.rows(), kn.value.cols());
        Matrix dV = Matrix::Zero(vn.value.rows(), vn.value.cols());
        std::vector<double> dw(slots);
        const auto n_queries = saved_valid.size();
        for (std::size_t i = 0; i < n_queries; ++i) {
          const auto count = static_cast<std::size_t>(std::max(0, saved_valid[i]));
          if (count == 0) continue;
          const auto qi = static_cast<Eigen::Index>(i);
          for (std::size_t h = 0; h < heads; ++h) {
            const double* w = &weights[(i * heads + h) * slots];
            const auto g_out = self.grad.row(qi).segment(h * hv, hv);
            double weighted = 0.0;
            for (std::size_t j = 0; j < count; ++j) {
              const auto row = static_cast<Eigen::Index>(i * slots + j);
              dV.row(row).segment(h * hv, hv) += w[j] * g_out;
              dw[j] = g_out.dot(vn.value.row(row).segment(h * hv, hv));
              weighted += w[j] * dw[j];
            }
            for (std::size_t j = 0; j < count; ++j) {
              const auto row = static_cast<Eigen::Index>(i * slots + j);
              const double ds = w[j] * (dw[j] - weighted) * scale;
              dQ.row(qi).segment(h * hq, hq) += ds * kn.value.row(row).segment(h * hq, hq);
              dK.row(row).segment(h * hq, hq) += ds * qn.value.row(qi).segment(h * hq, hq);
            }
          }
        }
        if (qn.requires_grad) qn.accumulate(dQ);
        if (kn.requires_grad) kn.accumulate(dK);
        if (vn.requires_grad) vn.accumulate(dV);
      });
}

Var segment_mean(const Var& x, std::span<const std::int32_t> counts, std::size_t slots) {
  const std::size_t n = counts.size();
  if (static_cast<std::size_t>(x->value.rows()) != n * slots) {
    throw std::invalid_argument("segment_mean: rows must be segments * slots");
  }
  const bool track = needs_grad({&x});
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), x->value.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(std::clamp<std::int32_t>(counts[i], 0, static_cast<std::int32_t>(slots)));
    if (c == 0) continue;
    out.row(static_cast<Eigen::Index>(i)) =
        x->value.middleRows(static_cast<Eigen::Index>(i * slots), static_cast<Eigen::Index>(c)).colwise().sum() /
        static_cast<double>(c);
  }
  std::vector<std::int32_t> saved;
  if (track) saved.assign(counts.begin(), counts.end());
  return make_result(std::move(out), {x}, track, [saved = std::move(saved), slots](Node& self) {
    Node& in = *self.inputs[0];
    Matrix g = Matrix::Zero(in.value.rows(), in.value.cols());
    for (std::size_t i = 0; i < saved.size(); ++i) {
      const auto c = static_cast<std::size_t>(std::clamp<std::int32_t>(saved[i], 0, static_cast<std::int32_t>(slots)));
      for (std::size_t j = 0; j < c; ++j) {
        g.row(static_cast<Eigen::Index>(i * slots + j)) = self.grad.row(static_cast<Eigen::Index>(i)) / static_cast<double>(c);
      }
    }
    in.accumulate(g);
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Eigen::Index cols = x->value.cols();
  if (gain->value.cols() != cols || bias->value.cols() != cols) throw std::invalid_argument("layer_norm: shape");
  const bool track = needs_grad({&x, &gain, &bias});
  const Eigen::Index rows = x->value.rows();
  Matrix xhat(rows, cols);
  Eigen::VectorXd inv_std(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = x->value.row(r).mean();
    const double var = (x->value.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x->value.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = xhat.array().rowwise() * gain->value.row(0).array();
  out.rowwise() += bias->value.row(0);
  return make_result(std::move(out), {x, gain, bias}, track,
                     [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       Node& in = *self.inputs[0];
                       Node& g = *self.inputs[1];
                       Node& b = *self.inputs[2];
                       if (g.requires_grad) g.accumulate(self.grad.cwiseProduct(xhat).colwise().sum());
                       if (b.requires_grad) b.accumulate(self.grad.colwise().sum());
                       if (in.requires_grad) {
                         const auto c = static_cast<double>(xhat.cols());
                         Matrix dxhat = self.grad.array().rowwise() * g.value.row(0).array();
                         Matrix dx(xhat.rows(), xhat.cols());
                         for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
                           const double sum_d = dxhat.row(r).sum();
                           const double sum_dx = dxhat.row(r).dot(xhat.row(r));
                           dx.row(r) = (inv_std(r) / c) *
                                       (c * dxhat.row(r).array() - sum_d - xhat.row(r).array() * sum_dx).matrix();
                         }
                         in.accumulate(dx);
                       }
                     });
}

Var block_transpose(const Var& x, std::size_t slots) {
  const auto rows = static_cast<std::size_t>(x->value.rows());
  if (slots == 0 || rows % slots != 0) throw std::invalid_argument("block_transpose: rows not divisible by slots");
  const std::size_t n = rows / slots;
  const auto c = static_cast<std::size_t>(x->value.cols());
  const bool track = needs_grad({&x});
  Matrix out(static_cast<Eigen::Index>(n * c), static_cast<Eigen::Index>(slots));
  for (std::size_t i = 0; i < n; ++i) {
    out.middleRows(static_cast<Eigen::Index>(i * c), static_cast<Eigen::Index>(c)) =
        x->value.middleRows(static_cast<Eigen::Index>(i * slots), static_cast<Eigen::Index>(slots)).transpose();
  }
  return make_result(std::move(out), {x}, track, [n, c, slots](Node& self) {
    Node& in = *self.inputs[0];
    Matrix g(in.value.rows(), in.value.cols());
    for (std::size_t i = 0; i < n; ++i) {
      g.middleRows(static_cast<Eigen::Index>(i * slots), static_cast<Eigen::Index>(slots)) =
          self.grad.middleRows(static_cast<Eigen::Index>(i * c), static_cast<Eigen::Index>(c)).transpose();
    }
    in.accumulate(g);
  });
}

Var dropout(const Var& x, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
  const bool track = needs_grad({&x});
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(x->value.rows(), x->value.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  Matrix out = x->value.cwiseProduct(mask);
  return make_result(std::move(out), {x}, track,
                     [mask = std::move(mask)](Node& self) { self.inputs[0]->accumulate(self.grad.cwiseProduct(mask)); });
}

double softplus(double x) {
  if (x == std::numeric_limits<double>::infinity()) return x;
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Var softmax_cross_entropy(const Var& logits, std::span<const std::int32_t> targets, std::span<const double> coefs,
                          double normalizer) {
  const auto n = static_cast<std::size_t>(logits->value.rows());
  const auto classes = logits->value.cols();
  if (targets.size() != n || coefs.size() != n) throw std::invalid_argument("cross entropy: target count mismatch");
  if (!(normalizer > 0.0)) throw std::invalid_argument("cross entropy: normalizer must be positive");
  const bool track = needs_grad({&logits});
  double total = 0.0;
  Matrix probs(logits->value.rows(), classes);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (targets[i] < 0 || targets[i] >= classes) throw std::invalid_argument("cross entropy: target out of range");
    const double m = logits->value.row(r).maxCoeff();
    const double lse = m + std::log((logits->value.row(r).array() - m).exp().sum());
    probs.row(r) = (logits->value.row(r).array() - lse).exp().matrix();
    if (coefs[i] != 0.0) total += coefs[i] * (lse - logits->value(r, targets[i]));
  }
  Matrix out(1, 1);
  out(0, 0) = total / normalizer;
  std::vector<std::int32_t> saved_targets;
  std::vector<double> saved_coefs;
  if (track) {
    saved_targets.assign(targets.begin(), targets.end());
    saved_coefs.assign(coefs.begin(), coefs.end());
  }
  return make_result(std::move(out), {logits}, track,
                     [probs = std::move(probs), saved_targets = std::move(saved_targets),
                      saved_coefs = std::move(saved_coefs), normalizer](Node& self) {
                       Matrix g = probs;
                       for (std::size_t i = 0; i < saved_targets.size(); ++i) {
                         const auto r = static_cast<Eigen::Index>(i);
                         g(r, saved_targets[i]) -= 1.0;
                         g.row(r) *= saved_coefs[i] / normalizer;
                       }
                       self.inputs[0]->accumulate(g * self.grad(0, 0));
                     });
}

Var binary_cross_entropy(const Var& logits, std::span<const double> labels, double normalizer) {
  const auto n = static_cast<std::size_t>(logits->value.rows());
  if (logits->value.cols() != 1 || labels.size() != n) throw std::invalid_argument("bce: shape mismatch");
  if (!(normalizer > 0.0)) throw std::invalid_argument("bce: normalizer must be positive");
  const bool track = needs_grad({&logits});
  double total = 0.0;
  Matrix grad(logits->value.rows(), 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = logits->value(static_cast<Eigen::Index>(i), 0);
    total += labels[i] > 0.5 ? softplus(-z) : softplus(z);
    const double sig = 1.0 / (1.0 + std::exp(-z));
    grad(static_cast<Eigen::Index>(i), 0) = (sig - labels[i]) / normalizer;
  }
  Matrix out(1, 1);
  out(0, 0) = total / normalizer;
  return make_result(std::move(out), {logits}, track, [grad = std::move(grad)](Node& self) {
    self.inputs[0]->accumulate(grad * self.grad(0, 0));
  });
}

}  // namespace ptcl::ag
