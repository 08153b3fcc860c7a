#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ptcl/autograd.hpp"

namespace ptcl::nn {

struct NamedParameter {
  std::string name;
  ag::Var var;
};

/// Ordered, hierarchically named view over parameter leaves. Copies share
/// the underlying leaves.
class ParameterSet {
 public:
  void add(std::string name, ag::Var var);
  void extend(const ParameterSet& other, const std::string& prefix = {});

  std::span<const NamedParameter> items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::size_t scalar_count() const;
  const NamedParameter* find(const std::string& name) const;

  /// Leaves with requires_grad set.
  std::vector<ag::Var> trainable() const;
  void zero_grad() const;

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values) const;

  /// First non-finite parameter name, or empty.
  std::string first_non_finite() const;

 private:
  std::vector<NamedParameter> items_;
};

/// Temporarily clears requires_grad on every parameter of a set.
class FreezeGuard {
 public:
  explicit FreezeGuard(const ParameterSet& params);
  ~FreezeGuard();
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<std::pair<ag::Var, bool>> saved_;
};

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
Matrix uniform_fan_in(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, std::mt19937_64& rng);

/// y = x W + b with W stored in x out.
struct Linear {
  ag::Var weight;
  ag::Var bias;

  Linear() = default;
  Linear(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng);

  ag::Var operator()(const ag::Var& x) const { return ag::affine(x, weight, bias); }
  Eigen::Index in_dim() const { return weight->value.rows(); }
  Eigen::Index out_dim() const { return weight->value.cols(); }
  void collect(ParameterSet& out, const std::string& prefix) const;
};

struct LayerNorm {
  ag::Var gain;
  ag::Var bias;

  LayerNorm() = default;
  explicit LayerNorm(Eigen::Index dim);

  ag::Var operator()(const ag::Var& x) const { return ag::layer_norm(x, gain, bias); }
  void collect(ParameterSet& out, const std::string& prefix) const;
};

/// Adaptive moment estimation over a fixed list of leaves.
class Adam {
 public:
  Adam(std::vector<ag::Var> params, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  /// Applies one update from the accumulated grads, then clears them.
  void step();
  void zero_grad();

 private:
  std::vector<ag::Var> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

}  // namespace ptcl::nn
