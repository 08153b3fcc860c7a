#include "ptcl/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace ptcl::nn {

void ParameterSet::add(std::string name, ag::Var var) {
  if (find(name) != nullptr) throw std::invalid_argument("duplicate parameter name: " + name);
  items_.push_back({std::move(name), std::move(var)});
}

void ParameterSet::extend(const ParameterSet& other, const std::string& prefix) {
  for (const auto& p : other.items_) add(prefix + p.name, p.var);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += static_cast<std::size_t>(p.var->value.size());
  return n;
}

const NamedParameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : items_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::vector<ag::Var> ParameterSet::trainable() const {
  std::vector<ag::Var> out;
  for (const auto& p : items_) {
    if (p.var->requires_grad) out.push_back(p.var);
  }
  return out;
}

void ParameterSet::zero_grad() const {
  for (const auto& p : items_) p.var->zero_grad();
}

std::vector<Matrix> ParameterSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.var->value);
  return out;
}

void ParameterSet::restore(const std::vector<Matrix>& values) const {
  if (values.size() != items_.size()) throw std::invalid_argument("snapshot does not match parameter set");
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (values[i].rows() != items_[i].var->value.rows() || values[i].cols() != items_[i].var->value.cols()) {
      throw std::invalid_argument("snapshot shape mismatch for " + items_[i].name);
    }
    items_[i].var->value = values[i];
  }
}

std::string ParameterSet::first_non_finite() const {
  for (const auto& p : items_) {
    if (!p.var->value.allFinite()) return p.name;
  }
  return {};
}

FreezeGuard::FreezeGuard(const ParameterSet& params) {
  for (const auto& p : params.items()) {
    saved_.emplace_back(p.var, p.var->requires_grad);
    p.var->requires_grad = false;
  }
}

FreezeGuard::~FreezeGuard() {
  for (auto& [var, flag] : saved_) var->requires_grad = flag;
}

Matrix uniform_fan_in(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Linear::Linear(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng)
    : weight(ag::leaf(uniform_fan_in(in, out, in, rng), true)), bias(ag::leaf(uniform_fan_in(1, out, in, rng), true)) {}

void Linear::collect(ParameterSet& out, const std::string& prefix) const {
  out.add(prefix + ".weight", weight);
  out.add(prefix + ".bias", bias);
}

LayerNorm::LayerNorm(Eigen::Index dim)
    : gain(ag::leaf(Matrix::Ones(1, dim), true)), bias(ag::leaf(Matrix::Zero(1, dim), true)) {}

void LayerNorm::collect(ParameterSet& out, const std::string& prefix) const {
  out.add(prefix + ".gain", gain);
  out.add(prefix + ".bias", bias);
}

Adam::Adam(std::vector<ag::Var> params, double learning_rate, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    if (p.grad.size() == 0) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    p.grad.resize(0, 0);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

}  // namespace ptcl::nn
