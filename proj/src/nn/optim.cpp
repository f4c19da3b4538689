#include "feddig/nn/optim.hpp"

#include <cmath>

#include "feddig/error.hpp"

namespace feddig::nn {

void SgdMomentum::step(const std::vector<Parameter*>& params) {
  if (velocity_.empty()) {
    for (const Parameter* p : params) velocity_.emplace_back(p->value.shape());
  }
  require(velocity_.size() == params.size(), ErrorCategory::kContract, "optimizer bound to a different model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto v = velocity_[i].values();
    auto g = params[i]->grad.values();
    auto w = params[i]->value.values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = momentum_ * v[j] + g[j];
      w[j] -= lr_ * v[j];
    }
  }
}

void Adam::step(const std::vector<Parameter*>& params) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  require(m_.size() == params.size(), ErrorCategory::kContract, "optimizer bound to a different model");
  ++t_;
  const Real c1 = 1.0 - std::pow(beta1_, static_cast<Real>(t_));
  const Real c2 = 1.0 - std::pow(beta2_, static_cast<Real>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = m_[i].values();
    auto v = v_[i].values();
    auto g = params[i]->grad.values();
    auto w = params[i]->value.values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      w[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

void add_proximal_gradient(const std::vector<Parameter*>& params, const ParamSet& anchor, Real mu) {
  if (mu == 0.0) return;
  require(params.size() == anchor.tensors.size(), ErrorCategory::kContract, "proximal anchor layout mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = params[i]->grad.values();
    auto w = params[i]->value.values();
    auto a = anchor.tensors[i].value.values();
    for (std::size_t j = 0; j < w.size(); ++j) g[j] += mu * (w[j] - a[j]);
  }
}

Real proximal_penalty(const std::vector<Parameter*>& params, const ParamSet& anchor, Real mu) {
  Real s = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i]->value.values();
    auto a = anchor.tensors[i].value.values();
    for (std::size_t j = 0; j < w.size(); ++j) s += (w[j] - a[j]) * (w[j] - a[j]);
  }
  return 0.5 * mu * s;
}

}  // namespace feddig::nn
