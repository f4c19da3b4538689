#pragma once

#include <vector>

#include "feddig/nn/layers.hpp"
#include "feddig/nn/params.hpp"

namespace feddig::nn {

struct OptimizerConfig {
  Real learning_rate = 0.001;
  Real momentum = 0.9;
  int batch_size = 256;
  int local_epochs = 1;
};

// Heavy-ball SGD: v = momentum * v + g; p -= lr * v.
class SgdMomentum {
 public:
  SgdMomentum(Real learning_rate, Real momentum) : lr_(learning_rate), momentum_(momentum) {}

  void step(const std::vector<Parameter*>& params);

 private:
  Real lr_;
  Real momentum_;
  std::vector<Tensor> velocity_;
};

class Adam {
 public:
  explicit Adam(Real learning_rate, Real beta1 = 0.9, Real beta2 = 0.999, Real eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Parameter*>& params);

 private:
  Real lr_;
  Real beta1_;
  Real beta2_;
  Real eps_;
  long t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

// Adds mu * (p - anchor) to each gradient (FedProx proximal term).
void add_proximal_gradient(const std::vector<Parameter*>& params, const ParamSet& anchor, Real mu);
Real proximal_penalty(const std::vector<Parameter*>& params, const ParamSet& anchor, Real mu);

}  // namespace feddig::nn
