#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "feddig/data/dataset.hpp"
#include "feddig/data/partitioner.hpp"
#include "feddig/nn/layers.hpp"
#include "feddig/nn/models.hpp"
#include "feddig/nn/params.hpp"
#include "feddig/nn/tensor.hpp"

namespace feddig::testing {

using nn::Real;
using nn::Tensor;

inline Tensor random_tensor(nn::Shape shape, std::mt19937_64& rng, Real lo = -1.0, Real hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<Real> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

inline Real relative_error(const std::vector<Real>& a, const std::vector<Real>& b) {
  Real diff = 0.0;
  Real scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    scale += a[i] * a[i] + b[i] * b[i];
  }
  return scale == 0.0 ? std::sqrt(diff) : std::sqrt(diff) / std::sqrt(scale);
}

// Central differences of `loss` over every element of `params`.
inline std::vector<Real> numeric_gradient(const std::vector<nn::Parameter*>& params, const std::function<Real()>& loss,
                                          Real h = 1e-5) {
  std::vector<Real> g;
  for (auto* p : params) {
    for (auto& v : p->value.values()) {
      const Real saved = v;
      v = saved + h;
      const Real up = loss();
      v = saved - h;
      const Real down = loss();
      v = saved;
      g.push_back((up - down) / (2.0 * h));
    }
  }
  return g;
}

inline std::vector<Real> flat_grads(const std::vector<nn::Parameter*>& params) {
  std::vector<Real> g;
  for (auto* p : params) g.insert(g.end(), p->grad.values().begin(), p->grad.values().end());
  return g;
}

// A small toy world on the synthetic dataset: splits, Dirichlet shards and a
// randomly initialized (not pretrained) producer.
struct ToyWorld {
  data::Dataset dataset;
  data::Splits splits;
  data::ClientShards shards;
  nn::Architecture arch;
  nn::Sequential producer;
};

inline ToyWorld make_toy_world(int train_samples = 400, int clients = 4, double mu = 1.0, std::uint64_t seed = 0) {
  ToyWorld w;
  data::SyntheticOptions opts;
  opts.train_samples = train_samples;
  opts.test_samples = 200;
  w.dataset = data::make_synthetic_small(opts);
  w.splits = data::make_splits(w.dataset, {0.8, 0.1, 0.1, seed});
  w.shards = data::dirichlet_dispatch(w.splits.train, w.dataset.train.labels, 4, clients, mu, seed);
  w.arch = nn::make_architecture(nn::ArchFamily::kSynthetic, 4);
  w.producer = w.arch.make_encoder();
  w.producer.initialize(seed + 99);
  return w;
}

}  // namespace feddig::testing
