#pragma once

#include <span>

#include "feddig/data/dataset.hpp"
#include "feddig/nn/layers.hpp"
#include "feddig/nn/models.hpp"

namespace feddig::exp {

// Fraction of argmax-correct predictions of model(image, encode(image)).
double evaluate(const nn::DualBranchClassifier& model, const nn::Sequential& producer, const data::ImageSet& images,
                std::span<const int> indices, int batch_size = 500);

}  // namespace feddig::exp
