#include "feddig/exp/evaluate.hpp"

#include <algorithm>

#include "feddig/digest/digest.hpp"

namespace feddig::exp {

double evaluate(const nn::DualBranchClassifier& model, const nn::Sequential& producer, const data::ImageSet& images,
                std::span<const int> indices, int batch_size) {
  if (indices.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < indices.size(); begin += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(indices.size(), begin + static_cast<std::size_t>(batch_size));
    const auto chunk = indices.subspan(begin, end - begin);
    const nn::Tensor x = images.batch(chunk);
    const nn::Tensor logits = model.infer(x, digest::encode(producer, x));
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const auto row = logits.slice0(static_cast<int>(i));
      const auto best = std::max_element(row.begin(), row.end()) - row.begin();
      if (best == images.labels[static_cast<std::size_t>(chunk[i])]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

}  // namespace feddig::exp
