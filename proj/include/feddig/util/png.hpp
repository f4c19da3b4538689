#pragma once

#include <filesystem>

#include "feddig/nn/tensor.hpp"

namespace feddig::util {

// Tiles a (N, C, H, W) batch with values in [0, 1] into a grid PNG with
// `columns` tiles per row and a 1-pixel gap. C must be 1 or 3.
void write_png_grid(const std::filesystem::path& path, const nn::Tensor& images, int columns);

}  // namespace feddig::util
