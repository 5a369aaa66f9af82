#pragma once

#include <cstdint>
#include <random>

#include "bevstream/grid.hpp"

namespace bevstream {

using Rng = std::mt19937_64;

/// Uniform entries in [lo, hi).
FeatureGrid random_grid(std::size_t channels, const GridGeometry& geometry, Rng& rng,
                        double lo = -1.0, double hi = 1.0);

/// Uniform weights in [-gain / fan_in, gain / fan_in), fan_in = in * kh * kw,
/// so every output row has an absolute weight sum below `gain`.
ConvKernel random_kernel(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_h,
                         std::size_t kernel_w, Rng& rng, double gain = 1.0);

}  // namespace bevstream
