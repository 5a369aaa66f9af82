#include "bevstream/random.hpp"

namespace bevstream {

FeatureGrid random_grid(std::size_t channels, const GridGeometry& geometry, Rng& rng, double lo,
                        double hi) {
  FeatureGrid g(channels, geometry);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : g.data()) v = dist(rng);
  return g;
}

ConvKernel random_kernel(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_h,
                         std::size_t kernel_w, Rng& rng, double gain) {
  ConvKernel k(out_channels, in_channels, kernel_h, kernel_w);
  const double bound = gain / static_cast<double>(in_channels * kernel_h * kernel_w);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : k.weights()) w = dist(rng);
  return k;
}

}  // namespace bevstream
