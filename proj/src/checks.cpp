#include "bevstream/checks.hpp"

#include <random>

#include "bevstream/error.hpp"
#include "bevstream/parallel.hpp"

namespace bevstream {

namespace {

Rng case_rng(std::uint64_t seed, std::uint64_t suite, std::size_t index, std::size_t param) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(suite), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(param)};
  return Rng(seq);
}

ConvKernel perturbed(ConvKernel k) {
  const std::size_t ch = std::min(k.out_channels(), k.in_channels());
  for (std::size_t c = 0; c < ch; ++c) k.at(c, c, k.radius_h(), k.radius_w()) += 0.1;
  return k;
}

}  // namespace

std::vector<FrameInput> integer_motion_stream(std::size_t length, std::size_t channels,
                                              const GridGeometry& geometry, Rng& rng,
                                              int max_step) {
  std::uniform_int_distribution<int> step(-max_step, max_step);
  std::vector<FrameInput> frames;
  frames.reserve(length);
  double x = 0.0, y = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    if (i > 0) {
      x += step(rng) * geometry.resolution;
      y += step(rng) * geometry.resolution;
    }
    frames.push_back(FrameInput{random_grid(channels, geometry, rng),
                                0.5 * static_cast<double>(i + 1), Pose2(x, y, 0.0), i});
  }
  return frames;
}

std::vector<CheckResult> run_oracle_suite(const CheckSettings& settings, std::uint64_t seed,
                                          bool inject_fault) {
  const GridGeometry g{settings.height, settings.width, 0.8};
  const std::size_t ks = settings.kernel_size;
  const std::size_t lengths = settings.max_length;
  std::vector<CheckResult> results(settings.seeds * lengths);
  parallel_for(results.size(), [&](std::size_t n) {
    const std::size_t s = n / lengths;
    const std::size_t len = n % lengths + 1;
    Rng rng = case_rng(seed, 1, s, len);
    const auto v_mem = random_kernel(settings.channels, settings.channels, ks, ks, rng, 0.5);
    const auto v_cur = random_kernel(settings.channels, settings.channels, ks, ks, rng, 1.0);
    const auto frames = integer_motion_stream(len, settings.channels, g, rng, settings.max_step);
    const auto faulty = perturbed(v_mem);

    FusionState state = FusionState::zero(g, settings.channels, 0);
    FeatureGrid chained;
    for (std::size_t i = 0; i < len; ++i) {
      const bool fault = inject_fault && len >= 2 && i >= len / 2;
      auto r = recurrent_step(state, frames[i], fault ? faulty : v_mem, v_cur);
      state = std::move(r.state);
      chained = std::move(r.fused);
    }
    const auto oracle = unrolled_oracle(frames, v_mem, v_cur);
    const std::size_t margin = recurrence_margin(frames, v_mem, v_cur);
    CheckResult& res = results[n];
    res.suite = "oracle";
    res.seed = s;
    res.param = len;
    res.residual = max_abs_diff_interior(chained, oracle, margin);
    res.passed = res.residual <= kCheckTolerance;
  });
  return results;
}

std::vector<CheckResult> run_split_suite(const CheckSettings& settings, std::uint64_t seed) {
  const GridGeometry g{settings.height, settings.width, 0.8};
  const std::size_t ks = settings.kernel_size;
  const std::size_t windows = settings.max_window;
  std::vector<CheckResult> results(settings.seeds * windows);
  parallel_for(results.size(), [&](std::size_t n) {
    const std::size_t s = n / windows;
    const std::size_t k = n % windows + 1;
    Rng rng = case_rng(seed, 2, s, k);
    const auto kernel = random_kernel(settings.channels, k * settings.channels, ks, ks, rng, 1.0);
    const auto history = integer_motion_stream(k, settings.channels, g, rng, settings.max_step);
    const auto chunks = channel_split(kernel, k);
    const auto whole = parallel_fuse(history, k, kernel);
    const auto split = parallel_fuse_split(history, k, chunks);
    CheckResult& res = results[n];
    res.suite = "split";
    res.seed = s;
    res.param = k;
    res.residual = max_abs_diff(whole, split);
    res.passed = res.residual <= kCheckTolerance;
  });
  return results;
}

}  // namespace bevstream
