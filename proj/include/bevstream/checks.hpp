#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bevstream/config.hpp"
#include "bevstream/fusion.hpp"
#include "bevstream/random.hpp"

namespace bevstream {

inline constexpr double kCheckTolerance = 1e-6;

struct CheckResult {
  std::string suite;
  std::size_t seed = 0;   // seed index within the suite
  std::size_t param = 0;  // sequence length (oracle) or window (split)
  double residual = 0.0;
  bool passed = false;
};

/// Random stream with integer-cell ego steps in [-max_step, max_step] per
/// axis, zero yaw, timestamps 0.5 s apart.
std::vector<FrameInput> integer_motion_stream(std::size_t length, std::size_t channels,
                                              const GridGeometry& geometry, Rng& rng,
                                              int max_step);

/// Chained recurrent steps against the unrolled closed form, on the interior
/// given by recurrence_margin, for every length 1..max_length and seed.
/// With `inject_fault`, v_mem is perturbed from the middle of each stream on
/// in the chained run only.
std::vector<CheckResult> run_oracle_suite(const CheckSettings& settings, std::uint64_t seed,
                                          bool inject_fault = false);

/// Concatenated-kernel fusion against the per-chunk sum for every window
/// 1..max_window and seed.
std::vector<CheckResult> run_split_suite(const CheckSettings& settings, std::uint64_t seed);

}  // namespace bevstream
