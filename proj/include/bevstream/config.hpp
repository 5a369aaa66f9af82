#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevstream/bench.hpp"
#include "bevstream/fusion.hpp"
#include "bevstream/sim.hpp"
#include "bevstream/temporal.hpp"

// JSON run configuration. Every section is optional; missing keys keep
// their defaults. Schema (defaults in parentheses):
//
//   seed                       base seed (42)
//   scene.duration             seconds (10)
//   scene.nominal_interval     seconds (0.5)
//   scene.channels             (1)
//   scene.grid                 {height (128), width (128), resolution (0.8)}
//   scene.feature_noise        additive Gaussian stddev (0)
//   scene.ego.initial          [x, y, yaw] ([0, 0, 0])
//   scene.ego.segments         [{duration, forward, lateral, yaw_rate}]
//   scene.objects              (none) [{position, velocity, radius (1.6), channel (0),
//                                amplitude (1), visible_from, visible_until}]
//   fusion.kernel_size         (3)
//   fusion.memory_channels     (0 = frame channels)
//   fusion.memory_gain         abs row-sum bound of seeded v_mem (0.5)
//   fusion.current_gain        same for v_cur (1.0)
//   fusion.activation          identity | relu | tanh (identity)
//   fusion.v_mem, fusion.v_cur optional BEVK kernel files
//   check.{seeds (20), max_length (8), max_window (5), channels (4),
//          height (32), width (32), kernel_size (3), max_step (1),
//          suites (["oracle", "split"])}
//   framedrop.{fmr_grid, seeds (5), object_count (4), min_speed, max_speed,
//              spawn_half_extent, embed_channels (8), embedder_seed (7),
//              window (20), scene}
//   bench.{modes, windows ([1,2,4,8,16]), channels (80), height, width,
//          kernel_size (3), extra_frames (3), repetitions (1)}

namespace bevstream {

inline constexpr std::uint64_t kDefaultSeed = 42;

using Json = nlohmann::json;

/// Throws ErrorCode::kIo / kConfig.
Json load_config_file(const std::filesystem::path& path);
/// `key=value` with a dotted key; the value is parsed as JSON when it can be,
/// otherwise stored as a string.
void apply_override(Json& config, const std::string& assignment);
/// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const Json& config);

SceneConfig scene_from_json(const Json& j);
Json scene_to_json(const SceneConfig& scene);

struct FusionSettings {
  std::size_t kernel_size = 3;
  std::size_t memory_channels = 0;  // 0: same as the frame channels
  double memory_gain = 0.5;
  double current_gain = 1.0;
  Activation activation = Activation::kIdentity;
  std::filesystem::path v_mem_path;
  std::filesystem::path v_cur_path;
};
FusionSettings fusion_from_json(const Json& j);
/// Kernels from files when given, otherwise seeded.
RecurrentKernels make_recurrent_kernels(const FusionSettings& settings, std::size_t frame_channels,
                                        std::size_t memory_channels, std::uint64_t seed);

struct CheckSettings {
  std::size_t seeds = 20;
  std::size_t max_length = 8;
  std::size_t max_window = 5;
  std::size_t channels = 4;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t kernel_size = 3;
  int max_step = 1;  // cells per axis per frame
  std::vector<std::string> suites{"oracle", "split"};
};
CheckSettings check_from_json(const Json& j);

struct FrameDropSettings {
  FrameDropConfig experiment = FrameDropConfig::defaults();
  std::size_t seeds = 5;
};
FrameDropSettings framedrop_from_json(const Json& j);

struct BenchSettings {
  std::vector<FusionMode> modes{FusionMode::kRecurrent, FusionMode::kParallel};
  std::vector<std::size_t> windows{1, 2, 4, 8, 16};
  std::size_t channels = 80;
  std::size_t height = 128;
  std::size_t width = 128;
  std::size_t kernel_size = 3;
  std::size_t extra_frames = 3;
  std::size_t repetitions = 1;
};
BenchSettings bench_from_json(const Json& j);

}  // namespace bevstream
