#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bevstream/fusion.hpp"
#include "bevstream/grid.hpp"
#include "bevstream/sim.hpp"

namespace bevstream {

/// Interval embedding e(.) (two convolution layers) plus the kernel K that
/// recurrently fuses the previous embedding with the new one.
struct TemporalEmbedder {
  ConvKernel layer1;  // embed x 1
  ConvKernel layer2;  // embed x embed
  ConvKernel fuse;    // embed x 2*embed: [previous embedding; new embedding]
  Activation activation = Activation::kIdentity;  // between layer1 and layer2

  std::size_t embed_channels() const { return layer2.out_channels(); }
  std::size_t margin() const;
  /// Throws ErrorCode::kShape when the layer shapes do not chain.
  void validate() const;

  /// e(plane): layer2(activation(layer1(plane))). No interval checks.
  FeatureGrid encode(const FeatureGrid& interval_plane) const;

  /// Seeded weights. Channel `readout_channel` of the fuse kernel ignores
  /// the previous embedding, so it always carries the newest interval.
  static TemporalEmbedder seeded(std::size_t embed_channels, std::uint64_t seed,
                                 std::size_t kernel_size = 1,
                                 Activation activation = Activation::kIdentity,
                                 std::size_t readout_channel = 0);
};

struct EmbeddingState {
  FeatureGrid embedding;

  static EmbeddingState zero(const GridGeometry& geometry, std::size_t embed_channels) {
    return {FeatureGrid(embed_channels, geometry)};
  }
};

/// E = e(dt * ones). Throws ErrorCode::kInvalidInterval for dt <= 0.
FeatureGrid embed_interval(const TemporalEmbedder& embedder, double dt,
                           const GridGeometry& geometry);

/// E_bar_i = conv([E_bar_{i-1}; E_i], K).
EmbeddingState embed_step(const EmbeddingState& state, const TemporalEmbedder& embedder, double dt);

/// Linear map from the interior mean of one embedding channel back to the
/// interval, fitted on a one-step embedding from zero state.
struct IntervalDecoder {
  std::size_t channel = 0;
  std::size_t margin = 0;
  double slope = 1.0;
  double intercept = 0.0;

  double decode(const FeatureGrid& embedding) const;
};

inline constexpr std::array<double, 4> kCalibrationIntervals{0.5, 1.0, 1.5, 2.0};

/// Throws ErrorCode::kCalibration when the channel does not vary with dt.
IntervalDecoder calibrate_interval_decoder(const TemporalEmbedder& embedder,
                                           const GridGeometry& geometry, std::size_t channel = 0,
                                           std::span<const double> intervals = kCalibrationIntervals);

enum class IntervalMode { kFixed, kEmbedded };

/// Where to look for one object: the current and previous positions live in
/// separate memory channels.
struct VelocityQuery {
  std::array<double, 2> cell{0.0, 0.0};  // (col, row) near the current position
  std::size_t current_channel = 0;
  std::size_t previous_channel = 1;
};

struct VelocityHead {
  double nominal_interval = 0.5;
  std::size_t window = 20;  // half-size of the centroid window, cells
  IntervalDecoder decoder;
};

/// Interval the head divides by: nominal in fixed mode, decoded otherwise.
double readout_interval(const FeatureGrid& embedding, IntervalMode mode, const VelocityHead& head);

/// Velocity (m/s, current ego frame) from the displacement between the
/// positive-mass centroids of the previous and current channels. A query
/// with no mass in either channel yields NaN components.
std::vector<std::array<double, 2>> velocity_readout(const FeatureGrid& memory,
                                                    const FeatureGrid& embedding,
                                                    std::span<const VelocityQuery> queries,
                                                    IntervalMode mode, const VelocityHead& head);

struct FrameDropConfig {
  SceneConfig scene;  // geometry, timing and ego motion; objects are generated per seed
  std::size_t object_count = 4;
  double min_speed = 0.5;  // m/s, world frame
  double max_speed = 2.0;
  double spawn_half_extent = 10.0;  // meters around the initial ego position
  std::vector<double> fmr_grid{0.0, 0.25, 0.5};
  std::size_t embed_channels = 8;
  std::uint64_t embedder_seed = 7;
  std::size_t window = 20;

  static FrameDropConfig defaults();
};

struct FrameDropRow {
  double fmr = 0.0;
  double ave_fixed = 0.0;
  double ave_embedded = 0.0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
};

/// 1x1 fusion kernels that copy frame channel 2o into memory channel 2o and
/// move the warped memory channel 2o into 2o+1, so after each step channel
/// 2o+1 holds the previous received frame's rendering in the current ego frame.
RecurrentKernels displacement_kernels(std::size_t objects);

/// Scene with `object_count` seeded objects, each on its own channel pair
/// (current 2o, previous 2o+1).
SceneConfig frame_drop_scene(const FrameDropConfig& config, std::uint64_t seed);

/// Streams one seeded scene through recurrent fusion and the interval
/// embedding at every rate in the grid, returning mean absolute velocity
/// error per mode.
std::vector<FrameDropRow> run_frame_drop_experiment(const FrameDropConfig& config,
                                                    std::uint64_t seed);

}  // namespace bevstream
