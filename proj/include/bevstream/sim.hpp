#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "bevstream/fusion.hpp"
#include "bevstream/geometry.hpp"
#include "bevstream/grid.hpp"

namespace bevstream {

/// Gaussian feature blob in cell units; `radius` is the standard deviation.
struct Blob {
  double col = 0.0;
  double row = 0.0;
  double radius = 2.0;
  double amplitude = 1.0;
};

/// Adds the blob into one channel, truncated at 4 radii and at the grid edge.
void render_blob(FeatureGrid& grid, std::size_t channel, const Blob& blob);
/// Integral of the untruncated Gaussian: amplitude * 2 pi radius^2.
double blob_mass(const Blob& blob);

/// A world-frame object moving at constant velocity.
struct ObjectSpec {
  std::array<double, 2> position{0.0, 0.0};  // meters, at t = 0
  std::array<double, 2> velocity{0.0, 0.0};  // m/s
  double radius = 1.6;                       // meters
  std::size_t channel = 0;
  double amplitude = 1.0;
  // Rendered only for visible_from <= t <= visible_until.
  double visible_from = -std::numeric_limits<double>::infinity();
  double visible_until = std::numeric_limits<double>::infinity();

  std::array<double, 2> position_at(double t) const {
    return {position[0] + velocity[0] * t, position[1] + velocity[1] * t};
  }
  bool visible_at(double t) const { return t >= visible_from && t <= visible_until; }
};

/// Constant body-frame velocity and yaw rate held for `duration` seconds.
struct EgoSegment {
  double duration = 1.0;
  double forward = 0.0;  // body x, m/s
  double lateral = 0.0;  // body y, m/s
  double yaw_rate = 0.0;  // rad/s
};

/// Piecewise-constant ego motion. Past the last segment the last segment's
/// motion continues; with no segments the ego stays at `initial`.
struct EgoTrajectory {
  Pose2 initial;
  std::vector<EgoSegment> segments;

  Pose2 pose_at(double t) const;
};

struct SceneConfig {
  double duration = 10.0;          // seconds
  double nominal_interval = 0.5;   // seconds
  std::size_t channels = 1;
  GridGeometry geometry{128, 128, 0.8};
  std::vector<ObjectSpec> objects;
  EgoTrajectory ego;
  double feature_noise = 0.0;  // stddev of additive Gaussian noise
  std::uint64_t seed = 0;

  std::size_t frame_count() const;
  /// Throws ErrorCode::kConfig on a malformed scene.
  void validate() const;
};

/// Ego-frame cell position of a world point as seen from `ego`.
std::array<double, 2> world_to_cell(const Pose2& ego, const GridGeometry& geometry,
                                    std::array<double, 2> world);

FrameInput simulate_frame(const SceneConfig& config, std::size_t tick);
/// One frame per tick at t = tick * nominal_interval. Deterministic in the
/// config, including `seed`.
std::vector<FrameInput> simulate(const SceneConfig& config);

/// Drops every non-first frame independently with probability `fmr`.
/// One uniform draw per frame is consumed regardless of `fmr`, so a fixed
/// seed gives nested drop sets as the rate grows.
std::vector<FrameInput> drop_frames(const std::vector<FrameInput>& stream, double fmr,
                                    std::uint64_t seed);

}  // namespace bevstream
