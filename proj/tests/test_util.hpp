#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "bevstream/checks.hpp"
#include "bevstream/fusion.hpp"
#include "bevstream/random.hpp"

namespace bevstream::testing {

inline FrameInput make_frame(FeatureGrid grid, double t, Pose2 pose = {}, std::uint64_t index = 0) {
  return FrameInput{std::move(grid), t, pose, index};
}

using bevstream::integer_motion_stream;

inline Pose2 random_pose(Rng& rng, double extent = 20.0) {
  std::uniform_real_distribution<double> pos(-extent, extent);
  std::uniform_real_distribution<double> yaw(-4.0, 4.0);
  return Pose2(pos(rng), pos(rng), yaw(rng));
}

}  // namespace bevstream::testing
