#include "bevstream/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "bevstream/error.hpp"
#include "bevstream/parallel.hpp"

namespace bevstream {

void render_blob(FeatureGrid& grid, std::size_t channel, const Blob& blob) {
  if (channel >= grid.channels()) throw Error(ErrorCode::kConfig, "blob channel out of range");
  if (!(blob.radius > 0.0)) throw Error(ErrorCode::kConfig, "blob radius must be positive");
  const double reach = 4.0 * blob.radius + 1e-9;
  const double h = static_cast<double>(grid.height());
  const double w = static_cast<double>(grid.width());
  const double r_lo = std::max(0.0, std::ceil(blob.row - reach));
  const double r_hi = std::min(h - 1.0, std::floor(blob.row + reach));
  const double c_lo = std::max(0.0, std::ceil(blob.col - reach));
  const double c_hi = std::min(w - 1.0, std::floor(blob.col + reach));
  if (r_lo > r_hi || c_lo > c_hi) return;
  const double inv = 1.0 / (2.0 * blob.radius * blob.radius);
  for (auto r = static_cast<std::size_t>(r_lo); r <= static_cast<std::size_t>(r_hi); ++r) {
    const double dr = static_cast<double>(r) - blob.row;
    for (auto c = static_cast<std::size_t>(c_lo); c <= static_cast<std::size_t>(c_hi); ++c) {
      const double dc = static_cast<double>(c) - blob.col;
      grid.at(channel, r, c) += blob.amplitude * std::exp(-(dr * dr + dc * dc) * inv);
    }
  }
}

double blob_mass(const Blob& blob) {
  return blob.amplitude * 2.0 * std::numbers::pi * blob.radius * blob.radius;
}

Pose2 EgoTrajectory::pose_at(double t) const {
  Pose2 pose = initial;
  double remaining = t;
  for (std::size_t i = 0; i < segments.size() && remaining > 0.0; ++i) {
    const auto& seg = segments[i];
    const bool last = i + 1 == segments.size();
    const double dt = last ? remaining : std::min(remaining, seg.duration);
    double dx = 0.0;
    double dy = 0.0;
    const double turn = seg.yaw_rate * dt;
    if (seg.yaw_rate == 0.0) {
      dx = seg.forward * dt;
      dy = seg.lateral * dt;
    } else {
      // integral of R(w s) v ds over [0, dt]
      const double s = std::sin(turn);
      const double c = std::cos(turn);
      dx = (seg.forward * s + seg.lateral * (c - 1.0)) / seg.yaw_rate;
      dy = (seg.forward * (1.0 - c) + seg.lateral * s) / seg.yaw_rate;
    }
    pose = pose_compose(pose, Pose2(dx, dy, turn));
    remaining -= dt;
  }
  return pose;
}

std::size_t SceneConfig::frame_count() const {
  return static_cast<std::size_t>(std::floor(duration / nominal_interval + 1e-9));
}

void SceneConfig::validate() const {
  if (!(nominal_interval > 0.0)) throw Error(ErrorCode::kConfig, "nominal_interval must be > 0");
  if (!(duration > 0.0)) throw Error(ErrorCode::kConfig, "duration must be > 0");
  if (channels == 0) throw Error(ErrorCode::kConfig, "grid needs at least one channel");
  try {
    geometry.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  if (feature_noise < 0.0) throw Error(ErrorCode::kConfig, "feature_noise must be >= 0");
  for (const auto& seg : ego.segments) {
    if (!(seg.duration > 0.0)) throw Error(ErrorCode::kConfig, "ego segment duration must be > 0");
  }
  const Pose2 start = ego.pose_at(0.0);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& obj = objects[i];
    if (obj.channel >= channels) {
      throw Error(ErrorCode::kConfig, "object " + std::to_string(i) + " uses channel " +
                                          std::to_string(obj.channel) + " of a " +
                                          std::to_string(channels) + "-channel grid");
    }
    if (!(obj.radius > 0.0)) throw Error(ErrorCode::kConfig, "object radius must be > 0");
    const auto cell = world_to_cell(start, geometry, obj.position);
    if (cell[0] < -0.5 || cell[1] < -0.5 || cell[0] > static_cast<double>(geometry.width) - 0.5 ||
        cell[1] > static_cast<double>(geometry.height) - 0.5) {
      throw Error(ErrorCode::kConfig,
                  "object " + std::to_string(i) + " starts outside the perception range");
    }
  }
}

std::array<double, 2> world_to_cell(const Pose2& ego, const GridGeometry& geometry,
                                    std::array<double, 2> world) {
  const auto local = pose_inverse(ego).apply(world[0], world[1]);
  return geometry.ego_to_cell(local[0], local[1]);
}

FrameInput simulate_frame(const SceneConfig& config, std::size_t tick) {
  const double t = static_cast<double>(tick) * config.nominal_interval;
  FrameInput frame;
  frame.timestamp = t;
  frame.frame_index = tick;
  frame.ego_pose = config.ego.pose_at(t);
  frame.grid = FeatureGrid(config.channels, config.geometry);
  for (const auto& obj : config.objects) {
    if (!obj.visible_at(t)) continue;
    const auto cell = world_to_cell(frame.ego_pose, config.geometry, obj.position_at(t));
    render_blob(frame.grid, obj.channel,
                Blob{cell[0], cell[1], obj.radius / config.geometry.resolution, obj.amplitude});
  }
  if (config.feature_noise > 0.0) {
    std::seed_seq seq{config.seed, static_cast<std::uint64_t>(tick)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, config.feature_noise);
    for (double& v : frame.grid.data()) v += noise(rng);
  }
  return frame;
}

std::vector<FrameInput> simulate(const SceneConfig& config) {
  config.validate();
  std::vector<FrameInput> frames(config.frame_count());
  parallel_for(frames.size(), [&](std::size_t tick) { frames[tick] = simulate_frame(config, tick); });
  return frames;
}

std::vector<FrameInput> drop_frames(const std::vector<FrameInput>& stream, double fmr,
                                    std::uint64_t seed) {
  if (!(fmr >= 0.0 && fmr < 1.0)) {
    throw Error(ErrorCode::kInvalidRate, "frame missing rate must lie in [0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<FrameInput> kept;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const double u = uniform(rng);
    if (i == 0 || u >= fmr) kept.push_back(stream[i]);
  }
  return kept;
}

}  // namespace bevstream
