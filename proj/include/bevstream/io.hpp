#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "bevstream/fusion.hpp"
#include "bevstream/grid.hpp"

// Binary containers, all little-endian:
//
//   grid   "BEVG" u32 channels, u32 height, u32 width, f64 resolution,
//          f64 data[C*H*W] (channel-major)
//   kernel "BEVK" u32 out, u32 in, u32 kh, u32 kw, f64 weights[out*in*kh*kw]
//   stream "BEVS" u32 version (=1), u64 count, then per frame:
//          grid blob, f64 timestamp, f64 x, f64 y, f64 yaw, u64 frame_index
//   state  "BEVF" u32 version (=1), memory grid blob, embedding grid blob,
//          f64 x, f64 y, f64 yaw, f64 last_timestamp, u64 frames_seen

namespace bevstream {

void write_grid(std::ostream& out, const FeatureGrid& grid);
FeatureGrid read_grid(std::istream& in);
void save_grid(const std::filesystem::path& path, const FeatureGrid& grid);
FeatureGrid load_grid(const std::filesystem::path& path);

void write_kernel(std::ostream& out, const ConvKernel& kernel);
ConvKernel read_kernel(std::istream& in);
void save_kernel(const std::filesystem::path& path, const ConvKernel& kernel);
ConvKernel load_kernel(const std::filesystem::path& path);

void write_stream(std::ostream& out, const std::vector<FrameInput>& frames);
std::vector<FrameInput> read_stream(std::istream& in);
void save_stream(const std::filesystem::path& path, const std::vector<FrameInput>& frames);
std::vector<FrameInput> load_stream(const std::filesystem::path& path);

void write_state(std::ostream& out, const FusionState& state);
FusionState read_state(std::istream& in);
std::size_t serialized_state_size(const FusionState& state);

/// `row,col,value` for one channel.
void write_channel_csv(std::ostream& out, const FeatureGrid& grid, std::size_t channel);

/// `t,x,y,yaw` rows with a header line.
void write_trajectory_csv(std::ostream& out, const std::vector<FrameInput>& frames);
struct TimedPose {
  double t;
  Pose2 pose;
};
std::vector<TimedPose> read_trajectory_csv(std::istream& in);

}  // namespace bevstream
