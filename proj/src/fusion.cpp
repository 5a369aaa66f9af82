#include "bevstream/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bevstream/error.hpp"

namespace bevstream {

void validate_stream(std::span<const FrameInput> frames) {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (!(frames[i].timestamp > frames[i - 1].timestamp)) {
      throw Error(ErrorCode::kStreamOrder,
                  "timestamps must strictly increase (frame " + std::to_string(i) + ")");
    }
    if (!frames[i].grid.same_shape(frames[0].grid)) {
      throw Error(ErrorCode::kShape, "grid shape changes within stream at frame " +
                                         std::to_string(i));
    }
  }
}

FusionState FusionState::zero(const GridGeometry& geometry, std::size_t memory_channels,
                              std::size_t embed_channels) {
  FusionState s;
  s.memory = FeatureGrid(memory_channels, geometry);
  s.embedding = FeatureGrid(embed_channels, geometry);
  return s;
}

FusionState reset(const FusionState& state) {
  return FusionState::zero(state.memory.geometry(), state.memory.channels(),
                           state.embedding.channels());
}

namespace {

std::span<const FrameInput> last_window(std::span<const FrameInput> history, std::size_t window) {
  if (window == 0) throw Error(ErrorCode::kInsufficientHistory, "window must be >= 1");
  if (history.size() < window) {
    throw Error(ErrorCode::kInsufficientHistory,
                "window " + std::to_string(window) + " exceeds history of " +
                    std::to_string(history.size()) + " frames");
  }
  return history.subspan(history.size() - window);
}

FeatureGrid aligned(const FrameInput& frame, const FrameInput& newest) {
  if (&frame == &newest) return frame.grid;
  return grid_sample(frame.grid,
                     relative_transform(newest.ego_pose, frame.ego_pose, frame.grid.geometry()));
}

}  // namespace

FeatureGrid parallel_fuse(std::span<const FrameInput> history, std::size_t window,
                          const ConvKernel& kernel) {
  const auto frames = last_window(history, window);
  const FrameInput& newest = frames.back();
  if (kernel.in_channels() != window * newest.grid.channels()) {
    throw Error(ErrorCode::kShape, "parallel_fuse: kernel expects " +
                                       std::to_string(kernel.in_channels()) +
                                       " input channels, window provides " +
                                       std::to_string(window * newest.grid.channels()));
  }
  std::vector<FeatureGrid> stacked;
  stacked.reserve(window);
  for (const auto& f : frames) stacked.push_back(aligned(f, newest));
  return conv2d(channel_concat(stacked), kernel);
}

FeatureGrid parallel_fuse_split(std::span<const FrameInput> history, std::size_t window,
                                std::span<const ConvKernel> chunks) {
  const auto frames = last_window(history, window);
  if (chunks.size() != window) {
    throw Error(ErrorCode::kShape, "parallel_fuse_split: need one kernel chunk per window slot");
  }
  const FrameInput& newest = frames.back();
  FeatureGrid sum;
  for (std::size_t j = 0; j < window; ++j) {
    FeatureGrid term = conv2d(aligned(frames[j], newest), chunks[j]);
    if (j == 0) {
      sum = std::move(term);
    } else {
      sum += term;
    }
  }
  return sum;
}

const FeatureGrid& recurrent_update(FusionState& state, const FrameInput& frame,
                                    const RecurrentKernels& kernels) {
  if (!(frame.timestamp > state.last_timestamp)) {
    throw Error(ErrorCode::kStreamOrder, "frame timestamp " + std::to_string(frame.timestamp) +
                                             " does not follow " +
                                             std::to_string(state.last_timestamp));
  }
  if (!(frame.grid.geometry() == state.memory.geometry())) {
    throw Error(ErrorCode::kShape, "recurrent_step: frame geometry differs from memory");
  }
  if (kernels.v_cur.in_channels() != frame.grid.channels() ||
      kernels.v_cur.out_channels() != state.memory.channels()) {
    throw Error(ErrorCode::kShape, "recurrent_step: v_cur does not map frame to memory channels");
  }
  if (kernels.v_mem.in_channels() != state.memory.channels() ||
      kernels.v_mem.out_channels() != state.memory.channels()) {
    throw Error(ErrorCode::kShape, "recurrent_step: v_mem must be memory -> memory");
  }

  FeatureGrid fused = conv2d(frame.grid, kernels.v_cur);
  if (state.frames_seen > 0) {
    const auto warp = relative_transform(frame.ego_pose, state.last_pose, frame.grid.geometry());
    fused += conv2d(grid_sample(state.memory, warp), kernels.v_mem);
  }
  apply_activation(fused, kernels.activation);

  state.memory = std::move(fused);
  state.last_pose = frame.ego_pose;
  state.last_timestamp = frame.timestamp;
  ++state.frames_seen;
  return state.memory;
}

StepResult recurrent_step(const FusionState& state, const FrameInput& frame,
                          const ConvKernel& v_mem, const ConvKernel& v_cur,
                          Activation activation) {
  StepResult result{state, {}};
  const RecurrentKernels kernels{v_mem, v_cur, activation};
  result.fused = recurrent_update(result.state, frame, kernels);
  return result;
}

FeatureGrid unrolled_oracle(std::span<const FrameInput> frames, const ConvKernel& v_mem,
                            const ConvKernel& v_cur) {
  if (frames.empty()) throw Error(ErrorCode::kEmptyStream, "unrolled_oracle: no frames");
  validate_stream(frames);
  const FrameInput& newest = frames.back();
  const std::size_t i = frames.size();

  FeatureGrid sum;
  for (std::size_t j = 0; j < i; ++j) {
    FeatureGrid term = conv2d(aligned(frames[j], newest), v_cur);
    for (std::size_t n = 0; n < i - 1 - j; ++n) term = conv2d(term, v_mem);
    if (j == 0) {
      sum = std::move(term);
    } else {
      sum += term;
    }
  }
  return sum;
}

std::size_t recurrence_margin(std::span<const FrameInput> frames, const ConvKernel& v_mem,
                              const ConvKernel& v_cur) {
  if (frames.empty()) return 0;
  const std::size_t radius = std::max({v_mem.radius_h(), v_mem.radius_w(), v_cur.radius_h(),
                                       v_cur.radius_w()});
  const FrameInput& newest = frames.back();
  double shift = 0.0;
  for (const auto& f : frames) {
    const auto t = relative_transform(newest.ego_pose, f.ego_pose, f.grid.geometry());
    shift = std::max({shift, std::abs(t.m[2]), std::abs(t.m[5])});
  }
  return frames.size() * radius + static_cast<std::size_t>(std::ceil(shift - 1e-9));
}

RecurrentFuser::RecurrentFuser(RecurrentKernels kernels, const GridGeometry& geometry,
                               std::size_t embed_channels)
    : kernels_(std::move(kernels)),
      state_(FusionState::zero(geometry, kernels_.v_mem.out_channels(), embed_channels)) {}

ParallelFuser::ParallelFuser(ConvKernel kernel, std::size_t window)
    : kernel_(std::move(kernel)), window_(window) {
  if (window_ == 0) throw Error(ErrorCode::kInsufficientHistory, "window must be >= 1");
  frames_.reserve(window_);
}

void ParallelFuser::push(FrameInput frame) {
  if (!frames_.empty() && !(frame.timestamp > frames_.back().timestamp)) {
    throw Error(ErrorCode::kStreamOrder, "ParallelFuser: non-increasing timestamp");
  }
  if (frames_.size() == window_) frames_.erase(frames_.begin());
  frames_.push_back(std::move(frame));
}

FeatureGrid ParallelFuser::fuse() const { return parallel_fuse(frames_, window_, kernel_); }

std::size_t ParallelFuser::retained_bytes() const {
  std::size_t bytes = 0;
  for (const auto& f : frames_) bytes += f.grid.byte_size();
  return bytes;
}

}  // namespace bevstream
