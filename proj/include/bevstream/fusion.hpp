#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "bevstream/geometry.hpp"
#include "bevstream/grid.hpp"

namespace bevstream {

/// One element of a BEV stream.
struct FrameInput {
  FeatureGrid grid;
  double timestamp = 0.0;  // seconds
  Pose2 ego_pose;
  std::uint64_t frame_index = 0;
};

/// Checks strictly increasing timestamps and a shared grid shape.
void validate_stream(std::span<const FrameInput> frames);

/// Recurrent memory carried between frames. `embedding` belongs to the
/// temporal embedder and is only carried here so a stream has one state.
struct FusionState {
  FeatureGrid memory;
  FeatureGrid embedding;
  Pose2 last_pose;
  double last_timestamp = -std::numeric_limits<double>::infinity();
  std::size_t frames_seen = 0;

  static FusionState zero(const GridGeometry& geometry, std::size_t memory_channels,
                          std::size_t embed_channels);

  /// Bytes held by retained grids (memory + embedding).
  std::size_t retained_bytes() const { return memory.byte_size() + embedding.byte_size(); }
};

/// Zero memory and embedding, forget pose and time; shapes are kept.
FusionState reset(const FusionState& state);

/// Concatenate-then-convolve fusion of the newest `window` frames of
/// `history`. Older frames are warped into the newest frame's ego frame and
/// stacked oldest first; the newest frame goes last, unwarped.
FeatureGrid parallel_fuse(std::span<const FrameInput> history, std::size_t window,
                          const ConvKernel& kernel);

/// Same quantity as parallel_fuse, computed as a sum of per-frame
/// convolutions with one kernel chunk per window slot (oldest first).
FeatureGrid parallel_fuse_split(std::span<const FrameInput> history, std::size_t window,
                                std::span<const ConvKernel> chunks);

struct RecurrentKernels {
  ConvKernel v_mem;  // memory chunk: memory_channels -> memory_channels
  ConvKernel v_cur;  // current chunk: frame_channels -> memory_channels
  /// Applied after the two chunk sums. Anything but kIdentity breaks the
  /// closed-form unroll.
  Activation activation = Activation::kIdentity;

  std::size_t parameter_count() const { return v_mem.parameter_count() + v_cur.parameter_count(); }
};

/// In-place update:
///   memory <- conv(warp(memory, last_pose -> frame pose), v_mem) + conv(frame, v_cur)
/// The memory term is skipped while frames_seen == 0 (zero-initialised memory).
/// Returns the new memory, which is also the fused output.
const FeatureGrid& recurrent_update(FusionState& state, const FrameInput& frame,
                                    const RecurrentKernels& kernels);

struct StepResult {
  FusionState state;
  FeatureGrid fused;
};

StepResult recurrent_step(const FusionState& state, const FrameInput& frame,
                          const ConvKernel& v_mem, const ConvKernel& v_cur,
                          Activation activation = Activation::kIdentity);

/// Closed-form expansion of i recurrent steps:
///   sum_j conv^{i-j}(conv(warp(B_j, P_ij), v_cur), v_mem)
/// with each P_ij built directly from the two poses rather than by chaining
/// per-step warps.
FeatureGrid unrolled_oracle(std::span<const FrameInput> frames, const ConvKernel& v_mem,
                            const ConvKernel& v_cur);

/// Interior margin (cells) outside which chained recurrence and the unrolled
/// form may differ for integer-translation ego motion: i * kernel radius plus
/// the largest cumulative shift between any frame and the newest one.
std::size_t recurrence_margin(std::span<const FrameInput> frames, const ConvKernel& v_mem,
                              const ConvKernel& v_cur);

/// Stream-facing wrapper around recurrent_update.
class RecurrentFuser {
 public:
  RecurrentFuser(RecurrentKernels kernels, const GridGeometry& geometry,
                 std::size_t embed_channels = 0);

  const FeatureGrid& step(const FrameInput& frame) { return recurrent_update(state_, frame, kernels_); }
  void reset() { state_ = bevstream::reset(state_); }

  const FusionState& state() const { return state_; }
  FusionState& mutable_state() { return state_; }
  const RecurrentKernels& kernels() const { return kernels_; }

 private:
  RecurrentKernels kernels_;
  FusionState state_;
};

/// Sliding-window fuser retaining the newest `window` frames.
class ParallelFuser {
 public:
  ParallelFuser(ConvKernel kernel, std::size_t window);

  void push(FrameInput frame);
  bool ready() const { return frames_.size() == window_; }
  /// Throws ErrorCode::kInsufficientHistory until `window` frames were pushed.
  FeatureGrid fuse() const;

  std::size_t window() const { return window_; }
  std::size_t retained_bytes() const;
  const ConvKernel& kernel() const { return kernel_; }

 private:
  ConvKernel kernel_;
  std::size_t window_;
  std::vector<FrameInput> frames_;
};

}  // namespace bevstream
