#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "bevstream/error.hpp"
#include "bevstream/io.hpp"
#include "bevstream/random.hpp"
#include "test_util.hpp"

using namespace bevstream;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kUsage;
}

}  // namespace

TEST(Io, GridRoundTripIsExact) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 9);
    const GridGeometry g{dim(rng), dim(rng), 0.1 * static_cast<double>(dim(rng))};
    const auto grid = random_grid(dim(rng), g, rng, -1e6, 1e6);
    std::stringstream ss;
    write_grid(ss, grid);
    const auto back = read_grid(ss);
    EXPECT_TRUE(back.same_shape(grid));
    EXPECT_EQ(back.geometry(), grid.geometry());
    EXPECT_TRUE(std::ranges::equal(back.data(), grid.data()));
  }
}

TEST(Io, KernelRoundTripIsExact) {
  Rng rng(2);
  const auto k = random_kernel(5, 3, 3, 1, rng);
  std::stringstream ss;
  write_kernel(ss, k);
  const auto back = read_kernel(ss);
  EXPECT_EQ(back.out_channels(), 5u);
  EXPECT_EQ(back.in_channels(), 3u);
  EXPECT_EQ(back.kernel_h(), 3u);
  EXPECT_EQ(back.kernel_w(), 1u);
  EXPECT_TRUE(std::ranges::equal(back.weights(), k.weights()));
}

TEST(Io, StreamRoundTripIsExact) {
  Rng rng(3);
  const GridGeometry g{6, 7, 0.5};
  auto frames = bevstream::testing::integer_motion_stream(5, 2, g, rng, 2);
  frames[2].ego_pose = Pose2(1.25, -3.5, 0.7);
  std::stringstream ss;
  write_stream(ss, frames);
  const auto back = read_stream(ss);
  ASSERT_EQ(back.size(), frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_TRUE(std::ranges::equal(back[i].grid.data(), frames[i].grid.data()));
    EXPECT_EQ(back[i].timestamp, frames[i].timestamp);
    EXPECT_EQ(back[i].ego_pose.x(), frames[i].ego_pose.x());
    EXPECT_EQ(back[i].ego_pose.y(), frames[i].ego_pose.y());
    EXPECT_EQ(back[i].ego_pose.yaw(), frames[i].ego_pose.yaw());
    EXPECT_EQ(back[i].frame_index, frames[i].frame_index);
  }
}

TEST(Io, StateRoundTripAndSize) {
  Rng rng(4);
  const GridGeometry g{8, 8, 0.8};
  FusionState s = FusionState::zero(g, 3, 2);
  s.memory = random_grid(3, g, rng);
  s.embedding = random_grid(2, g, rng);
  s.last_pose = Pose2(2.0, 1.0, -0.5);
  s.last_timestamp = 4.5;
  s.frames_seen = 9;
  std::stringstream ss;
  write_state(ss, s);
  EXPECT_EQ(ss.str().size(), serialized_state_size(s));
  const auto back = read_state(ss);
  EXPECT_TRUE(std::ranges::equal(back.memory.data(), s.memory.data()));
  EXPECT_TRUE(std::ranges::equal(back.embedding.data(), s.embedding.data()));
  EXPECT_EQ(back.last_timestamp, 4.5);
  EXPECT_EQ(back.frames_seen, 9u);
  EXPECT_EQ(back.last_pose.yaw(), -0.5);
}

TEST(Io, BadMagicAndTruncationAreFormatErrors) {
  std::stringstream bad("NOPE0000");
  EXPECT_EQ(code_of([&] { read_grid(bad); }), ErrorCode::kFormat);
  Rng rng(5);
  std::stringstream ss;
  write_grid(ss, random_grid(2, GridGeometry{4, 4, 1.0}, rng));
  std::string blob = ss.str();
  blob.resize(blob.size() - 5);
  std::stringstream cut(blob);
  EXPECT_EQ(code_of([&] { read_grid(cut); }), ErrorCode::kFormat);
  std::stringstream wrong(blob);
  EXPECT_EQ(code_of([&] { read_stream(wrong); }), ErrorCode::kFormat);
}

TEST(Io, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { load_grid("/nonexistent/dir/grid.bin"); }), ErrorCode::kIo);
}

TEST(Io, FileRoundTrip) {
  Rng rng(6);
  const auto path = std::filesystem::temp_directory_path() / "bevstream_io_test.bin";
  const auto grid = random_grid(1, GridGeometry{3, 5, 0.2}, rng);
  save_grid(path, grid);
  EXPECT_TRUE(std::ranges::equal(load_grid(path).data(), grid.data()));
  std::filesystem::remove(path);
}

TEST(Io, TrajectoryCsvRoundTrip) {
  std::vector<FrameInput> frames;
  const GridGeometry g{2, 2, 1.0};
  frames.push_back(bevstream::testing::make_frame(FeatureGrid(1, g), 0.0, Pose2(0.1, 0.2, 0.3)));
  frames.push_back(bevstream::testing::make_frame(FeatureGrid(1, g), 0.5, Pose2(-1.0 / 3.0, 2.0, -3.0)));
  std::stringstream ss;
  write_trajectory_csv(ss, frames);
  EXPECT_EQ(ss.str().substr(0, 9), "t,x,y,yaw");
  const auto back = read_trajectory_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].t, 0.5);
  EXPECT_EQ(back[1].pose.x(), -1.0 / 3.0);
  EXPECT_EQ(back[1].pose.yaw(), -3.0);
}

TEST(Io, ChannelCsvHasOneRowPerCell) {
  FeatureGrid g(2, GridGeometry{2, 3, 1.0});
  g.at(1, 1, 2) = 4.5;
  std::stringstream ss;
  write_channel_csv(ss, g, 1);
  std::string line;
  std::size_t rows = 0;
  std::getline(ss, line);
  EXPECT_EQ(line, "row,col,value");
  bool found = false;
  while (std::getline(ss, line)) {
    ++rows;
    if (line == "1,2,4.5") found = true;
  }
  EXPECT_EQ(rows, 6u);
  EXPECT_TRUE(found);
}
