#include "bevstream/io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "bevstream/error.hpp"

namespace bevstream {

namespace {

using Magic = std::array<char, 4>;
constexpr Magic kGridMagic{'B', 'E', 'V', 'G'};
constexpr Magic kKernelMagic{'B', 'E', 'V', 'K'};
constexpr Magic kStreamMagic{'B', 'E', 'V', 'S'};
constexpr Magic kStateMagic{'B', 'E', 'V', 'F'};
constexpr std::uint32_t kFormatVersion = 1;
// Guards against absurd allocations from corrupt headers.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw Error(ErrorCode::kFormat, "unexpected end of data");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

void put_u32(std::ostream& out, std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kFormat, "dimension does not fit in u32");
  }
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
}
void put_u64(std::ostream& out, std::uint64_t v) { put_le<std::uint64_t>(out, v); }
void put_f64(std::ostream& out, double v) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
std::uint64_t get_u64(std::istream& in) { return get_le<std::uint64_t>(in); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

void put_magic(std::ostream& out, const Magic& m) { out.write(m.data(), m.size()); }

void expect_magic(std::istream& in, const Magic& m) {
  Magic got{};
  in.read(got.data(), got.size());
  if (!in || got != m) {
    throw Error(ErrorCode::kFormat, "bad magic, expected " + std::string(m.begin(), m.end()));
  }
}

void expect_version(std::istream& in) {
  const auto v = get_u32(in);
  if (v != kFormatVersion) throw Error(ErrorCode::kFormat, "unsupported version " + std::to_string(v));
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

void finish(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

void put_pose(std::ostream& out, const Pose2& p) {
  put_f64(out, p.x());
  put_f64(out, p.y());
  put_f64(out, p.yaw());
}

Pose2 get_pose(std::istream& in) {
  const double x = get_f64(in);
  const double y = get_f64(in);
  const double yaw = get_f64(in);
  return {x, y, yaw};
}

}  // namespace

void write_grid(std::ostream& out, const FeatureGrid& grid) {
  put_magic(out, kGridMagic);
  put_u32(out, grid.channels());
  put_u32(out, grid.height());
  put_u32(out, grid.width());
  put_f64(out, grid.resolution());
  for (double v : grid.data()) put_f64(out, v);
}

FeatureGrid read_grid(std::istream& in) {
  expect_magic(in, kGridMagic);
  const std::uint64_t c = get_u32(in);
  const std::uint64_t h = get_u32(in);
  const std::uint64_t w = get_u32(in);
  const double res = get_f64(in);
  if (c * h * w > kMaxElements) throw Error(ErrorCode::kFormat, "grid header too large");
  std::vector<double> data(c * h * w);
  for (double& v : data) v = get_f64(in);
  return FeatureGrid(c, GridGeometry{h, w, res}, std::move(data));
}

void save_grid(const std::filesystem::path& path, const FeatureGrid& grid) {
  auto out = open_out(path);
  write_grid(out, grid);
  finish(out, path);
}

FeatureGrid load_grid(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_grid(in);
}

void write_kernel(std::ostream& out, const ConvKernel& kernel) {
  put_magic(out, kKernelMagic);
  put_u32(out, kernel.out_channels());
  put_u32(out, kernel.in_channels());
  put_u32(out, kernel.kernel_h());
  put_u32(out, kernel.kernel_w());
  for (double v : kernel.weights()) put_f64(out, v);
}

ConvKernel read_kernel(std::istream& in) {
  expect_magic(in, kKernelMagic);
  const std::uint64_t o = get_u32(in);
  const std::uint64_t i = get_u32(in);
  const std::uint64_t kh = get_u32(in);
  const std::uint64_t kw = get_u32(in);
  if (o * i * kh * kw > kMaxElements) throw Error(ErrorCode::kFormat, "kernel header too large");
  std::vector<double> weights(o * i * kh * kw);
  for (double& v : weights) v = get_f64(in);
  return ConvKernel(o, i, kh, kw, std::move(weights));
}

void save_kernel(const std::filesystem::path& path, const ConvKernel& kernel) {
  auto out = open_out(path);
  write_kernel(out, kernel);
  finish(out, path);
}

ConvKernel load_kernel(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_kernel(in);
}

void write_stream(std::ostream& out, const std::vector<FrameInput>& frames) {
  put_magic(out, kStreamMagic);
  put_u32(out, kFormatVersion);
  put_u64(out, frames.size());
  for (const auto& f : frames) {
    write_grid(out, f.grid);
    put_f64(out, f.timestamp);
    put_pose(out, f.ego_pose);
    put_u64(out, f.frame_index);
  }
}

std::vector<FrameInput> read_stream(std::istream& in) {
  expect_magic(in, kStreamMagic);
  expect_version(in);
  const auto count = get_u64(in);
  if (count > kMaxElements) throw Error(ErrorCode::kFormat, "stream header too large");
  std::vector<FrameInput> frames;
  for (std::uint64_t n = 0; n < count; ++n) {
    FrameInput f;
    f.grid = read_grid(in);
    f.timestamp = get_f64(in);
    f.ego_pose = get_pose(in);
    f.frame_index = get_u64(in);
    frames.push_back(std::move(f));
  }
  validate_stream(frames);
  return frames;
}

void save_stream(const std::filesystem::path& path, const std::vector<FrameInput>& frames) {
  auto out = open_out(path);
  write_stream(out, frames);
  finish(out, path);
}

std::vector<FrameInput> load_stream(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_stream(in);
}

void write_state(std::ostream& out, const FusionState& state) {
  put_magic(out, kStateMagic);
  put_u32(out, kFormatVersion);
  write_grid(out, state.memory);
  write_grid(out, state.embedding);
  put_pose(out, state.last_pose);
  put_f64(out, state.last_timestamp);
  put_u64(out, state.frames_seen);
}

FusionState read_state(std::istream& in) {
  expect_magic(in, kStateMagic);
  expect_version(in);
  FusionState s;
  s.memory = read_grid(in);
  s.embedding = read_grid(in);
  s.last_pose = get_pose(in);
  s.last_timestamp = get_f64(in);
  s.frames_seen = get_u64(in);
  return s;
}

std::size_t serialized_state_size(const FusionState& state) {
  std::ostringstream out(std::ios::binary);
  write_state(out, state);
  return out.str().size();
}

void write_channel_csv(std::ostream& out, const FeatureGrid& grid, std::size_t channel) {
  if (channel >= grid.channels()) throw Error(ErrorCode::kShape, "CSV export: bad channel");
  out << "row,col,value\n" << std::setprecision(17);
  for (std::size_t r = 0; r < grid.height(); ++r)
    for (std::size_t c = 0; c < grid.width(); ++c)
      out << r << ',' << c << ',' << grid.at(channel, r, c) << '\n';
}

void write_trajectory_csv(std::ostream& out, const std::vector<FrameInput>& frames) {
  out << "t,x,y,yaw\n" << std::setprecision(17);
  for (const auto& f : frames) {
    out << f.timestamp << ',' << f.ego_pose.x() << ',' << f.ego_pose.y() << ','
        << f.ego_pose.yaw() << '\n';
  }
}

std::vector<TimedPose> read_trajectory_csv(std::istream& in) {
  std::vector<TimedPose> poses;
  std::string line;
  if (!std::getline(in, line) || line != "t,x,y,yaw") {
    throw Error(ErrorCode::kFormat, "trajectory CSV must start with header t,x,y,yaw");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::array<double, 4> v{};
    char sep = 0;
    row >> v[0] >> sep >> v[1] >> sep >> v[2] >> sep >> v[3];
    if (!row) throw Error(ErrorCode::kFormat, "malformed trajectory row: " + line);
    poses.push_back({v[0], Pose2(v[1], v[2], v[3])});
  }
  return poses;
}

}  // namespace bevstream
