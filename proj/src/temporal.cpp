#include "bevstream/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "bevstream/error.hpp"
#include "bevstream/fusion.hpp"
#include "bevstream/random.hpp"

namespace bevstream {

std::size_t TemporalEmbedder::margin() const {
  auto radius = [](const ConvKernel& k) { return std::max(k.radius_h(), k.radius_w()); };
  return radius(layer1) + radius(layer2) + radius(fuse);
}

void TemporalEmbedder::validate() const {
  if (layer1.in_channels() != 1) throw Error(ErrorCode::kShape, "embedder layer1 must read 1 channel");
  if (layer2.in_channels() != layer1.out_channels()) {
    throw Error(ErrorCode::kShape, "embedder layer2 does not chain onto layer1");
  }
  if (fuse.in_channels() != 2 * embed_channels() || fuse.out_channels() != embed_channels()) {
    throw Error(ErrorCode::kShape, "embedder fuse kernel must map 2*embed -> embed channels");
  }
}

FeatureGrid TemporalEmbedder::encode(const FeatureGrid& interval_plane) const {
  return conv2d(conv2d(interval_plane, layer1, activation), layer2);
}

TemporalEmbedder TemporalEmbedder::seeded(std::size_t embed_channels, std::uint64_t seed,
                                          std::size_t kernel_size, Activation activation,
                                          std::size_t readout_channel) {
  if (embed_channels == 0 || readout_channel >= embed_channels) {
    throw Error(ErrorCode::kShape, "embedder needs a readout channel inside embed_channels");
  }
  Rng rng(seed);
  const std::size_t centre = kernel_size / 2;
  const double taps = static_cast<double>(kernel_size * kernel_size);
  std::uniform_real_distribution<double> magnitude(0.5, 1.0);
  std::bernoulli_distribution negative(0.5);

  TemporalEmbedder e;
  e.activation = activation;
  // Spreading each centre weight evenly over the taps keeps the interior
  // response identical to the 1x1 case.
  e.layer1 = ConvKernel(embed_channels, 1, kernel_size, kernel_size);
  for (std::size_t o = 0; o < embed_channels; ++o) {
    const double w = (negative(rng) ? -1.0 : 1.0) * magnitude(rng);
    for (std::size_t dy = 0; dy < kernel_size; ++dy)
      for (std::size_t dx = 0; dx < kernel_size; ++dx) e.layer1.at(o, 0, dy, dx) = w / taps;
  }
  e.layer2 = random_kernel(embed_channels, embed_channels, kernel_size, kernel_size, rng, 0.2);
  for (std::size_t c = 0; c < embed_channels; ++c) e.layer2.at(c, c, centre, centre) += 0.5;

  ConvKernel memory_part = random_kernel(embed_channels, embed_channels, kernel_size, kernel_size, rng, 0.5);
  ConvKernel current_part = random_kernel(embed_channels, embed_channels, kernel_size, kernel_size, rng, 0.2);
  for (std::size_t c = 0; c < embed_channels; ++c) current_part.at(c, c, centre, centre) += 1.0;
  for (std::size_t i = 0; i < embed_channels; ++i)
    for (std::size_t dy = 0; dy < kernel_size; ++dy)
      for (std::size_t dx = 0; dx < kernel_size; ++dx) memory_part.at(readout_channel, i, dy, dx) = 0.0;
  const ConvKernel parts[] = {memory_part, current_part};
  e.fuse = kernel_concat(parts);
  return e;
}

FeatureGrid embed_interval(const TemporalEmbedder& embedder, double dt,
                           const GridGeometry& geometry) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::kInvalidInterval, "interval must be positive, got " + std::to_string(dt));
  }
  embedder.validate();
  return embedder.encode(all_ones(geometry, 1, dt));
}

EmbeddingState embed_step(const EmbeddingState& state, const TemporalEmbedder& embedder, double dt) {
  FeatureGrid current = embed_interval(embedder, dt, state.embedding.geometry());
  if (!state.embedding.same_shape(current)) {
    throw Error(ErrorCode::kShape, "embedding state does not match the embedder output");
  }
  return {conv2d(channel_concat(state.embedding, current), embedder.fuse)};
}

double IntervalDecoder::decode(const FeatureGrid& embedding) const {
  return (interior_mean(embedding, channel, margin) - intercept) / slope;
}

IntervalDecoder calibrate_interval_decoder(const TemporalEmbedder& embedder,
                                           const GridGeometry& geometry, std::size_t channel,
                                           std::span<const double> intervals) {
  if (intervals.size() < 2) throw Error(ErrorCode::kCalibration, "need at least two intervals");
  if (channel >= embedder.embed_channels()) {
    throw Error(ErrorCode::kCalibration, "readout channel outside the embedding");
  }
  IntervalDecoder decoder;
  decoder.channel = channel;
  decoder.margin = embedder.margin();

  const auto zero = EmbeddingState::zero(geometry, embedder.embed_channels());
  std::vector<double> y;
  for (double dt : intervals) {
    y.push_back(interior_mean(embed_step(zero, embedder, dt).embedding, channel, decoder.margin));
  }
  const double n = static_cast<double>(intervals.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mx += intervals[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxx += (intervals[i] - mx) * (intervals[i] - mx);
    sxy += (intervals[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 1e-24)) {
    throw Error(ErrorCode::kCalibration, "embedding channel " + std::to_string(channel) +
                                             " does not vary with the interval");
  }
  decoder.slope = sxy / sxx;
  decoder.intercept = my - decoder.slope * mx;
  return decoder;
}

double readout_interval(const FeatureGrid& embedding, IntervalMode mode, const VelocityHead& head) {
  if (mode == IntervalMode::kFixed) return head.nominal_interval;
  return head.decoder.decode(embedding);
}

namespace {

struct Centroid {
  double col = 0.0;
  double row = 0.0;
  double mass = 0.0;
};

Centroid window_centroid(const FeatureGrid& grid, std::size_t channel,
                         const std::array<double, 2>& cell, std::size_t window) {
  const auto clamp_index = [](double v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n) - 1.0));
  };
  const double half = static_cast<double>(window);
  const std::size_t c0 = clamp_index(std::floor(cell[0] - half), grid.width());
  const std::size_t c1 = clamp_index(std::ceil(cell[0] + half), grid.width());
  const std::size_t r0 = clamp_index(std::floor(cell[1] - half), grid.height());
  const std::size_t r1 = clamp_index(std::ceil(cell[1] + half), grid.height());
  Centroid out;
  for (std::size_t r = r0; r <= r1; ++r) {
    for (std::size_t c = c0; c <= c1; ++c) {
      const double v = std::max(0.0, grid.at(channel, r, c));
      out.mass += v;
      out.col += v * static_cast<double>(c);
      out.row += v * static_cast<double>(r);
    }
  }
  if (out.mass > 0.0) {
    out.col /= out.mass;
    out.row /= out.mass;
  }
  return out;
}

}  // namespace

std::vector<std::array<double, 2>> velocity_readout(const FeatureGrid& memory,
                                                    const FeatureGrid& embedding,
                                                    std::span<const VelocityQuery> queries,
                                                    IntervalMode mode, const VelocityHead& head) {
  const double dt = readout_interval(embedding, mode, head);
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kCalibration, "decoded interval is not positive");
  }
  std::vector<std::array<double, 2>> velocities;
  velocities.reserve(queries.size());
  for (const auto& q : queries) {
    if (q.current_channel >= memory.channels() || q.previous_channel >= memory.channels()) {
      throw Error(ErrorCode::kShape, "velocity query channel out of range");
    }
    if (q.cell[0] < 0.0 || q.cell[1] < 0.0 || q.cell[0] > static_cast<double>(memory.width() - 1) ||
        q.cell[1] > static_cast<double>(memory.height() - 1)) {
      throw Error(ErrorCode::kShape, "velocity query cell outside the grid");
    }
    const auto now = window_centroid(memory, q.current_channel, q.cell, head.window);
    const auto before = window_centroid(memory, q.previous_channel, q.cell, head.window);
    if (now.mass <= 0.0 || before.mass <= 0.0) {
      constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
      velocities.push_back({kNaN, kNaN});
      continue;
    }
    const double res = memory.resolution();
    velocities.push_back({(now.col - before.col) * res / dt, (now.row - before.row) * res / dt});
  }
  return velocities;
}

FrameDropConfig FrameDropConfig::defaults() {
  FrameDropConfig c;
  c.scene.duration = 10.0;
  c.scene.nominal_interval = 0.5;
  c.scene.geometry = GridGeometry{128, 128, 0.8};
  c.scene.ego.segments = {EgoSegment{10.0, 1.0, 0.0, 0.0}};
  return c;
}

SceneConfig frame_drop_scene(const FrameDropConfig& config, std::uint64_t seed) {
  SceneConfig scene = config.scene;
  scene.seed = seed;
  scene.channels = 2 * config.object_count;
  scene.objects.clear();
  std::seed_seq seq{seed, std::uint64_t{0x5ce7e}};
  Rng rng(seq);
  std::uniform_real_distribution<double> spawn(-config.spawn_half_extent, config.spawn_half_extent);
  std::uniform_real_distribution<double> speed(config.min_speed, config.max_speed);
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
  const Pose2 start = scene.ego.pose_at(0.0);
  for (std::size_t o = 0; o < config.object_count; ++o) {
    ObjectSpec obj;
    obj.position = start.apply(spawn(rng), spawn(rng));
    const double v = speed(rng);
    const double h = heading(rng);
    obj.velocity = {v * std::cos(h), v * std::sin(h)};
    obj.channel = 2 * o;
    scene.objects.push_back(obj);
  }
  return scene;
}

RecurrentKernels displacement_kernels(std::size_t objects) {
  RecurrentKernels k;
  k.v_cur = ConvKernel(2 * objects, 2 * objects, 1, 1);
  k.v_mem = ConvKernel(2 * objects, 2 * objects, 1, 1);
  for (std::size_t o = 0; o < objects; ++o) {
    k.v_cur.at(2 * o, 2 * o, 0, 0) = 1.0;
    k.v_mem.at(2 * o + 1, 2 * o, 0, 0) = 1.0;
  }
  return k;
}

std::vector<FrameDropRow> run_frame_drop_experiment(const FrameDropConfig& config,
                                                    std::uint64_t seed) {
  for (double fmr : config.fmr_grid) {
    if (!(fmr >= 0.0 && fmr < 1.0)) {
      throw Error(ErrorCode::kInvalidRate, "frame missing rate must lie in [0, 1)");
    }
  }
  if (config.object_count == 0) throw Error(ErrorCode::kConfig, "object_count must be >= 1");

  const SceneConfig scene = frame_drop_scene(config, seed);
  const auto full_stream = simulate(scene);
  const auto& geometry = scene.geometry;
  const auto embedder = TemporalEmbedder::seeded(config.embed_channels, config.embedder_seed);
  VelocityHead head{scene.nominal_interval, config.window,
                    calibrate_interval_decoder(embedder, geometry, 0)};
  const auto kernels = displacement_kernels(config.object_count);

  std::seed_seq drop_seq{seed, std::uint64_t{0xd409}};
  std::array<std::uint32_t, 2> words{};
  drop_seq.generate(words.begin(), words.end());
  const std::uint64_t drop_seed = (std::uint64_t{words[0]} << 32) | words[1];

  std::vector<FrameDropRow> rows;
  for (double fmr : config.fmr_grid) {
    const auto stream = drop_frames(full_stream, fmr, drop_seed);
    RecurrentFuser fuser(kernels, geometry);
    auto embedding = EmbeddingState::zero(geometry, config.embed_channels);

    double err_fixed = 0.0;
    double err_embedded = 0.0;
    std::size_t samples = 0;
    for (std::size_t i = 0; i < stream.size(); ++i) {
      const auto& frame = stream[i];
      const double dt = i == 0 ? scene.nominal_interval : frame.timestamp - stream[i - 1].timestamp;
      const FeatureGrid& memory = fuser.step(frame);
      embedding = embed_step(embedding, embedder, dt);
      if (i == 0) continue;

      std::vector<VelocityQuery> queries;
      std::vector<std::array<double, 2>> truth;
      const double c = std::cos(frame.ego_pose.yaw());
      const double s = std::sin(frame.ego_pose.yaw());
      for (std::size_t o = 0; o < scene.objects.size(); ++o) {
        const auto& obj = scene.objects[o];
        const auto cell = world_to_cell(frame.ego_pose, geometry, obj.position_at(frame.timestamp));
        if (cell[0] < 0.0 || cell[1] < 0.0 || cell[0] > static_cast<double>(geometry.width - 1) ||
            cell[1] > static_cast<double>(geometry.height - 1)) {
          continue;
        }
        queries.push_back({cell, 2 * o, 2 * o + 1});
        truth.push_back({c * obj.velocity[0] + s * obj.velocity[1],
                         -s * obj.velocity[0] + c * obj.velocity[1]});
      }
      const auto fixed = velocity_readout(memory, embedding.embedding, queries, IntervalMode::kFixed, head);
      const auto embedded =
          velocity_readout(memory, embedding.embedding, queries, IntervalMode::kEmbedded, head);
      for (std::size_t q = 0; q < queries.size(); ++q) {
        if (std::isnan(fixed[q][0]) || std::isnan(embedded[q][0])) continue;
        err_fixed += std::hypot(fixed[q][0] - truth[q][0], fixed[q][1] - truth[q][1]);
        err_embedded += std::hypot(embedded[q][0] - truth[q][0], embedded[q][1] - truth[q][1]);
        ++samples;
      }
    }
    FrameDropRow row;
    row.fmr = fmr;
    row.seed = seed;
    row.samples = samples;
    if (samples > 0) {
      row.ave_fixed = err_fixed / static_cast<double>(samples);
      row.ave_embedded = err_embedded / static_cast<double>(samples);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bevstream
