#include "bevstream/config.hpp"

#include <cstdio>
#include <fstream>
#include <limits>

#include "bevstream/error.hpp"
#include "bevstream/io.hpp"
#include "bevstream/random.hpp"

namespace bevstream {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("key '") + key + "': " + e.what());
  }
}

const Json& section(const Json& j, const char* key) {
  static const Json kEmpty = Json::object();
  if (!j.is_object() || !j.contains(key)) return kEmpty;
  const Json& s = j.at(key);
  if (!s.is_object()) throw Error(ErrorCode::kConfig, std::string("'") + key + "' must be an object");
  return s;
}

std::array<double, 2> pair_or(const Json& j, const char* key, std::array<double, 2> fallback) {
  const auto v = get_or<std::vector<double>>(j, key, {fallback[0], fallback[1]});
  if (v.size() != 2) throw Error(ErrorCode::kConfig, std::string("'") + key + "' needs 2 numbers");
  return {v[0], v[1]};
}

Activation activation_from(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw Error(ErrorCode::kConfig, "unknown activation '" + name + "'");
}

double time_or(const Json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get_or<double>(j, key, fallback);
}

}  // namespace

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config " + path.string());
  try {
    Json j = Json::parse(in);
    if (!j.is_object()) throw Error(ErrorCode::kConfig, "config root must be an object");
    return j;
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::kUsage, "override must look like key=value: " + assignment);
  }
  std::string pointer = "/" + assignment.substr(0, eq);
  for (char& ch : pointer) {
    if (ch == '.') ch = '/';
  }
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  config[Json::json_pointer(pointer)] = value;
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SceneConfig scene_from_json(const Json& j) {
  SceneConfig s;
  s.duration = get_or(j, "duration", s.duration);
  s.nominal_interval = get_or(j, "nominal_interval", s.nominal_interval);
  s.channels = get_or(j, "channels", s.channels);
  s.feature_noise = get_or(j, "feature_noise", s.feature_noise);
  s.seed = get_or(j, "seed", s.seed);
  const Json& grid = section(j, "grid");
  s.geometry.height = get_or(grid, "height", s.geometry.height);
  s.geometry.width = get_or(grid, "width", s.geometry.width);
  s.geometry.resolution = get_or(grid, "resolution", s.geometry.resolution);

  const Json& ego = section(j, "ego");
  const auto initial = get_or<std::vector<double>>(ego, "initial", {0.0, 0.0, 0.0});
  if (initial.size() != 3) throw Error(ErrorCode::kConfig, "ego.initial needs [x, y, yaw]");
  s.ego.initial = Pose2(initial[0], initial[1], initial[2]);
  if (ego.contains("segments")) {
    for (const auto& seg : ego.at("segments")) {
      EgoSegment e;
      e.duration = get_or(seg, "duration", e.duration);
      e.forward = get_or(seg, "forward", e.forward);
      e.lateral = get_or(seg, "lateral", e.lateral);
      e.yaw_rate = get_or(seg, "yaw_rate", e.yaw_rate);
      s.ego.segments.push_back(e);
    }
  }
  if (j.contains("objects")) {
    for (const auto& o : j.at("objects")) {
      ObjectSpec obj;
      obj.position = pair_or(o, "position", obj.position);
      obj.velocity = pair_or(o, "velocity", obj.velocity);
      obj.radius = get_or(o, "radius", obj.radius);
      obj.channel = get_or(o, "channel", obj.channel);
      obj.amplitude = get_or(o, "amplitude", obj.amplitude);
      obj.visible_from = time_or(o, "visible_from", obj.visible_from);
      obj.visible_until = time_or(o, "visible_until", obj.visible_until);
      s.objects.push_back(obj);
    }
  }
  return s;
}

Json scene_to_json(const SceneConfig& scene) {
  Json j;
  j["duration"] = scene.duration;
  j["nominal_interval"] = scene.nominal_interval;
  j["channels"] = scene.channels;
  j["feature_noise"] = scene.feature_noise;
  j["seed"] = scene.seed;
  j["grid"] = {{"height", scene.geometry.height},
               {"width", scene.geometry.width},
               {"resolution", scene.geometry.resolution}};
  j["ego"]["initial"] = {scene.ego.initial.x(), scene.ego.initial.y(), scene.ego.initial.yaw()};
  j["ego"]["segments"] = Json::array();
  for (const auto& seg : scene.ego.segments) {
    j["ego"]["segments"].push_back({{"duration", seg.duration},
                                    {"forward", seg.forward},
                                    {"lateral", seg.lateral},
                                    {"yaw_rate", seg.yaw_rate}});
  }
  j["objects"] = Json::array();
  for (const auto& o : scene.objects) {
    Json obj{{"position", {o.position[0], o.position[1]}},
             {"velocity", {o.velocity[0], o.velocity[1]}},
             {"radius", o.radius},
             {"channel", o.channel},
             {"amplitude", o.amplitude}};
    if (std::isfinite(o.visible_from)) obj["visible_from"] = o.visible_from;
    if (std::isfinite(o.visible_until)) obj["visible_until"] = o.visible_until;
    j["objects"].push_back(obj);
  }
  return j;
}

FusionSettings fusion_from_json(const Json& j) {
  FusionSettings f;
  f.kernel_size = get_or(j, "kernel_size", f.kernel_size);
  f.memory_channels = get_or(j, "memory_channels", f.memory_channels);
  f.memory_gain = get_or(j, "memory_gain", f.memory_gain);
  f.current_gain = get_or(j, "current_gain", f.current_gain);
  f.activation = activation_from(get_or<std::string>(j, "activation", "identity"));
  f.v_mem_path = get_or<std::string>(j, "v_mem", "");
  f.v_cur_path = get_or<std::string>(j, "v_cur", "");
  return f;
}

RecurrentKernels make_recurrent_kernels(const FusionSettings& settings, std::size_t frame_channels,
                                        std::size_t memory_channels, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t ks = settings.kernel_size;
  RecurrentKernels k;
  k.v_mem = settings.v_mem_path.empty()
                ? random_kernel(memory_channels, memory_channels, ks, ks, rng, settings.memory_gain)
                : load_kernel(settings.v_mem_path);
  k.v_cur = settings.v_cur_path.empty()
                ? random_kernel(memory_channels, frame_channels, ks, ks, rng, settings.current_gain)
                : load_kernel(settings.v_cur_path);
  k.activation = settings.activation;
  return k;
}

CheckSettings check_from_json(const Json& j) {
  CheckSettings c;
  c.seeds = get_or(j, "seeds", c.seeds);
  c.max_length = get_or(j, "max_length", c.max_length);
  c.max_window = get_or(j, "max_window", c.max_window);
  c.channels = get_or(j, "channels", c.channels);
  c.height = get_or(j, "height", c.height);
  c.width = get_or(j, "width", c.width);
  c.kernel_size = get_or(j, "kernel_size", c.kernel_size);
  c.max_step = get_or(j, "max_step", c.max_step);
  c.suites = get_or(j, "suites", c.suites);
  return c;
}

FrameDropSettings framedrop_from_json(const Json& j) {
  FrameDropSettings s;
  auto& e = s.experiment;
  s.seeds = get_or(j, "seeds", s.seeds);
  e.fmr_grid = get_or(j, "fmr_grid", e.fmr_grid);
  e.object_count = get_or(j, "object_count", e.object_count);
  e.min_speed = get_or(j, "min_speed", e.min_speed);
  e.max_speed = get_or(j, "max_speed", e.max_speed);
  e.spawn_half_extent = get_or(j, "spawn_half_extent", e.spawn_half_extent);
  e.embed_channels = get_or(j, "embed_channels", e.embed_channels);
  e.embedder_seed = get_or(j, "embedder_seed", e.embedder_seed);
  e.window = get_or(j, "window", e.window);
  if (j.is_object() && j.contains("scene")) e.scene = scene_from_json(j.at("scene"));
  return s;
}

BenchSettings bench_from_json(const Json& j) {
  BenchSettings b;
  if (j.is_object() && j.contains("modes")) {
    b.modes.clear();
    for (const auto& m : get_or<std::vector<std::string>>(j, "modes", {})) {
      b.modes.push_back(parse_fusion_mode(m));
    }
  }
  b.windows = get_or(j, "windows", b.windows);
  b.channels = get_or(j, "channels", b.channels);
  b.height = get_or(j, "height", b.height);
  b.width = get_or(j, "width", b.width);
  b.kernel_size = get_or(j, "kernel_size", b.kernel_size);
  b.extra_frames = get_or(j, "extra_frames", b.extra_frames);
  b.repetitions = get_or(j, "repetitions", b.repetitions);
  return b;
}

}  // namespace bevstream
