#include "bevstream/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "bevstream/error.hpp"
#include "bevstream/fusion.hpp"
#include "bevstream/random.hpp"

namespace bevstream {

std::string_view to_string(FusionMode mode) {
  return mode == FusionMode::kRecurrent ? "recurrent" : "parallel";
}

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "recurrent") return FusionMode::kRecurrent;
  if (text == "parallel") return FusionMode::kParallel;
  throw Error(ErrorCode::kConfig, "unknown fusion mode '" + std::string(text) + "'");
}

std::size_t expected_state_bytes(FusionMode mode, std::size_t window, std::size_t channels,
                                 const GridGeometry& geometry) {
  const std::size_t grid = channels * geometry.height * geometry.width * sizeof(double);
  return mode == FusionMode::kRecurrent ? grid : grid * window;
}

std::size_t fusion_parameter_count(FusionMode mode, std::size_t window, std::size_t channels,
                                   std::size_t kernel_size) {
  const std::size_t per_block = channels * channels * kernel_size * kernel_size;
  return mode == FusionMode::kRecurrent ? 2 * per_block : window * per_block;
}

double percentile(std::vector<double> sample, double q) {
  if (sample.empty()) return 0.0;
  std::sort(sample.begin(), sample.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sample.size())));
  return sample[std::clamp<std::size_t>(rank, 1, sample.size()) - 1];
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

class Workload {
 public:
  explicit Workload(const BenchConfig& config) : config_(config) {
    Rng rng(config.seed);
    for (int i = 0; i < kPoolSize; ++i) {
      pool_.push_back(random_grid(config.channels, config.geometry, rng));
    }
  }

  FrameInput frame(std::size_t n) const {
    FrameInput f;
    f.grid = pool_[n % pool_.size()];
    f.timestamp = 0.5 * static_cast<double>(n);
    f.ego_pose = Pose2(config_.ego_step * static_cast<double>(n), 0.0, 0.0);
    f.frame_index = n;
    return f;
  }

 private:
  static constexpr int kPoolSize = 4;
  BenchConfig config_;
  std::vector<FeatureGrid> pool_;
};

}  // namespace

BenchReport bench_fusion(const BenchConfig& config) {
  if (config.window == 0) throw Error(ErrorCode::kInsufficientFrames, "window must be >= 1");
  if (config.frames < config.window) {
    throw Error(ErrorCode::kInsufficientFrames, "frames (" + std::to_string(config.frames) +
                                                    ") < window (" +
                                                    std::to_string(config.window) + ")");
  }
  if (config.mode == FusionMode::kRecurrent && config.frames < 2) {
    throw Error(ErrorCode::kInsufficientFrames, "recurrent bench needs at least two frames");
  }
  if (config.repetitions == 0) throw Error(ErrorCode::kConfig, "repetitions must be >= 1");

  const Workload workload(config);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t c = config.channels;
  const std::size_t ks = config.kernel_size;

  BenchReport report;
  report.mode = config.mode;
  report.window = config.window;
  report.params = fusion_parameter_count(config.mode, config.window, c, ks);

  std::vector<double> latencies;
  if (config.mode == FusionMode::kRecurrent) {
    RecurrentKernels kernels{random_kernel(c, c, ks, ks, rng, 0.5),
                             random_kernel(c, c, ks, ks, rng, 1.0)};
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      RecurrentFuser fuser(kernels, config.geometry);
      fuser.step(workload.frame(0));
      for (std::size_t n = 1; n < config.frames; ++n) {
        const FrameInput f = workload.frame(n);
        const auto start = Clock::now();
        fuser.step(f);
        latencies.push_back(seconds_since(start));
      }
      report.state_bytes = fuser.state().memory.byte_size();
    }
  } else {
    ParallelFuser fuser(random_kernel(c, config.window * c, ks, ks, rng, 1.0), config.window);
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      ParallelFuser run = fuser;
      std::size_t n = 0;
      for (; n < config.window; ++n) run.push(workload.frame(n));
      (void)run.fuse();
      auto start = Clock::now();
      (void)run.fuse();
      latencies.push_back(seconds_since(start));
      for (; n < config.frames; ++n) {
        run.push(workload.frame(n));
        start = Clock::now();
        (void)run.fuse();
        latencies.push_back(seconds_since(start));
      }
      report.state_bytes = run.retained_bytes();
    }
  }

  report.frames = latencies.size();
  report.lat_mean_s =
      std::accumulate(latencies.begin(), latencies.end(), 0.0) / static_cast<double>(latencies.size());
  report.lat_p50_s = percentile(latencies, 0.50);
  report.lat_p95_s = percentile(latencies, 0.95);
  return report;
}

void emit_report_csv(std::ostream& out, std::span<const BenchReport> reports) {
  out << kBenchCsvHeader << '\n';
  out << std::setprecision(9);
  for (const auto& r : reports) {
    out << to_string(r.mode) << ',' << r.window << ',' << r.frames << ',' << r.lat_mean_s << ','
        << r.lat_p50_s << ',' << r.lat_p95_s << ',' << r.state_bytes << ',' << r.params << '\n';
  }
}

void emit_report_json(std::ostream& out, std::span<const BenchReport> reports) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : reports) {
    rows.push_back({{"mode", to_string(r.mode)},
                    {"k", r.window},
                    {"frames", r.frames},
                    {"lat_mean_s", r.lat_mean_s},
                    {"lat_p50_s", r.lat_p50_s},
                    {"lat_p95_s", r.lat_p95_s},
                    {"state_bytes", r.state_bytes},
                    {"params", r.params}});
  }
  out << rows.dump(2) << '\n';
}

std::vector<BenchReport> parse_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kBenchCsvHeader) {
    throw Error(ErrorCode::kFormat, "bench CSV header mismatch");
  }
  std::vector<BenchReport> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    if (cells.size() != 8) throw Error(ErrorCode::kFormat, "bench CSV row needs 8 fields: " + line);
    try {
      BenchReport r;
      r.mode = parse_fusion_mode(cells[0]);
      r.window = std::stoull(cells[1]);
      r.frames = std::stoull(cells[2]);
      r.lat_mean_s = std::stod(cells[3]);
      r.lat_p50_s = std::stod(cells[4]);
      r.lat_p95_s = std::stod(cells[5]);
      r.state_bytes = std::stoull(cells[6]);
      r.params = std::stoull(cells[7]);
      reports.push_back(r);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kFormat, "malformed bench CSV row: " + line);
    }
  }
  return reports;
}

std::string summarize_reports(std::span<const BenchReport> reports) {
  std::ostringstream out;
  out << "Fusion-module benchmark (fusion call only; backbone and heads excluded)\n";
  out << std::left << std::setw(10) << "mode" << std::setw(5) << "k" << std::setw(14)
      << "mean ms" << std::setw(14) << "p95 ms" << std::setw(14) << "state MiB" << "params\n";
  out << std::fixed;
  for (const auto& r : reports) {
    out << std::setw(10) << to_string(r.mode) << std::setw(5) << r.window << std::setw(14)
        << std::setprecision(3) << r.lat_mean_s * 1e3 << std::setw(14) << r.lat_p95_s * 1e3
        << std::setw(14) << std::setprecision(2)
        << static_cast<double>(r.state_bytes) / (1024.0 * 1024.0) << r.params << '\n';
  }
  return out.str();
}

}  // namespace bevstream
