#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bevstream/geometry.hpp"

namespace bevstream {

enum class FusionMode { kRecurrent, kParallel };

std::string_view to_string(FusionMode mode);
/// Accepts "recurrent" or "parallel"; throws ErrorCode::kConfig otherwise.
FusionMode parse_fusion_mode(std::string_view text);

struct BenchConfig {
  FusionMode mode = FusionMode::kRecurrent;
  std::size_t window = 2;   // k
  std::size_t frames = 8;   // streamed frames, warm-up included
  std::size_t channels = 80;
  GridGeometry geometry{128, 128, 0.8};
  std::size_t kernel_size = 3;
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;
  double ego_step = 0.5;  // meters of forward ego motion per frame
};

struct BenchReport {
  FusionMode mode = FusionMode::kRecurrent;
  std::size_t window = 0;
  std::size_t frames = 0;  // timed frames over all repetitions
  double lat_mean_s = 0.0;
  double lat_p50_s = 0.0;
  double lat_p95_s = 0.0;
  std::size_t state_bytes = 0;
  std::size_t params = 0;
};

/// channels * H * W * sizeof(double) * (1 for recurrent, k for parallel).
std::size_t expected_state_bytes(FusionMode mode, std::size_t window, std::size_t channels,
                                 const GridGeometry& geometry);
std::size_t fusion_parameter_count(FusionMode mode, std::size_t window, std::size_t channels,
                                   std::size_t kernel_size);

/// Times the fusion call only, on a seeded synthetic stream. Parallel mode
/// first fills its window and runs one untimed fuse; recurrent mode runs
/// its first (zero-memory) step untimed. State bytes come from the grids
/// the fuser retains between frames.
BenchReport bench_fusion(const BenchConfig& config);

inline constexpr std::string_view kBenchCsvHeader =
    "mode,k,frames,lat_mean_s,lat_p50_s,lat_p95_s,state_bytes,params";

void emit_report_csv(std::ostream& out, std::span<const BenchReport> reports);
void emit_report_json(std::ostream& out, std::span<const BenchReport> reports);
std::vector<BenchReport> parse_report_csv(std::istream& in);
std::string summarize_reports(std::span<const BenchReport> reports);

/// Nearest-rank percentile of an unsorted sample, q in [0, 1].
double percentile(std::vector<double> sample, double q);

}  // namespace bevstream
