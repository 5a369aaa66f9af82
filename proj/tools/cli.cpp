#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "bevstream/bench.hpp"
#include "bevstream/checks.hpp"
#include "bevstream/config.hpp"
#include "bevstream/error.hpp"
#include "bevstream/io.hpp"
#include "bevstream/parallel.hpp"
#include "bevstream/sim.hpp"
#include "bevstream/temporal.hpp"

namespace bevstream::cli {

namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string config_path;
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  std::string out_dir = "out";
  bool json = false;
  std::vector<std::string> overrides;
  // subcommand specific
  std::string stream_path;
  std::vector<std::string> suites;
  bool suites_given = false;
  bool inject_fault = false;
};

struct Run {
  std::string command;
  Json config;
  std::uint64_t seed = kDefaultSeed;
  fs::path out_dir;
  std::vector<std::string> outputs;
  bool json = false;
};

const Json& section(const Json& config, const char* key) {
  static const Json kEmpty = Json::object();
  return config.contains(key) ? config.at(key) : kEmpty;
}

Run prepare(const std::string& command, const RunOptions& opt) {
  Run run;
  run.command = command;
  run.config = Json::object();
  if (!opt.config_path.empty()) {
    if (!fs::is_regular_file(opt.config_path)) {
      throw Error(ErrorCode::kUsage, "config file not found: " + opt.config_path);
    }
    run.config = load_config_file(opt.config_path);
  }
  for (const auto& o : opt.overrides) apply_override(run.config, o);
  if (opt.seed_given) {
    run.config["seed"] = opt.seed;
  } else if (!run.config.contains("seed")) {
    run.config["seed"] = kDefaultSeed;
  }
  try {
    run.seed = run.config.at("seed").get<std::uint64_t>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::kConfig, "seed must be a non-negative integer");
  }
  run.out_dir = opt.out_dir;
  run.json = opt.json;
  std::error_code ec;
  fs::create_directories(run.out_dir, ec);
  if (ec || !fs::is_directory(run.out_dir)) {
    throw Error(ErrorCode::kIo, "cannot create output directory " + run.out_dir.string());
  }
  return run;
}

void write_text(Run& run, const std::string& name, const std::string& text) {
  const fs::path path = run.out_dir / name;
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  run.outputs.push_back(name);
}

void write_manifest(Run& run) {
  Json m;
  m["tool"] = "bevstream";
  m["command"] = run.command;
  m["seed"] = run.seed;
  m["config_hash"] = config_hash(run.config);
  m["config"] = run.config;
  m["outputs"] = run.outputs;
  m["versions"] = {
      {"bevstream", BEVSTREAM_VERSION},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                    "." + std::to_string(EIGEN_MINOR_VERSION)},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  const fs::path path = run.out_dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  out << m.dump(2) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

SceneConfig scene_for(const Run& run) {
  SceneConfig scene = scene_from_json(section(run.config, "scene"));
  if (!section(run.config, "scene").contains("seed")) scene.seed = run.seed;
  return scene;
}

int cmd_simulate(const RunOptions& opt, std::ostream& out) {
  Run run = prepare("simulate", opt);
  const SceneConfig scene = scene_for(run);
  const auto frames = simulate(scene);
  std::ostringstream stream;
  write_stream(stream, frames);
  write_text(run, "stream.bevs", stream.str());
  std::ostringstream traj;
  write_trajectory_csv(traj, frames);
  write_text(run, "trajectory.csv", traj.str());
  write_manifest(run);
  out << "simulate: " << frames.size() << " frames -> " << (run.out_dir / "stream.bevs").string()
      << '\n';
  return kExitOk;
}

int cmd_replay(const RunOptions& opt, std::ostream& out) {
  if (opt.stream_path.empty()) throw Error(ErrorCode::kUsage, "replay needs --stream PATH");
  Run run = prepare("replay", opt);
  run.config["replay_stream"] = fs::path(opt.stream_path).filename().string();
  const auto frames = load_stream(opt.stream_path);
  if (frames.empty()) throw Error(ErrorCode::kEmptyStream, "stream has no frames");
  const FusionSettings fusion = fusion_from_json(section(run.config, "fusion"));
  const std::size_t frame_ch = frames.front().grid.channels();
  const std::size_t mem_ch = fusion.memory_channels == 0 ? frame_ch : fusion.memory_channels;
  RecurrentFuser fuser(make_recurrent_kernels(fusion, frame_ch, mem_ch, run.seed),
                       frames.front().grid.geometry());
  std::ostringstream csv;
  csv << "frame_index,t,memory_energy\n" << std::setprecision(17);
  for (const auto& f : frames) {
    const auto& memory = fuser.step(f);
    double energy = 0.0;
    for (double v : memory.data()) energy += v * v;
    csv << f.frame_index << ',' << f.timestamp << ',' << energy << '\n';
  }
  write_text(run, "replay.csv", csv.str());
  std::ostringstream memory;
  write_grid(memory, fuser.state().memory);
  write_text(run, "memory.bevg", memory.str());
  std::ostringstream state;
  write_state(state, fuser.state());
  write_text(run, "state.bevf", state.str());
  write_manifest(run);
  out << "replay: fused " << frames.size() << " frames, state " << serialized_state_size(fuser.state())
      << " bytes\n";
  return kExitOk;
}

int cmd_check(const RunOptions& opt, std::ostream& out) {
  Run run = prepare("check", opt);
  CheckSettings settings = check_from_json(section(run.config, "check"));
  if (opt.suites_given) settings.suites = opt.suites;
  if (settings.suites.empty()) throw Error(ErrorCode::kUsage, "no check suites selected");
  for (const auto& s : settings.suites) {
    if (s != "oracle" && s != "split") throw Error(ErrorCode::kUsage, "unknown suite '" + s + "'");
  }
  if (opt.inject_fault) run.config["inject_fault"] = true;

  std::vector<CheckResult> results;
  for (const auto& s : settings.suites) {
    auto r = s == "oracle" ? run_oracle_suite(settings, run.seed, opt.inject_fault)
                           : run_split_suite(settings, run.seed);
    results.insert(results.end(), r.begin(), r.end());
  }
  std::size_t failed = 0;
  double worst = 0.0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.suite << " seed=" << r.seed
        << (r.suite == "oracle" ? " length=" : " k=") << r.param << " residual=" << std::scientific
        << std::setprecision(3) << r.residual << std::defaultfloat << '\n';
    failed += r.passed ? 0 : 1;
    worst = std::max(worst, r.residual);
  }
  std::ostringstream body;
  if (run.json) {
    Json rows = Json::array();
    for (const auto& r : results) {
      rows.push_back({{"suite", r.suite},
                      {"seed", r.seed},
                      {"param", r.param},
                      {"residual", r.residual},
                      {"pass", r.passed}});
    }
    body << rows.dump(2) << '\n';
    write_text(run, "check.json", body.str());
  } else {
    body << "suite,seed,param,residual,pass\n" << std::setprecision(17);
    for (const auto& r : results) {
      body << r.suite << ',' << r.seed << ',' << r.param << ',' << r.residual << ','
           << (r.passed ? 1 : 0) << '\n';
    }
    write_text(run, "check.csv", body.str());
  }
  write_manifest(run);
  out << "check: " << results.size() - failed << "/" << results.size()
      << " passed, worst residual " << std::scientific << std::setprecision(3) << worst
      << std::defaultfloat << '\n';
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

int cmd_framedrop(const RunOptions& opt, std::ostream& out) {
  Run run = prepare("framedrop", opt);
  const FrameDropSettings settings = framedrop_from_json(section(run.config, "framedrop"));
  std::vector<std::vector<FrameDropRow>> per_seed(settings.seeds);
  parallel_for(settings.seeds, [&](std::size_t s) {
    per_seed[s] = run_frame_drop_experiment(settings.experiment, run.seed + s);
  });
  std::ostringstream body;
  if (run.json) {
    Json rows = Json::array();
    for (const auto& rows_for_seed : per_seed) {
      for (const auto& r : rows_for_seed) {
        rows.push_back({{"fmr", r.fmr}, {"mode", "fixed"}, {"ave_mps", r.ave_fixed}, {"seed", r.seed}});
        rows.push_back(
            {{"fmr", r.fmr}, {"mode", "embedded"}, {"ave_mps", r.ave_embedded}, {"seed", r.seed}});
      }
    }
    body << rows.dump(2) << '\n';
    write_text(run, "framedrop.json", body.str());
  } else {
    body << "fmr,mode,ave_mps,seed\n" << std::setprecision(17);
    for (const auto& rows_for_seed : per_seed) {
      for (const auto& r : rows_for_seed) {
        body << r.fmr << ",fixed," << r.ave_fixed << ',' << r.seed << '\n';
        body << r.fmr << ",embedded," << r.ave_embedded << ',' << r.seed << '\n';
      }
    }
    write_text(run, "framedrop.csv", body.str());
  }
  write_manifest(run);

  out << "framedrop: mean AVE over " << settings.seeds << " seeds (m/s)\n";
  out << "  fmr     fixed     embedded\n";
  const auto& grid = settings.experiment.fmr_grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double fixed = 0.0, embedded = 0.0;
    for (const auto& rows_for_seed : per_seed) {
      fixed += rows_for_seed[i].ave_fixed;
      embedded += rows_for_seed[i].ave_embedded;
    }
    const double n = static_cast<double>(per_seed.size());
    out << "  " << std::fixed << std::setprecision(2) << grid[i] << std::setw(10)
        << std::setprecision(4) << fixed / n << std::setw(13) << embedded / n << std::defaultfloat
        << '\n';
  }
  return kExitOk;
}

int cmd_bench(const RunOptions& opt, std::ostream& out) {
  Run run = prepare("bench", opt);
  const BenchSettings settings = bench_from_json(section(run.config, "bench"));
  std::vector<BenchReport> reports;
  for (const auto mode : settings.modes) {
    for (const std::size_t k : settings.windows) {
      BenchConfig c;
      c.mode = mode;
      c.window = k;
      c.frames = k + settings.extra_frames;
      c.channels = settings.channels;
      c.geometry = GridGeometry{settings.height, settings.width, 0.8};
      c.kernel_size = settings.kernel_size;
      c.repetitions = settings.repetitions;
      c.seed = run.seed;
      reports.push_back(bench_fusion(c));
    }
  }
  std::ostringstream body;
  if (run.json) {
    emit_report_json(body, reports);
    write_text(run, "bench.json", body.str());
  } else {
    emit_report_csv(body, reports);
    write_text(run, "bench.csv", body.str());
  }
  write_manifest(run);
  out << summarize_reports(reports);
  return kExitOk;
}

void add_common(CLI::App* sub, RunOptions& opt) {
  sub->add_option("--config", opt.config_path, "JSON run configuration");
  sub->add_option_function<std::uint64_t>(
         "--seed",
         [&opt](const std::uint64_t& s) {
           opt.seed = s;
           opt.seed_given = true;
         },
         "base seed (default 42)");
  sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
  sub->add_flag("--json", opt.json, "write JSON instead of CSV");
  sub->add_option("--set", opt.overrides, "config override key.path=value (repeatable)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"bevstream: streaming BEV temporal fusion toolkit"};
  app.name("bevstream");
  app.set_version_flag("--version", BEVSTREAM_VERSION);
  app.require_subcommand(1);
  RunOptions opt;

  auto* sim = app.add_subcommand("simulate", "render a synthetic scene to a replay stream");
  add_common(sim, opt);
  auto* replay = app.add_subcommand("replay", "run recurrent fusion over a replay stream");
  add_common(replay, opt);
  replay->add_option("--stream", opt.stream_path, "stream file written by simulate")->required();
  auto* check = app.add_subcommand("check", "recurrence and split equivalence suites");
  add_common(check, opt);
  check->add_option_function<std::vector<std::string>>(
      "--suites",
      [&opt](const std::vector<std::string>& s) {
        opt.suites.clear();
        for (const auto& item : s) {
          if (!item.empty()) opt.suites.push_back(item);
        }
        opt.suites_given = true;
      },
      "oracle and/or split")->expected(0, -1)->delimiter(',');
  check->add_flag("--inject-fault", opt.inject_fault, "perturb V_mem mid-stream (self-test)");
  auto* framedrop = app.add_subcommand("framedrop", "velocity error under dropped frames");
  add_common(framedrop, opt);
  auto* bench = app.add_subcommand("bench", "fusion latency and memory over window sizes");
  add_common(bench, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(opt, out);
    if (replay->parsed()) return cmd_replay(opt, out);
    if (check->parsed()) return cmd_check(opt, out);
    if (framedrop->parsed()) return cmd_framedrop(opt, out);
    if (bench->parsed()) return cmd_bench(opt, out);
  } catch (const Error& e) {
    err << "bevstream: " << e.what() << '\n';
    return e.code() == ErrorCode::kUsage || e.code() == ErrorCode::kConfig ? kExitUsage : kExitError;
  } catch (const std::exception& e) {
    err << "bevstream: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace bevstream::cli
