// aigaitor: synthesize gait data, analyze and refine pose files, and run the
// edge-vs-cloud latency model.
//
// Exit codes: 0 success, 2 input/config error, 3 schema/reference error,
// 4 numeric failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "aigaitor/classifier.hpp"
#include "aigaitor/errors.hpp"
#include "aigaitor/gait_metrics.hpp"
#include "aigaitor/latency.hpp"
#include "aigaitor/pose_io.hpp"
#include "aigaitor/refine.hpp"
#include "aigaitor/synth.hpp"
#include "aigaitor/windows.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aigaitor;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitSchema = 3;
constexpr int kExitNumeric = 4;

fs::path data_dir() { return AIGAITOR_DEFAULT_DATA_DIR; }

fs::path profile_dir() {
  if (const char* env = std::getenv("AIGAITOR_PROFILE_DIR"); env && *env) return env;
  return data_dir();
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << text;
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_extension();
  return p.string() + suffix;
}

double mean_joint_error(const PoseSequence& a, const PoseSequence& b) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < a.frames.size(); ++t) {
    for (std::size_t j = 0; j < a.frames[t].size(); ++j) {
      double sq = 0.0;
      for (int d = 0; d < 3; ++d) {
        const double diff = a.frames[t][j].coords[d] - b.frames[t][j].coords[d];
        sq += diff * diff;
      }
      sum += std::sqrt(sq);
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string params;
  std::string out;
  std::string view = "2d";
  std::string camera;
  double noise = 0.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int cmd_synth(const SynthArgs& a) {
  synth::GaitParams params = a.params.empty() ? synth::GaitParams{} : synth::GaitParams::from_json(read_json(a.params));
  if (a.seed_set) params.noise_seed = a.seed;
  const CameraModel cam = a.camera.empty() ? synth::default_camera() : CameraModel::from_json(read_json(a.camera));
  if (a.view != "2d" && a.view != "3d") throw ConfigError("--view must be 2d or 3d");

  const synth::GroundTruth truth = synth::generate(params);
  PoseSequence seq = truth.pose;
  if (a.view == "2d") seq = synth::project_sequence(seq, cam);
  seq = synth::add_noise(seq, a.noise, params.noise_seed);

  io::write_file(a.out, seq);
  json gt = truth.to_json();
  gt["params"] = params.to_json();
  gt["camera"] = cam.to_json();
  gt["view"] = a.view;
  write_text(sibling(a.out, ".truth.json"), gt.dump(2) + "\n");

  // Source video vs pose file, as plot-ready data.
  io::VideoProfile video = io::reference_4k_clip();
  video.size_bytes *= params.duration_s / video.duration_s;
  video.duration_s = params.duration_s;
  std::ostringstream sizes;
  sizes << std::setprecision(12) << "artifact,bytes\n"
        << "video_4k_60fps," << video.size_bytes << '\n'
        << "pose_file_" << a.view << ',' << io::encoded_size(seq) << '\n';
  write_text(sibling(a.out, ".sizes.csv"), sizes.str());

  const auto windows = gait::window_count(seq.frames.size(), gait::WindowSpec{});
  std::cout << "wrote " << a.out << ": " << seq.frames.size() << " frames, " << seq.dims << "D, " << windows
            << " analysis windows\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string pose;
  std::string weights;
  std::string out = "-";
  std::string format = "json";
};

int cmd_analyze(const AnalyzeArgs& a) {
  const PoseSequence seq = io::read_file(a.pose);
  const fs::path weights_path = a.weights.empty() ? data_dir() / "weights" / "gcn_coco17_2d.json" : fs::path(a.weights);
  if (!fs::exists(weights_path)) throw ConfigError("weights file not found: " + weights_path.string());
  const gait::ClassifierWeights weights = gait::ClassifierWeights::load(weights_path);
  gait::check_compatible(weights, seq.joint_count(), seq.dims);

  const auto windows = gait::make_windows(seq, gait::WindowSpec{});
  json report;
  report["input"] = {{"frames", seq.frames.size()}, {"fps", seq.fps}, {"dims", seq.dims},
                     {"topology", seq.topology.name}};
  report["window_count"] = windows.size();
  if (windows.empty()) {
    report["trial"] = nullptr;
  } else {
    const auto preds = gait::classify_windows(seq, windows, weights);
    report["trial"] = gait::majority_vote(preds).to_json(weights.class_names);
  }

  std::optional<gait::GaitMetrics> metrics;
  try {
    metrics = gait::compute_metrics(seq);
    report["metrics"] = metrics->to_json();
  } catch (const AnalysisError& e) {
    report["metrics"] = nullptr;
    report["metrics_error"] = e.what();
  }

  if (a.format == "csv") {
    if (!metrics) throw AnalysisError("no metrics to export: " + report["metrics_error"].get<std::string>());
    std::ostringstream csv;
    metrics->write_csv(csv);
    write_text(a.out, csv.str());
  } else {
    write_text(a.out, report.dump(2) + "\n");
  }
  if (a.out != "-") {
    std::cout << "windows=" << windows.size();
    if (metrics && metrics->cadence_steps_per_min) std::cout << " cadence=" << *metrics->cadence_steps_per_min;
    std::cout << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct RefineArgs {
  std::string pose3d, pose2d, camera, config, out, trace, truth;
};

int cmd_refine(const RefineArgs& a) {
  const PoseSequence initial = io::read_file(a.pose3d);
  const PoseSequence obs = io::read_file(a.pose2d);
  const CameraModel cam = a.camera.empty() ? synth::default_camera() : CameraModel::from_json(read_json(a.camera));
  const refine::RefineConfig cfg =
      a.config.empty() ? refine::RefineConfig{} : refine::RefineConfig::from_json(read_json(a.config));
  const fs::path trace_path = a.trace.empty() ? sibling(a.out, ".trace.csv") : fs::path(a.trace);

  refine::RefineResult result;
  try {
    result = refine::refine_sequence(initial, obs, cam, cfg);
  } catch (const OptimizationError& e) {
    refine::write_trace_csv(trace_path, e.trace());
    throw;
  }
  io::write_file(a.out, result.refined);
  refine::write_trace_csv(trace_path, result.objective_trace);

  std::cout << "converged=" << (result.converged ? "true" : "false") << " iterations=" << result.iterations_run
            << " objective=" << result.objective_trace.front() << "->" << result.objective_trace.back() << '\n';
  if (!a.truth.empty()) {
    const PoseSequence clean = io::read_file(a.truth);
    if (clean.frames.size() != initial.frames.size() || clean.dims != 3) {
      throw ConfigError("truth file must be 3D with the same frame count");
    }
    const double before = mean_joint_error(initial, clean);
    const double after = mean_joint_error(result.refined, clean);
    std::cout << "mean_joint_error_m initial=" << before << " refined=" << after
              << " reduction=" << (before > 0.0 ? 1.0 - after / before : 0.0) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string spec;
  std::string profiles;
  std::string out = "-";
  std::string format = "json";
  std::string golden;
  bool golden_set = false;
  std::string sweep;
};

std::vector<double> parse_sweep(const std::string& text) {
  double lo = 0, hi = 0;
  int n = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || lo <= 0 || hi < lo || n < 2) {
    throw ConfigError("--sweep expects LO:HI:N with 0 < LO <= HI and N >= 2");
  }
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return out;
}

int cmd_simulate(const SimulateArgs& a) {
  const fs::path spec_path = a.spec.empty() ? data_dir() / "table2_scenario.json" : fs::path(a.spec);
  const fs::path profiles_path = a.profiles.empty() ? profile_dir() / "table2_profiles.json" : fs::path(a.profiles);
  const latency::Scenario scenario = latency::load_scenario(read_json(spec_path));
  const latency::ProfileLibrary profiles = latency::load_profiles(profiles_path);

  std::ostringstream out;
  out << std::setprecision(10);
  if (!a.sweep.empty()) {
    out << "bandwidth_mbps,pipeline,cloud_total_s,device_total_s\n";
    for (const auto& row : latency::bandwidth_sweep(scenario, profiles, parse_sweep(a.sweep))) {
      out << row.bandwidth_mbps << ',' << row.pipeline << ',' << row.cloud_total_s << ',' << row.device_total_s << '\n';
    }
    write_text(a.out, out.str());
    return 0;
  }

  const latency::ScenarioResult result = latency::run_scenario(scenario, profiles);
  int status = 0;
  json doc = result.to_json();
  if (a.golden_set) {
    const fs::path golden_path = a.golden.empty() ? data_dir() / "table2_golden.json" : fs::path(a.golden);
    const auto cells = latency::evaluate_golden(read_json(golden_path), scenario, profiles);
    json g = json::array();
    for (const auto& c : cells) {
      g.push_back({{"id", c.id}, {"published", c.published}, {"modeled", c.modeled}, {"rel_error", c.rel_error()},
                   {"pass", c.pass()}});
      std::cerr << (c.pass() ? "PASS " : "FAIL ") << c.id << " published=" << c.published << " modeled=" << c.modeled
                << '\n';
      if (!c.pass()) status = kExitNumeric;
    }
    doc["golden"] = g;
  }

  if (a.format == "csv") {
    result.write_csv(out);
  } else {
    out << doc.dump(2) << '\n';
  }
  write_text(a.out, out.str());
  return status;
}

// ---------------------------------------------------------------------------

struct ConvertArgs {
  std::string in, out, topology;
};

int cmd_convert(const ConvertArgs& a) {
  const auto ext_in = fs::path(a.in).extension(), ext_out = fs::path(a.out).extension();
  if (ext_in == ".aigk" && ext_out == ".json") {
    std::ifstream in(a.in, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + a.in);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const PoseSequence seq = a.topology.empty()
                                 ? io::decode(bytes)
                                 : io::decode(bytes, SkeletonTopology::from_json(read_json(a.topology)));
    write_text(a.out, io::to_json(seq).dump() + "\n");
  } else if (ext_in == ".json" && ext_out == ".aigk") {
    io::write_file(a.out, io::from_json(read_json(a.in)));
  } else {
    throw ConfigError("convert supports .aigk -> .json and .json -> .aigk");
  }
  return 0;
}

struct WeightsArgs {
  std::string out;
  int dims = 2;
  std::size_t hidden = 16;
  std::size_t kernel = 9;
  std::uint64_t seed = 0;
};

int cmd_weights(const WeightsArgs& a) {
  const auto w = gait::make_seeded_weights(coco17(), static_cast<std::size_t>(a.dims), a.hidden, a.kernel,
                                           {"typical", "atypical"}, a.seed);
  write_text(a.out, w.to_json().dump() + "\n");
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"aigaitor: markerless gait-analysis engine and edge-vs-cloud latency model"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic walking sequence (.aigk) with ground truth");
  synth_cmd->add_option("--params", synth_args.params, "GaitParams JSON (defaults if omitted)");
  synth_cmd->add_option("-o,--out", synth_args.out, "Output .aigk path")->required();
  synth_cmd->add_option("--view", synth_args.view, "2d (projected) or 3d (camera frame)");
  synth_cmd->add_option("--camera", synth_args.camera, "Camera JSON for 2d projection");
  synth_cmd->add_option("--noise", synth_args.noise, "Gaussian noise sigma (m for 3d, px for 2d)");
  auto* seed_opt = synth_cmd->add_option("--seed", synth_args.seed, "Noise seed (overrides params)");

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Windowed classification, voting and gait metrics");
  analyze_cmd->add_option("--pose", analyze_args.pose, "Input .aigk")->required();
  analyze_cmd->add_option("--weights", analyze_args.weights, "Classifier weights JSON (bundled if omitted)");
  analyze_cmd->add_option("-o,--out", analyze_args.out, "Output path, - for stdout");
  analyze_cmd->add_option("--format", analyze_args.format)->check(CLI::IsMember({"json", "csv"}));

  RefineArgs refine_args;
  auto* refine_cmd = app.add_subcommand("refine", "Refine a 3D trajectory against 2D observations");
  refine_cmd->add_option("--pose3d", refine_args.pose3d, "Initial 3D .aigk")->required();
  refine_cmd->add_option("--pose2d", refine_args.pose2d, "2D observations .aigk")->required();
  refine_cmd->add_option("--camera", refine_args.camera, "Camera JSON (synthetic default if omitted)");
  refine_cmd->add_option("--config", refine_args.config, "RefineConfig JSON");
  refine_cmd->add_option("-o,--out", refine_args.out, "Refined .aigk")->required();
  refine_cmd->add_option("--trace", refine_args.trace, "Objective trace CSV (default <out stem>.trace.csv)");
  refine_cmd->add_option("--truth", refine_args.truth, "Clean 3D .aigk to report error reduction");

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Compose device and cloud pipeline latencies");
  sim_cmd->add_option("--spec", sim_args.spec, "Scenario JSON (bundled scenario if omitted)");
  sim_cmd->add_option("--profiles", sim_args.profiles, "Stage profiles JSON (AIGAITOR_PROFILE_DIR or bundled)");
  sim_cmd->add_option("-o,--out", sim_args.out, "Output path, - for stdout");
  sim_cmd->add_option("--format", sim_args.format)->check(CLI::IsMember({"json", "csv"}));
  auto* golden_opt = sim_cmd->add_option("--golden", sim_args.golden, "Check against a golden dataset")->expected(0, 1);
  sim_cmd->add_option("--sweep", sim_args.sweep, "Bandwidth sweep LO:HI:N (Mbps, log-spaced), CSV output");

  ConvertArgs conv_args;
  auto* conv_cmd = app.add_subcommand("convert", "Convert between .aigk and JSON");
  conv_cmd->add_option("input", conv_args.in)->required();
  conv_cmd->add_option("output", conv_args.out)->required();
  conv_cmd->add_option("--topology", conv_args.topology, "Topology JSON sidecar for decoding");

  WeightsArgs weights_args;
  auto* weights_cmd = app.add_subcommand("weights", "Write seeded classifier weights for COCO-17");
  weights_cmd->add_option("-o,--out", weights_args.out)->required();
  weights_cmd->add_option("--dims", weights_args.dims)->check(CLI::IsMember({2, 3}));
  weights_cmd->add_option("--hidden", weights_args.hidden);
  weights_cmd->add_option("--kernel", weights_args.kernel);
  weights_cmd->add_option("--seed", weights_args.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*synth_cmd) {
      synth_args.seed_set = seed_opt->count() > 0;
      return cmd_synth(synth_args);
    }
    if (*analyze_cmd) return cmd_analyze(analyze_args);
    if (*refine_cmd) return cmd_refine(refine_args);
    if (*sim_cmd) {
      sim_args.golden_set = golden_opt->count() > 0;
      return cmd_simulate(sim_args);
    }
    if (*conv_cmd) return cmd_convert(conv_args);
    if (*weights_cmd) return cmd_weights(weights_args);
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const OptimizationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
