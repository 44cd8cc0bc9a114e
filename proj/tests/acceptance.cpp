// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "aigaitor/classifier.hpp"
#include "aigaitor/gait_metrics.hpp"
#include "aigaitor/latency.hpp"
#include "aigaitor/pose_io.hpp"
#include "aigaitor/refine.hpp"
#include "aigaitor/synth.hpp"
#include "aigaitor/windows.hpp"
#include "oracles.hpp"

using namespace aigaitor;

namespace {

const std::string kData = AIGAITOR_DATA_DIR;

// Tolerances, all pinned here.
constexpr double kTransferSlowTarget = 16.0, kTransferSlowTol = 0.3;
constexpr double kTransferFastTarget = 2.0, kTransferFastTol = 0.1;
constexpr double kTokenStageRelTol = 0.01;
constexpr double kDecodePrefillLo = 14.0, kDecodePrefillHi = 17.0;
constexpr double kPipelineRelTol = 0.12;
constexpr double kTimePriorityDeviceRelTol = 0.02;
constexpr double kMinSizeRatio = 100.0;
constexpr std::size_t kExpectedPayloadBytes = 122400;
constexpr double kRefineErrorFactor = 0.5;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradFloor = 1e-6;
constexpr double kGradStep = 1e-5;
constexpr double kClassifierTol = 1e-6;
constexpr double kNormalizeTol = 1e-9;
constexpr double kCadenceTol = 2.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

nlohmann::json read_json(const std::string& name) {
  std::ifstream in(kData + "/" + name);
  return nlohmann::json::parse(in);
}

Outcome transfer() {
  Outcome o;
  const auto scenario = latency::load_scenario(read_json("table2_scenario.json"));
  const double slow = latency::transfer_time(27.7e6, scenario.links.at("global_avg"));
  const double fast = latency::transfer_time(27.7e6, scenario.links.at("fast"));
  o.detail << "27.7 MB: " << slow << " s @15 Mbps, " << fast << " s @300 Mbps";
  o.require(std::abs(slow - kTransferSlowTarget) <= kTransferSlowTol, "15 Mbps");
  o.require(std::abs(fast - kTransferFastTarget) <= kTransferFastTol, "300 Mbps");
  return o;
}

Outcome token_stages() {
  Outcome o;
  const auto lib = latency::load_profiles(std::filesystem::path(kData + "/table2_profiles.json"));
  const latency::Clip clip;
  const latency::WindowCounts windows;
  const latency::TokenCounts tokens{750.0, 300.0};
  const struct {
    const latency::ProfileSet* set;
    const char* where;
    const char* stage;
    double published;
  } rows[] = {{&lib.device, "device", "Gemma 4-E2B", 29.2},
              {&lib.device, "device", "Gemma 4-E4B", 55.7},
              {&lib.cloud, "cloud", "Gemma 4-E2B", 2.4},
              {&lib.cloud, "cloud", "Gemma 4-E4B", 4.8}};
  for (const auto& r : rows) {
    const double t = latency::stage_time(r.set->at(r.stage), clip, windows, tokens);
    o.detail << r.stage << "/" << r.where << " " << t << " s; ";
    o.require(std::abs(t / r.published - 1.0) <= kTokenStageRelTol, std::string(r.stage) + "/" + r.where);
  }
  for (const char* stage : {"Gemma 4-E2B", "Gemma 4-E4B"}) {
    const auto& p = lib.device.at(stage);
    const double ratio = p.decode_ms_per_token / p.prefill_ms_per_token;
    o.detail << stage << " device decode/prefill " << ratio << "x; ";
    o.require(ratio >= kDecodePrefillLo && ratio <= kDecodePrefillHi,
              std::string(stage) + " ratio outside [14, 17]");
  }
  return o;
}

Outcome end_to_end() {
  Outcome o;
  const auto lib = latency::load_profiles(std::filesystem::path(kData + "/table2_profiles.json"));
  const auto result = latency::run_scenario(latency::load_scenario(read_json("table2_scenario.json")), lib);
  const struct {
    const char* pipeline;
    latency::Placement placement;
    const char* link;
    double published;
    double tol;
  } cells[] = {{"time-priority", latency::Placement::device, "", 77.0, kTimePriorityDeviceRelTol},
               {"quality-priority", latency::Placement::device, "", 153.0, kPipelineRelTol},
               {"time-priority", latency::Placement::cloud, "global_avg", 94.0, kPipelineRelTol},
               {"time-priority", latency::Placement::cloud, "fast", 66.0, kPipelineRelTol},
               {"quality-priority", latency::Placement::cloud, "global_avg", 84.0, kPipelineRelTol},
               {"quality-priority", latency::Placement::cloud, "fast", 55.0, kPipelineRelTol}};
  for (const auto& c : cells) {
    bool found = false;
    for (const auto& r : result.reports) {
      if (r.pipeline != c.pipeline || r.placement != c.placement || r.link != c.link) continue;
      found = true;
      const double rel = r.total_s / c.published - 1.0;
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s/%s%s%s %.1f vs %.0f (%+.1f%%); ", c.pipeline,
                    latency::to_string(c.placement).c_str(), *c.link ? "@" : "", c.link, r.total_s, c.published,
                    100.0 * rel);
      o.detail << buf;
      o.require(std::abs(rel) <= c.tol, std::string(c.pipeline) + "/" + latency::to_string(c.placement));
    }
    o.require(found, std::string("missing report ") + c.pipeline);
  }
  return o;
}

Outcome windowing() {
  Outcome o;
  PoseSequence seq;
  seq.topology = coco17();
  seq.frames.assign(600, Frame(17));
  const auto w = gait::make_windows(seq, {90, 60});
  o.detail << "600 frames -> " << w.size() << " windows; ";
  o.require(w.size() == 9, "600/90/60");
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> nd(0, 5000), wd(1, 500), sd(1, 500);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = nd(rng), win = wd(rng), s = sd(rng);
    std::size_t enumerated = 0;
    for (std::size_t start = 0; start + win <= n; start += s) ++enumerated;
    if (gait::window_count(n, {win, s}) != enumerated) ++mismatches;
  }
  o.detail << "count formula mismatches over 1000 draws: " << mismatches;
  o.require(mismatches == 0, "count formula");
  return o;
}

Outcome size_reduction() {
  Outcome o;
  const auto gt = synth::generate({});
  const auto seq = synth::project_sequence(gt.pose, synth::default_camera());
  const auto bytes = io::encode(seq);
  const auto header = io::decode_header(bytes);
  const auto r = io::size_reduction(io::reference_4k_clip(), seq);
  o.detail << "payload " << header.payload_bytes() << " B, file " << bytes.size() << " B, ratio " << r.ratio
           << " (" << r.orders_of_magnitude << " orders)";
  o.require(header.payload_bytes() == kExpectedPayloadBytes, "payload bytes");
  o.require(bytes.size() == header.header_bytes() + kExpectedPayloadBytes, "file size");
  o.require(r.ratio >= kMinSizeRatio, "ratio");
  return o;
}

double mean_joint_error(const PoseSequence& a, const PoseSequence& b) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < a.frame_count(); ++t) {
    for (std::size_t j = 0; j < a.joint_count(); ++j) {
      double d2 = 0.0;
      for (int d = 0; d < 3; ++d) d2 += std::pow(a.frames[t][j].coords[d] - b.frames[t][j].coords[d], 2);
      sum += std::sqrt(d2);
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

Outcome refinement() {
  Outcome o;
  const auto gt = synth::generate({});
  const auto cam = synth::default_camera();
  const auto obs = synth::project_sequence(gt.pose, cam);
  const auto noisy = synth::add_noise(gt.pose, 0.02, 0);
  const auto r = refine::refine_sequence(noisy, obs, cam, refine::RefineConfig{});
  const double before = mean_joint_error(noisy, gt.pose), after = mean_joint_error(r.refined, gt.pose);
  o.detail << "mean joint error " << before << " -> " << after << " m (" << after / before << "x) in "
           << r.iterations_run << " iterations; ";
  o.require(after <= kRefineErrorFactor * before, "error reduction");
  bool monotone = true;
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) monotone &= r.objective_trace[i] <= r.objective_trace[i - 1];
  o.require(monotone, "trace monotone");

  // Gradient against central differences of the reference objective at random points.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> xy(-0.8, 0.8), z(3.0, 6.0), px(-15.0, 15.0), conf(0.0, 1.0);
  double worst = 0.0;
  for (int point = 0; point < 10; ++point) {
    PoseSequence P;
    P.topology = coco17();
    P.dims = 3;
    P.frames.assign(5, Frame(17));
    PoseSequence o2;
    o2.topology = coco17();
    o2.dims = 2;
    o2.frames.assign(5, Frame(17));
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t j = 0; j < 17; ++j) {
        P.frames[t][j] = {{xy(rng), xy(rng), z(rng)}, 1.0};
        const auto uv = project(P.frames[t][j].coords, cam);
        o2.frames[t][j] = {{uv[0] + px(rng), uv[1] + px(rng), 0.0}, conf(rng)};
      }
    }
    const refine::RefineConfig cfg;
    const auto g = refine::gradient(P, o2, cam, cfg);
    const auto fd = oracle::fd_gradient(P, o2, cam, refine::median_bone_lengths(P), cfg.lambda_bone,
                                        cfg.lambda_smooth, kGradStep);
    for (std::size_t i = 0; i < g.size(); ++i) {
      worst = std::max(worst, std::abs(g[i] - fd[i]) / std::max({std::abs(g[i]), std::abs(fd[i]), kGradFloor}));
    }
  }
  o.detail << "max gradient rel error " << worst;
  o.require(worst < kGradRelTol, "gradient check");
  return o;
}

Outcome classifier() {
  Outcome o;
  const auto w = gait::ClassifierWeights::load(kData + "/weights/gcn_coco17_2d.json");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    gait::NormalizedWindow win;
    win.dims = 2;
    win.frames.assign(90, Frame(17));
    for (auto& f : win.frames) {
      for (auto& kp : f) kp = {{u(rng), u(rng), 0.0}, 1.0};
    }
    const auto expected = oracle::classify(win, w);
    const auto got = gait::classify_window(win, w);
    for (std::size_t c = 0; c < got.size(); ++c) worst = std::max(worst, std::abs(got[c] - expected[c]));
  }
  o.detail << "max |forward - oracle| " << worst << "; ";
  o.require(worst < kClassifierTol, "oracle equivalence");

  const auto seq = synth::project_sequence(synth::generate({}).pose, synth::default_camera());
  const auto windows = gait::make_windows(seq);
  double drift = 0.0;
  for (const auto& win : windows) {
    const auto base = gait::normalize_window(win, seq.topology, 2);
    std::vector<Frame> moved(win.frames.begin(), win.frames.end()), scaled = moved;
    for (auto& f : moved) {
      for (auto& kp : f) {
        kp.coords[0] += 5.0;
        kp.coords[1] += 7.0;
      }
    }
    for (auto& f : scaled) {
      for (auto& kp : f) {
        kp.coords[0] *= 2.0;
        kp.coords[1] *= 2.0;
      }
    }
    const auto a = gait::normalize_window({win.start, moved}, seq.topology, 2);
    const auto b = gait::normalize_window({win.start, scaled}, seq.topology, 2);
    for (std::size_t t = 0; t < base.frames.size(); ++t) {
      for (std::size_t j = 0; j < 17; ++j) {
        for (int d = 0; d < 2; ++d) {
          drift = std::max(drift, std::abs(a.frames[t][j].coords[d] - base.frames[t][j].coords[d]));
          drift = std::max(drift, std::abs(b.frames[t][j].coords[d] - base.frames[t][j].coords[d]));
        }
      }
    }
  }
  o.detail << "normalization drift " << drift;
  o.require(drift <= kNormalizeTol, "normalization invariance");
  return o;
}

double worst_strike_offset(const std::vector<double>& got, const std::vector<double>& truth) {
  if (got.size() != truth.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - truth[i]));
  return worst;
}

Outcome gait_metrics() {
  Outcome o;
  for (double cadence : {60.0, 90.0, 120.0, 150.0}) {
    synth::GaitParams p;
    p.cadence_steps_per_min = cadence;
    const auto gt = synth::generate(p);
    const PoseSequence views[] = {gt.pose, synth::project_sequence(gt.pose, synth::default_camera())};
    for (const auto& seq : views) {
      const auto m = gait::compute_metrics(seq);
      const double c = m.cadence_steps_per_min.value_or(NAN);
      const double off = std::max(worst_strike_offset(m.left_strikes_s, gt.left_strikes_s),
                                  worst_strike_offset(m.right_strikes_s, gt.right_strikes_s));
      o.detail << cadence << "/" << seq.dims << "D: " << c << " spm, strikes within " << off * p.fps << " fr; ";
      o.require(std::abs(c - cadence) <= kCadenceTol, "cadence " + std::to_string(cadence));
      o.require(off <= 1.0 / p.fps, "strike timing " + std::to_string(cadence));
    }
  }
  return o;
}

Outcome pose_io() {
  Outcome o;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> nf(2, 60), nj(1, 25);
  std::uniform_int_distribution<int> nd(2, 3);
  std::uniform_real_distribution<float> coord(-4000.0f, 4000.0f), conf(0.0f, 1.0f), fps(1.0f, 240.0f);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    PoseSequence s;
    const std::size_t joints = i % 5 == 0 ? 17 : nj(rng);
    s.topology = joints == 17 ? coco17() : generic_topology("t" + std::to_string(joints), joints);
    s.dims = nd(rng);
    s.fps = fps(rng);
    s.frames.assign(i == 0 ? 0 : i == 1 ? 1 : nf(rng), Frame(joints));
    for (auto& f : s.frames) {
      for (auto& k : f) {
        for (int d = 0; d < s.dims; ++d) k.coords[d] = coord(rng);
        k.confidence = conf(rng);
      }
    }
    const auto bytes = io::encode(s);
    const auto back = io::decode(bytes, s.topology);
    if (!(back == s) || io::encode(back) != bytes) ++failures;
  }
  o.detail << "1000 sequences (incl. 0 and 1 frame), " << failures << " mismatches";
  o.require(failures == 0, "round trip");
  return o;
}

}  // namespace

int main() {
  const struct {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  } criteria[] = {
      {1, "network transfer model", 1.0, transfer},
      {2, "token-priced stages and decode/prefill asymmetry", 1.0, token_stages},
      {3, "end-to-end pipeline cells", 1.0, end_to_end},
      {4, "windowing", 1.0, windowing},
      {5, "pose file size reduction", 1.0, size_reduction},
      {6, "pose refinement", 30.0, refinement},
      {7, "classifier oracle and normalization", 10.0, classifier},
      {8, "gait metrics", 10.0, gait_metrics},
      {9, "pose file round trip", 10.0, pose_io},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail << " [over time budget " << c.budget_s << " s]";
    }
    failed += !o.pass;
    std::printf("%s %d %s (%.3f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.str().c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
