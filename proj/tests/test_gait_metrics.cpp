#include <cmath>
#include <random>
#include <sstream>

#include "aigaitor/errors.hpp"
#include "aigaitor/gait_metrics.hpp"
#include "aigaitor/synth.hpp"
#include "doctest.h"

using namespace aigaitor;

namespace {

synth::GroundTruth walk(double cadence, double duration = 10.0) {
  synth::GaitParams p;
  p.cadence_steps_per_min = cadence;
  p.duration_s = duration;
  return synth::generate(p);
}

PoseSequence three_points(Vec3 a, Vec3 c, Vec3 b) {
  PoseSequence s;
  s.topology = generic_topology("tri", 3);
  s.dims = 3;
  s.frames = {{Keypoint{a, 1.0}, Keypoint{c, 1.0}, Keypoint{b, 1.0}}};
  return s;
}

void check_within_frame(const std::vector<double>& got, const std::vector<double>& truth, double fps) {
  REQUIRE(got.size() == truth.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - truth[i]) <= 1.0 / fps);
}

}  // namespace

TEST_CASE("joint angles") {
  CHECK(*gait::joint_angle_series(three_points({0, 0, 1}, {0, 1, 1}, {0, 2, 1}), 1, 0, 2)[0] ==
        doctest::Approx(180.0));
  CHECK(*gait::joint_angle_series(three_points({1, 0, 1}, {0, 0, 1}, {0, 1, 1}), 1, 0, 2)[0] ==
        doctest::Approx(90.0));
  CHECK_FALSE(gait::joint_angle_series(three_points({0, 0, 1}, {0, 0, 1}, {0, 1, 1}), 1, 0, 2)[0].has_value());

  auto flat = three_points({3, 0, 0}, {0, 0, 0}, {3, 3, 0});
  flat.dims = 2;
  CHECK(*gait::joint_angle_series(flat, 1, 0, 2)[0] == doctest::Approx(45.0));
}

TEST_CASE("joint angles ignore rotation and translation") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto gt = walk(120.0, 3.0);
  const auto& topo = gt.pose.topology;
  const int h = topo.require("left_hip"), k = topo.require("left_knee"), a = topo.require("left_ankle");
  const auto base = gait::joint_angle_series(gt.pose, k, h, a);
  for (int trial = 0; trial < 10; ++trial) {
    // Random rotation from a normalised quaternion.
    double q[4] = {n(rng), n(rng), n(rng), n(rng)};
    const double qn = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    for (double& v : q) v /= qn;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    const double R[3][3] = {{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
                            {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
                            {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}};
    const Vec3 shift{n(rng) * 5, n(rng) * 5, n(rng) * 5};
    auto moved = gt.pose;
    for (auto& f : moved.frames) {
      for (auto& kp : f) {
        const Vec3 c = kp.coords;
        for (int r = 0; r < 3; ++r) kp.coords[r] = R[r][0] * c[0] + R[r][1] * c[1] + R[r][2] * c[2] + shift[r];
      }
    }
    const auto got = gait::joint_angle_series(moved, k, h, a);
    for (std::size_t t = 0; t < got.size(); ++t) CHECK(std::abs(*got[t] - *base[t]) < 1e-9);
  }
}

TEST_CASE("knee angle at heel strikes matches the closed form") {
  const synth::GaitParams p;
  const auto gt = synth::generate(p);
  const auto& topo = gt.pose.topology;
  const auto right = gait::joint_angle_series(gt.pose, topo.require("right_knee"), topo.require("right_hip"),
                                              topo.require("right_ankle"));
  const auto left = gait::joint_angle_series(gt.pose, topo.require("left_knee"), topo.require("left_hip"),
                                             topo.require("left_ankle"));
  for (const auto& s : gt.strikes) {
    const auto frame = static_cast<std::size_t>(std::lround(s.time_s * p.fps));
    const auto& series = s.side == synth::Side::right ? right : left;
    const double closed = synth::knee_angle_deg(p, {}, s.side, static_cast<double>(frame) / p.fps);
    CHECK(std::abs(*series[frame] - closed) < 0.1);
  }
}

TEST_CASE("heel strikes of the default walk, 3D and 2D") {
  const auto gt = walk(120.0);
  for (const auto& seq : {gt.pose, synth::project_sequence(gt.pose, synth::default_camera())}) {
    const auto ev = gait::detect_gait_events(seq);
    CHECK(ev.left_strikes_s.size() == 10);
    CHECK(ev.right_strikes_s.size() == 10);
    check_within_frame(ev.left_strikes_s, gt.left_strikes_s, 60.0);
    check_within_frame(ev.right_strikes_s, gt.right_strikes_s, 60.0);
  }
}

TEST_CASE("cadence recovered across the walking range") {
  for (double cadence : {60.0, 90.0, 120.0, 150.0}) {
    const auto gt = walk(cadence);
    for (const auto& seq : {gt.pose, synth::project_sequence(gt.pose, synth::default_camera())}) {
      const auto m = gait::compute_metrics(seq);
      REQUIRE(m.cadence_steps_per_min.has_value());
      CHECK(std::abs(*m.cadence_steps_per_min - cadence) <= 2.0);
      check_within_frame(m.left_strikes_s, gt.left_strikes_s, 60.0);
      check_within_frame(m.right_strikes_s, gt.right_strikes_s, 60.0);
      for (double t : m.left_strikes_s) {
        CHECK(t >= 0.0);
        CHECK(t <= 10.0);
      }
    }
  }
}

TEST_CASE("standing still produces no strikes") {
  synth::GaitParams p;
  p.step_length_m = 0.0;
  const auto m = gait::compute_metrics(synth::generate(p).pose);
  CHECK(m.left_strikes_s.empty());
  CHECK(m.right_strikes_s.empty());
  CHECK_FALSE(m.cadence_steps_per_min.has_value());
}

TEST_CASE("time reversal keeps the strike count") {
  for (double cadence : {90.0, 120.0}) {
    const auto gt = walk(cadence);
    auto rev = gt.pose;
    std::reverse(rev.frames.begin(), rev.frames.end());
    const auto a = gait::detect_gait_events(gt.pose);
    const auto b = gait::detect_gait_events(rev);
    CHECK(a.left_strikes_s.size() + a.right_strikes_s.size() == b.left_strikes_s.size() + b.right_strikes_s.size());
  }
}

TEST_CASE("a single strike leaves cadence missing") {
  // 0.6 s at 120 steps/min contains only the right strike at 0.25 s.
  const auto gt = walk(120.0, 0.6);
  REQUIRE(gt.strikes.size() == 1);
  const auto m = gait::compute_metrics(gt.pose);
  CHECK(m.left_strikes_s.size() + m.right_strikes_s.size() <= 1);
  CHECK_FALSE(m.cadence_steps_per_min.has_value());
}

TEST_CASE("missing hips or ankles are rejected") {
  auto seq = walk(120.0, 3.0).pose;
  const int ankle = seq.topology.require("left_ankle");
  for (std::size_t t = 0; t < seq.frame_count(); t += 2) seq.frames[t][ankle].confidence = 0.0;
  seq.frames[1][ankle].confidence = 0.0;
  CHECK_THROWS_AS(gait::detect_gait_events(seq), AnalysisError);
  CHECK_THROWS_AS(gait::compute_metrics(seq), AnalysisError);

  PoseSequence generic;
  generic.topology = generic_topology("g", 4);
  generic.frames.assign(100, Frame(4));
  CHECK_THROWS_AS(gait::detect_gait_events(generic), SchemaError);
}

TEST_CASE("metrics export") {
  const auto m = gait::compute_metrics(walk(120.0, 3.0).pose);
  CHECK(m.n_frames == 180);
  CHECK(m.joint_angle_series.count("left_knee") == 1);
  CHECK(m.joint_angle_series.count("right_knee") == 1);
  CHECK(m.mean_step_time_left_s.has_value());
  const auto j = m.to_json();
  CHECK(j.contains("cadence_steps_per_min"));

  std::ostringstream csv;
  m.write_csv(csv);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "frame,time_s,left_knee_deg,right_knee_deg");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 180);
}
