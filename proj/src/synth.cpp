#include "aigaitor/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "aigaitor/errors.hpp"

namespace aigaitor::synth {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

double stride_frequency(const GaitParams& p) { return p.cadence_steps_per_min / 120.0; }

double side_phase(Side side) { return side == Side::right ? 0.0 : kPi; }

// Forward offset of an ankle relative to the pelvis.
double ankle_forward(const GaitParams& p, Side side, double t) {
  return 0.5 * p.step_length_m * std::sin(2.0 * kPi * stride_frequency(p) * t + side_phase(side));
}

// Hip-to-ankle distance; hip and ankle share their lateral coordinate.
double hip_ankle_distance(const GaitParams& p, const Staging& s, Side side, double t) {
  const double dy = p.pelvis_height_m - s.ankle_height_m;
  const double dz = ankle_forward(p, side, t);
  return std::sqrt(dy * dy + dz * dz);
}

// Knee by two-bone IK, bending toward +Z (forward) within the sagittal plane.
Vec3 solve_knee(const Vec3& hip, const Vec3& ankle, double segment, long frame) {
  const Vec3 axis = sub(ankle, hip);
  const double d = norm(axis);
  if (d > 2.0 * segment + 1e-12) {
    throw ParameterError("ankle unreachable from hip at frame " + std::to_string(frame) + " (distance " +
                         std::to_string(d) + " m > 2*leg_segment)");
  }
  const Vec3 mid = scale(add(hip, ankle), 0.5);
  const Vec3 unit = scale(axis, 1.0 / d);
  Vec3 bend = sub(Vec3{0.0, 0.0, 1.0}, scale(unit, unit[2]));
  bend = scale(bend, 1.0 / norm(bend));
  const double h = std::sqrt(std::max(0.0, segment * segment - 0.25 * d * d));
  return add(mid, scale(bend, h));
}

}  // namespace

void GaitParams::check() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be > 0");
  };
  positive(duration_s, "duration_s");
  positive(fps, "fps");
  positive(leg_segment_m, "leg_segment_m");
  positive(pelvis_height_m, "pelvis_height_m");
  if (fps < 1.0) throw ParameterError("fps must be >= 1");
  if (!(cadence_steps_per_min >= 20.0 && cadence_steps_per_min <= 240.0)) {
    throw ParameterError("cadence_steps_per_min must be in [20, 240]");
  }
  if (!(step_length_m >= 0.0) || !std::isfinite(step_length_m)) throw ParameterError("step_length_m must be >= 0");
  if (!(lateral_sway_amp_m >= 0.0) || !std::isfinite(lateral_sway_amp_m)) {
    throw ParameterError("lateral_sway_amp_m must be >= 0");
  }
}

GaitParams GaitParams::from_json(const json& doc) {
  GaitParams p;
  if (!doc.is_object()) throw ParameterError("gait params must be a JSON object");
  try {
    p.duration_s = doc.value("duration_s", p.duration_s);
    p.fps = doc.value("fps", p.fps);
    p.cadence_steps_per_min = doc.value("cadence_steps_per_min", p.cadence_steps_per_min);
    p.step_length_m = doc.value("step_length_m", p.step_length_m);
    p.leg_segment_m = doc.value("leg_segment_m", p.leg_segment_m);
    p.pelvis_height_m = doc.value("pelvis_height_m", p.pelvis_height_m);
    p.lateral_sway_amp_m = doc.value("lateral_sway_amp_m", p.lateral_sway_amp_m);
    p.noise_seed = doc.value("noise_seed", p.noise_seed);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("gait params JSON: ") + e.what());
  }
  p.check();
  return p;
}

json GaitParams::to_json() const {
  return {{"duration_s", duration_s},
          {"fps", fps},
          {"cadence_steps_per_min", cadence_steps_per_min},
          {"step_length_m", step_length_m},
          {"leg_segment_m", leg_segment_m},
          {"pelvis_height_m", pelvis_height_m},
          {"lateral_sway_amp_m", lateral_sway_amp_m},
          {"noise_seed", noise_seed}};
}

json GroundTruth::to_json() const {
  json sides = json::array();
  for (const auto& s : strikes) sides.push_back({{"side", s.side == Side::left ? "left" : "right"}, {"time_s", s.time_s}});
  return {{"left_strikes_s", left_strikes_s},
          {"right_strikes_s", right_strikes_s},
          {"strikes", sides},
          {"cadence_steps_per_min", cadence_steps_per_min},
          {"step_length_m", step_length_m},
          {"stride_frequency_hz", stride_frequency_hz},
          {"n_frames", pose.frames.size()},
          {"fps", pose.fps}};
}

int frame_count(const GaitParams& p) { return static_cast<int>(std::lround(p.duration_s * p.fps)); }

double knee_angle_deg(const GaitParams& p, const Staging& staging, Side side, double t) {
  const double d = hip_ankle_distance(p, staging, side, t);
  const double l = p.leg_segment_m;
  const double c = std::clamp(1.0 - d * d / (2.0 * l * l), -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

CameraModel default_camera() { return {1500.0, 1500.0, 960.0, 540.0, 1920, 1080}; }

GroundTruth generate(const GaitParams& p, const Staging& staging) {
  p.check();
  const SkeletonTopology& topo = coco17();
  const int n = frame_count(p);
  const double f = stride_frequency(p);
  const double speed = p.step_length_m * p.cadence_steps_per_min / 60.0;
  const double walk_start = -0.5 * speed * p.duration_s;

  // Body-fixed offsets from the pelvis (X lateral, Y down, Z forward).
  const double w = staging.hip_half_width_m;
  const double torso = 0.5;
  const Vec3 upper[11] = {
      {0.0, -torso - 0.22, 0.08},   // nose
      {-0.03, -torso - 0.25, 0.06}, // left_eye
      {0.03, -torso - 0.25, 0.06},  // right_eye
      {-0.07, -torso - 0.23, 0.0},  // left_ear
      {0.07, -torso - 0.23, 0.0},   // right_ear
      {-0.18, -torso, 0.0},         // left_shoulder
      {0.18, -torso, 0.0},          // right_shoulder
      {-0.20, -torso + 0.28, 0.0},  // left_elbow
      {0.20, -torso + 0.28, 0.0},   // right_elbow
      {-0.21, -torso + 0.54, 0.05}, // left_wrist
      {0.21, -torso + 0.54, 0.05},  // right_wrist
  };

  GroundTruth gt;
  gt.cadence_steps_per_min = p.cadence_steps_per_min;
  gt.step_length_m = p.step_length_m;
  gt.stride_frequency_hz = f;
  PoseSequence& seq = gt.pose;
  seq.topology = topo;
  seq.dims = 3;
  seq.fps = p.fps;
  seq.frames.reserve(n);

  auto to_camera = [&](const Vec3& world) -> Vec3 {
    return {world[2], world[1] + staging.camera_height_m, staging.camera_distance_m - world[0]};
  };

  for (int i = 0; i < n; ++i) {
    const double t = i / p.fps;
    const double sway = p.lateral_sway_amp_m * std::sin(2.0 * kPi * f * t);
    const Vec3 pelvis{sway, -p.pelvis_height_m, walk_start + speed * t};

    std::array<Vec3, 17> world{};
    for (int j = 0; j < 11; ++j) world[j] = add(pelvis, upper[j]);
    const Vec3 left_hip = add(pelvis, {-w, 0.0, 0.0});
    const Vec3 right_hip = add(pelvis, {w, 0.0, 0.0});
    const Vec3 left_ankle{left_hip[0], -staging.ankle_height_m, pelvis[2] + ankle_forward(p, Side::left, t)};
    const Vec3 right_ankle{right_hip[0], -staging.ankle_height_m, pelvis[2] + ankle_forward(p, Side::right, t)};
    world[11] = left_hip;
    world[12] = right_hip;
    world[13] = solve_knee(left_hip, left_ankle, p.leg_segment_m, i);
    world[14] = solve_knee(right_hip, right_ankle, p.leg_segment_m, i);
    world[15] = left_ankle;
    world[16] = right_ankle;

    Frame frame(17);
    for (int j = 0; j < 17; ++j) frame[j] = {to_camera(world[j]), 1.0};
    seq.frames.push_back(std::move(frame));
  }

  // Maxima of sin(2*pi*f*t + phi) at t = (1/4 - phi/(2*pi) + k) / f.
  const double last_t = (n - 1) / p.fps;
  if (p.step_length_m > 0.0) {
    for (Side side : {Side::right, Side::left}) {
      auto& list = side == Side::right ? gt.right_strikes_s : gt.left_strikes_s;
      const double offset = 0.25 - side_phase(side) / (2.0 * kPi);
      for (int k = -1;; ++k) {
        const double t = (offset + k) / f;
        if (t > last_t + 1e-12) break;
        if (t >= -1e-12) list.push_back(t);
      }
    }
  }
  for (double t : gt.right_strikes_s) gt.strikes.push_back({Side::right, t});
  for (double t : gt.left_strikes_s) gt.strikes.push_back({Side::left, t});
  std::sort(gt.strikes.begin(), gt.strikes.end(), [](const auto& a, const auto& b) { return a.time_s < b.time_s; });
  return gt;
}

PoseSequence add_noise(const PoseSequence& seq, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ParameterError("noise sigma must be >= 0");
  if (sigma == 0.0) return seq;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  std::uniform_real_distribution<double> conf(0.5, 1.0);
  PoseSequence out = seq;
  for (Frame& frame : out.frames) {
    for (Keypoint& kp : frame) {
      for (int d = 0; d < out.dims; ++d) kp.coords[d] += gauss(rng);
      kp.confidence = conf(rng);
    }
  }
  return out;
}

PoseSequence project_sequence(const PoseSequence& seq3d, const CameraModel& cam) {
  if (seq3d.dims != 3) throw TypeError("project_sequence requires a 3D sequence");
  PoseSequence out;
  out.topology = seq3d.topology;
  out.dims = 2;
  out.fps = seq3d.fps;
  out.frames.reserve(seq3d.frames.size());
  for (std::size_t t = 0; t < seq3d.frames.size(); ++t) {
    const Frame& src = seq3d.frames[t];
    Frame dst(src.size());
    for (std::size_t j = 0; j < src.size(); ++j) {
      const Vec2 uv = project(src[j].coords, cam, static_cast<long>(t), static_cast<long>(j));
      dst[j] = {{uv[0], uv[1], 0.0}, src[j].confidence};
    }
    out.frames.push_back(std::move(dst));
  }
  return out;
}

}  // namespace aigaitor::synth
