#pragma once

// Closed-form synthetic walker with analytically known heel strikes and rigid
// limbs. Serves as ground truth for the refiner and gait metrics.
//
// World frame: X lateral (walker's right), Y down, Z walking direction,
// ground at Y = 0. The default camera sits to the walker's right and looks
// back along -X, so the walk crosses the image left to right.

#include <cstdint>
#include <vector>

#include "aigaitor/skeleton.hpp"

namespace aigaitor::synth {

struct GaitParams {
  double duration_s = 10.0;
  double fps = 60.0;
  double cadence_steps_per_min = 120.0;
  double step_length_m = 0.6;
  double leg_segment_m = 0.45;  // thigh = shank
  double pelvis_height_m = 0.9;
  double lateral_sway_amp_m = 0.02;
  std::uint64_t noise_seed = 0;

  void check() const;
  static GaitParams from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

// Where the walkway sits relative to the camera.
struct Staging {
  double camera_distance_m = 8.0;  // along world X, from the walk line
  double camera_height_m = 1.0;
  double ankle_height_m = 0.08;
  double hip_half_width_m = 0.1;
};

enum class Side { left, right };

struct HeelStrike {
  Side side;
  double time_s;
};

struct GroundTruth {
  std::vector<double> left_strikes_s;
  std::vector<double> right_strikes_s;
  std::vector<HeelStrike> strikes;  // merged, time-ordered
  double cadence_steps_per_min = 0.0;
  double step_length_m = 0.0;
  double stride_frequency_hz = 0.0;
  PoseSequence pose;  // camera-frame 3D

  nlohmann::json to_json() const;  // everything but the pose
};

int frame_count(const GaitParams& p);

// Closed-form knee interior angle (degrees) for a given frame time and side.
double knee_angle_deg(const GaitParams& p, const Staging& staging, Side side, double t);

// Returns (sequence, ground truth); the sequence is also stored in truth.pose.
GroundTruth generate(const GaitParams& p, const Staging& staging = {});

// Default camera for the staging above (1920x1080).
CameraModel default_camera();

// Adds i.i.d. N(0, sigma^2) to every coordinate and redraws confidences
// uniformly in [0.5, 1]. sigma == 0 returns the input unchanged.
PoseSequence add_noise(const PoseSequence& seq, double sigma, std::uint64_t seed);

PoseSequence project_sequence(const PoseSequence& seq3d, const CameraModel& cam);

}  // namespace aigaitor::synth
