#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aigaitor/skeleton.hpp"

namespace aigaitor::gait {

// Interior angle at `center` between the limbs to `joint_a` and `joint_b`, in
// degrees [0, 180]. Frames where either limb is shorter than 1e-9 are nullopt.
std::vector<std::optional<double>> joint_angle_series(const PoseSequence& seq, int center, int joint_a,
                                                      int joint_b);

struct GaitEvents {
  std::vector<double> left_strikes_s;
  std::vector<double> right_strikes_s;
  std::optional<double> cadence_estimate;  // from the stride period, before peak picking
};

// Heel strikes as maxima of each ankle's displacement from the hip midpoint
// along the walking direction (principal horizontal axis of the hip-midpoint
// path). Throws AnalysisError when hips or ankles are confident in fewer than
// half of the frames.
GaitEvents detect_gait_events(const PoseSequence& seq);

struct GaitMetrics {
  std::optional<double> cadence_steps_per_min;
  std::optional<double> mean_step_time_left_s;
  std::optional<double> mean_step_time_right_s;
  std::vector<double> left_strikes_s;
  std::vector<double> right_strikes_s;
  std::map<std::string, std::vector<std::optional<double>>> joint_angle_series;  // degrees
  double fps = 0.0;
  std::size_t n_frames = 0;

  nlohmann::json to_json() const;
  // One row per frame: frame, time_s, then one column per angle series.
  void write_csv(std::ostream& out) const;
};

GaitMetrics compute_metrics(const PoseSequence& seq);

}  // namespace aigaitor::gait
