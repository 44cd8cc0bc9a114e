#pragma once

// Core value types: skeleton topology, keypoint sequences, pinhole camera.
//
// Conventions, stated once:
//   image:  origin top-left, u to the right, v downward, pixels.
//   camera: x right, y down, z forward, meters.
// A missing or occluded joint is stored with confidence 0 and zero coords so
// every frame stays rectangular.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace aigaitor {

struct SkeletonTopology {
  std::string name;
  std::vector<std::string> joint_names;
  std::vector<std::optional<int>> parent_index;
  std::vector<std::pair<int, int>> bones;

  std::size_t joint_count() const { return joint_names.size(); }

  // Index of a named joint, or nullopt.
  std::optional<int> find(std::string_view joint) const;
  int require(std::string_view joint) const;

  // Throws ConfigError on any structural violation (joint count >= 2, bone
  // indices in range, no self bones, no duplicate unordered pairs, parents in
  // range).
  void check() const;

  static SkeletonTopology from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  bool operator==(const SkeletonTopology&) const = default;
};

// The 17-joint COCO keypoint set.
const SkeletonTopology& coco17();

// Placeholder for sequences whose topology is known only by name: joints
// j0..j{n-1}, no bones. Allows n >= 1.
SkeletonTopology generic_topology(std::string name, std::size_t n_joints);

// Resolves a builtin topology name ("coco17"), else a generic placeholder.
SkeletonTopology topology_by_name(const std::string& name, std::size_t n_joints);

struct Keypoint {
  std::array<double, 3> coords{0.0, 0.0, 0.0};  // z unused for 2D
  double confidence = 0.0;

  bool operator==(const Keypoint&) const = default;
};

using Frame = std::vector<Keypoint>;

struct PoseSequence {
  SkeletonTopology topology;
  int dims = 2;
  double fps = 60.0;
  std::vector<Frame> frames;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t joint_count() const { return topology.joint_count(); }
  double duration_s() const { return static_cast<double>(frames.size()) / fps; }

  bool operator==(const PoseSequence&) const = default;
};

struct CameraModel {
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 960.0;
  double cy = 540.0;
  int width = 1920;
  int height = 1080;

  void check() const;
  static CameraModel from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double confidence = 0.0;

  // Intersection with the image rectangle; an empty intersection yields w=h=0.
  BoundingBox clamped(const CameraModel& cam) const;
};

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

// Pinhole projection. Throws DomainError (carrying frame/joint when given)
// for z <= 0.
Vec2 project(const Vec3& point, const CameraModel& cam, long frame = -1, long joint = -1);

// Per-frame, per-bone Euclidean lengths. Requires a 3D sequence.
std::vector<std::vector<double>> bone_lengths(const PoseSequence& seq);

enum class ViolationKind { ragged_frame, non_finite, confidence_range, bad_fps, bad_dims };

std::string_view to_string(ViolationKind kind);

struct Violation {
  long frame = -1;
  long joint = -1;
  ViolationKind kind = ViolationKind::non_finite;

  bool operator==(const Violation&) const = default;
};

// Every invariant violation, empty when the sequence is well formed.
std::vector<Violation> validate(const PoseSequence& seq);

// Throws ValidationError summarizing the first violations.
void require_valid(const PoseSequence& seq);

}  // namespace aigaitor
