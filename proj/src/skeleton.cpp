#include "aigaitor/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "aigaitor/errors.hpp"

namespace aigaitor {

using nlohmann::json;

std::optional<int> SkeletonTopology::find(std::string_view joint) const {
  for (std::size_t i = 0; i < joint_names.size(); ++i) {
    if (joint_names[i] == joint) return static_cast<int>(i);
  }
  return std::nullopt;
}

int SkeletonTopology::require(std::string_view joint) const {
  auto idx = find(joint);
  if (!idx) {
    throw SchemaError("topology '" + name + "' has no joint '" + std::string(joint) + "'");
  }
  return *idx;
}

void SkeletonTopology::check() const {
  const int n = static_cast<int>(joint_names.size());
  if (n < 2) throw ConfigError("topology '" + name + "': needs at least 2 joints");
  if (!parent_index.empty() && static_cast<int>(parent_index.size()) != n) {
    throw ConfigError("topology '" + name + "': parents length != joint count");
  }
  for (const auto& p : parent_index) {
    if (p && (*p < 0 || *p >= n)) throw ConfigError("topology '" + name + "': parent index out of range");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : bones) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      throw ConfigError("topology '" + name + "': bone index out of range");
    }
    if (a == b) throw ConfigError("topology '" + name + "': bone connects joint to itself");
    if (!seen.emplace(std::min(a, b), std::max(a, b)).second) {
      throw ConfigError("topology '" + name + "': duplicate bone");
    }
  }
}

SkeletonTopology SkeletonTopology::from_json(const json& doc) {
  SkeletonTopology topo;
  try {
    topo.name = doc.at("name").get<std::string>();
    topo.joint_names = doc.at("joints").get<std::vector<std::string>>();
    if (doc.contains("parents")) {
      for (const auto& p : doc.at("parents")) {
        if (p.is_null()) {
          topo.parent_index.emplace_back(std::nullopt);
        } else {
          topo.parent_index.emplace_back(p.get<int>());
        }
      }
    } else {
      topo.parent_index.assign(topo.joint_names.size(), std::nullopt);
    }
    for (const auto& b : doc.at("bones")) {
      if (!b.is_array() || b.size() != 2) throw ConfigError("bone entries must be [int, int]");
      topo.bones.emplace_back(b[0].get<int>(), b[1].get<int>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("topology JSON: ") + e.what());
  }
  topo.check();
  return topo;
}

json SkeletonTopology::to_json() const {
  json parents = json::array();
  for (const auto& p : parent_index) parents.push_back(p ? json(*p) : json(nullptr));
  json bone_list = json::array();
  for (const auto& [a, b] : bones) bone_list.push_back({a, b});
  return {{"name", name}, {"joints", joint_names}, {"parents", parents}, {"bones", bone_list}};
}

const SkeletonTopology& coco17() {
  static const SkeletonTopology topo = [] {
    SkeletonTopology t;
    t.name = "coco17";
    t.joint_names = {"nose",          "left_eye",       "right_eye",  "left_ear",    "right_ear",
                     "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
                     "right_wrist",   "left_hip",       "right_hip",  "left_knee",   "right_knee",
                     "left_ankle",    "right_ankle"};
    // Rooted at the left hip.
    const int parents[17] = {5, 0, 0, 1, 2, 11, 12, 5, 6, 7, 8, -1, 11, 11, 12, 13, 14};
    for (int p : parents) t.parent_index.push_back(p < 0 ? std::nullopt : std::optional<int>(p));
    t.bones = {{15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
               {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
               {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6}};
    t.check();
    return t;
  }();
  return topo;
}

SkeletonTopology generic_topology(std::string name, std::size_t n_joints) {
  SkeletonTopology t;
  t.name = std::move(name);
  for (std::size_t j = 0; j < n_joints; ++j) t.joint_names.push_back("j" + std::to_string(j));
  t.parent_index.assign(n_joints, std::nullopt);
  return t;
}

SkeletonTopology topology_by_name(const std::string& name, std::size_t n_joints) {
  if (name == coco17().name && n_joints == coco17().joint_count()) return coco17();
  return generic_topology(name, n_joints);
}

void CameraModel::check() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("camera focal lengths must be > 0");
  if (width <= 0 || height <= 0) throw ConfigError("camera image size must be > 0");
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw ConfigError("camera principal point must be finite");
}

CameraModel CameraModel::from_json(const json& doc) {
  CameraModel cam;
  try {
    cam.fx = doc.at("fx").get<double>();
    cam.fy = doc.at("fy").get<double>();
    cam.cx = doc.at("cx").get<double>();
    cam.cy = doc.at("cy").get<double>();
    cam.width = doc.at("width").get<int>();
    cam.height = doc.at("height").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("camera JSON: ") + e.what());
  }
  cam.check();
  return cam;
}

json CameraModel::to_json() const {
  return {{"fx", fx}, {"fy", fy}, {"cx", cx}, {"cy", cy}, {"width", width}, {"height", height}};
}

BoundingBox BoundingBox::clamped(const CameraModel& cam) const {
  const double x0 = std::clamp(x, 0.0, static_cast<double>(cam.width));
  const double y0 = std::clamp(y, 0.0, static_cast<double>(cam.height));
  const double x1 = std::clamp(x + std::max(w, 0.0), 0.0, static_cast<double>(cam.width));
  const double y1 = std::clamp(y + std::max(h, 0.0), 0.0, static_cast<double>(cam.height));
  return {x0, y0, x1 - x0, y1 - y0, std::clamp(confidence, 0.0, 1.0)};
}

Vec2 project(const Vec3& point, const CameraModel& cam, long frame, long joint) {
  const double z = point[2];
  if (!(z > 0.0)) {
    std::ostringstream msg;
    msg << "cannot project point with non-positive depth z=" << z;
    if (frame >= 0) msg << " at frame " << frame;
    if (joint >= 0) msg << " joint " << joint;
    throw DomainError(msg.str(), frame, joint);
  }
  return {cam.fx * point[0] / z + cam.cx, cam.fy * point[1] / z + cam.cy};
}

std::vector<std::vector<double>> bone_lengths(const PoseSequence& seq) {
  if (seq.dims != 3) throw TypeError("bone_lengths requires a 3D sequence");
  const auto& bones = seq.topology.bones;
  std::vector<std::vector<double>> out(seq.frames.size(), std::vector<double>(bones.size()));
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const Frame& f = seq.frames[t];
    for (std::size_t b = 0; b < bones.size(); ++b) {
      const auto& pa = f.at(bones[b].first).coords;
      const auto& pb = f.at(bones[b].second).coords;
      const double dx = pa[0] - pb[0], dy = pa[1] - pb[1], dz = pa[2] - pb[2];
      out[t][b] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }
  }
  return out;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::ragged_frame: return "ragged_frame";
    case ViolationKind::non_finite: return "non_finite";
    case ViolationKind::confidence_range: return "confidence_range";
    case ViolationKind::bad_fps: return "bad_fps";
    case ViolationKind::bad_dims: return "bad_dims";
  }
  return "unknown";
}

std::vector<Violation> validate(const PoseSequence& seq) {
  std::vector<Violation> out;
  if (!(seq.fps > 0.0) || !std::isfinite(seq.fps)) out.push_back({-1, -1, ViolationKind::bad_fps});
  if (seq.dims != 2 && seq.dims != 3) {
    out.push_back({-1, -1, ViolationKind::bad_dims});
    return out;
  }
  const std::size_t n_joints = seq.joint_count();
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const Frame& f = seq.frames[t];
    const long frame = static_cast<long>(t);
    if (f.size() != n_joints) out.push_back({frame, -1, ViolationKind::ragged_frame});
    for (std::size_t j = 0; j < f.size(); ++j) {
      const long joint = static_cast<long>(j);
      const Keypoint& kp = f[j];
      bool finite = std::isfinite(kp.confidence);
      for (int d = 0; d < seq.dims; ++d) finite = finite && std::isfinite(kp.coords[d]);
      if (!finite) {
        out.push_back({frame, joint, ViolationKind::non_finite});
      } else if (kp.confidence < 0.0 || kp.confidence > 1.0) {
        out.push_back({frame, joint, ViolationKind::confidence_range});
      }
    }
  }
  return out;
}

void require_valid(const PoseSequence& seq) {
  const auto violations = validate(seq);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << violations.size() << " invariant violation(s):";
  for (std::size_t i = 0; i < std::min<std::size_t>(violations.size(), 5); ++i) {
    const auto& v = violations[i];
    msg << ' ' << to_string(v.kind) << "(frame " << v.frame << ", joint " << v.joint << ')';
  }
  throw ValidationError(msg.str());
}

}  // namespace aigaitor
