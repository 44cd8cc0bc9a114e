#include <cmath>
#include <limits>
#include <fstream>
#include <random>

#include "aigaitor/errors.hpp"
#include "aigaitor/skeleton.hpp"
#include "aigaitor/synth.hpp"
#include "doctest.h"

using namespace aigaitor;

namespace {

PoseSequence two_joint_3d(Vec3 a, Vec3 b) {
  PoseSequence s;
  s.topology = generic_topology("pair", 2);
  s.topology.bones = {{0, 1}};
  s.dims = 3;
  s.frames = {{Keypoint{a, 1.0}, Keypoint{b, 1.0}}};
  return s;
}

}  // namespace

TEST_CASE("project maps the optical axis to the principal point") {
  CameraModel cam;
  const auto uv = project({0.0, 0.0, 2.0}, cam);
  CHECK(uv[0] == doctest::Approx(960.0));
  CHECK(uv[1] == doctest::Approx(540.0));
  const auto uv2 = project({0.5, 0.0, 2.0}, cam);
  CHECK(uv2[0] == doctest::Approx(1210.0));
  CHECK(uv2[1] == doctest::Approx(540.0));
}

TEST_CASE("project with anisotropic focal lengths") {
  CameraModel cam{800.0, 820.0, 640.0, 360.0, 1280, 720};
  const auto uv = project({0.3, -0.4, 1.5}, cam);
  // u = 800 * 0.2 + 640, v = 820 * (-0.4 / 1.5) + 360
  CHECK(uv[0] == doctest::Approx(800.0).epsilon(1e-12));
  CHECK(uv[1] == doctest::Approx(820.0 * (-0.4 / 1.5) + 360.0).epsilon(1e-12));
  CHECK(uv[1] == doctest::Approx(141.3333333333).epsilon(1e-9));
}

TEST_CASE("project rejects non-positive depth with indices") {
  CameraModel cam;
  CHECK_THROWS_AS(project({0.0, 0.0, 0.0}, cam), DomainError);
  try {
    project({0.0, 0.0, -1.0}, cam, 4, 11);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.frame() == 4);
    CHECK(e.joint() == 11);
  }
}

TEST_CASE("projection is invariant to scaling along the ray") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> xy(-2.0, 2.0), z(0.5, 10.0), lam(0.1, 10.0);
  CameraModel cam{1234.0, 987.0, 600.0, 400.0, 1200, 800};
  for (int i = 0; i < 500; ++i) {
    const Vec3 p{xy(rng), xy(rng), z(rng)};
    const double l = lam(rng);
    const auto a = project(p, cam);
    const auto b = project({p[0] * l, p[1] * l, p[2] * l}, cam);
    CHECK(std::abs(a[0] - b[0]) < 1e-9);
    CHECK(std::abs(a[1] - b[1]) < 1e-9);
    const auto c = project({0.0, 0.0, p[2]}, cam);
    CHECK(c[0] == cam.cx);
    CHECK(c[1] == cam.cy);
  }
}

TEST_CASE("bone lengths") {
  CHECK(bone_lengths(two_joint_3d({0, 0, 1}, {0, 0, 2}))[0][0] == doctest::Approx(1.0));
  CHECK(bone_lengths(two_joint_3d({1, 2, 3}, {1, 2, 3}))[0][0] == 0.0);

  auto flat = two_joint_3d({0, 0, 1}, {0, 0, 2});
  flat.dims = 2;
  CHECK_THROWS_AS(bone_lengths(flat), TypeError);
}

TEST_CASE("bone lengths are translation invariant") {
  auto truth = synth::generate({});
  auto moved = truth.pose;
  for (auto& f : moved.frames) {
    for (auto& k : f) {
      k.coords[0] += 3.25;
      k.coords[1] -= 1.5;
      k.coords[2] += 0.75;
    }
  }
  const auto a = bone_lengths(truth.pose);
  const auto b = bone_lengths(moved);
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t i = 0; i < a[t].size(); ++i) CHECK(std::abs(a[t][i] - b[t][i]) < 1e-9);
  }
}

TEST_CASE("synthetic legs are rigid at 0.45 + 0.45 m") {
  const auto truth = synth::generate({});
  const auto& topo = truth.pose.topology;
  const auto lengths = bone_lengths(truth.pose);
  const std::pair<const char*, const char*> legs[] = {
      {"left_hip", "left_knee"}, {"left_knee", "left_ankle"}, {"right_hip", "right_knee"}, {"right_knee", "right_ankle"}};
  for (auto [a, b] : legs) {
    const int ia = topo.require(a), ib = topo.require(b);
    std::size_t bi = topo.bones.size();
    for (std::size_t i = 0; i < topo.bones.size(); ++i) {
      auto [p, q] = topo.bones[i];
      if ((p == ia && q == ib) || (p == ib && q == ia)) bi = i;
    }
    REQUIRE(bi < topo.bones.size());
    for (const auto& row : lengths) CHECK(std::abs(row[bi] - 0.45) < 1e-9);
  }
}

TEST_CASE("validate reports violations with indices") {
  auto truth = synth::generate({});
  CHECK(truth.pose.frame_count() == 600);
  CHECK(validate(truth.pose).empty());

  auto bad = truth.pose;
  bad.frames[3][7].confidence = 1.5;
  auto v = validate(bad);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == Violation{3, 7, ViolationKind::confidence_range});

  bad = truth.pose;
  bad.frames[10][2].coords[1] = std::numeric_limits<double>::quiet_NaN();
  v = validate(bad);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::non_finite);
  CHECK(v[0].frame == 10);
  CHECK(v[0].joint == 2);

  bad = truth.pose;
  bad.frames[5].pop_back();
  bad.fps = 0.0;
  v = validate(bad);
  CHECK(v.size() == 2);
  CHECK_THROWS_AS(require_valid(bad), ValidationError);
}

TEST_CASE("topology checks and JSON round trip") {
  const auto& c = coco17();
  CHECK(c.joint_count() == 17);
  CHECK_NOTHROW(c.check());
  CHECK(SkeletonTopology::from_json(c.to_json()) == c);
  CHECK(c.find("left_ankle").has_value());
  CHECK_FALSE(c.find("tail").has_value());
  CHECK_THROWS_AS(c.require("tail"), SchemaError);

  auto self_loop = c;
  self_loop.bones.push_back({3, 3});
  CHECK_THROWS(self_loop.check());
  auto dup = c;
  dup.bones.push_back({dup.bones[0].second, dup.bones[0].first});
  CHECK_THROWS(dup.check());
  auto out_of_range = c;
  out_of_range.bones.push_back({0, 17});
  CHECK_THROWS(out_of_range.check());
}

TEST_CASE("shipped topology file matches the built-in one") {
  const auto path = std::string(AIGAITOR_DATA_DIR) + "/topologies/coco17.json";
  std::ifstream in(path);
  REQUIRE(in.good());
  CHECK(SkeletonTopology::from_json(nlohmann::json::parse(in)) == coco17());
}

TEST_CASE("camera and bounding box") {
  CameraModel cam;
  CHECK_NOTHROW(cam.check());
  cam.fx = 0.0;
  CHECK_THROWS(cam.check());
  CameraModel ok;
  CHECK(CameraModel::from_json(ok.to_json()).fx == ok.fx);

  const BoundingBox box{-10.0, 1000.0, 100.0, 200.0, 0.9};
  const auto c = box.clamped(ok);
  CHECK(c.x == 0.0);
  CHECK(c.w == doctest::Approx(90.0));
  CHECK(c.y + c.h <= ok.height);
  CHECK(c.w >= 0.0);
  CHECK(c.h >= 0.0);
  const auto again = c.clamped(ok);
  CHECK(again.x == c.x);
  CHECK(again.w == c.w);
}
