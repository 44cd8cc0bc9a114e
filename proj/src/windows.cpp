#include "aigaitor/windows.hpp"

#include <algorithm>
#include <cmath>

#include "aigaitor/errors.hpp"

namespace aigaitor::gait {

void WindowSpec::check() const {
  if (window_frames < 1 || stride_frames < 1) throw ConfigError("window and stride must be >= 1 frame");
}

std::size_t window_count(std::size_t n_frames, const WindowSpec& spec) {
  spec.check();
  if (n_frames < spec.window_frames) return 0;
  return (n_frames - spec.window_frames) / spec.stride_frames + 1;
}

std::vector<Window> make_windows(const PoseSequence& seq, const WindowSpec& spec) {
  const std::size_t count = window_count(seq.frames.size(), spec);
  std::vector<Window> out;
  out.reserve(count);
  const std::span<const Frame> all(seq.frames);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t start = i * spec.stride_frames;
    out.push_back({start, all.subspan(start, spec.window_frames)});
  }
  return out;
}

NormalizedWindow normalize_window(const Window& window, const SkeletonTopology& topology, int dims) {
  if (window.frames.empty()) throw NormalizationError("cannot normalize an empty window");
  const int lh = topology.require("left_hip"), rh = topology.require("right_hip");
  const int ls = topology.require("left_shoulder"), rs = topology.require("right_shoulder");

  auto midpoint = [dims](const Keypoint& a, const Keypoint& b) {
    Vec3 m{0.0, 0.0, 0.0};
    for (int d = 0; d < dims; ++d) m[d] = 0.5 * (a.coords[d] + b.coords[d]);
    return m;
  };

  std::vector<double> torso;
  torso.reserve(window.frames.size());
  for (const Frame& f : window.frames) {
    if (f[lh].confidence <= 0.0 || f[rh].confidence <= 0.0 || f[ls].confidence <= 0.0 || f[rs].confidence <= 0.0) {
      continue;
    }
    const Vec3 hip = midpoint(f[lh], f[rh]);
    const Vec3 sh = midpoint(f[ls], f[rs]);
    double sq = 0.0;
    for (int d = 0; d < dims; ++d) sq += (sh[d] - hip[d]) * (sh[d] - hip[d]);
    torso.push_back(std::sqrt(sq));
  }
  if (torso.empty()) throw NormalizationError("no frame in window has all torso joints visible");
  std::sort(torso.begin(), torso.end());
  const std::size_t n = torso.size();
  const double scale = n % 2 ? torso[n / 2] : 0.5 * (torso[n / 2 - 1] + torso[n / 2]);
  if (scale < 1e-6) throw NormalizationError("degenerate torso scale in window starting at frame " +
                                             std::to_string(window.start));

  NormalizedWindow out;
  out.start = window.start;
  out.dims = dims;
  out.frames.reserve(window.frames.size());
  for (const Frame& f : window.frames) {
    const Vec3 centre = midpoint(f[lh], f[rh]);
    Frame g(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
      g[j].confidence = f[j].confidence;
      if (f[j].confidence <= 0.0) continue;
      for (int d = 0; d < dims; ++d) g[j].coords[d] = (f[j].coords[d] - centre[d]) / scale;
    }
    out.frames.push_back(std::move(g));
  }
  return out;
}

}  // namespace aigaitor::gait
