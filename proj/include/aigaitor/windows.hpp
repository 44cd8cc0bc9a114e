#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aigaitor/skeleton.hpp"

namespace aigaitor::gait {

struct WindowSpec {
  std::size_t window_frames = 90;
  std::size_t stride_frames = 60;

  void check() const;
};

// A view into a sequence; valid while the sequence lives.
struct Window {
  std::size_t start = 0;
  std::span<const Frame> frames;
};

// Owned frames after normalization.
struct NormalizedWindow {
  std::size_t start = 0;
  int dims = 2;
  std::vector<Frame> frames;
};

// floor((N - W) / S) + 1 for N >= W, else 0.
std::size_t window_count(std::size_t n_frames, const WindowSpec& spec);

// Complete windows only; trailing partial windows are dropped.
std::vector<Window> make_windows(const PoseSequence& seq, const WindowSpec& spec = {});

// Centres each frame on the hip midpoint and divides by the median
// hip-midpoint-to-shoulder-midpoint distance over the window. Zero-confidence
// joints are written as the origin. Throws NormalizationError when the scale
// is below 1e-6 or no frame has all four torso joints.
NormalizedWindow normalize_window(const Window& window, const SkeletonTopology& topology, int dims);

}  // namespace aigaitor::gait
