#pragma once

// Objective and gradient kernels for sequence pose refinement.
//
// Trajectory layout: flat, frame-major, joint-minor, xyz innermost
// (index = (t * J + j) * 3 + axis). Observations: (t * J + j) * 2 + {u, v}.
//
// Each kernel has a serial reference (straight transcription of the energy,
// scatter-style gradient) and an OpenMP version that partitions work by frame.
// The OpenMP versions reduce per-frame partials in frame order, so their
// results do not depend on the thread count.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "aigaitor/skeleton.hpp"

namespace aigaitor::refine {

struct Problem {
  std::size_t frames = 0;
  std::size_t joints = 0;
  CameraModel camera;
  std::vector<double> observations;  // frames * joints * 2, pixels
  std::vector<double> weights;       // frames * joints, observation confidence
  std::vector<std::pair<int, int>> bones;
  std::vector<double> target_lengths;  // one per bone
  double lambda_bone = 1.0;
  double lambda_smooth = 0.1;

  std::size_t size() const { return frames * joints * 3; }
};

// Energy split by term; total() is what the optimizer minimizes.
struct Energy {
  double reprojection = 0.0;
  double bone = 0.0;       // unweighted sum of squared length deviations
  double smoothness = 0.0; // unweighted sum of squared second differences

  double total(const Problem& p) const {
    return reprojection + p.lambda_bone * bone + p.lambda_smooth * smoothness;
  }
};

// Both return an Energy with reprojection = +inf if any depth is <= 0.
Energy energy_serial(const Problem& p, std::span<const double> x);
Energy energy_parallel(const Problem& p, std::span<const double> x);

// grad must have p.size() entries; it is overwritten.
void gradient_serial(const Problem& p, std::span<const double> x, std::span<double> grad);
void gradient_parallel(const Problem& p, std::span<const double> x, std::span<double> grad);

}  // namespace aigaitor::refine
