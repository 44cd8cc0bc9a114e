#pragma once

// Sequence-level 3D pose refinement against 2D observations:
//
//   E(P) = sum_{t,j} w_tj * |project(P_tj) - k_tj|^2 / fx^2
//        + lambda_bone   * sum_{t,b} (|bone_b(t)| - L_b)^2
//        + lambda_smooth * sum_{t,j} |P_{t+1,j} - 2 P_tj + P_{t-1,j}|^2
//
// L_b is the per-bone median length over the initial trajectory.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "aigaitor/refine_kernels.hpp"
#include "aigaitor/skeleton.hpp"

namespace aigaitor::refine {

struct RefineConfig {
  double lambda_bone = 1.0;
  double lambda_smooth = 0.1;
  int max_iters = 200;
  double step_size = 0.01;  // meters, initial per-coordinate step scale
  double rel_tol = 1e-6;
  int patience = 10;
  // Stop as soon as max |dE/dP| falls to this value.
  double grad_tol = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_backoff = 40;
  bool parallel = true;

  void check() const;
  static RefineConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct RefineResult {
  PoseSequence refined;
  std::vector<double> objective_trace;  // [0] is the initial objective
  int iterations_run = 0;
  bool converged = false;
};

std::vector<double> flatten(const PoseSequence& seq3d);
void unflatten(std::span<const double> x, PoseSequence& seq3d);

// Per-bone median length over all frames.
std::vector<double> median_bone_lengths(const PoseSequence& seq3d);

// Builds the fixed part of the problem; target lengths come from `initial`.
Problem make_problem(const PoseSequence& initial, const PoseSequence& obs2d, const CameraModel& cam,
                     const RefineConfig& cfg);

// E at P, with L_b taken from `initial`. Throws DomainError on z <= 0.
double objective(const Problem& problem, std::span<const double> x, bool parallel = true);
double objective(const PoseSequence& P, const PoseSequence& obs2d, const CameraModel& cam,
                 const RefineConfig& cfg);

std::vector<double> gradient(const Problem& problem, std::span<const double> x, bool parallel = true);
std::vector<double> gradient(const PoseSequence& P, const PoseSequence& obs2d, const CameraModel& cam,
                             const RefineConfig& cfg);

struct GradientCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
};

// Central finite differences over every coordinate. Relative error per
// component is |a - n| / max(|a|, |n|, floor).
GradientCheck check_gradient(const Problem& problem, std::span<const double> x, double h = 1e-5,
                             double floor = 1e-6);

RefineResult refine_sequence(const PoseSequence& initial, const PoseSequence& obs2d, const CameraModel& cam,
                             const RefineConfig& cfg = {});

void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& trace);

}  // namespace aigaitor::refine
