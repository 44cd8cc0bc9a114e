#pragma once

// Minimal fixed-adjacency graph-convolutional window classifier:
//
//   H1[t]  = relu(A * X[t] * W1)                 (J x H per frame)
//   H2     = per-channel temporal conv of H1 over t, kernel K, zero "same" padding
//   pooled = mean of H2 over t and joints        (H)
//   scores = softmax(pooled * W_out + b_out)
//
// All matrices are dense row-major.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aigaitor/skeleton.hpp"
#include "aigaitor/windows.hpp"

namespace aigaitor::gait {

struct ClassifierWeights {
  std::size_t joints = 0;
  std::size_t in_channels = 0;
  std::size_t hidden = 0;
  std::size_t kernel = 9;
  std::vector<double> adjacency;        // joints x joints, rows sum to 1
  std::vector<double> w1;               // in_channels x hidden
  std::vector<double> temporal_kernel;  // hidden x kernel
  std::vector<double> w_out;            // hidden x classes
  std::vector<double> b_out;            // classes
  std::vector<std::string> class_names;

  std::size_t classes() const { return b_out.size(); }

  // Throws ConfigError on inconsistent dimensions, even kernel, or adjacency
  // rows not summing to 1 within 1e-6.
  void check() const;

  static ClassifierWeights from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  static ClassifierWeights load(const std::filesystem::path& path);
};

// Row-normalized (A + I) built from a topology's bones.
std::vector<double> normalized_adjacency(const SkeletonTopology& topology);

// Deterministic pseudo-random weights over `topology`; used to produce the
// bundled weights file.
ClassifierWeights make_seeded_weights(const SkeletonTopology& topology, std::size_t in_channels, std::size_t hidden,
                                      std::size_t kernel, std::vector<std::string> class_names,
                                      std::uint64_t seed);

// Throws SchemaError naming the offending dimension.
void check_compatible(const ClassifierWeights& w, std::size_t joints, int dims);

std::vector<double> classify_window_serial(const NormalizedWindow& window, const ClassifierWeights& w);
std::vector<double> classify_window(const NormalizedWindow& window, const ClassifierWeights& w);

struct WindowPrediction {
  std::size_t start = 0;
  std::size_t class_index = 0;
  std::vector<double> scores;
};

// Normalizes and classifies every window; windows run in parallel.
std::vector<WindowPrediction> classify_windows(const PoseSequence& seq, const std::vector<Window>& windows,
                                               const ClassifierWeights& w);

struct TrialResult {
  std::vector<WindowPrediction> per_window;
  std::size_t trial_class = 0;
  std::vector<int> vote_counts;

  nlohmann::json to_json(const std::vector<std::string>& class_names) const;
};

// Majority vote. Ties go to the class with the highest mean score over all
// windows, then to the lowest class index. Throws AnalysisError for zero windows.
TrialResult majority_vote(const std::vector<WindowPrediction>& per_window);

}  // namespace aigaitor::gait
