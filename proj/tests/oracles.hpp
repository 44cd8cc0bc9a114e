#pragma once

// Test-only reference computations. These are written straight from the
// defining formulas and share no code with the kernels they check.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "aigaitor/classifier.hpp"
#include "aigaitor/refine.hpp"
#include "aigaitor/skeleton.hpp"

namespace oracle {

using aigaitor::CameraModel;
using aigaitor::PoseSequence;

// E(P) over PoseSequence values, using skeleton-core projection.
inline double objective(const PoseSequence& P, const PoseSequence& obs, const CameraModel& cam,
                        const std::vector<double>& target, double lambda_bone, double lambda_smooth) {
  double reproj = 0.0, bone = 0.0, smooth = 0.0;
  const std::size_t T = P.frames.size(), J = P.joint_count();
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < J; ++j) {
      const auto uv = aigaitor::project(P.frames[t][j].coords, cam);
      const double du = (uv[0] - obs.frames[t][j].coords[0]) / cam.fx;
      const double dv = (uv[1] - obs.frames[t][j].coords[1]) / cam.fx;
      reproj += obs.frames[t][j].confidence * (du * du + dv * dv);
    }
  }
  const auto lengths = aigaitor::bone_lengths(P);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < target.size(); ++b) bone += std::pow(lengths[t][b] - target[b], 2);
  }
  for (std::size_t t = 1; t + 1 < T; ++t) {
    for (std::size_t j = 0; j < J; ++j) {
      for (int a = 0; a < 3; ++a) {
        smooth += std::pow(P.frames[t + 1][j].coords[a] - 2.0 * P.frames[t][j].coords[a] +
                               P.frames[t - 1][j].coords[a],
                           2);
      }
    }
  }
  return reproj + lambda_bone * bone + lambda_smooth * smooth;
}

// Central finite differences of the oracle objective, same layout as flatten().
inline std::vector<double> fd_gradient(PoseSequence P, const PoseSequence& obs, const CameraModel& cam,
                                       const std::vector<double>& target, double lambda_bone, double lambda_smooth,
                                       double h) {
  std::vector<double> g;
  for (std::size_t t = 0; t < P.frames.size(); ++t) {
    for (std::size_t j = 0; j < P.joint_count(); ++j) {
      for (int a = 0; a < 3; ++a) {
        double& c = P.frames[t][j].coords[a];
        const double saved = c;
        c = saved + h;
        const double up = objective(P, obs, cam, target, lambda_bone, lambda_smooth);
        c = saved - h;
        const double down = objective(P, obs, cam, target, lambda_bone, lambda_smooth);
        c = saved;
        g.push_back((up - down) / (2.0 * h));
      }
    }
  }
  return g;
}

// Unoptimized forward pass: explicit loops over (t, i, j, c, h) for the graph
// convolution, then (t, j, h, k) for the temporal convolution, then pooling.
inline std::vector<double> classify(const aigaitor::gait::NormalizedWindow& win,
                                    const aigaitor::gait::ClassifierWeights& w) {
  const std::size_t T = win.frames.size(), J = w.joints, C = w.in_channels, H = w.hidden, K = w.kernel;
  std::vector<double> h1(T * J * H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < J; ++i) {
      for (std::size_t h = 0; h < H; ++h) {
        double acc = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
          for (std::size_t c = 0; c < C; ++c) {
            acc += w.adjacency[i * J + j] * win.frames[t][j].coords[c] * w.w1[c * H + h];
          }
        }
        h1[(t * J + i) * H + h] = acc > 0.0 ? acc : 0.0;
      }
    }
  }
  std::vector<double> h2(T * J * H, 0.0);
  const long half = static_cast<long>(K / 2);
  for (long t = 0; t < static_cast<long>(T); ++t) {
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t h = 0; h < H; ++h) {
        double acc = 0.0;
        for (long k = 0; k < static_cast<long>(K); ++k) {
          const long s = t + k - half;
          if (s >= 0 && s < static_cast<long>(T)) acc += w.temporal_kernel[h * K + k] * h1[(s * J + j) * H + h];
        }
        h2[(t * J + j) * H + h] = acc;
      }
    }
  }
  std::vector<double> logits(w.b_out);
  for (std::size_t h = 0; h < H; ++h) {
    double pooled = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < J; ++j) pooled += h2[(t * J + j) * H + h];
    }
    pooled /= static_cast<double>(T * J);
    for (std::size_t c = 0; c < logits.size(); ++c) logits[c] += pooled * w.w_out[h * logits.size() + c];
  }
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : logits) sum += (v = std::exp(v - mx));
  for (double& v : logits) v /= sum;
  return logits;
}

}  // namespace oracle
