#include "aigaitor/refine_kernels.hpp"

#include <cmath>
#include <limits>

namespace aigaitor::refine {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Residual in normalized image units (pixels / fx).
struct Reprojection {
  double ru, rv;
};

inline Reprojection residual(const Problem& p, const double* xyz, const double* obs) {
  const CameraModel& c = p.camera;
  const double u = c.fx * xyz[0] / xyz[2] + c.cx;
  const double v = c.fy * xyz[1] / xyz[2] + c.cy;
  return {(u - obs[0]) / c.fx, (v - obs[1]) / c.fx};
}

inline double bone_length(const double* a, const double* b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Energy terms attributable to frame t: reprojection and bones of frame t,
// plus the second difference centred at t.
Energy frame_energy(const Problem& p, std::span<const double> x, std::size_t t) {
  Energy e;
  const std::size_t J = p.joints;
  for (std::size_t j = 0; j < J; ++j) {
    const std::size_t k = t * J + j;
    const double* xyz = &x[k * 3];
    if (!(xyz[2] > 0.0)) {
      e.reprojection = kInf;
      return e;
    }
    const double w = p.weights[k];
    if (w == 0.0) continue;
    const auto r = residual(p, xyz, &p.observations[k * 2]);
    e.reprojection += w * (r.ru * r.ru + r.rv * r.rv);
  }
  for (std::size_t b = 0; b < p.bones.size(); ++b) {
    const double len = bone_length(&x[(t * J + p.bones[b].first) * 3], &x[(t * J + p.bones[b].second) * 3]);
    const double d = len - p.target_lengths[b];
    e.bone += d * d;
  }
  if (t >= 1 && t + 1 < p.frames) {
    for (std::size_t i = 0; i < J * 3; ++i) {
      const double s = x[(t + 1) * J * 3 + i] - 2.0 * x[t * J * 3 + i] + x[(t - 1) * J * 3 + i];
      e.smoothness += s * s;
    }
  }
  return e;
}

Energy reduce_in_order(const std::vector<Energy>& parts) {
  Energy e;
  for (const Energy& f : parts) {
    e.reprojection += f.reprojection;
    e.bone += f.bone;
    e.smoothness += f.smoothness;
  }
  return e;
}

}  // namespace

Energy energy_serial(const Problem& p, std::span<const double> x) {
  const std::size_t T = p.frames, J = p.joints;
  Energy e;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < J; ++j) {
      const std::size_t k = t * J + j;
      if (!(x[k * 3 + 2] > 0.0)) {
        e.reprojection = kInf;
        return e;
      }
      const auto r = residual(p, &x[k * 3], &p.observations[k * 2]);
      e.reprojection += p.weights[k] * (r.ru * r.ru + r.rv * r.rv);
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < p.bones.size(); ++b) {
      const auto [ja, jb] = p.bones[b];
      const double d = bone_length(&x[(t * J + ja) * 3], &x[(t * J + jb) * 3]) - p.target_lengths[b];
      e.bone += d * d;
    }
  }
  for (std::size_t t = 1; t + 1 < T; ++t) {
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t a = 0; a < 3; ++a) {
        const double s = x[((t + 1) * J + j) * 3 + a] - 2.0 * x[(t * J + j) * 3 + a] + x[((t - 1) * J + j) * 3 + a];
        e.smoothness += s * s;
      }
    }
  }
  return e;
}

Energy energy_parallel(const Problem& p, std::span<const double> x) {
  const long T = static_cast<long>(p.frames);
  std::vector<Energy> parts(p.frames);
#pragma omp parallel for schedule(static)
  for (long t = 0; t < T; ++t) parts[t] = frame_energy(p, x, static_cast<std::size_t>(t));
  for (const Energy& f : parts) {
    if (std::isinf(f.reprojection)) return {kInf, 0.0, 0.0};
  }
  return reduce_in_order(parts);
}

void gradient_serial(const Problem& p, std::span<const double> x, std::span<double> grad) {
  const std::size_t T = p.frames, J = p.joints;
  const CameraModel& c = p.camera;
  std::fill(grad.begin(), grad.end(), 0.0);

  for (std::size_t k = 0; k < T * J; ++k) {
    const double* xyz = &x[k * 3];
    const auto r = residual(p, xyz, &p.observations[k * 2]);
    const double w2 = 2.0 * p.weights[k];
    const double inv_z = 1.0 / xyz[2];
    const double aspect = c.fy / c.fx;
    grad[k * 3 + 0] += w2 * r.ru * inv_z;
    grad[k * 3 + 1] += w2 * r.rv * aspect * inv_z;
    grad[k * 3 + 2] += w2 * (-r.ru * xyz[0] - r.rv * aspect * xyz[1]) * inv_z * inv_z;
  }

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < p.bones.size(); ++b) {
      const std::size_t ia = (t * J + p.bones[b].first) * 3;
      const std::size_t ib = (t * J + p.bones[b].second) * 3;
      const double len = bone_length(&x[ia], &x[ib]);
      if (len < 1e-12) continue;
      const double coef = 2.0 * p.lambda_bone * (len - p.target_lengths[b]) / len;
      for (std::size_t a = 0; a < 3; ++a) {
        const double g = coef * (x[ia + a] - x[ib + a]);
        grad[ia + a] += g;
        grad[ib + a] -= g;
      }
    }
  }

  for (std::size_t t = 1; t + 1 < T; ++t) {
    for (std::size_t i = 0; i < J * 3; ++i) {
      const std::size_t prev = (t - 1) * J * 3 + i, cur = t * J * 3 + i, next = (t + 1) * J * 3 + i;
      const double g = 2.0 * p.lambda_smooth * (x[next] - 2.0 * x[cur] + x[prev]);
      grad[prev] += g;
      grad[cur] -= 2.0 * g;
      grad[next] += g;
    }
  }
}

void gradient_parallel(const Problem& p, std::span<const double> x, std::span<double> grad) {
  const long T = static_cast<long>(p.frames);
  const std::size_t J = p.joints;
  const std::size_t stride = J * 3;
  const CameraModel& c = p.camera;
  const double aspect = c.fy / c.fx;

  // Each frame owns its slice of grad; smoothness contributions are gathered
  // from the three second differences that touch frame t.
#pragma omp parallel for schedule(static)
  for (long tl = 0; tl < T; ++tl) {
    const std::size_t t = static_cast<std::size_t>(tl);
    double* g = &grad[t * stride];
    const double* xt = &x[t * stride];

    for (std::size_t j = 0; j < J; ++j) {
      const std::size_t k = t * J + j;
      const double* xyz = xt + j * 3;
      const auto r = residual(p, xyz, &p.observations[k * 2]);
      const double w2 = 2.0 * p.weights[k];
      const double inv_z = 1.0 / xyz[2];
      g[j * 3 + 0] = w2 * r.ru * inv_z;
      g[j * 3 + 1] = w2 * r.rv * aspect * inv_z;
      g[j * 3 + 2] = w2 * (-r.ru * xyz[0] - r.rv * aspect * xyz[1]) * inv_z * inv_z;
    }

    for (std::size_t b = 0; b < p.bones.size(); ++b) {
      const std::size_t ja = static_cast<std::size_t>(p.bones[b].first) * 3;
      const std::size_t jb = static_cast<std::size_t>(p.bones[b].second) * 3;
      const double len = bone_length(xt + ja, xt + jb);
      if (len < 1e-12) continue;
      const double coef = 2.0 * p.lambda_bone * (len - p.target_lengths[b]) / len;
      for (std::size_t a = 0; a < 3; ++a) {
        const double d = coef * (xt[ja + a] - xt[jb + a]);
        g[ja + a] += d;
        g[jb + a] -= d;
      }
    }

    const std::size_t Tn = p.frames;
    auto second_diff = [&](std::size_t centre, std::size_t i) {
      return x[(centre + 1) * stride + i] - 2.0 * x[centre * stride + i] + x[(centre - 1) * stride + i];
    };
    const double two_lambda = 2.0 * p.lambda_smooth;
    for (std::size_t i = 0; i < stride; ++i) {
      double acc = 0.0;
      if (t >= 2) acc += second_diff(t - 1, i);
      if (t >= 1 && t + 1 < Tn) acc -= 2.0 * second_diff(t, i);
      if (t + 2 < Tn) acc += second_diff(t + 1, i);
      g[i] += two_lambda * acc;
    }
  }
}

}  // namespace aigaitor::refine
