#include "aigaitor/gait_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>

#include "aigaitor/errors.hpp"

namespace aigaitor::gait {

using nlohmann::json;

std::vector<std::optional<double>> joint_angle_series(const PoseSequence& seq, int center, int joint_a,
                                                      int joint_b) {
  const int n = static_cast<int>(seq.joint_count());
  for (int j : {center, joint_a, joint_b}) {
    if (j < 0 || j >= n) throw SchemaError("joint index " + std::to_string(j) + " out of range");
  }
  if (seq.dims != 2 && seq.dims != 3) throw TypeError("joint angles need a 2D or 3D sequence");

  std::vector<std::optional<double>> out;
  out.reserve(seq.frames.size());
  for (const Frame& f : seq.frames) {
    double va[3] = {0, 0, 0}, vb[3] = {0, 0, 0};
    double na = 0.0, nb = 0.0, dot = 0.0;
    for (int d = 0; d < seq.dims; ++d) {
      va[d] = f[joint_a].coords[d] - f[center].coords[d];
      vb[d] = f[joint_b].coords[d] - f[center].coords[d];
      na += va[d] * va[d];
      nb += vb[d] * vb[d];
      dot += va[d] * vb[d];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < 1e-9 || nb < 1e-9) {
      out.emplace_back(std::nullopt);
      continue;
    }
    // atan2 of |a x b| and a.b is better conditioned than acos near 0 and 180.
    double cross = 0.0;
    if (seq.dims == 3) {
      const double cx = va[1] * vb[2] - va[2] * vb[1];
      const double cy = va[2] * vb[0] - va[0] * vb[2];
      const double cz = va[0] * vb[1] - va[1] * vb[0];
      cross = std::sqrt(cx * cx + cy * cy + cz * cz);
    } else {
      cross = std::abs(va[0] * vb[1] - va[1] * vb[0]);
    }
    out.emplace_back(std::atan2(cross, dot) * 180.0 / std::numbers::pi);
  }
  return out;
}

namespace {

struct Joints {
  int lh, rh, la, ra;
};

Joints event_joints(const SkeletonTopology& topo) {
  return {topo.require("left_hip"), topo.require("right_hip"), topo.require("left_ankle"),
          topo.require("right_ankle")};
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v, double mu) {
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return v.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(v.size()));
}

// Walking direction in the horizontal plane: x/z in camera space for 3D,
// u for 2D. Oriented along the net hip-midpoint progression.
std::array<double, 3> walking_direction(const std::vector<std::array<double, 3>>& path, int dims) {
  if (dims == 2 || path.size() < 2) {
    const double sign = path.size() >= 2 && path.back()[0] < path.front()[0] ? -1.0 : 1.0;
    return {sign, 0.0, 0.0};
  }
  double mx = 0.0, mz = 0.0;
  for (const auto& p : path) {
    mx += p[0];
    mz += p[2];
  }
  mx /= static_cast<double>(path.size());
  mz /= static_cast<double>(path.size());
  double sxx = 0.0, sxz = 0.0, szz = 0.0;
  for (const auto& p : path) {
    sxx += (p[0] - mx) * (p[0] - mx);
    sxz += (p[0] - mx) * (p[2] - mz);
    szz += (p[2] - mz) * (p[2] - mz);
  }
  // Major eigenvector of the 2x2 covariance.
  const double angle = 0.5 * std::atan2(2.0 * sxz, sxx - szz);
  std::array<double, 3> e{std::cos(angle), 0.0, std::sin(angle)};
  const double progress = (path.back()[0] - path.front()[0]) * e[0] + (path.back()[2] - path.front()[2]) * e[2];
  if (progress < 0.0) {
    e[0] = -e[0];
    e[2] = -e[2];
  }
  return e;
}

// Stride period in frames from the first autocorrelation peak past the first
// zero crossing; nullopt when the signal is not periodic in range.
std::optional<double> stride_period_frames(const std::vector<double>& s, double fps) {
  const std::size_t n = s.size();
  const double mu = mean(s);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = s[i] - mu;
  const double r0 = std::inner_product(c.begin(), c.end(), c.begin(), 0.0);
  if (r0 <= 0.0) return std::nullopt;
  // Cadence in [20, 240] steps/min gives a stride period in [0.5, 6] s.
  const std::size_t max_lag = std::min(n - 1, static_cast<std::size_t>(std::ceil(6.0 * fps)));
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += c[i] * c[i + lag];
    r[lag] = acc / r0;
  }
  std::size_t lag = 1;
  while (lag <= max_lag && r[lag] > 0.0) ++lag;
  std::size_t best = 0;
  for (; lag < max_lag; ++lag) {
    if (r[lag] > 0.0 && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] && (best == 0 || r[lag] > r[best])) {
      best = lag;
      // The first strong peak is the fundamental; later ones are harmonics.
      if (r[lag] > 0.3) break;
    }
  }
  if (best == 0) return std::nullopt;
  const double denom = r[best - 1] - 2.0 * r[best] + r[best + 1];
  const double delta = denom != 0.0 ? 0.5 * (r[best - 1] - r[best + 1]) / denom : 0.0;
  return static_cast<double>(best) + delta;
}

std::vector<double> pick_peaks(const std::vector<double>& d, const std::vector<bool>& valid, double min_sep_frames,
                               double threshold, double fps) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    if (!valid[i - 1] || !valid[i] || !valid[i + 1]) continue;
    if (d[i] > d[i - 1] && d[i] >= d[i + 1] && d[i] > threshold) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
  std::vector<std::size_t> kept;
  for (std::size_t i : candidates) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return std::abs(static_cast<double>(k) - static_cast<double>(i)) >= min_sep_frames;
    });
    if (clear) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());
  std::vector<double> times;
  for (std::size_t i : kept) {
    const double denom = d[i - 1] - 2.0 * d[i] + d[i + 1];
    const double delta = denom != 0.0 ? std::clamp(0.5 * (d[i - 1] - d[i + 1]) / denom, -0.5, 0.5) : 0.0;
    times.push_back((static_cast<double>(i) + delta) / fps);
  }
  return times;
}

}  // namespace

GaitEvents detect_gait_events(const PoseSequence& seq) {
  const Joints jn = event_joints(seq.topology);
  const std::size_t n = seq.frames.size();
  for (int j : {jn.lh, jn.rh, jn.la, jn.ra}) {
    std::size_t confident = 0;
    for (const Frame& f : seq.frames) confident += f[j].confidence > 0.0;
    if (n == 0 || 2 * confident < n) {
      throw AnalysisError("joint '" + seq.topology.joint_names[j] + "' is confident in fewer than half of the frames");
    }
  }

  std::vector<std::array<double, 3>> hip_mid(n);
  std::vector<std::array<double, 3>> path;
  std::vector<bool> hips_ok(n);
  for (std::size_t t = 0; t < n; ++t) {
    const Frame& f = seq.frames[t];
    for (int d = 0; d < 3; ++d) hip_mid[t][d] = 0.5 * (f[jn.lh].coords[d] + f[jn.rh].coords[d]);
    hips_ok[t] = f[jn.lh].confidence > 0.0 && f[jn.rh].confidence > 0.0;
    if (hips_ok[t]) path.push_back(hip_mid[t]);
  }
  const auto e = walking_direction(path, seq.dims);

  auto displacement = [&](int ankle, std::vector<double>& d, std::vector<bool>& valid) {
    d.assign(n, 0.0);
    valid.assign(n, false);
    for (std::size_t t = 0; t < n; ++t) {
      const Frame& f = seq.frames[t];
      valid[t] = hips_ok[t] && f[ankle].confidence > 0.0;
      if (!valid[t]) continue;
      for (int k = 0; k < seq.dims; ++k) d[t] += (f[ankle].coords[k] - hip_mid[t][k]) * e[k];
    }
  };
  std::vector<double> dl, dr;
  std::vector<bool> vl, vr;
  displacement(jn.la, dl, vl);
  displacement(jn.ra, dr, vr);

  // Scale reference for "no motion": median hip width.
  std::vector<double> widths;
  for (std::size_t t = 0; t < n; ++t) {
    if (!hips_ok[t]) continue;
    double sq = 0.0;
    for (int k = 0; k < seq.dims; ++k) {
      const double diff = seq.frames[t][jn.lh].coords[k] - seq.frames[t][jn.rh].coords[k];
      sq += diff * diff;
    }
    widths.push_back(std::sqrt(sq));
  }
  std::nth_element(widths.begin(), widths.begin() + widths.size() / 2, widths.end());
  const double ref = std::max(widths[widths.size() / 2], 1e-12);

  // Anti-phase difference of the two ankles carries the stride rhythm.
  std::vector<double> rhythm;
  std::vector<double> vals_l, vals_r;
  for (std::size_t t = 0; t < n; ++t) {
    if (vl[t] && vr[t]) rhythm.push_back(dr[t] - dl[t]);
    if (vl[t]) vals_l.push_back(dl[t]);
    if (vr[t]) vals_r.push_back(dr[t]);
  }

  GaitEvents ev;
  const double spread = stddev(rhythm, mean(rhythm));
  if (rhythm.size() < 3 || spread < 1e-3 * ref) return ev;
  const auto period = stride_period_frames(rhythm, seq.fps);
  if (!period) return ev;
  ev.cadence_estimate = 120.0 * seq.fps / *period;
  const double min_sep = 0.25 * *period;

  const double mu_l = mean(vals_l), mu_r = mean(vals_r);
  ev.left_strikes_s = pick_peaks(dl, vl, min_sep, mu_l + 0.5 * stddev(vals_l, mu_l), seq.fps);
  ev.right_strikes_s = pick_peaks(dr, vr, min_sep, mu_r + 0.5 * stddev(vals_r, mu_r), seq.fps);
  return ev;
}

GaitMetrics compute_metrics(const PoseSequence& seq) {
  const GaitEvents ev = detect_gait_events(seq);
  GaitMetrics m;
  m.fps = seq.fps;
  m.n_frames = seq.frames.size();
  m.left_strikes_s = ev.left_strikes_s;
  m.right_strikes_s = ev.right_strikes_s;

  struct Strike {
    double t;
    bool left;
  };
  std::vector<Strike> all;
  for (double t : ev.left_strikes_s) all.push_back({t, true});
  for (double t : ev.right_strikes_s) all.push_back({t, false});
  std::sort(all.begin(), all.end(), [](const Strike& a, const Strike& b) { return a.t < b.t; });

  if (all.size() >= 2 && all.back().t > all.front().t) {
    m.cadence_steps_per_min = 60.0 * static_cast<double>(all.size() - 1) / (all.back().t - all.front().t);
  }
  std::vector<double> step_left, step_right;
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].left == all[i - 1].left) continue;
    (all[i].left ? step_left : step_right).push_back(all[i].t - all[i - 1].t);
  }
  if (!step_left.empty()) m.mean_step_time_left_s = mean(step_left);
  if (!step_right.empty()) m.mean_step_time_right_s = mean(step_right);

  const auto& topo = seq.topology;
  m.joint_angle_series["left_knee"] = joint_angle_series(seq, topo.require("left_knee"), topo.require("left_hip"),
                                                         topo.require("left_ankle"));
  m.joint_angle_series["right_knee"] = joint_angle_series(seq, topo.require("right_knee"),
                                                          topo.require("right_hip"), topo.require("right_ankle"));
  return m;
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json GaitMetrics::to_json() const {
  json angles = json::object();
  for (const auto& [name, series] : joint_angle_series) {
    json arr = json::array();
    for (const auto& v : series) arr.push_back(optional_json(v));
    angles[name] = arr;
  }
  return {{"cadence_steps_per_min", optional_json(cadence_steps_per_min)},
          {"mean_step_time_s", {{"left", optional_json(mean_step_time_left_s)},
                                {"right", optional_json(mean_step_time_right_s)}}},
          {"heel_strike_times_s", {{"left", left_strikes_s}, {"right", right_strikes_s}}},
          {"fps", fps},
          {"n_frames", n_frames},
          {"joint_angle_series_deg", angles}};
}

void GaitMetrics::write_csv(std::ostream& out) const {
  out << "frame,time_s";
  for (const auto& [name, series] : joint_angle_series) out << ',' << name << "_deg";
  out << '\n' << std::setprecision(10);
  for (std::size_t t = 0; t < n_frames; ++t) {
    out << t << ',' << static_cast<double>(t) / fps;
    for (const auto& [name, series] : joint_angle_series) {
      out << ',';
      if (t < series.size() && series[t]) out << *series[t];
    }
    out << '\n';
  }
}

}  // namespace aigaitor::gait
