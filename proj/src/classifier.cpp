#include "aigaitor/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <tuple>

#include "aigaitor/errors.hpp"

namespace aigaitor::gait {

using nlohmann::json;

void ClassifierWeights::check() const {
  auto expect = [](std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
      throw ConfigError(std::string("classifier weights: ") + what + " has " + std::to_string(got) +
                        " entries, expected " + std::to_string(want));
    }
  };
  if (joints == 0 || in_channels == 0 || hidden == 0) throw ConfigError("classifier weights: zero dimension");
  if (kernel % 2 == 0) throw ConfigError("classifier weights: temporal kernel size must be odd");
  if (b_out.empty()) throw ConfigError("classifier weights: need at least one class");
  expect(adjacency.size(), joints * joints, "adjacency");
  expect(w1.size(), in_channels * hidden, "W1");
  expect(temporal_kernel.size(), hidden * kernel, "temporal_kernel");
  expect(w_out.size(), hidden * classes(), "W_out");
  if (!class_names.empty()) expect(class_names.size(), classes(), "class_names");
  for (std::size_t i = 0; i < joints; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < joints; ++j) sum += adjacency[i * joints + j];
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ConfigError("classifier weights: adjacency row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
}

namespace {

// Reads a matrix given as nested arrays, returning it flattened.
std::vector<double> read_matrix(const json& doc, const char* key, std::size_t& rows, std::size_t& cols) {
  const json& m = doc.at(key);
  rows = m.size();
  cols = rows ? m[0].size() : 0;
  std::vector<double> flat;
  flat.reserve(rows * cols);
  for (const auto& row : m) {
    if (row.size() != cols) throw ConfigError(std::string("classifier weights: ragged matrix ") + key);
    for (const auto& v : row) flat.push_back(v.get<double>());
  }
  return flat;
}

json write_matrix(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
  json m = json::array();
  for (std::size_t r = 0; r < rows; ++r) {
    m.push_back(std::vector<double>(flat.begin() + r * cols, flat.begin() + (r + 1) * cols));
  }
  return m;
}

}  // namespace

ClassifierWeights ClassifierWeights::from_json(const json& doc) {
  ClassifierWeights w;
  try {
    std::size_t r = 0, c = 0;
    w.adjacency = read_matrix(doc, "adjacency", r, c);
    if (r != c) throw ConfigError("classifier weights: adjacency must be square");
    w.joints = r;
    w.w1 = read_matrix(doc, "W1", w.in_channels, w.hidden);
    std::size_t kh = 0;
    w.temporal_kernel = read_matrix(doc, "temporal_kernel", kh, w.kernel);
    if (kh != w.hidden) throw ConfigError("classifier weights: temporal_kernel rows != hidden channels");
    std::size_t oh = 0, classes = 0;
    w.w_out = read_matrix(doc, "W_out", oh, classes);
    if (oh != w.hidden) throw ConfigError("classifier weights: W_out rows != hidden channels");
    w.b_out = doc.at("b_out").get<std::vector<double>>();
    if (w.b_out.size() != classes) throw ConfigError("classifier weights: b_out size != W_out columns");
    if (doc.contains("class_names")) w.class_names = doc.at("class_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("classifier weights JSON: ") + e.what());
  }
  w.check();
  return w;
}

json ClassifierWeights::to_json() const {
  return {{"adjacency", write_matrix(adjacency, joints, joints)},
          {"W1", write_matrix(w1, in_channels, hidden)},
          {"temporal_kernel", write_matrix(temporal_kernel, hidden, kernel)},
          {"W_out", write_matrix(w_out, hidden, classes())},
          {"b_out", b_out},
          {"class_names", class_names}};
}

ClassifierWeights ClassifierWeights::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open classifier weights " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("classifier weights " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

std::vector<double> normalized_adjacency(const SkeletonTopology& topology) {
  const std::size_t n = topology.joint_count();
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
  for (const auto& [p, q] : topology.bones) {
    a[p * n + q] = 1.0;
    a[q * n + p] = 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += a[i * n + j];
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= sum;
  }
  return a;
}

ClassifierWeights make_seeded_weights(const SkeletonTopology& topology, std::size_t in_channels, std::size_t hidden,
                                      std::size_t kernel, std::vector<std::string> class_names,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ClassifierWeights w;
  w.joints = topology.joint_count();
  w.in_channels = in_channels;
  w.hidden = hidden;
  w.kernel = kernel;
  w.adjacency = normalized_adjacency(topology);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in_channels));
  for (std::size_t i = 0; i < in_channels * hidden; ++i) w.w1.push_back(s1 * gauss(rng));
  for (std::size_t i = 0; i < hidden * kernel; ++i) w.temporal_kernel.push_back(gauss(rng) / kernel);
  const std::size_t classes = class_names.size();
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (std::size_t i = 0; i < hidden * classes; ++i) w.w_out.push_back(s2 * gauss(rng));
  w.b_out.assign(classes, 0.0);
  w.class_names = std::move(class_names);
  w.check();
  return w;
}

void check_compatible(const ClassifierWeights& w, std::size_t joints, int dims) {
  if (w.joints != joints) {
    throw SchemaError("classifier expects " + std::to_string(w.joints) + " joints, pose has " + std::to_string(joints));
  }
  if (w.in_channels != static_cast<std::size_t>(dims)) {
    throw SchemaError("classifier expects " + std::to_string(w.in_channels) + " input channels, pose has dims " +
                      std::to_string(dims));
  }
}

namespace {

void softmax_inplace(std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

// relu(A X W1) for one frame into out (joints x hidden).
void graph_conv_frame(const Frame& frame, const ClassifierWeights& w, double* out) {
  const std::size_t J = w.joints, C = w.in_channels, H = w.hidden;
  std::vector<double> xw(J * H, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t c = 0; c < C; ++c) {
      const double x = frame[j].coords[c];
      if (x == 0.0) continue;
      for (std::size_t h = 0; h < H; ++h) xw[j * H + h] += x * w.w1[c * H + h];
    }
  }
  for (std::size_t i = 0; i < J; ++i) {
    for (std::size_t h = 0; h < H; ++h) out[i * H + h] = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const double a = w.adjacency[i * J + j];
      if (a == 0.0) continue;
      for (std::size_t h = 0; h < H; ++h) out[i * H + h] += a * xw[j * H + h];
    }
    for (std::size_t h = 0; h < H; ++h) out[i * H + h] = std::max(0.0, out[i * H + h]);
  }
}

// Temporal conv + pooling. Since pooling is linear, the per-channel sum over
// joints can be taken before the convolution.
std::vector<double> pool_and_classify(const std::vector<double>& h1, std::size_t T, const ClassifierWeights& w) {
  const std::size_t J = w.joints, H = w.hidden, K = w.kernel;
  const long half = static_cast<long>(K / 2);
  std::vector<double> joint_sum(T * H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t h = 0; h < H; ++h) joint_sum[t * H + h] += h1[(t * J + j) * H + h];
    }
  }
  std::vector<double> pooled(H, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    double acc = 0.0;
    for (long t = 0; t < static_cast<long>(T); ++t) {
      for (long k = 0; k < static_cast<long>(K); ++k) {
        const long src = t + k - half;
        if (src < 0 || src >= static_cast<long>(T)) continue;
        acc += w.temporal_kernel[h * K + k] * joint_sum[src * H + h];
      }
    }
    pooled[h] = acc / static_cast<double>(T * J);
  }
  std::vector<double> logits(w.b_out);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t c = 0; c < w.classes(); ++c) logits[c] += pooled[h] * w.w_out[h * w.classes() + c];
  }
  softmax_inplace(logits);
  return logits;
}

void check_window(const NormalizedWindow& window, const ClassifierWeights& w) {
  if (window.frames.empty()) throw SchemaError("cannot classify an empty window");
  check_compatible(w, window.frames.front().size(), window.dims);
}

}  // namespace

std::vector<double> classify_window_serial(const NormalizedWindow& window, const ClassifierWeights& w) {
  check_window(window, w);
  const std::size_t T = window.frames.size();
  std::vector<double> h1(T * w.joints * w.hidden);
  for (std::size_t t = 0; t < T; ++t) graph_conv_frame(window.frames[t], w, &h1[t * w.joints * w.hidden]);
  return pool_and_classify(h1, T, w);
}

std::vector<double> classify_window(const NormalizedWindow& window, const ClassifierWeights& w) {
  check_window(window, w);
  const long T = static_cast<long>(window.frames.size());
  std::vector<double> h1(window.frames.size() * w.joints * w.hidden);
#pragma omp parallel for schedule(static)
  for (long t = 0; t < T; ++t) graph_conv_frame(window.frames[t], w, &h1[t * w.joints * w.hidden]);
  return pool_and_classify(h1, window.frames.size(), w);
}

std::vector<WindowPrediction> classify_windows(const PoseSequence& seq, const std::vector<Window>& windows,
                                               const ClassifierWeights& w) {
  check_compatible(w, seq.joint_count(), seq.dims);
  std::vector<WindowPrediction> out(windows.size());
  const long n = static_cast<long>(windows.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const NormalizedWindow nw = normalize_window(windows[i], seq.topology, seq.dims);
    auto scores = classify_window_serial(nw, w);
    const auto best = std::max_element(scores.begin(), scores.end()) - scores.begin();
    out[i] = {windows[i].start, static_cast<std::size_t>(best), std::move(scores)};
  }
  return out;
}

json TrialResult::to_json(const std::vector<std::string>& class_names) const {
  auto name = [&](std::size_t c) { return c < class_names.size() ? class_names[c] : std::to_string(c); };
  json windows = json::array();
  for (const auto& p : per_window) {
    windows.push_back({{"start_frame", p.start}, {"class", name(p.class_index)}, {"class_index", p.class_index},
                       {"scores", p.scores}});
  }
  return {{"windows", windows},
          {"window_count", per_window.size()},
          {"trial_class", name(trial_class)},
          {"trial_class_index", trial_class},
          {"vote_counts", vote_counts}};
}

TrialResult majority_vote(const std::vector<WindowPrediction>& per_window) {
  if (per_window.empty()) throw AnalysisError("majority vote needs at least one window");
  const std::size_t classes = per_window.front().scores.size();
  TrialResult r;
  r.per_window = per_window;
  // Canonical order makes the result independent of input order.
  std::sort(r.per_window.begin(), r.per_window.end(), [](const auto& a, const auto& b) {
    return std::tie(a.start, a.class_index, a.scores) < std::tie(b.start, b.class_index, b.scores);
  });
  r.vote_counts.assign(classes, 0);
  std::vector<double> mean_score(classes, 0.0);
  for (const auto& p : r.per_window) {
    if (p.scores.size() != classes || p.class_index >= classes) {
      throw AnalysisError("inconsistent class count across windows");
    }
    ++r.vote_counts[p.class_index];
    for (std::size_t c = 0; c < classes; ++c) mean_score[c] += p.scores[c];
  }
  for (double& s : mean_score) s /= static_cast<double>(per_window.size());

  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (r.vote_counts[c] > r.vote_counts[best] ||
        (r.vote_counts[c] == r.vote_counts[best] && mean_score[c] > mean_score[best])) {
      best = c;
    }
  }
  r.trial_class = best;
  return r;
}

}  // namespace aigaitor::gait
