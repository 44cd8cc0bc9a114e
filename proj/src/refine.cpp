#include "aigaitor/refine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "aigaitor/errors.hpp"

namespace aigaitor::refine {

using nlohmann::json;

void RefineConfig::check() const {
  if (!(lambda_bone >= 0.0) || !(lambda_smooth >= 0.0)) throw ConfigError("refine weights must be >= 0");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw ConfigError("rel_tol must be > 0");
  if (!(step_size > 0.0)) throw ConfigError("step_size must be > 0");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(grad_tol >= 0.0)) throw ConfigError("grad_tol must be >= 0");
  if (max_backoff < 0) throw ConfigError("max_backoff must be >= 0");
}

RefineConfig RefineConfig::from_json(const json& doc) {
  RefineConfig c;
  if (!doc.is_object()) throw ConfigError("refine config must be a JSON object");
  try {
    c.lambda_bone = doc.value("lambda_bone", c.lambda_bone);
    c.lambda_smooth = doc.value("lambda_smooth", c.lambda_smooth);
    c.max_iters = doc.value("max_iters", c.max_iters);
    c.step_size = doc.value("step_size", c.step_size);
    c.rel_tol = doc.value("rel_tol", c.rel_tol);
    c.patience = doc.value("patience", c.patience);
    c.grad_tol = doc.value("grad_tol", c.grad_tol);
    c.beta1 = doc.value("beta1", c.beta1);
    c.beta2 = doc.value("beta2", c.beta2);
    c.epsilon = doc.value("epsilon", c.epsilon);
    c.max_backoff = doc.value("max_backoff", c.max_backoff);
    c.parallel = doc.value("parallel", c.parallel);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("refine config JSON: ") + e.what());
  }
  c.check();
  return c;
}

json RefineConfig::to_json() const {
  return {{"lambda_bone", lambda_bone}, {"lambda_smooth", lambda_smooth}, {"max_iters", max_iters},
          {"step_size", step_size},     {"rel_tol", rel_tol},             {"patience", patience},
          {"grad_tol", grad_tol},       {"beta1", beta1},                 {"beta2", beta2},
          {"epsilon", epsilon},         {"max_backoff", max_backoff},     {"parallel", parallel}};
}

std::vector<double> flatten(const PoseSequence& seq3d) {
  if (seq3d.dims != 3) throw TypeError("refinement trajectory must be 3D");
  std::vector<double> x;
  x.reserve(seq3d.frames.size() * seq3d.joint_count() * 3);
  for (const Frame& f : seq3d.frames) {
    for (const Keypoint& kp : f) x.insert(x.end(), kp.coords.begin(), kp.coords.end());
  }
  return x;
}

void unflatten(std::span<const double> x, PoseSequence& seq3d) {
  std::size_t i = 0;
  for (Frame& f : seq3d.frames) {
    for (Keypoint& kp : f) {
      for (double& c : kp.coords) c = x[i++];
    }
  }
}

std::vector<double> median_bone_lengths(const PoseSequence& seq3d) {
  const auto lengths = bone_lengths(seq3d);
  std::vector<double> out(seq3d.topology.bones.size(), 0.0);
  std::vector<double> column(lengths.size());
  for (std::size_t b = 0; b < out.size(); ++b) {
    if (lengths.empty()) break;
    for (std::size_t t = 0; t < lengths.size(); ++t) column[t] = lengths[t][b];
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    out[b] = n % 2 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return out;
}

Problem make_problem(const PoseSequence& initial, const PoseSequence& obs2d, const CameraModel& cam,
                     const RefineConfig& cfg) {
  cfg.check();
  cam.check();
  if (initial.dims != 3) throw TypeError("initial trajectory must be 3D");
  if (obs2d.dims != 2) throw TypeError("observations must be 2D");
  if (initial.frames.size() != obs2d.frames.size()) {
    throw ConfigError("frame count mismatch: initial " + std::to_string(initial.frames.size()) + ", observations " +
                      std::to_string(obs2d.frames.size()));
  }
  if (initial.joint_count() != obs2d.joint_count()) throw SchemaError("joint count mismatch between 3D and 2D");

  Problem p;
  p.frames = initial.frames.size();
  p.joints = initial.joint_count();
  p.camera = cam;
  p.bones = initial.topology.bones;
  p.target_lengths = median_bone_lengths(initial);
  p.lambda_bone = cfg.lambda_bone;
  p.lambda_smooth = cfg.lambda_smooth;
  p.observations.reserve(p.frames * p.joints * 2);
  p.weights.reserve(p.frames * p.joints);
  for (const Frame& f : obs2d.frames) {
    for (const Keypoint& kp : f) {
      p.observations.push_back(kp.coords[0]);
      p.observations.push_back(kp.coords[1]);
      p.weights.push_back(kp.confidence);
    }
  }
  return p;
}

namespace {

void require_positive_depth(const Problem& p, std::span<const double> x) {
  for (std::size_t k = 0; k < p.frames * p.joints; ++k) {
    if (!(x[k * 3 + 2] > 0.0)) {
      const long frame = static_cast<long>(k / p.joints), joint = static_cast<long>(k % p.joints);
      throw DomainError("non-positive depth at frame " + std::to_string(frame) + " joint " + std::to_string(joint),
                        frame, joint);
    }
  }
}

double evaluate(const Problem& p, std::span<const double> x, bool parallel) {
  return (parallel ? energy_parallel(p, x) : energy_serial(p, x)).total(p);
}

}  // namespace

double objective(const Problem& problem, std::span<const double> x, bool parallel) {
  require_positive_depth(problem, x);
  return evaluate(problem, x, parallel);
}

double objective(const PoseSequence& P, const PoseSequence& obs2d, const CameraModel& cam, const RefineConfig& cfg) {
  const Problem problem = make_problem(P, obs2d, cam, cfg);
  return objective(problem, flatten(P), cfg.parallel);
}

std::vector<double> gradient(const Problem& problem, std::span<const double> x, bool parallel) {
  require_positive_depth(problem, x);
  std::vector<double> g(problem.size());
  if (parallel) {
    gradient_parallel(problem, x, g);
  } else {
    gradient_serial(problem, x, g);
  }
  return g;
}

std::vector<double> gradient(const PoseSequence& P, const PoseSequence& obs2d, const CameraModel& cam,
                             const RefineConfig& cfg) {
  const Problem problem = make_problem(P, obs2d, cam, cfg);
  return gradient(problem, flatten(P), cfg.parallel);
}

GradientCheck check_gradient(const Problem& problem, std::span<const double> x, double h, double floor) {
  const auto analytic = gradient(problem, x, false);
  std::vector<double> probe(x.begin(), x.end());
  GradientCheck out;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = evaluate(problem, probe, false);
    probe[i] = saved - h;
    const double down = evaluate(problem, probe, false);
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double abs_err = std::abs(analytic[i] - numeric);
    const double rel_err = abs_err / std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    out.max_abs_error = std::max(out.max_abs_error, abs_err);
    if (rel_err > out.max_rel_error) {
      out.max_rel_error = rel_err;
      out.worst_index = i;
    }
  }
  return out;
}

RefineResult refine_sequence(const PoseSequence& initial, const PoseSequence& obs2d, const CameraModel& cam,
                             const RefineConfig& cfg) {
  require_valid(initial);
  require_valid(obs2d);
  if (initial.fps != obs2d.fps) throw ConfigError("fps mismatch between 3D and 2D sequences");
  const Problem problem = make_problem(initial, obs2d, cam, cfg);

  std::vector<double> x = flatten(initial);
  double energy = objective(problem, x, cfg.parallel);

  RefineResult result;
  result.objective_trace.push_back(energy);

  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0), v(n, 0.0), dir(n), trial(n), g(n);
  double step = cfg.step_size;
  int quiet = 0;
  double beta1_t = 1.0, beta2_t = 1.0;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (cfg.parallel) {
      gradient_parallel(problem, x, g);
    } else {
      gradient_serial(problem, x, g);
    }
    double gmax = 0.0;
    for (double gi : g) gmax = std::max(gmax, std::abs(gi));
    if (gmax <= cfg.grad_tol) {
      result.converged = true;
      break;
    }

    beta1_t *= cfg.beta1;
    beta2_t *= cfg.beta2;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    }

    // Try the momentum direction first, then the plain scaled gradient,
    // which is always a descent direction. Each is halved up to max_backoff times.
    bool accepted = false;
    double next_energy = energy;
    for (int pass = 0; pass < 2 && !accepted; ++pass) {
      for (std::size_t i = 0; i < n; ++i) {
        const double scale = 1.0 / (std::sqrt(v[i] / (1.0 - beta2_t)) + cfg.epsilon);
        dir[i] = (pass == 0 ? m[i] / (1.0 - beta1_t) : g[i]) * scale;
      }
      double s = step;
      for (int k = 0; k <= cfg.max_backoff; ++k, s *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - s * dir[i];
        const double e = evaluate(problem, trial, cfg.parallel);
        if (e <= energy) {
          accepted = true;
          next_energy = e;
          // Recover toward the configured step after an easy acceptance.
          step = k == 0 ? std::min(cfg.step_size, s * 1.5) : s;
          break;
        }
      }
      if (pass == 0 && !accepted) {
        std::fill(m.begin(), m.end(), 0.0);
        beta1_t = 1.0;
      }
    }
    if (!accepted) {
      throw OptimizationError("objective increased on every trial step after backoff at iteration " +
                                  std::to_string(iter),
                              result.objective_trace);
    }

    x.swap(trial);
    const double decrease = (energy - next_energy) / std::max(std::abs(energy), 1e-300);
    energy = next_energy;
    result.objective_trace.push_back(energy);
    result.iterations_run = iter + 1;

    quiet = decrease < cfg.rel_tol ? quiet + 1 : 0;
    if (quiet >= cfg.patience) {
      result.converged = true;
      break;
    }
  }

  result.refined = initial;
  unflatten(x, result.refined);
  return result;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& trace) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << "iteration,objective\n" << std::setprecision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

}  // namespace aigaitor::refine
