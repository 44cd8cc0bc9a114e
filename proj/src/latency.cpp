#include "aigaitor/latency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "aigaitor/errors.hpp"

namespace aigaitor::latency {

using nlohmann::json;

std::string to_string(StageKind k) {
  switch (k) {
    case StageKind::per_frame: return "per_frame";
    case StageKind::per_window: return "per_window";
    case StageKind::per_token: return "per_token";
    case StageKind::fixed: return "fixed";
  }
  return "?";
}

std::string to_string(Placement p) { return p == Placement::device ? "device" : "cloud"; }

std::string to_string(OverheadPolicy p) {
  switch (p) {
    case OverheadPolicy::none: return "none";
    case OverheadPolicy::subtract_min: return "subtract_min";
    case OverheadPolicy::subtract_max: return "subtract_max";
  }
  return "?";
}

StageKind parse_stage_kind(const std::string& s) {
  if (s == "per_frame") return StageKind::per_frame;
  if (s == "per_window") return StageKind::per_window;
  if (s == "per_token") return StageKind::per_token;
  if (s == "fixed") return StageKind::fixed;
  throw ConfigError("unknown stage kind '" + s + "'");
}

Placement parse_placement(const std::string& s) {
  if (s == "device") return Placement::device;
  if (s == "cloud") return Placement::cloud;
  throw ConfigError("unknown placement '" + s + "'");
}

OverheadPolicy parse_policy(const std::string& s) {
  if (s == "none") return OverheadPolicy::none;
  if (s == "subtract_min") return OverheadPolicy::subtract_min;
  if (s == "subtract_max") return OverheadPolicy::subtract_max;
  throw ConfigError("unknown shared overhead policy '" + s + "'");
}

void StageProfile::check() const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  auto fail = [&](const std::string& why) { throw ConfigError("stage '" + name + "': " + why); };
  if (!ok(fixed_overhead_s)) fail("fixed_overhead_s must be finite and >= 0");
  const bool frame = kind == StageKind::per_frame, window = kind == StageKind::per_window,
             token = kind == StageKind::per_token;
  if (!ok(per_frame_ms) || (!frame && per_frame_ms != 0.0)) fail("per_frame_ms invalid for kind " + to_string(kind));
  if (!ok(per_window_ms) || (!window && per_window_ms != 0.0)) fail("per_window_ms invalid for kind " + to_string(kind));
  if (!ok(prefill_ms_per_token) || !ok(decode_ms_per_token) ||
      (!token && (prefill_ms_per_token != 0.0 || decode_ms_per_token != 0.0))) {
    fail("per-token rates invalid for kind " + to_string(kind));
  }
}

void NetworkLink::check() const {
  if (!(bandwidth_mbps > 0.0) || !std::isfinite(bandwidth_mbps)) throw ConfigError("link bandwidth must be > 0");
  if (!(fixed_overhead_s >= 0.0)) throw ConfigError("link fixed overhead must be >= 0");
}

long Clip::n_frames() const { return std::lround(duration_s * fps); }

void PipelineSpec::check() const {
  if (placement == Placement::device && (!uploads_bytes.empty() || !downloads_bytes.empty())) {
    throw ConfigError("pipeline '" + name + "': device placement cannot have transfers");
  }
  if (!(clip.duration_s > 0.0) || !(clip.fps > 0.0)) throw ConfigError("pipeline '" + name + "': invalid clip");
  for (double b : uploads_bytes) {
    if (!(b >= 0.0)) throw ConfigError("pipeline '" + name + "': negative upload");
  }
  for (double b : downloads_bytes) {
    if (!(b >= 0.0)) throw ConfigError("pipeline '" + name + "': negative download");
  }
}

double transfer_time(double bytes, const NetworkLink& link) {
  link.check();
  if (!(bytes >= 0.0)) throw ConfigError("transfer size must be >= 0");
  if (bytes == 0.0) return 0.0;
  return bytes * 8.0 / (link.bandwidth_mbps * 1e6) + link.fixed_overhead_s;
}

std::size_t window_count(long n_frames, const WindowCounts& w) {
  if (w.window_frames < 1 || w.stride_frames < 1) throw ConfigError("window and stride must be >= 1");
  if (n_frames < static_cast<long>(w.window_frames)) return 0;
  return (static_cast<std::size_t>(n_frames) - w.window_frames) / w.stride_frames + 1;
}

double stage_time(const StageProfile& stage, const Clip& clip, const WindowCounts& windows, const TokenCounts& tokens) {
  stage.check();
  switch (stage.kind) {
    case StageKind::per_frame:
      return static_cast<double>(clip.n_frames()) * stage.per_frame_ms / 1000.0 + stage.fixed_overhead_s;
    case StageKind::per_window:
      return static_cast<double>(window_count(clip.n_frames(), windows)) * stage.per_window_ms / 1000.0 +
             stage.fixed_overhead_s;
    case StageKind::per_token:
      return (tokens.in * stage.prefill_ms_per_token + tokens.out * stage.decode_ms_per_token) / 1000.0 +
             stage.fixed_overhead_s;
    case StageKind::fixed:
      return stage.fixed_overhead_s;
  }
  return 0.0;
}

double calibrate_overhead(double observed_e2e_s, double per_frame_ms, long n_frames) {
  const double modeled = static_cast<double>(n_frames) * per_frame_ms / 1000.0;
  const double overhead = observed_e2e_s - modeled;
  if (overhead < 0.0) {
    throw InconsistencyError("per-frame share " + std::to_string(modeled) + " s exceeds observed end-to-end " +
                                 std::to_string(observed_e2e_s) + " s",
                             observed_e2e_s, modeled);
  }
  return overhead;
}

LatencyReport pipeline_time(const PipelineSpec& spec, const ProfileLibrary& profiles,
                            const std::optional<NetworkLink>& link) {
  spec.check();
  const ProfileSet& set = profiles.for_placement(spec.placement);
  LatencyReport r;
  r.pipeline = spec.name;
  r.placement = spec.placement;
  r.link = link ? link->name : "";

  std::vector<double> shared;
  double sum = 0.0;
  for (const std::string& name : spec.stages) {
    const auto it = set.find(name);
    if (it == set.end()) {
      throw ReferenceError("pipeline '" + spec.name + "': unknown " + to_string(spec.placement) + " stage '" + name +
                           "'");
    }
    const StageProfile& st = it->second;
    const double s = stage_time(st, spec.clip, spec.windows, spec.tokens);
    r.stages.push_back({name, s, st.fixed_overhead_s, st.shares_decoded_input});
    sum += s;
    if (st.shares_decoded_input) shared.push_back(st.fixed_overhead_s);
  }

  if (!spec.uploads_bytes.empty() || !spec.downloads_bytes.empty()) {
    if (!link) throw ConfigError("pipeline '" + spec.name + "': transfers need a network link");
    for (double b : spec.uploads_bytes) r.upload_s += transfer_time(b, *link);
    for (double b : spec.downloads_bytes) r.download_s += transfer_time(b, *link);
  }

  if (shared.size() >= 2 && spec.policy != OverheadPolicy::none) {
    const double pick = spec.policy == OverheadPolicy::subtract_max ? *std::max_element(shared.begin(), shared.end())
                                                                    : *std::min_element(shared.begin(), shared.end());
    r.shared_overhead_correction_s = static_cast<double>(shared.size() - 1) * pick;
  }
  r.total_s = std::max(0.0, sum + r.upload_s + r.download_s - r.shared_overhead_correction_s);
  return r;
}

double compare(const LatencyReport& device, const LatencyReport& cloud) {
  if (!(device.total_s > 0.0) || !(cloud.total_s > 0.0)) throw ConfigError("comparison needs positive totals");
  return cloud.total_s / device.total_s;
}

json LatencyReport::to_json() const {
  json st = json::array();
  for (const auto& s : stages) {
    st.push_back({{"name", s.name},
                  {"seconds", s.seconds},
                  {"fixed_overhead_s", s.fixed_overhead_s},
                  {"shares_decoded_input", s.shares_decoded_input}});
  }
  return {{"pipeline", pipeline},
          {"placement", to_string(placement)},
          {"link", link.empty() ? json(nullptr) : json(link)},
          {"stages", st},
          {"upload_s", upload_s},
          {"download_s", download_s},
          {"shared_overhead_correction_s", shared_overhead_correction_s},
          {"total_s", total_s}};
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename T>
std::optional<T> optional_field(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return doc.at(key).get<T>();
}

Clip clip_from_json(const json& doc) {
  Clip c;
  c.duration_s = doc.value("duration_s", c.duration_s);
  c.fps = doc.value("fps", c.fps);
  if (doc.contains("n_frames") && doc.at("n_frames").get<long>() != c.n_frames()) {
    throw ConfigError("clip n_frames must equal duration_s * fps");
  }
  return c;
}

ProfileSet profile_set_from_json(const json& arr, const Clip& clip) {
  ProfileSet set;
  for (const auto& entry : arr) {
    StageProfile st = stage_from_json(entry, clip);
    const std::string key = st.name;
    if (!set.emplace(key, std::move(st)).second) throw ConfigError("duplicate stage profile '" + key + "'");
  }
  return set;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

StageProfile stage_from_json(const json& doc, const Clip& clip) {
  StageProfile st;
  try {
    st.name = doc.at("name").get<std::string>();
    st.kind = parse_stage_kind(doc.at("kind").get<std::string>());
    st.per_frame_ms = doc.value("per_frame_ms", 0.0);
    st.per_window_ms = doc.value("per_window_ms", 0.0);
    st.prefill_ms_per_token = doc.value("prefill_ms_per_token", 0.0);
    st.decode_ms_per_token = doc.value("decode_ms_per_token", 0.0);
    st.shares_decoded_input = doc.value("shares_decoded_input", false);
    st.reported_e2e_s = optional_field<double>(doc, "reported_e2e_s");
    st.table_ms_per_frame = optional_field<double>(doc, "table_ms_per_frame");
    st.parameters = doc.value("parameters", std::string());
    st.batch_size = optional_field<int>(doc, "batch_size");
    if (doc.contains("fixed_overhead_s")) {
      st.fixed_overhead_s = doc.at("fixed_overhead_s").get<double>();
    } else if (st.kind == StageKind::per_frame && st.reported_e2e_s) {
      st.fixed_overhead_s = calibrate_overhead(*st.reported_e2e_s, st.per_frame_ms, clip.n_frames());
    } else if (st.kind == StageKind::fixed && st.reported_e2e_s) {
      st.fixed_overhead_s = *st.reported_e2e_s;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("stage profile JSON: ") + e.what());
  }
  st.check();
  return st;
}

ProfileLibrary load_profiles(const json& doc) {
  ProfileLibrary lib;
  try {
    lib.name = doc.value("name", std::string("profiles"));
    const Clip clip = doc.contains("clip") ? clip_from_json(doc.at("clip")) : Clip{};
    lib.device = profile_set_from_json(doc.at("device"), clip);
    lib.cloud = profile_set_from_json(doc.at("cloud"), clip);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("profiles JSON: ") + e.what());
  }
  return lib;
}

ProfileLibrary load_profiles(const std::filesystem::path& path) { return load_profiles(read_json_file(path)); }

NetworkLink link_from_json(const std::string& name, const json& doc) {
  NetworkLink l;
  l.name = name;
  try {
    l.bandwidth_mbps = doc.at("bandwidth_mbps").get<double>();
    l.fixed_overhead_s = doc.value("fixed_overhead_s", l.fixed_overhead_s);
  } catch (const json::exception& e) {
    throw ConfigError("link '" + name + "': " + e.what());
  }
  l.check();
  return l;
}

PipelineSpec pipeline_from_json(const json& doc) {
  PipelineSpec p;
  try {
    p.name = doc.at("name").get<std::string>();
    p.placement = parse_placement(doc.at("placement").get<std::string>());
    p.stages = doc.at("stages").get<std::vector<std::string>>();
    p.uploads_bytes = doc.value("uploads_bytes", std::vector<double>{});
    p.downloads_bytes = doc.value("downloads_bytes", std::vector<double>{});
    if (doc.contains("clip")) p.clip = clip_from_json(doc.at("clip"));
    if (doc.contains("window_spec")) {
      p.windows.window_frames = doc.at("window_spec").value("window_frames", p.windows.window_frames);
      p.windows.stride_frames = doc.at("window_spec").value("stride_frames", p.windows.stride_frames);
    }
    if (doc.contains("token_counts")) {
      p.tokens.in = doc.at("token_counts").value("in", p.tokens.in);
      p.tokens.out = doc.at("token_counts").value("out", p.tokens.out);
    }
    const std::string default_policy = p.placement == Placement::device ? "subtract_max" : "subtract_min";
    p.policy = parse_policy(doc.value("shared_overhead_policy", default_policy));
    p.link = doc.value("link", std::string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline spec JSON: ") + e.what());
  }
  p.check();
  return p;
}

Scenario load_scenario(const json& doc) {
  Scenario s;
  try {
    if (doc.contains("links")) {
      for (const auto& [name, l] : doc.at("links").items()) s.links.emplace(name, link_from_json(name, l));
    }
    for (const auto& p : doc.at("pipelines")) s.pipelines.push_back(pipeline_from_json(p));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario JSON: ") + e.what());
  }
  for (const auto& p : s.pipelines) {
    if (!p.link.empty() && !s.links.count(p.link)) {
      throw ReferenceError("pipeline '" + p.name + "' references unknown link '" + p.link + "'");
    }
  }
  return s;
}

namespace {

std::optional<NetworkLink> link_for(const Scenario& s, const PipelineSpec& p) {
  if (p.link.empty()) return std::nullopt;
  return s.links.at(p.link);
}

}  // namespace

ScenarioResult run_scenario(const Scenario& scenario, const ProfileLibrary& profiles) {
  ScenarioResult out;
  for (const auto& p : scenario.pipelines) out.reports.push_back(pipeline_time(p, profiles, link_for(scenario, p)));
  for (const auto& cloud : out.reports) {
    if (cloud.placement != Placement::cloud) continue;
    for (const auto& device : out.reports) {
      if (device.placement == Placement::device && device.pipeline == cloud.pipeline) {
        out.gains.push_back({cloud.pipeline, cloud.link, compare(device, cloud)});
      }
    }
  }
  return out;
}

json ScenarioResult::to_json() const {
  json reps = json::array();
  for (const auto& r : reports) reps.push_back(r.to_json());
  json g = json::array();
  for (const auto& x : gains) g.push_back({{"pipeline", x.pipeline}, {"link", x.link}, {"cloud_over_device", x.ratio}});
  return {{"reports", reps}, {"gains", g}};
}

void ScenarioResult::write_csv(std::ostream& out) const {
  out << "pipeline,placement,link,component,seconds\n" << std::setprecision(10);
  for (const auto& r : reports) {
    const std::string prefix = r.pipeline + ',' + to_string(r.placement) + ',' + r.link + ',';
    if (r.placement == Placement::cloud) out << prefix << "upload," << r.upload_s << '\n';
    for (const auto& s : r.stages) out << prefix << "stage:" << s.name << ',' << s.seconds << '\n';
    if (r.placement == Placement::cloud) out << prefix << "download," << r.download_s << '\n';
    out << prefix << "shared_overhead_correction," << -r.shared_overhead_correction_s << '\n';
    out << prefix << "total," << r.total_s << '\n';
  }
  for (const auto& g : gains) out << g.pipeline << ",cloud," << g.link << ",gain_cloud_over_device," << g.ratio << '\n';
}

bool GoldenCell::pass() const {
  if (range_lo || range_hi) {
    return (!range_lo || modeled >= *range_lo) && (!range_hi || modeled <= *range_hi);
  }
  const double err = std::abs(modeled - published);
  bool ok = true;
  if (rel_tolerance > 0.0) ok = ok && err <= rel_tolerance * std::abs(published);
  if (abs_tolerance > 0.0) ok = ok && err <= abs_tolerance;
  return ok;
}

std::vector<GoldenCell> evaluate_golden(const json& golden, const Scenario& scenario, const ProfileLibrary& profiles) {
  const ScenarioResult result = run_scenario(scenario, profiles);
  auto find_report = [&](const std::string& pipeline, Placement placement, const std::string& link) {
    for (const auto& r : result.reports) {
      if (r.pipeline == pipeline && r.placement == placement && r.link == link) return r;
    }
    throw ReferenceError("golden cell references missing report " + pipeline + "/" + to_string(placement) + "/" + link);
  };

  std::vector<GoldenCell> cells;
  try {
    for (const auto& c : golden.at("cells")) {
      GoldenCell cell;
      cell.id = c.at("id").get<std::string>();
      cell.description = c.value("description", std::string());
      cell.published = c.value("published", 0.0);
      cell.rel_tolerance = c.value("rel_tolerance", 0.0);
      cell.abs_tolerance = c.value("abs_tolerance", 0.0);
      if (c.contains("range")) {
        cell.range_lo = c.at("range")[0].get<double>();
        cell.range_hi = c.at("range")[1].get<double>();
      }
      const std::string type = c.at("type").get<std::string>();
      const std::string link = c.value("link", std::string());
      if (type == "transfer") {
        cell.modeled = transfer_time(c.at("bytes").get<double>(), scenario.links.at(link));
      } else if (type == "stage") {
        const Placement pl = parse_placement(c.at("placement").get<std::string>());
        const auto& set = profiles.for_placement(pl);
        const std::string stage = c.at("stage").get<std::string>();
        if (!set.count(stage)) throw ReferenceError("golden cell references unknown stage '" + stage + "'");
        cell.modeled = stage_time(set.at(stage), Clip{}, WindowCounts{}, TokenCounts{});
      } else if (type == "pipeline") {
        const Placement pl = parse_placement(c.at("placement").get<std::string>());
        cell.modeled = find_report(c.at("pipeline").get<std::string>(), pl, link).total_s;
      } else if (type == "gain") {
        const std::string name = c.at("pipeline").get<std::string>();
        cell.modeled = compare(find_report(name, Placement::device, ""), find_report(name, Placement::cloud, link));
      } else if (type == "decode_prefill_ratio") {
        const Placement pl = parse_placement(c.at("placement").get<std::string>());
        const auto& st = profiles.for_placement(pl).at(c.at("stage").get<std::string>());
        cell.modeled = st.decode_ms_per_token / st.prefill_ms_per_token;
      } else {
        throw ConfigError("unknown golden cell type '" + type + "'");
      }
      cells.push_back(cell);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("golden JSON: ") + e.what());
  } catch (const std::out_of_range&) {
    throw ReferenceError("golden cell references an unknown link or stage");
  }
  return cells;
}

std::vector<SweepRow> bandwidth_sweep(const Scenario& scenario, const ProfileLibrary& profiles,
                                      const std::vector<double>& bandwidths_mbps) {
  std::vector<SweepRow> rows;
  std::map<std::string, double> device_totals;
  for (const auto& p : scenario.pipelines) {
    if (p.placement == Placement::device) device_totals[p.name] = pipeline_time(p, profiles, std::nullopt).total_s;
  }
  std::vector<std::string> seen;
  for (const auto& p : scenario.pipelines) {
    if (p.placement != Placement::cloud) continue;
    // One row set per pipeline name; the link shape comes from its first cloud variant.
    if (std::find(seen.begin(), seen.end(), p.name) != seen.end()) continue;
    seen.push_back(p.name);
    NetworkLink link = link_for(scenario, p).value_or(NetworkLink{});
    for (double bw : bandwidths_mbps) {
      link.bandwidth_mbps = bw;
      link.name = "sweep";
      const double cloud = pipeline_time(p, profiles, link).total_s;
      const auto it = device_totals.find(p.name);
      rows.push_back({bw, p.name, cloud, it == device_totals.end() ? std::numeric_limits<double>::quiet_NaN() : it->second});
    }
  }
  return rows;
}

}  // namespace aigaitor::latency
