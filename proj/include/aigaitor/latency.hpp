#pragma once

// Deterministic edge-vs-cloud latency composition.
//
// A pipeline's total is the sum of its stage times and transfer times, minus
// a shared-overhead correction: stages flagged shares_decoded_input all pay
// for loading and decoding the same clip, so (k - 1) copies of one of their
// fixed overheads are removed (the largest on device, the smallest on cloud
// by default).

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace aigaitor::latency {

enum class StageKind { per_frame, per_window, per_token, fixed };
enum class Placement { device, cloud };
enum class OverheadPolicy { none, subtract_min, subtract_max };

std::string to_string(StageKind k);
std::string to_string(Placement p);
std::string to_string(OverheadPolicy p);
StageKind parse_stage_kind(const std::string& s);
Placement parse_placement(const std::string& s);
OverheadPolicy parse_policy(const std::string& s);

struct StageProfile {
  std::string name;
  StageKind kind = StageKind::fixed;
  double per_frame_ms = 0.0;
  double per_window_ms = 0.0;
  double prefill_ms_per_token = 0.0;
  double decode_ms_per_token = 0.0;
  double fixed_overhead_s = 0.0;
  bool shares_decoded_input = false;
  // Table metadata carried for reporting and golden checks.
  std::optional<double> reported_e2e_s;
  std::optional<double> table_ms_per_frame;
  std::string parameters;
  std::optional<int> batch_size;

  // Throws ConfigError when fields unused by `kind` are nonzero or used ones
  // are negative or non-finite.
  void check() const;
};

struct NetworkLink {
  std::string name;
  double bandwidth_mbps = 15.0;
  double fixed_overhead_s = 1.25;

  void check() const;
};

struct Clip {
  double duration_s = 10.0;
  double fps = 60.0;

  long n_frames() const;
};

struct WindowCounts {
  std::size_t window_frames = 90;
  std::size_t stride_frames = 60;
};

struct TokenCounts {
  double in = 750.0;
  double out = 300.0;
};

struct PipelineSpec {
  std::string name;
  Placement placement = Placement::device;
  std::vector<std::string> stages;
  std::vector<double> uploads_bytes;
  std::vector<double> downloads_bytes;
  Clip clip;
  WindowCounts windows;
  TokenCounts tokens;
  OverheadPolicy policy = OverheadPolicy::subtract_max;
  std::string link;  // name of a NetworkLink; cloud only

  void check() const;
};

// Stage profiles for one placement, by name.
using ProfileSet = std::map<std::string, StageProfile>;

struct ProfileLibrary {
  std::string name;
  ProfileSet device;
  ProfileSet cloud;

  const ProfileSet& for_placement(Placement p) const { return p == Placement::device ? device : cloud; }
};

struct StageTime {
  std::string name;
  double seconds = 0.0;
  double fixed_overhead_s = 0.0;
  bool shares_decoded_input = false;
};

struct LatencyReport {
  std::string pipeline;
  Placement placement = Placement::device;
  std::string link;
  std::vector<StageTime> stages;
  double upload_s = 0.0;
  double download_s = 0.0;
  double shared_overhead_correction_s = 0.0;
  double total_s = 0.0;

  double transfer_s() const { return upload_s + download_s; }
  nlohmann::json to_json() const;
};

// 0 for 0 bytes, else bytes * 8 / (mbps * 1e6) + fixed overhead.
double transfer_time(double bytes, const NetworkLink& link);

std::size_t window_count(long n_frames, const WindowCounts& w);

double stage_time(const StageProfile& stage, const Clip& clip, const WindowCounts& windows, const TokenCounts& tokens);

// observed - n_frames * per_frame_ms / 1000; throws InconsistencyError when
// the per-frame share alone exceeds the observation.
double calibrate_overhead(double observed_e2e_s, double per_frame_ms, long n_frames);

// Throws ConfigError for an unknown stage name.
LatencyReport pipeline_time(const PipelineSpec& spec, const ProfileLibrary& profiles,
                            const std::optional<NetworkLink>& link);

// cloud_total / device_total.
double compare(const LatencyReport& device, const LatencyReport& cloud);

// JSON loaders. Per-frame stages with reported_e2e_s and no explicit
// fixed_overhead_s are calibrated against the clip given in the document.
ProfileLibrary load_profiles(const nlohmann::json& doc);
ProfileLibrary load_profiles(const std::filesystem::path& path);
StageProfile stage_from_json(const nlohmann::json& doc, const Clip& clip);
PipelineSpec pipeline_from_json(const nlohmann::json& doc);
NetworkLink link_from_json(const std::string& name, const nlohmann::json& doc);

// A scenario file: { "links": {name: link}, "pipelines": [spec, ...] }.
struct Scenario {
  std::map<std::string, NetworkLink> links;
  std::vector<PipelineSpec> pipelines;
};

Scenario load_scenario(const nlohmann::json& doc);

struct ScenarioResult {
  std::vector<LatencyReport> reports;
  // (pipeline name, link, cloud/device gain)
  struct Gain {
    std::string pipeline;
    std::string link;
    double ratio;
  };
  std::vector<Gain> gains;

  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

ScenarioResult run_scenario(const Scenario& scenario, const ProfileLibrary& profiles);

// Golden comparison against published values.
struct GoldenCell {
  std::string id;
  std::string description;
  double published = 0.0;
  double modeled = 0.0;
  double rel_tolerance = 0.0;
  double abs_tolerance = 0.0;
  // When set, pass means modeled lies in [range_lo, range_hi].
  std::optional<double> range_lo;
  std::optional<double> range_hi;

  double rel_error() const { return (modeled - published) / published; }
  bool pass() const;
};

// Evaluates every cell of a golden dataset document against the model.
std::vector<GoldenCell> evaluate_golden(const nlohmann::json& golden, const Scenario& scenario,
                                        const ProfileLibrary& profiles);

// Cloud totals for each bandwidth, keeping every other link parameter.
struct SweepRow {
  double bandwidth_mbps;
  std::string pipeline;
  double cloud_total_s;
  double device_total_s;
};
std::vector<SweepRow> bandwidth_sweep(const Scenario& scenario, const ProfileLibrary& profiles,
                                      const std::vector<double>& bandwidths_mbps);

}  // namespace aigaitor::latency
