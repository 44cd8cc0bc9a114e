#pragma once

// .aigk pose container. Byte layout, all little-endian:
//
//   offset  size  field
//   0       4     magic "AIGK"
//   4       1     version (1)
//   5       1     dims (2 or 3)
//   6       2     n_keypoints (u16)
//   8       4     n_frames (u32)
//   12      4     fps (f32)
//   16      2     topology name length L (u16)
//   18      L     topology name, UTF-8
//   18+L    ...   payload: f32 per value, frame-major, joint-minor,
//                 coords then confidence
//
// Coordinates are rounded to float32 on encode.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aigaitor/skeleton.hpp"

namespace aigaitor::io {

inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::size_t kFixedHeaderBytes = 18;

struct PoseFileHeader {
  std::uint8_t version = kFormatVersion;
  std::uint8_t dims = 2;
  std::uint16_t n_keypoints = 0;
  std::uint32_t n_frames = 0;
  float fps = 0.0f;
  std::string topology_name;

  std::size_t header_bytes() const { return kFixedHeaderBytes + topology_name.size(); }
  std::size_t payload_bytes() const {
    return static_cast<std::size_t>(n_frames) * n_keypoints * (dims + 1u) * 4u;
  }
};

std::size_t encoded_size(const PoseSequence& seq);

// Throws ValidationError for an invalid sequence.
std::vector<std::uint8_t> encode(const PoseSequence& seq);

PoseFileHeader decode_header(std::span<const std::uint8_t> bytes);

// The topology is resolved by name via topology_by_name unless one is given.
PoseSequence decode(std::span<const std::uint8_t> bytes);
PoseSequence decode(std::span<const std::uint8_t> bytes, const SkeletonTopology& topology);

void write_file(const std::filesystem::path& path, const PoseSequence& seq);
PoseSequence read_file(const std::filesystem::path& path);

// JSON form used by `aigaitor convert`.
nlohmann::json to_json(const PoseSequence& seq);
PoseSequence from_json(const nlohmann::json& doc);

struct VideoProfile {
  double duration_s = 10.0;
  double fps = 60.0;
  int width = 3840;
  int height = 2160;
  double size_bytes = 27.7e6;

  double bitrate_bps() const { return size_bytes * 8.0 / duration_s; }
};

// The 10 s 4K 60 fps clip the latency tables are measured on.
inline VideoProfile reference_4k_clip() { return {}; }

struct SizeReduction {
  double ratio = 0.0;
  double orders_of_magnitude = 0.0;
};

SizeReduction size_reduction(const VideoProfile& video, const PoseSequence& seq);

}  // namespace aigaitor::io
