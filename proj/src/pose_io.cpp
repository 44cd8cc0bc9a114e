#include "aigaitor/pose_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "aigaitor/errors.hpp"

namespace aigaitor::io {

static_assert(std::endian::native == std::endian::little, "pose-io assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'A', 'I', 'G', 'K'};

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }

 private:
  std::vector<std::uint8_t>& out_;
};

template <typename T>
T load(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

std::size_t encoded_size(const PoseSequence& seq) {
  return kFixedHeaderBytes + seq.topology.name.size() +
         seq.frames.size() * seq.joint_count() * static_cast<std::size_t>(seq.dims + 1) * 4u;
}

std::vector<std::uint8_t> encode(const PoseSequence& seq) {
  require_valid(seq);
  if (seq.joint_count() > std::numeric_limits<std::uint16_t>::max()) {
    throw ValidationError("too many keypoints for the pose file format");
  }
  if (seq.frames.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("too many frames for the pose file format");
  }
  if (seq.topology.name.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ValidationError("topology name too long");
  }

  std::vector<std::uint8_t> out;
  out.reserve(encoded_size(seq));
  Writer w(out);
  w.put_bytes(kMagic, 4);
  w.put<std::uint8_t>(kFormatVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(seq.dims));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(seq.joint_count()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(seq.frames.size()));
  w.put<float>(static_cast<float>(seq.fps));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(seq.topology.name.size()));
  w.put_bytes(seq.topology.name.data(), seq.topology.name.size());

  for (const Frame& frame : seq.frames) {
    for (const Keypoint& kp : frame) {
      for (int d = 0; d < seq.dims; ++d) w.put<float>(static_cast<float>(kp.coords[d]));
      w.put<float>(static_cast<float>(kp.confidence));
    }
  }
  return out;
}

PoseFileHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a pose file: bad magic");
  }
  if (bytes.size() < kFixedHeaderBytes) throw TruncationError(kFixedHeaderBytes, bytes.size());

  PoseFileHeader h;
  h.version = load<std::uint8_t>(bytes, 4);
  if (h.version != kFormatVersion) {
    throw FormatError("unsupported pose file version " + std::to_string(h.version));
  }
  h.dims = load<std::uint8_t>(bytes, 5);
  if (h.dims != 2 && h.dims != 3) throw FormatError("pose file dims must be 2 or 3");
  h.n_keypoints = load<std::uint16_t>(bytes, 6);
  h.n_frames = load<std::uint32_t>(bytes, 8);
  h.fps = load<float>(bytes, 12);
  const auto name_len = load<std::uint16_t>(bytes, 16);
  if (bytes.size() < kFixedHeaderBytes + name_len) {
    throw TruncationError(kFixedHeaderBytes + name_len, bytes.size());
  }
  h.topology_name.assign(reinterpret_cast<const char*>(bytes.data() + kFixedHeaderBytes), name_len);
  return h;
}

namespace {

PoseSequence decode_with(std::span<const std::uint8_t> bytes, const PoseFileHeader& h,
                         SkeletonTopology topology) {
  const std::size_t expected = h.header_bytes() + h.payload_bytes();
  if (bytes.size() != expected) throw TruncationError(expected, bytes.size());
  if (topology.joint_count() != h.n_keypoints) {
    throw SchemaError("topology '" + topology.name + "' has " + std::to_string(topology.joint_count()) +
                      " joints, file has " + std::to_string(h.n_keypoints));
  }

  PoseSequence seq;
  seq.topology = std::move(topology);
  seq.dims = h.dims;
  seq.fps = h.fps;
  seq.frames.resize(h.n_frames, Frame(h.n_keypoints));

  std::size_t offset = h.header_bytes();
  for (Frame& frame : seq.frames) {
    for (Keypoint& kp : frame) {
      for (int d = 0; d < seq.dims; ++d) {
        kp.coords[d] = load<float>(bytes, offset);
        offset += 4;
      }
      kp.confidence = load<float>(bytes, offset);
      offset += 4;
    }
  }
  return seq;
}

}  // namespace

PoseSequence decode(std::span<const std::uint8_t> bytes) {
  const PoseFileHeader h = decode_header(bytes);
  return decode_with(bytes, h, topology_by_name(h.topology_name, h.n_keypoints));
}

PoseSequence decode(std::span<const std::uint8_t> bytes, const SkeletonTopology& topology) {
  return decode_with(bytes, decode_header(bytes), topology);
}

void write_file(const std::filesystem::path& path, const PoseSequence& seq) {
  const auto bytes = encode(seq);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("failed writing " + path.string());
}

PoseSequence read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

nlohmann::json to_json(const PoseSequence& seq) {
  nlohmann::json frames = nlohmann::json::array();
  for (const Frame& f : seq.frames) {
    nlohmann::json row = nlohmann::json::array();
    for (const Keypoint& kp : f) {
      nlohmann::json v = nlohmann::json::array();
      for (int d = 0; d < seq.dims; ++d) v.push_back(kp.coords[d]);
      v.push_back(kp.confidence);
      row.push_back(std::move(v));
    }
    frames.push_back(std::move(row));
  }
  return {{"topology", seq.topology.to_json()}, {"dims", seq.dims}, {"fps", seq.fps}, {"frames", frames}};
}

PoseSequence from_json(const nlohmann::json& doc) {
  PoseSequence seq;
  try {
    const auto& topo = doc.at("topology");
    if (topo.is_string()) {
      const std::size_t n = doc.at("frames").empty() ? 0 : doc.at("frames")[0].size();
      seq.topology = topology_by_name(topo.get<std::string>(), n);
    } else if (topo.at("bones").empty()) {
      // Placeholder topologies may have a single joint; skip the named-topology checks.
      seq.topology.name = topo.at("name").get<std::string>();
      seq.topology.joint_names = topo.at("joints").get<std::vector<std::string>>();
      seq.topology.parent_index.assign(seq.topology.joint_names.size(), std::nullopt);
    } else {
      seq.topology = SkeletonTopology::from_json(topo);
    }
    seq.dims = doc.at("dims").get<int>();
    seq.fps = doc.at("fps").get<double>();
    for (const auto& row : doc.at("frames")) {
      Frame f;
      for (const auto& v : row) {
        if (v.size() != static_cast<std::size_t>(seq.dims + 1)) {
          throw ValidationError("keypoint entries must have dims+1 values");
        }
        Keypoint kp;
        for (int d = 0; d < seq.dims; ++d) kp.coords[d] = v[d].get<double>();
        kp.confidence = v[seq.dims].get<double>();
        f.push_back(kp);
      }
      seq.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("pose JSON: ") + e.what());
  }
  require_valid(seq);
  return seq;
}

SizeReduction size_reduction(const VideoProfile& video, const PoseSequence& seq) {
  const double pose_bytes = static_cast<double>(encoded_size(seq));
  SizeReduction r;
  r.ratio = video.size_bytes / pose_bytes;
  r.orders_of_magnitude = std::log10(r.ratio);
  return r;
}

}  // namespace aigaitor::io
