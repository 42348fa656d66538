#pragma once

// File formats. Binary formats are little-endian with a 4-byte magic and a
// uint32 version; structured text is JSON; tables are CSV with a header row.
//
//   point cloud   "SFPC" v1, uint64 count, count x {x, y, z, r, m} float32
//   features      "SFFT" v1, uint32 h, w, c, int32 camera, h*w*c float32 (HWC)
//   BEV map       "SFBV" v1, uint32 nx, ny, c, nx*ny mask bytes, nx*ny*c float32
//   encoder       "SFPE" v1, uint32 channels, uint32 inputs (9), uint64 seed,
//                 channels*9 float32 row-major
//   image         binary PPM (P6, maxval 255)

#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "streamfuse/calib.hpp"
#include "streamfuse/detection.hpp"
#include "streamfuse/error.hpp"
#include "streamfuse/fusion.hpp"
#include "streamfuse/grid.hpp"
#include "streamfuse/image_bev.hpp"
#include "streamfuse/pillar.hpp"
#include "streamfuse/slicing.hpp"
#include "streamfuse/stream_sim.hpp"

namespace streamfuse::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Byte-level helpers

class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    const U u = std::bit_cast<U>(value);
    for (std::size_t k = 0; k < sizeof(T); ++k) bytes_.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
  }

  void raw(const std::uint8_t* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::vector<std::uint8_t> bytes, std::string what) : bytes_(std::move(bytes)), what_(std::move(what)) {}

  void expect_magic(std::string_view m) {
    need(m.size());
    if (std::memcmp(bytes_.data() + pos_, m.data(), m.size()) != 0) fail("bad magic, expected '" + std::string(m) + "'");
    pos_ += m.size();
  }

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    need(sizeof(T));
    U u = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) u |= static_cast<U>(static_cast<U>(bytes_[pos_ + k]) << (8 * k));
    pos_ += sizeof(T);
    return std::bit_cast<T>(u);
  }

  void raw(std::uint8_t* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) fail("trailing bytes");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw DataError(what_ + ": " + msg); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated file");
  }

  std::vector<std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Point clouds

inline constexpr std::uint32_t kFormatVersion = 1;

inline std::vector<std::uint8_t> encode_points(std::span<const PointRecord> pts) {
  ByteWriter w;
  w.magic("SFPC");
  w.put<std::uint32_t>(kFormatVersion);
  w.put<std::uint64_t>(pts.size());
  for (const auto& p : pts) {
    for (float v : {p.x, p.y, p.z, p.r, p.m}) w.put(v);
  }
  return w.bytes();
}

/// Decoded points carry s = 0; the slice index is assigned by slice_sweep.
inline std::vector<PointRecord> decode_points(std::vector<std::uint8_t> bytes, const std::string& what = "point cloud") {
  ByteReader r(std::move(bytes), what);
  r.expect_magic("SFPC");
  if (r.get<std::uint32_t>() != kFormatVersion) r.fail("unsupported version");
  const auto n = r.get<std::uint64_t>();
  std::vector<PointRecord> pts;
  pts.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 24)));
  for (std::uint64_t k = 0; k < n; ++k) {
    PointRecord p;
    p.x = r.get<float>();
    p.y = r.get<float>();
    p.z = r.get<float>();
    p.r = r.get<float>();
    p.m = r.get<float>();
    pts.push_back(p);
  }
  r.expect_end();
  return pts;
}

inline void save_points(const fs::path& path, std::span<const PointRecord> pts) { write_bytes(path, encode_points(pts)); }
inline std::vector<PointRecord> load_points(const fs::path& path) { return decode_points(read_bytes(path), path.string()); }

// ---------------------------------------------------------------------------
// Scene (ground-truth boxes)

inline json box_to_json(const Box3D& b) {
  return json{{"center", {b.center.x(), b.center.y(), b.center.z()}},
              {"dims", {b.dims.x(), b.dims.y(), b.dims.z()}},
              {"yaw", b.yaw},
              {"class_id", b.class_id}};
}

inline Eigen::Vector3d vec3(const json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw DataError(std::string("expected 3-vector for '") + key + "'");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

inline Box3D box_from_json(const json& j) {
  Box3D b;
  b.center = vec3(j, "center");
  b.dims = vec3(j, "dims");
  b.yaw = j.at("yaw").get<double>();
  b.class_id = j.at("class_id").get<int>();
  b.score = j.value("score", 1.0);
  if (!(b.dims.array() > 0.0).all()) throw DataError("box dims must be positive");
  return b;
}

struct Scene {
  std::int64_t frame_id = 0;
  std::vector<Box3D> boxes;
};

inline void save_scene(const fs::path& path, const Scene& scene) {
  json boxes = json::array();
  for (const auto& b : scene.boxes) boxes.push_back(box_to_json(b));
  write_json(path, json{{"frame_id", scene.frame_id}, {"boxes", boxes}});
}

inline Scene load_scene(const fs::path& path) {
  const json j = read_json(path);
  try {
    Scene s;
    s.frame_id = j.value("frame_id", std::int64_t{0});
    for (const auto& b : j.at("boxes")) s.boxes.push_back(box_from_json(b));
    return s;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Calibration

inline json camera_to_json(const Camera& c) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) rot.push_back(c.extrinsics.rotation(r, k));
  }
  const auto& t = c.extrinsics.translation;
  return json{{"fx", c.intrinsics.fx},
              {"fy", c.intrinsics.fy},
              {"cx", c.intrinsics.cx},
              {"cy", c.intrinsics.cy},
              {"image_w", c.intrinsics.image_w},
              {"image_h", c.intrinsics.image_h},
              {"rotation", rot},
              {"translation", {t.x(), t.y(), t.z()}},
              {"fov_deg", c.fov_deg},
              {"azimuth_center_deg", c.azimuth_center_deg}};
}

inline Camera camera_from_json(const json& j) {
  Camera c;
  c.intrinsics.fx = j.at("fx").get<double>();
  c.intrinsics.fy = j.at("fy").get<double>();
  c.intrinsics.cx = j.at("cx").get<double>();
  c.intrinsics.cy = j.at("cy").get<double>();
  c.intrinsics.image_w = j.at("image_w").get<int>();
  c.intrinsics.image_h = j.at("image_h").get<int>();
  const auto& rot = j.at("rotation");
  if (!rot.is_array() || rot.size() != 9) throw DataError("calibration: rotation must hold 9 values (row-major)");
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) c.extrinsics.rotation(r, k) = rot[r * 3 + k].get<double>();
  }
  c.extrinsics.translation = vec3(j, "translation");
  c.fov_deg = j.at("fov_deg").get<double>();
  c.azimuth_center_deg = j.at("azimuth_center_deg").get<double>();
  return c;
}

inline json rig_to_json(const CameraRig& rig) {
  json cams = json::array();
  for (const auto& c : rig.cameras) cams.push_back(camera_to_json(c));
  return json{{"cameras", cams}};
}

inline CameraRig rig_from_json(const json& j) {
  CameraRig rig;
  try {
    for (const auto& c : j.at("cameras")) rig.cameras.push_back(camera_from_json(c));
  } catch (const json::exception& e) {
    throw DataError(std::string("calibration: ") + e.what());
  }
  try {
    rig.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("calibration: ") + e.what());
  }
  return rig;
}

inline void save_calibration(const fs::path& path, const CameraRig& rig) { write_json(path, rig_to_json(rig)); }
inline CameraRig load_calibration(const fs::path& path) { return rig_from_json(read_json(path)); }

// ---------------------------------------------------------------------------
// Images and feature maps

inline std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string header = fmt::format("P6\n{} {}\n255\n", img.w, img.h);
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

inline RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& what = "image") {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  if (token() != "P6") throw DataError(what + ": not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw DataError(what + ": malformed PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw DataError(what + ": unsupported PPM (need maxval 255)");
  ++pos;  // single whitespace after maxval
  RgbImage img(w, h);
  if (bytes.size() < pos + img.rgb.size()) throw DataError(what + ": truncated PPM");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), img.rgb.size(), img.rgb.begin());
  return img;
}

inline void save_ppm(const fs::path& path, const RgbImage& img) { write_bytes(path, encode_ppm(img)); }
inline RgbImage load_ppm(const fs::path& path) { return decode_ppm(read_bytes(path), path.string()); }

inline std::vector<std::uint8_t> encode_features(const FeatureImage& f) {
  ByteWriter w;
  w.magic("SFFT");
  w.put<std::uint32_t>(kFormatVersion);
  w.put<std::uint32_t>(f.h);
  w.put<std::uint32_t>(f.w);
  w.put<std::uint32_t>(f.c);
  w.put<std::int32_t>(f.camera);
  for (float v : f.data) w.put(v);
  return w.bytes();
}

inline FeatureImage decode_features(std::vector<std::uint8_t> bytes, const std::string& what = "feature map") {
  ByteReader r(std::move(bytes), what);
  r.expect_magic("SFFT");
  if (r.get<std::uint32_t>() != kFormatVersion) r.fail("unsupported version");
  const auto h = r.get<std::uint32_t>();
  const auto w = r.get<std::uint32_t>();
  const auto c = r.get<std::uint32_t>();
  const auto cam = r.get<std::int32_t>();
  if (std::uint64_t{h} * w * c > (std::uint64_t{1} << 31)) r.fail("feature map too large");
  FeatureImage f(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), cam);
  for (auto& v : f.data) v = r.get<float>();
  r.expect_end();
  return f;
}

inline void save_features(const fs::path& path, const FeatureImage& f) { write_bytes(path, encode_features(f)); }
inline FeatureImage load_features(const fs::path& path) { return decode_features(read_bytes(path), path.string()); }

inline std::vector<std::uint8_t> encode_bev(const BevMap& m) {
  ByteWriter w;
  w.magic("SFBV");
  w.put<std::uint32_t>(kFormatVersion);
  w.put<std::uint32_t>(m.nx);
  w.put<std::uint32_t>(m.ny);
  w.put<std::uint32_t>(m.c);
  w.raw(m.mask.data(), m.mask.size());
  for (float v : m.data) w.put(v);
  return w.bytes();
}

inline BevMap decode_bev(std::vector<std::uint8_t> bytes, const std::string& what = "BEV map") {
  ByteReader r(std::move(bytes), what);
  r.expect_magic("SFBV");
  if (r.get<std::uint32_t>() != kFormatVersion) r.fail("unsupported version");
  const auto nx = r.get<std::uint32_t>();
  const auto ny = r.get<std::uint32_t>();
  const auto c = r.get<std::uint32_t>();
  if (std::uint64_t{nx} * ny * c > (std::uint64_t{1} << 31)) r.fail("BEV map too large");
  BevMap m(static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(c));
  r.raw(m.mask.data(), m.mask.size());
  for (auto& v : m.data) v = r.get<float>();
  r.expect_end();
  return m;
}

inline void save_bev(const fs::path& path, const BevMap& m) { write_bytes(path, encode_bev(m)); }
inline BevMap load_bev(const fs::path& path) { return decode_bev(read_bytes(path), path.string()); }

// ---------------------------------------------------------------------------
// Pillar encoder weights

inline std::vector<std::uint8_t> encode_encoder_weights(const ReferencePillarEncoder& enc) {
  ByteWriter w;
  w.magic("SFPE");
  w.put<std::uint32_t>(kFormatVersion);
  w.put<std::uint32_t>(enc.channels());
  w.put<std::uint32_t>(kPillarInputs);
  w.put<std::uint64_t>(enc.seed());
  for (float v : enc.weights()) w.put(v);
  return w.bytes();
}

inline ReferencePillarEncoder decode_encoder_weights(std::vector<std::uint8_t> bytes,
                                                     const std::string& what = "encoder weights") {
  ByteReader r(std::move(bytes), what);
  r.expect_magic("SFPE");
  if (r.get<std::uint32_t>() != kFormatVersion) r.fail("unsupported version");
  const auto c = r.get<std::uint32_t>();
  if (r.get<std::uint32_t>() != kPillarInputs) r.fail("expected 9 inputs per channel");
  const auto seed = r.get<std::uint64_t>();
  if (c == 0 || c > 65536) r.fail("bad channel count");
  std::vector<float> weights(static_cast<std::size_t>(c) * kPillarInputs);
  for (auto& v : weights) v = r.get<float>();
  r.expect_end();
  return ReferencePillarEncoder(static_cast<int>(c), std::move(weights), seed);
}

inline void save_encoder_weights(const fs::path& path, const ReferencePillarEncoder& enc) {
  write_bytes(path, encode_encoder_weights(enc));
}
inline ReferencePillarEncoder load_encoder_weights(const fs::path& path) {
  return decode_encoder_weights(read_bytes(path), path.string());
}

// ---------------------------------------------------------------------------
// CSV

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

/// Rows of a CSV with the given header, header row excluded. Blank lines are
/// skipped.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                       const std::vector<std::string>& header,
                                                       const std::string& what) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != header) {
    throw DataError(what + ": expected header '" + fmt::format("{}", fmt::join(header, ",")) + "'");
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw DataError(what + ": wrong column count on line " + std::to_string(lineno));
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(what + ": not a number: '" + s + "'");
  }
}

inline long long parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(what + ": not an integer: '" + s + "'");
  }
}

inline const std::vector<std::string> kDetectionHeader = {"frame_id", "slice", "class", "score", "cx", "cy",
                                                          "cz",       "l",     "w",     "h",     "yaw"};

inline std::string detections_to_csv(std::span<const Detection> dets) {
  std::string out = fmt::format("{}\n", fmt::join(kDetectionHeader, ","));
  for (const auto& d : dets) {
    const auto& b = d.box;
    out += fmt::format("{},{},{},{:.6f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.6f}\n", d.frame_id, d.slice,
                       b.class_id, b.score, b.center.x(), b.center.y(), b.center.z(), b.dims.x(), b.dims.y(),
                       b.dims.z(), b.yaw);
  }
  return out;
}

inline DetectionSet detections_from_csv(const std::string& text, const std::string& what = "detections") {
  DetectionSet out;
  for (const auto& r : parse_csv(text, kDetectionHeader, what)) {
    Detection d;
    d.frame_id = parse_int(r[0], what);
    d.slice = static_cast<int>(parse_int(r[1], what));
    d.box.class_id = static_cast<int>(parse_int(r[2], what));
    d.box.score = parse_double(r[3], what);
    d.box.center = {parse_double(r[4], what), parse_double(r[5], what), parse_double(r[6], what)};
    d.box.dims = {parse_double(r[7], what), parse_double(r[8], what), parse_double(r[9], what)};
    d.box.yaw = parse_double(r[10], what);
    if (!(d.box.score >= 0.0 && d.box.score <= 1.0)) throw DataError(what + ": score outside [0, 1]");
    out.push_back(d);
  }
  return out;
}

inline void save_detections(const fs::path& path, std::span<const Detection> dets) {
  write_text(path, detections_to_csv(dets));
}
inline DetectionSet load_detections(const fs::path& path) {
  return detections_from_csv(read_text(path), path.string());
}

/// Per class / threshold rows, then one summary row (class "all").
inline std::string eval_to_csv(const EvalReport& r) {
  std::string out = "class,threshold_m,ap,num_gt,num_det\n";
  for (const auto& c : r.classes) {
    for (std::size_t t = 0; t < r.thresholds_m.size(); ++t) {
      if (c.present()) {
        out += fmt::format("{},{:.2f},{:.6f},{},{}\n", c.class_id, r.thresholds_m[t], c.ap[t], c.num_gt, c.num_det);
      } else {
        out += fmt::format("{},{:.2f},absent,{},{}\n", c.class_id, r.thresholds_m[t], c.num_gt, c.num_det);
      }
    }
  }
  out += r.map ? fmt::format("all,mean,{:.6f},,\n", *r.map) : std::string("all,mean,absent,,\n");
  return out;
}

inline std::string cost_to_csv(std::span<const CostRow> rows) {
  std::string out = "stage,flops_full,flops_cropped,ratio\n";
  for (const auto& r : rows) out += fmt::format("{},{},{},{:.6f}\n", r.stage, r.flops_full, r.flops_cropped, r.ratio);
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline models and traces

inline PipelineModel pipeline_from_json(const json& j) {
  try {
    PipelineModel m;
    m.name = j.value("name", std::string("pipeline"));
    m.slice_interval_ms = j.at("slice_interval_ms").get<double>();
    m.n_slices = j.value("n_slices", 8);
    m.max_workers = j.value("max_workers", 0);
    m.jitter_ms = j.value("jitter_ms", 0.0);
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& s : j.at("stages")) {
      StageSpec st;
      st.name = s.at("name").get<std::string>();
      st.latency_ms = s.at("latency_ms").get<double>();
      st.depends_on_previous_slice = s.value("depends_on_previous_slice", false);
      st.parallel_group = s.value("parallel_group", std::string());
      if (s.contains("after")) st.after = s.at("after").get<std::vector<std::string>>();
      m.stages.push_back(std::move(st));
    }
    validate(m);
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline model: ") + e.what());
  }
}

inline json pipeline_to_json(const PipelineModel& m) {
  json stages = json::array();
  for (const auto& s : m.stages) {
    json js{{"name", s.name}, {"latency_ms", s.latency_ms}, {"depends_on_previous_slice", s.depends_on_previous_slice}};
    if (!s.parallel_group.empty()) js["parallel_group"] = s.parallel_group;
    if (s.after) js["after"] = *s.after;
    stages.push_back(js);
  }
  return json{{"name", m.name},         {"slice_interval_ms", m.slice_interval_ms},
              {"n_slices", m.n_slices}, {"max_workers", m.max_workers},
              {"jitter_ms", m.jitter_ms}, {"seed", m.seed},
              {"stages", stages}};
}

inline PipelineModel load_pipeline(const fs::path& path) {
  try {
    return pipeline_from_json(json::parse(read_text(path)));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

inline std::string trace_to_csv(const SimTrace& t) {
  std::string out = "slice,arrival,start,finish,wait,e2e\n";
  for (const auto& s : t.slices) {
    out += fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}\n", s.slice, s.arrival_ms, s.start_ms, s.finish_ms,
                       s.wait_ms, s.e2e_ms);
  }
  return out;
}

inline std::string summary_to_csv(std::span<const ComparisonRow> rows) {
  std::string out = "model,throughput_hz,completion_rate_hz,mean_e2e_ms,max_e2e_ms,wait_growth_ms_per_slice\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}\n", r.model, r.throughput_hz, r.completion_rate_hz,
                       r.mean_e2e_ms, r.max_e2e_ms, r.wait_growth_ms);
  }
  return out;
}

}  // namespace streamfuse::io
