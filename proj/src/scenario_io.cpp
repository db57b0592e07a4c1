#include "chpf/scenario_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "chpf/config_json.hpp"

namespace chpf {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'C', 'H', 'P', 'F'};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void vec3(const Eigen::Vector3d& v) {
    f64(v.x());
    f64(v.y());
    f64(v.z());
  }
  void pose(const Pose& p) {
    vec3(p.translation);
    f64(p.rotation.w());
    f64(p.rotation.x());
    f64(p.rotation.y());
    f64(p.rotation.z());
  }
  void camera(const PinholeCamera& c) {
    f64(c.fx);
    f64(c.fy);
    f64(c.cx);
    f64(c.cy);
  }
  std::vector<std::uint8_t>& data() { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  Eigen::Vector3d vec3() {
    const double x = f64();
    const double y = f64();
    const double z = f64();
    return {x, y, z};
  }
  Pose pose() {
    const Eigen::Vector3d t = vec3();
    const double w = f64();
    const double x = f64();
    const double y = f64();
    const double z = f64();
    Pose p;
    p.translation = t;
    p.rotation = Eigen::Quaterniond(w, x, y, z);  // stored canonical; keep bits
    return p;
  }
  PinholeCamera camera() {
    PinholeCamera c;
    c.fx = f64();
    c.fy = f64();
    c.cx = f64();
    c.cy = f64();
    return c;
  }
  /// Guards count fields against absurd values before allocating.
  std::uint32_t count(std::size_t min_bytes_each) {
    const std::uint32_t n = u32();
    if (min_bytes_each > 0 && n > (b_.size() - pos_) / min_bytes_each) {
      throw ScenarioFormatError("scenario container: count exceeds remaining data");
    }
    return n;
  }
  [[nodiscard]] std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > b_.size() - pos_) throw ScenarioFormatError("scenario container is truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void write_events(Writer& w, const std::vector<Event>& events) {
  w.u32(static_cast<std::uint32_t>(events.size()));
  for (const auto& e : events) {
    w.u8(static_cast<std::uint8_t>(e.kind));
    w.u8(e.from_left ? 1 : 0);
    w.u64(e.first);
    w.u64(e.last);
    w.f64(e.coverage);
    w.f64(e.gap);
    w.f64(e.slant);
    w.f64(e.magnitude);
  }
}

std::vector<Event> read_events(Reader& r) {
  const std::uint32_t n = r.count(50);
  std::vector<Event> out(n);
  for (auto& e : out) {
    const std::uint8_t kind = r.u8();
    if (kind > 2) throw ScenarioFormatError("scenario container: unknown event kind");
    e.kind = static_cast<EventKind>(kind);
    e.from_left = r.u8() != 0;
    e.first = r.u64();
    e.last = r.u64();
    e.coverage = r.f64();
    e.gap = r.f64();
    e.slant = r.f64();
    e.magnitude = r.f64();
  }
  return out;
}

void write_depth(Writer& w, const DepthImage& img) {
  w.u32(static_cast<std::uint32_t>(img.width));
  w.u32(static_cast<std::uint32_t>(img.height));
  w.camera(img.camera);
  Writer raw;
  for (const double d : img.depths) raw.f64(d);
  const auto& src = raw.data();
  w.u32(crc32_of(src));
  uLongf dest_len = compressBound(static_cast<uLong>(src.size()));
  std::vector<std::uint8_t> dest(dest_len);
  if (compress2(dest.data(), &dest_len, src.data(), static_cast<uLong>(src.size()), 6) != Z_OK) {
    throw std::runtime_error("zlib compression failed");
  }
  dest.resize(dest_len);
  w.u32(static_cast<std::uint32_t>(dest.size()));
  w.bytes(dest);
}

DepthImage read_depth(Reader& r) {
  DepthImage img;
  img.width = static_cast<int>(r.u32());
  img.height = static_cast<int>(r.u32());
  img.camera = r.camera();
  const std::uint32_t crc = r.u32();
  const std::uint32_t comp_len = r.u32();
  const auto comp = r.bytes(comp_len);
  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  if (img.width < 1 || img.height < 1 || n > (1u << 26)) {
    throw ScenarioFormatError("scenario container: bad depth frame dimensions");
  }
  std::vector<std::uint8_t> raw(n * 8);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, comp.data(), static_cast<uLong>(comp.size())) != Z_OK ||
      raw_len != raw.size()) {
    throw ScenarioFormatError("scenario container: corrupt depth frame");
  }
  if (crc32_of(raw) != crc) throw ScenarioFormatError("scenario container: depth checksum mismatch");
  Reader rr(raw);
  img.depths.resize(n);
  for (auto& d : img.depths) d = rr.f64();
  return img;
}

void encode_world(Writer& w, const PlanarScenario& s) {
  w.f64(s.world.workspace.x_min);
  w.f64(s.world.workspace.x_max);
  w.f64(s.world.workspace.y_min);
  w.f64(s.world.workspace.y_max);
  w.u32(static_cast<std::uint32_t>(s.world.beacons.size()));
  for (const auto& b : s.world.beacons) {
    w.f64(b.x());
    w.f64(b.y());
  }
  write_events(w, s.events);
  w.u32(static_cast<std::uint32_t>(s.frames.size()));
  for (const auto& f : s.frames) {
    w.f64(f.truth.x);
    w.f64(f.truth.y);
    w.f64(f.truth.theta);
    w.f64(f.control.delta.x);
    w.f64(f.control.delta.y);
    w.f64(f.control.delta.theta);
    w.f64(f.control.noise_scale);
    w.u32(static_cast<std::uint32_t>(f.observation.beacon_distances.size()));
    for (const double d : f.observation.beacon_distances) w.f64(d);
  }
}

void encode_world(Writer& w, const PoseScenario& s) {
  w.str(s.world.mesh_name);
  w.u32(static_cast<std::uint32_t>(s.world.mesh.vertices.size()));
  for (const auto& v : s.world.mesh.vertices) w.vec3(v);
  w.u32(static_cast<std::uint32_t>(s.world.mesh.triangles.size()));
  for (const auto& t : s.world.mesh.triangles) {
    w.u32(t[0]);
    w.u32(t[1]);
    w.u32(t[2]);
  }
  w.camera(s.world.camera);
  w.u32(static_cast<std::uint32_t>(s.world.width));
  w.u32(static_cast<std::uint32_t>(s.world.height));
  w.vec3(s.world.workspace.lo);
  w.vec3(s.world.workspace.hi);
  write_events(w, s.events);
  w.u32(static_cast<std::uint32_t>(s.frames.size()));
  for (const auto& f : s.frames) {
    w.pose(f.truth);
    w.pose(f.control.delta);
    w.f64(f.control.noise_scale);
    write_depth(w, f.observation);
  }
}

// PlanarState's constructor re-wraps theta; stored values are already wrapped.
PlanarState raw_planar(double x, double y, double th) {
  PlanarState s;
  s.x = x;
  s.y = y;
  s.theta = th;
  return s;
}

PlanarScenario decode_planar(Reader& r) {
  PlanarScenario s;
  s.world.workspace.x_min = r.f64();
  s.world.workspace.x_max = r.f64();
  s.world.workspace.y_min = r.f64();
  s.world.workspace.y_max = r.f64();
  const std::uint32_t nb = r.count(16);
  for (std::uint32_t i = 0; i < nb; ++i) {
    const double x = r.f64();
    const double y = r.f64();
    s.world.beacons.emplace_back(x, y);
  }
  s.events = read_events(r);
  const std::uint32_t nf = r.count(60);
  s.frames.resize(nf);
  for (auto& f : s.frames) {
    const double x = r.f64(), y = r.f64(), th = r.f64();
    f.truth = raw_planar(x, y, th);
    const double cx = r.f64(), cy = r.f64(), ct = r.f64();
    f.control.delta = raw_planar(cx, cy, ct);
    f.control.noise_scale = r.f64();
    const std::uint32_t nd = r.count(8);
    f.observation.beacon_distances.resize(nd);
    for (auto& d : f.observation.beacon_distances) d = r.f64();
  }
  return s;
}

PoseScenario decode_pose(Reader& r) {
  PoseScenario s;
  s.world.mesh_name = r.str();
  const std::uint32_t nv = r.count(24);
  s.world.mesh.vertices.resize(nv);
  for (auto& v : s.world.mesh.vertices) v = r.vec3();
  const std::uint32_t nt = r.count(12);
  s.world.mesh.triangles.resize(nt);
  for (auto& t : s.world.mesh.triangles) t = {r.u32(), r.u32(), r.u32()};
  try {
    s.world.mesh.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioFormatError(std::string("scenario container: ") + e.what());
  }
  s.world.camera = r.camera();
  s.world.width = static_cast<int>(r.u32());
  s.world.height = static_cast<int>(r.u32());
  s.world.workspace.lo = r.vec3();
  s.world.workspace.hi = r.vec3();
  s.events = read_events(r);
  const std::uint32_t nf = r.count(100);
  s.frames.resize(nf);
  for (auto& f : s.frames) {
    f.truth = r.pose();
    f.control.delta = r.pose();
    f.control.noise_scale = r.f64();
    f.observation = read_depth(r);
  }
  return s;
}

}  // namespace

std::vector<std::uint8_t> encode_scenario(const Scenario& s) {
  Writer w;
  w.bytes(kMagic);
  w.u16(kScenarioFormatVersion);
  w.u8(static_cast<std::uint8_t>(space_of(s)));
  w.u8(0);
  std::visit(
      [&](const auto& sc) {
        w.u64(sc.seed);
        w.str(sc.id);
        w.str(sc.config_json);
        encode_world(w, sc);
      },
      s);
  const std::uint32_t crc = crc32_of(w.data());
  w.u32(crc);
  return std::move(w.data());
}

Scenario decode_scenario(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 2 + 2 + 8 + 4 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw ScenarioFormatError("not a scenario container (bad magic)");
  }
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.subspan(bytes.size() - 4));
  if (crc32_of(body) != tail.u32()) throw ScenarioFormatError("scenario container: checksum mismatch");

  Reader r(body);
  r.bytes(4);
  const std::uint16_t version = r.u16();
  if (version != kScenarioFormatVersion) {
    throw ScenarioFormatError("scenario container: unsupported version " + std::to_string(version));
  }
  const std::uint8_t space = r.u8();
  r.u8();
  const std::uint64_t seed = r.u64();
  std::string id = r.str();
  std::string config = r.str();

  Scenario out;
  if (space == static_cast<std::uint8_t>(Space::Planar)) {
    PlanarScenario s = decode_planar(r);
    s.seed = seed;
    s.id = std::move(id);
    s.config_json = std::move(config);
    out = std::move(s);
  } else if (space == static_cast<std::uint8_t>(Space::Pose6D)) {
    PoseScenario s = decode_pose(r);
    s.seed = seed;
    s.id = std::move(id);
    s.config_json = std::move(config);
    out = std::move(s);
  } else {
    throw ScenarioFormatError("scenario container: unknown state space");
  }
  if (r.position() != body.size()) throw ScenarioFormatError("scenario container: trailing bytes");
  if (frame_count(out) == 0) throw ScenarioFormatError("scenario container: no frames");
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& container) {
  return std::filesystem::path(container.string() + ".json");
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  const auto bytes = encode_scenario(s);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
  }
  Json side;
  std::visit(
      [&](const auto& sc) {
        side["id"] = sc.id;
        side["seed"] = sc.seed;
        side["config"] = sc.config_json.empty() ? Json::object() : Json::parse(sc.config_json);
        side["frames"] = sc.frames.size();
      },
      s);
  side["space"] = space_of(s) == Space::Planar ? "planar" : "pose6d";
  side["format_version"] = kScenarioFormatVersion;
  std::ofstream out(sidecar_path(path), std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + sidecar_path(path).string());
  out << side.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + sidecar_path(path).string());
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_scenario(bytes);
}

}  // namespace chpf
