#include "lawkit/sim/trajectory.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lawkit::sim {

static_assert(std::endian::native == std::endian::little, "VLTJ I/O assumes a little-endian host");

namespace {

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

struct Reader {
  const std::string& s;
  std::size_t pos = 0;
  template <class T>
  T get() {
    if (pos + sizeof(T) > s.size()) throw TrajectoryFormatError("VLTJ: truncated data");
    T v;
    std::memcpy(&v, s.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
};

}  // namespace

std::string encode_trajectory(const Trajectory& t) {
  const std::size_t n = t.particle_count();
  for (const auto& f : t.frames)
    if (f.size() != n) throw TrajectoryFormatError("VLTJ: particle count differs across frames");
  if (t.has_F() && t.F.size() != t.frames.size())
    throw TrajectoryFormatError("VLTJ: F frames do not match position frames");
  std::string out = "VLTJ";
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.frames.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  put<std::uint8_t>(out, t.has_F() ? 1 : 0);
  out.reserve(out.size() + t.frames.size() * n * (t.has_F() ? 48 : 12));
  for (std::size_t f = 0; f < t.frames.size(); ++f) {
    for (const auto& x : t.frames[f])
      for (int a = 0; a < 3; ++a) put<float>(out, static_cast<float>(x(a)));
    if (t.has_F()) {
      if (t.F[f].size() != n) throw TrajectoryFormatError("VLTJ: F count mismatch");
      for (const auto& F : t.F[f])
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) put<float>(out, static_cast<float>(F(r, c)));
    }
  }
  return out;
}

Trajectory decode_trajectory(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "VLTJ") != 0)
    throw TrajectoryFormatError("VLTJ: bad magic");
  Reader r{bytes, 4};
  const auto version = r.get<std::uint32_t>();
  if (version != 1) throw TrajectoryFormatError("VLTJ: unsupported version " + std::to_string(version));
  const auto frames = r.get<std::uint32_t>();
  const auto n = r.get<std::uint32_t>();
  const auto has_F = r.get<std::uint8_t>();
  if (has_F > 1) throw TrajectoryFormatError("VLTJ: bad has_F flag");
  const std::size_t need =
      std::size_t(frames) * n * (has_F ? 48 : 12);
  if (bytes.size() - r.pos != need) throw TrajectoryFormatError("VLTJ: payload size mismatch");
  Trajectory t;
  t.frames.resize(frames);
  if (has_F) t.F.resize(frames);
  for (std::uint32_t f = 0; f < frames; ++f) {
    t.frames[f].resize(n);
    for (auto& x : t.frames[f])
      for (int a = 0; a < 3; ++a) x(a) = r.get<float>();
    if (has_F) {
      t.F[f].resize(n);
      for (auto& F : t.F[f])
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) F(i, j) = r.get<float>();
    }
  }
  return t;
}

void write_trajectory(const std::string& path, const Trajectory& t) {
  const std::string bytes = encode_trajectory(t);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Trajectory read_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_trajectory(ss.str());
}

void write_sidecar(const std::string& path, const Trajectory& t, const SimConfig& c) {
  nlohmann::json j;
  j["format"] = "VLTJ";
  j["version"] = 1;
  j["frames"] = t.frame_count();
  j["particles"] = t.particle_count();
  j["has_F"] = t.has_F();
  j["scene_digest"] = t.scene_digest;
  j["law_digest"] = t.law_digest;
  j["config_digest"] = t.config_digest;
  j["seed"] = t.seed;
  j["config"] = {{"dt", c.dt},
                 {"substeps_per_frame", c.substeps_per_frame},
                 {"frames", c.frames},
                 {"gravity", {c.gravity.x(), c.gravity.y(), c.gravity.z()}},
                 {"boundary", to_string(c.boundary)},
                 {"margin", c.margin},
                 {"resolution", c.resolution},
                 {"v_max", c.v_max},
                 {"min_det", c.min_det}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

void read_sidecar(const std::string& path, Trajectory& t) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const auto j = nlohmann::json::parse(in);
  t.scene_digest = j.value("scene_digest", "");
  t.law_digest = j.value("law_digest", "");
  t.config_digest = j.value("config_digest", "");
  t.seed = j.value("seed", std::uint64_t{0});
}

}  // namespace lawkit::sim
