#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

#include "lawkit/math.hpp"
#include "lawkit/sim/particles.hpp"

namespace lawkit::render {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class Axis { PosX, NegX, PosY, NegY, PosZ, NegZ };

const char* to_string(Axis a);
Axis axis_from_string(const std::string& s);

/// Orthographic camera looking along `axis`. In-plane (right, up) world axes
/// are X:(Z,Y), Y:(X,Z), Z:(X,Y); negative axes mirror `right` as 1 - r.
/// world_window is (r0, u0, r1, u1) in those mirrored plane coordinates.
struct Camera {
  Axis axis = Axis::PosZ;
  int width = 64;
  int height = 64;
  Eigen::Vector4d world_window = Eigen::Vector4d(0.0, 0.0, 1.0, 1.0);
  Vec3 background = Vec3::Zero();

  /// Throws std::invalid_argument.
  void validate() const;
  double pixels_per_meter_x() const { return width / (world_window[2] - world_window[0]); }
  double pixels_per_meter_y() const { return height / (world_window[3] - world_window[1]); }
  /// Plane coordinates (right, up) and depth of a world point.
  Vec2 plane(const Vec3& x) const;
  double depth(const Vec3& x) const;
  /// Continuous pixel coordinates; pixel (i, j) has its centre at (i + 0.5, j + 0.5)
  /// and row 0 is at the top.
  Vec2 to_pixel(const Vec3& x) const;
};

struct Frame {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;  // row-major, 3 floats per pixel

  Frame() = default;
  Frame(int w, int h, const Vec3& fill);
  float& at(int row, int col, int ch) { return rgb[3 * (std::size_t(row) * width + col) + ch]; }
  float at(int row, int col, int ch) const {
    return rgb[3 * (std::size_t(row) * width + col) + ch];
  }
  Vec3 pixel(int row, int col) const { return Vec3(at(row, col, 0), at(row, col, 1), at(row, col, 2)); }
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct Splat2D {
  Vec2 center;      // px
  Mat2 cov_world;   // m^2, minor of A orthogonal to the axis
  Mat2 cov;         // px^2
  double depth = 0.0;
  double alpha = 1.0;
  Vec3 color = Vec3::Zero();
  std::size_t index = 0;
};

Splat2D project_splat(const sim::ParticleState& p, const Camera& cam, std::size_t index = 0);

/// Counts splats skipped by composite for bad conditioning.
struct RenderStats {
  std::size_t singular_skipped = 0;
};

struct CompositeOptions {
  bool early_termination = true;
  double min_transmittance = 1e-4;
  double min_condition = 1e-10;
};

/// Splats must be sorted front to back (ascending depth).
Frame composite(const std::vector<Splat2D>& splats, const Camera& cam,
                const CompositeOptions& opts = {}, RenderStats* stats = nullptr);

/// Projects, sorts by (depth, index) and composites.
Frame render_frame(const std::vector<sim::ParticleState>& particles, const Camera& cam,
                   RenderStats* stats = nullptr);

/// Binary P6, maxval 255.
std::string encode_ppm(const Frame& f);
void write_ppm(const std::string& path, const Frame& f);
/// Reads what encode_ppm writes (P6, maxval 255, '#' comments allowed).
/// Throws std::runtime_error on malformed input.
Frame decode_ppm(const std::string& bytes);
Frame read_ppm(const std::string& path);

}  // namespace lawkit::render
