#include "lawkit/render/splat.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>
#include <cmath>
#include <fstream>
#include <numeric>

namespace lawkit::render {

namespace {

// world axis indices (right, up, depth) and whether right is mirrored
struct AxisFrame {
  int r, u, d;
  bool neg;
};

AxisFrame axis_frame(Axis a) {
  switch (a) {
    case Axis::PosX: return {2, 1, 0, false};
    case Axis::NegX: return {2, 1, 0, true};
    case Axis::PosY: return {0, 2, 1, false};
    case Axis::NegY: return {0, 2, 1, true};
    case Axis::PosZ: return {0, 1, 2, false};
    case Axis::NegZ: return {0, 1, 2, true};
  }
  return {0, 1, 2, false};
}

}  // namespace

const char* to_string(Axis a) {
  switch (a) {
    case Axis::PosX: return "+X";
    case Axis::NegX: return "-X";
    case Axis::PosY: return "+Y";
    case Axis::NegY: return "-Y";
    case Axis::PosZ: return "+Z";
    case Axis::NegZ: return "-Z";
  }
  return "?";
}

Axis axis_from_string(const std::string& s) {
  for (Axis a : {Axis::PosX, Axis::NegX, Axis::PosY, Axis::NegY, Axis::PosZ, Axis::NegZ}) {
    std::string n = to_string(a);
    if (s == n || (n[0] == '+' && s == n.substr(1))) return a;
  }
  throw std::invalid_argument("unknown camera axis '" + s + "'");
}

void Camera::validate() const {
  if (width < 16 || height < 16) throw std::invalid_argument("camera image must be at least 16x16");
  const auto& w = world_window;
  if (!(w[0] >= 0.0 && w[1] >= 0.0 && w[2] <= 1.0 && w[3] <= 1.0 && w[0] < w[2] && w[1] < w[3])) {
    throw std::invalid_argument("camera world_window must be a non-empty box inside [0,1]^2");
  }
  if (!background.allFinite() || background.minCoeff() < 0.0 || background.maxCoeff() > 1.0) {
    throw std::invalid_argument("camera background must be in [0,1]");
  }
}

Vec2 Camera::plane(const Vec3& x) const {
  const auto f = axis_frame(axis);
  return Vec2(f.neg ? 1.0 - x(f.r) : x(f.r), x(f.u));
}

double Camera::depth(const Vec3& x) const {
  const auto f = axis_frame(axis);
  return f.neg ? -x(f.d) : x(f.d);
}

Vec2 Camera::to_pixel(const Vec3& x) const {
  const Vec2 q = plane(x);
  return Vec2((q.x() - world_window[0]) * pixels_per_meter_x(),
              (world_window[3] - q.y()) * pixels_per_meter_y());
}

Frame::Frame(int w, int h, const Vec3& fill) : width(w), height(h), rgb(3 * std::size_t(w) * h) {
  for (std::size_t i = 0; i < rgb.size(); i += 3)
    for (int c = 0; c < 3; ++c) rgb[i + c] = static_cast<float>(fill(c));
}

Splat2D project_splat(const sim::ParticleState& p, const Camera& cam, std::size_t index) {
  const auto f = axis_frame(cam.axis);
  Splat2D s;
  s.center = cam.to_pixel(p.x);
  s.depth = cam.depth(p.x);
  s.alpha = p.opacity;
  s.color = p.color;
  s.index = index;
  const double sr = f.neg ? -1.0 : 1.0;  // mirrored right axis
  s.cov_world << p.A(f.r, f.r), sr * p.A(f.r, f.u), sr * p.A(f.u, f.r), p.A(f.u, f.u);
  // rows grow downward
  const Mat2 J = Vec2(cam.pixels_per_meter_x(), -cam.pixels_per_meter_y()).asDiagonal();
  s.cov = J * s.cov_world * J.transpose();
  return s;
}

Frame composite(const std::vector<Splat2D>& splats, const Camera& cam,
                const CompositeOptions& opts, RenderStats* stats) {
  const int W = cam.width, H = cam.height;
  std::vector<double> acc(3 * std::size_t(W) * H, 0.0);
  std::vector<double> T(std::size_t(W) * H, 1.0);
  std::vector<unsigned char> done(std::size_t(W) * H, 0);
  std::size_t skipped = 0;

  for (const auto& s : splats) {
    const double a = s.cov(0, 0), b = s.cov(0, 1), c = s.cov(1, 1);
    const double det = a * c - b * b;
    const double tr = a + c;
    const double disc = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
    const double lmax = 0.5 * tr + disc;
    const double lmin = 0.5 * tr - disc;
    if (!(lmax > 0.0) || !(lmin > opts.min_condition * lmax) || !(det > 0.0) ||
        !std::isfinite(det)) {
      ++skipped;
      continue;
    }
    const double ia = c / det, ib = -b / det, ic = a / det;
    // 3-sigma box along each pixel axis
    const double rx = 3.0 * std::sqrt(a), ry = 3.0 * std::sqrt(c);
    const int x0 = std::max(0, static_cast<int>(std::floor(s.center.x() - rx - 0.5)));
    const int x1 = std::min(W - 1, static_cast<int>(std::ceil(s.center.x() + rx - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(s.center.y() - ry - 0.5)));
    const int y1 = std::min(H - 1, static_cast<int>(std::ceil(s.center.y() + ry - 0.5)));
    for (int row = y0; row <= y1; ++row) {
      const double dy = row + 0.5 - s.center.y();
      for (int col = x0; col <= x1; ++col) {
        const std::size_t pix = std::size_t(row) * W + col;
        if (done[pix]) continue;
        const double dx = col + 0.5 - s.center.x();
        const double q = ia * dx * dx + 2.0 * ib * dx * dy + ic * dy * dy;
        if (q > 9.0) continue;  // outside the 3-sigma ellipse
        const double sigma = s.alpha * std::exp(-0.5 * q);
        const double w = sigma * T[pix];
        for (int ch = 0; ch < 3; ++ch) acc[3 * pix + ch] += w * s.color(ch);
        T[pix] *= 1.0 - sigma;
        if (opts.early_termination && T[pix] < opts.min_transmittance) done[pix] = 1;
      }
    }
  }
  if (stats) stats->singular_skipped += skipped;

  Frame out(W, H, Vec3::Zero());
  for (std::size_t pix = 0; pix < T.size(); ++pix)
    for (int ch = 0; ch < 3; ++ch) {
      const double v = acc[3 * pix + ch] + T[pix] * cam.background(ch);
      out.rgb[3 * pix + ch] = static_cast<float>(std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0));
    }
  return out;
}

Frame render_frame(const std::vector<sim::ParticleState>& particles, const Camera& cam,
                   RenderStats* stats) {
  cam.validate();
  std::vector<Splat2D> splats;
  splats.reserve(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i)
    splats.push_back(project_splat(particles[i], cam, i));
  std::sort(splats.begin(), splats.end(), [](const Splat2D& a, const Splat2D& b) {
    return a.depth < b.depth || (a.depth == b.depth && a.index < b.index);
  });
  return composite(splats, cam, {}, stats);
}

std::string encode_ppm(const Frame& f) {
  std::string out = "P6\n" + std::to_string(f.width) + " " + std::to_string(f.height) + "\n255\n";
  out.reserve(out.size() + f.rgb.size());
  for (float v : f.rgb)
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f))));
  return out;
}

void write_ppm(const std::string& path, const Frame& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const auto bytes = encode_ppm(f);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Frame decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t b = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (b == pos) throw std::runtime_error("truncated PPM header");
    return bytes.substr(b, pos - b);
  };
  if (token() != "P6") throw std::runtime_error("not a binary PPM (P6)");
  const int w = std::stoi(token());
  const int h = std::stoi(token());
  if (token() != "255") throw std::runtime_error("only maxval 255 PPM is supported");
  ++pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (w <= 0 || h <= 0 || bytes.size() < pos + n) throw std::runtime_error("truncated PPM raster");
  Frame f(w, h, Vec3::Zero());
  for (std::size_t i = 0; i < n; ++i) f.rgb[i] = static_cast<float>(static_cast<unsigned char>(bytes[pos + i])) / 255.0f;
  return f;
}

Frame read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

}  // namespace lawkit::render
