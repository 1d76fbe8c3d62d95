#include "lawkit/fit/loss.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace lawkit::fit {

namespace {

inline double d2(const Vec3& a, const Vec3& b) {
  const double x = a.x() - b.x(), y = a.y() - b.y(), z = a.z() - b.z();
  return x * x + y * y + z * z;
}

double one_way_brute(std::span<const Vec3> a, std::span<const Vec3> b) {
  double sum = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, d2(p, q));
    sum += best;
  }
  return sum / static_cast<double>(a.size());
}

// Uniform grid over the bounding box of `pts`.
class PointGrid {
 public:
  explicit PointGrid(std::span<const Vec3> pts) : pts_(pts) {
    lo_ = pts[0];
    Vec3 hi = pts[0];
    for (const auto& p : pts) {
      lo_ = lo_.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Vec3 ext = (hi - lo_).cwiseMax(1e-9);
    // about two points per cell
    const double vol = ext.prod();
    h_ = std::cbrt(2.0 * vol / static_cast<double>(pts.size()));
    h_ = std::max(h_, ext.maxCoeff() / 256.0);
    for (int a = 0; a < 3; ++a) n_[a] = std::max(1, static_cast<int>(std::ceil(ext(a) / h_)));
    start_.assign(std::size_t(n_[0]) * n_[1] * n_[2] + 1, 0);
    std::vector<std::size_t> cell(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cell[i] = flat(cell_of(pts[i]));
      ++start_[cell[i] + 1];
    }
    for (std::size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
    order_.resize(pts.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) order_[fill[cell[i]]++] = i;
  }

  double nearest_d2(const Vec3& q) const {
    const auto c = cell_of(q);
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0;; ++r) {
      int box_lo[3], box_hi[3];
      bool full = true;
      for (int a = 0; a < 3; ++a) {
        box_lo[a] = std::max(0, c[a] - r);
        box_hi[a] = std::min(n_[a] - 1, c[a] + r);
        full &= box_lo[a] == 0 && box_hi[a] == n_[a] - 1;
      }
      // visit only the shell at Chebyshev radius r
      for (int i = box_lo[0]; i <= box_hi[0]; ++i)
        for (int j = box_lo[1]; j <= box_hi[1]; ++j)
          for (int k = box_lo[2]; k <= box_hi[2]; ++k) {
            if (std::max({std::abs(i - c[0]), std::abs(j - c[1]), std::abs(k - c[2])}) != r) continue;
            const std::size_t f = flat({i, j, k});
            for (std::size_t s = start_[f]; s < start_[f + 1]; ++s)
              best = std::min(best, d2(q, pts_[order_[s]]));
          }
      if (full) return best;
      // distance from q to anything outside the searched box
      double bound = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        if (box_lo[a] > 0) bound = std::min(bound, q(a) - (lo_(a) + box_lo[a] * h_));
        if (box_hi[a] < n_[a] - 1) bound = std::min(bound, lo_(a) + (box_hi[a] + 1) * h_ - q(a));
      }
      if (bound > 0.0 && best <= bound * bound) return best;
    }
  }

 private:
  std::array<int, 3> cell_of(const Vec3& p) const {
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) {
      const double t = std::floor((p(a) - lo_(a)) / h_);
      c[a] = static_cast<int>(std::clamp(t, 0.0, double(n_[a] - 1)));
    }
    return c;
  }
  std::size_t flat(const std::array<int, 3>& c) const {
    return (std::size_t(c[0]) * n_[1] + c[1]) * n_[2] + c[2];
  }

  std::span<const Vec3> pts_;
  Vec3 lo_;
  double h_ = 1.0;
  int n_[3] = {1, 1, 1};
  std::vector<std::size_t> start_, order_;
};

double one_way_grid(std::span<const Vec3> a, std::span<const Vec3> b) {
  const PointGrid g(b);
  double sum = 0.0;
  for (const auto& p : a) sum += g.nearest_d2(p);
  return sum / static_cast<double>(a.size());
}

void check_nonempty(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw EmptySet("chamfer_l2: point sets must be non-empty");
}

}  // namespace

double chamfer_l2_brute(std::span<const Vec3> a, std::span<const Vec3> b) {
  check_nonempty(a, b);
  return one_way_brute(a, b) + one_way_brute(b, a);
}

double chamfer_l2(std::span<const Vec3> a, std::span<const Vec3> b) {
  check_nonempty(a, b);
  if (a.size() * b.size() <= 4096) return chamfer_l2_brute(a, b);
  return one_way_grid(a, b) + one_way_grid(b, a);
}

std::vector<double> per_frame_chamfer(const sim::Trajectory& pred, const sim::Trajectory& gt) {
  if (pred.frame_count() != gt.frame_count()) {
    throw StructureMismatch("trajectory frame counts differ: " + std::to_string(pred.frame_count()) +
                            " vs " + std::to_string(gt.frame_count()));
  }
  std::vector<double> out;
  out.reserve(gt.frame_count());
  for (std::size_t f = 0; f < gt.frame_count(); ++f) out.push_back(chamfer_l2(pred.frames[f], gt.frames[f]));
  return out;
}

double trajectory_chamfer(const sim::Trajectory& pred, const sim::Trajectory& gt) {
  const auto v = per_frame_chamfer(pred, gt);
  if (v.empty()) throw EmptySet("trajectory_chamfer: no frames");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWin> gauss_1d() {
  std::array<double, kWin> w{};
  double s = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    w[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    s += w[i];
  }
  for (auto& x : w) x /= s;
  return w;
}

void check_dims(const render::Frame& a, const render::Frame& b) {
  if (a.width != b.width || a.height != b.height || a.rgb.size() != b.rgb.size()) {
    throw DimensionMismatch("frame sizes differ: " + std::to_string(a.width) + "x" +
                            std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                            std::to_string(b.height));
  }
}

}  // namespace

double ssim(const render::Frame& a, const render::Frame& b) {
  check_dims(a, b);
  const int W = a.width, H = a.height;
  if (W < kWin || H < kWin) throw DimensionMismatch("frames smaller than the SSIM window");
  static const auto g = gauss_1d();
  const int ow = W - kWin + 1, oh = H - kWin + 1;
  // separable filtering of x, y, x^2, y^2, xy: horizontal pass then vertical
  std::vector<double> hx(std::size_t(H) * ow * 5);
  double total = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < ow; ++c) {
        double s[5] = {0, 0, 0, 0, 0};
        for (int k = 0; k < kWin; ++k) {
          const double x = a.at(r, c + k, ch), y = b.at(r, c + k, ch), w = g[k];
          s[0] += w * x;
          s[1] += w * y;
          s[2] += w * x * x;
          s[3] += w * y * y;
          s[4] += w * x * y;
        }
        for (int q = 0; q < 5; ++q) hx[(std::size_t(r) * ow + c) * 5 + q] = s[q];
      }
    double sum = 0.0;
    for (int r = 0; r < oh; ++r)
      for (int c = 0; c < ow; ++c) {
        double s[5] = {0, 0, 0, 0, 0};
        for (int k = 0; k < kWin; ++k)
          for (int q = 0; q < 5; ++q) s[q] += g[k] * hx[(std::size_t(r + k) * ow + c) * 5 + q];
        const double mx = s[0], my = s[1];
        const double vx = s[2] - mx * mx, vy = s[3] - my * my, cxy = s[4] - mx * my;
        sum += ((2 * mx * my + kC1) * (2 * cxy + kC2)) /
               ((mx * mx + my * my + kC1) * (vx + vy + kC2));
      }
    total += sum / (double(ow) * oh);
  }
  return total / 3.0;
}

double dssim(const render::Frame& a, const render::Frame& b) {
  return std::clamp((1.0 - ssim(a, b)) / 2.0, 0.0, 1.0);
}

double mse(const render::Frame& a, const render::Frame& b) {
  check_dims(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = double(a.rgb[i]) - double(b.rgb[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.rgb.size());
}

double visual_loss(const FrameSet& pred, const FrameSet& gt, double lambda) {
  if (pred.size() != gt.size() || gt.empty()) throw StructureMismatch("view counts differ or empty");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0,1]");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t v = 0; v < gt.size(); ++v) {
    if (pred[v].size() != gt[v].size()) throw StructureMismatch("frame counts differ in view " + std::to_string(v));
    for (std::size_t t = 0; t < gt[v].size(); ++t) {
      double term = 0.0;
      if (lambda > 0.0) term += lambda * mse(pred[v][t], gt[v][t]);
      if (lambda < 1.0) term += (1.0 - lambda) * dssim(pred[v][t], gt[v][t]);
      s += term;
      ++n;
    }
  }
  if (n == 0) throw StructureMismatch("no frames");
  return s / static_cast<double>(n);
}

}  // namespace lawkit::fit
