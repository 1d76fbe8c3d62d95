#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "lawkit/math.hpp"
#include "lawkit/render/splat.hpp"
#include "lawkit/sim/mpm.hpp"

namespace lawkit::fit {

class EmptySet : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class StructureMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Symmetric mean squared nearest-neighbour distance (m^2).
/// Uses a uniform-grid search for large sets; results are bitwise equal to
/// chamfer_l2_brute.
double chamfer_l2(std::span<const Vec3> a, std::span<const Vec3> b);
double chamfer_l2_brute(std::span<const Vec3> a, std::span<const Vec3> b);

/// Mean over frames of chamfer_l2. Frame counts must match.
double trajectory_chamfer(const sim::Trajectory& pred, const sim::Trajectory& gt);
/// Per-frame values, frames [first, last).
std::vector<double> per_frame_chamfer(const sim::Trajectory& pred, const sim::Trajectory& gt);

/// Channel-averaged SSIM with an 11x11 Gaussian window (sigma 1.5) over all
/// fully contained window positions.
double ssim(const render::Frame& a, const render::Frame& b);
/// (1 - SSIM) / 2.
double dssim(const render::Frame& a, const render::Frame& b);
double mse(const render::Frame& a, const render::Frame& b);

using FrameSet = std::vector<std::vector<render::Frame>>;  // [view][time]

/// Mean over views and frames of lambda * MSE + (1 - lambda) * D-SSIM.
double visual_loss(const FrameSet& pred, const FrameSet& gt, double lambda);

}  // namespace lawkit::fit
