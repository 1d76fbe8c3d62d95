#pragma once

// Closed-form constitutive laws computed without the DSL interpreter or svd3.
// Stretch and rotation come from the symmetric eigendecomposition of F F^T.

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <cmath>
#include <random>

#include "lawkit/math.hpp"

namespace oracle {

using lawkit::Mat3;
using lawkit::Vec3;

struct LeftPolar {
  Mat3 log_stretch;  // log(V), V = sqrt(F F^T)
  Mat3 rotation;     // R = V^-1 F
};

inline Mat3 sym_fn(const Mat3& sym, double (*fn)(double)) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
  Vec3 w = es.eigenvalues();
  for (int i = 0; i < 3; ++i) w(i) = fn(w(i));
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

inline double half_log(double x) { return 0.5 * std::log(x); }
inline double exp_fn(double x) { return std::exp(x); }
inline double inv_sqrt(double x) { return 1.0 / std::sqrt(x); }

inline LeftPolar left_polar(const Mat3& F) {
  const Mat3 b = F * F.transpose();
  LeftPolar p;
  p.log_stretch = sym_fn(b, half_log);
  p.rotation = sym_fn(b, inv_sqrt) * F;
  return p;
}

inline Mat3 fixed_corotated(const Mat3& F, double mu, double lam) {
  const Mat3 R = F * sym_fn(F.transpose() * F, inv_sqrt);
  const double J = F.determinant();
  return 2.0 * mu * (F - R) * F.transpose() + lam * J * (J - 1.0) * Mat3::Identity();
}

inline Mat3 neo_hookean(const Mat3& F, double mu, double lam) {
  return mu * (F * F.transpose() - Mat3::Identity()) +
         lam * std::log(F.determinant()) * Mat3::Identity();
}

inline Mat3 stvk_hencky(const Mat3& F, double mu, double lam) {
  const Mat3 e = left_polar(F).log_stretch;
  return 2.0 * mu * e + lam * e.trace() * Mat3::Identity();
}

inline Mat3 von_mises(const Mat3& F, double mu, double yield) {
  const LeftPolar p = left_polar(F);
  const Mat3 dev = p.log_stretch - p.log_stretch.trace() / 3.0 * Mat3::Identity();
  const double n = dev.norm();
  const double dg = n - yield / (2.0 * mu);
  if (dg <= 0.0) return F;
  const Mat3 e = p.log_stretch - dg / n * dev;
  return sym_fn(e, exp_fn) * p.rotation;
}

inline Mat3 drucker_prager(const Mat3& F, double mu, double lam, double alpha) {
  const LeftPolar p = left_polar(F);
  const double tr = p.log_stretch.trace();
  if (tr >= 0.0) return p.rotation;
  const Mat3 dev = p.log_stretch - tr / 3.0 * Mat3::Identity();
  const double n = dev.norm();
  const double dg = n + (3.0 * lam + 2.0 * mu) / (2.0 * mu) * tr * alpha;
  if (dg <= 0.0) return F;
  const Mat3 e = p.log_stretch - dg / n * dev;
  return sym_fn(e, exp_fn) * p.rotation;
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

/// Random deformation gradient with det in [det_lo, det_hi].
inline Mat3 random_F(std::mt19937_64& rng, double det_lo = 0.5, double det_hi = 2.0) {
  std::uniform_real_distribution<double> s(0.6, 1.5);
  for (;;) {
    const Vec3 d(s(rng), s(rng), s(rng));
    const double det = d.prod();
    if (det < det_lo || det > det_hi) continue;
    return random_rotation(rng) * d.asDiagonal() * random_rotation(rng);
  }
}

inline double rel_err(const Mat3& got, const Mat3& want) {
  const double scale = want.norm();
  return (got - want).norm() / (scale > 0.0 ? scale : 1.0);
}

}  // namespace oracle
