#pragma once

#include <Eigen/Dense>

namespace lawkit {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

}  // namespace lawkit
