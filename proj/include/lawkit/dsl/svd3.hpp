#pragma once

#include "lawkit/math.hpp"

namespace lawkit::dsl {

struct Svd3 {
  Mat3 U;
  Vec3 S;
  Mat3 V;
};

/// Rotation-consistent SVD: M = U diag(S) V^T with det(U) = det(V) = +1.
/// S is sorted by descending magnitude; a reflection is absorbed into the
/// smallest entry, which is negative iff det(M) < 0.
/// Throws NonFiniteInput.
Svd3 svd3(const Mat3& M);

}  // namespace lawkit::dsl
