#include "lawkit/dsl/svd3.hpp"

#include <Eigen/SVD>

#include "lawkit/dsl/errors.hpp"

namespace lawkit::dsl {

Svd3 svd3(const Mat3& M) {
  if (!M.allFinite()) throw NonFiniteInput("svd3: matrix has non-finite entries");
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Svd3 out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  // Singular values come back non-negative and descending; move reflections
  // into the last (smallest) column.
  if (out.U.determinant() < 0.0) {
    out.U.col(2) *= -1.0;
    out.S(2) *= -1.0;
  }
  if (out.V.determinant() < 0.0) {
    out.V.col(2) *= -1.0;
    out.S(2) *= -1.0;
  }
  return out;
}

}  // namespace lawkit::dsl
