#pragma once

#include <Eigen/Dense>

#include "hfs/types.hpp"

namespace hfs::linalg {

/// Eigen-decomposition of a real symmetric or complex Hermitian matrix.
/// Eigenvalues are ascending; columns of `vectors` are orthonormal.
template <typename Scalar>
struct EigResult {
  Vec values;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;
};

struct SvdResult {
  Mat U;
  Vec sigma;  // descending
  Mat V;
};

/// Largest |A - A^H| entry relative to max(1, max |A|).
template <typename Derived>
double hermitian_defect(const Eigen::MatrixBase<Derived>& A) {
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  return (A - A.adjoint()).cwiseAbs().maxCoeff() / scale;
}

/// Throws ContractError if A is not Hermitian within 1e-10 relative.
template <typename Scalar>
EigResult<Scalar> eigh(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A);

extern template EigResult<double> eigh<double>(const Mat&);
extern template EigResult<cplx> eigh<cplx>(const CMat&);

SvdResult svd(const Mat& A);

/// Symmetric S^{-1/2}. Throws ContractError if S is not SPD.
Mat loewdin_half_inverse(const Mat& S);

}  // namespace hfs::linalg
