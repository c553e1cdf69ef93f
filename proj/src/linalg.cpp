#include "hfs/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace hfs::linalg {

template <typename Scalar>
EigResult<Scalar> eigh(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A) {
  if (A.rows() != A.cols()) throw ContractError("eigh: matrix is not square");
  if (!A.allFinite()) throw ContractError("eigh: non-finite entries");
  if (A.size() > 0 && hermitian_defect(A) > 1e-10)
    throw ContractError("eigh: matrix is not Hermitian");
  // Symmetrize so round-off in the input cannot leak into the solver.
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> Ah = 0.5 * (A + A.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> es(Ah);
  if (es.info() != Eigen::Success) throw ContractError("eigh: solver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

template EigResult<double> eigh<double>(const Mat&);
template EigResult<cplx> eigh<cplx>(const CMat&);

SvdResult svd(const Mat& A) {
  if (!A.allFinite()) throw ContractError("svd: non-finite entries");
  Eigen::JacobiSVD<Mat, Eigen::FullPivHouseholderQRPreconditioner> js(
      A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {js.matrixU(), js.singularValues(), js.matrixV()};
}

Mat loewdin_half_inverse(const Mat& S) {
  const auto eig = eigh<double>(S);
  if (eig.values.size() > 0 && eig.values.minCoeff() <= 0.0)
    throw ContractError("loewdin_half_inverse: matrix is not positive definite");
  const Vec inv_sqrt = eig.values.cwiseSqrt().cwiseInverse();
  Mat X = eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (X + X.transpose());
}

}  // namespace hfs::linalg
