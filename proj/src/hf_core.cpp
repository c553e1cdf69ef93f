#include "hfs/hf_core.hpp"

#include <cmath>

#include "hfs/linalg.hpp"

namespace hfs {
namespace {

// Applies a real supermatrix to vec(X^T) and reshapes back to nbf x nbf.
CMat apply_supermatrix(const Mat& M, const CMat& X) {
  const int n = static_cast<int>(X.rows());
  const CMat Xt = X.transpose();
  const Eigen::Map<const CVec> v(Xt.data(), n * n);
  CVec out(n * n);
  out.real() = M * v.real();
  out.imag() = M * v.imag();
  return Eigen::Map<const CMat>(out.data(), n, n);
}

void check_same_shape(const HfVector& a, const HfVector& b) {
  if (a.orbitals.rows() != b.orbitals.rows() || a.orbitals.cols() != b.orbitals.cols() ||
      a.scalars.size() != b.scalars.size() || a.scalars.size() != a.orbitals.cols())
    throw ContractError("HfVector: dimension mismatch");
}

}  // namespace

OrthoModel OrthoModel::from_tables(const IntegralTables& tables) {
  OrthoModel m;
  m.X = linalg::loewdin_half_inverse(tables.overlap);
  const Mat h = m.X.transpose() * tables.core * m.X;
  m.h = 0.5 * (h + h.transpose());
  m.eri = tables.eri.transformed(m.X);
  m.coulomb = m.eri.coulomb_supermatrix();
  m.exchange = m.eri.exchange_supermatrix();
  auto eig = linalg::eigh<double>(m.h);
  m.h_values = eig.values;
  m.h_vectors = eig.vectors;
  return m;
}

HfVector& HfVector::operator+=(const HfVector& o) {
  check_same_shape(*this, o);
  orbitals += o.orbitals;
  scalars += o.scalars;
  return *this;
}

HfVector& HfVector::operator-=(const HfVector& o) {
  check_same_shape(*this, o);
  orbitals -= o.orbitals;
  scalars -= o.scalars;
  return *this;
}

HfVector& HfVector::operator*=(double s) {
  orbitals *= s;
  scalars *= s;
  return *this;
}

HfVector operator+(HfVector a, const HfVector& b) { return a += b; }
HfVector operator-(HfVector a, const HfVector& b) { return a -= b; }
HfVector operator*(double s, HfVector a) { return a *= s; }

CMat density(const CMat& C) { return C * C.adjoint(); }

CMat coulomb_matrix(const OrthoModel& model, const CMat& X) {
  return apply_supermatrix(model.coulomb, X);
}

CMat exchange_matrix(const OrthoModel& model, const CMat& X) {
  return apply_supermatrix(model.exchange, X);
}

CMat fock(const CMat& C, const OrthoModel& model) {
  const CMat P = density(C);
  CMat F = model.h.cast<cplx>() + coulomb_matrix(model, P) - exchange_matrix(model, P);
  return 0.5 * (F + F.adjoint());
}

PairOperators pair_operators(const CMat& C, const OrthoModel& model, int i, int j) {
  const int N = static_cast<int>(C.cols());
  if (i < 0 || j < 0 || i >= N || j >= N) throw ContractError("pair_operators: index out of range");
  const CMat X = C.col(i) * C.col(j).adjoint();
  const CMat Y = C.col(i) * C.col(j).transpose();
  return {coulomb_matrix(model, X), exchange_matrix(model, X), exchange_matrix(model, Y)};
}

EnergyBreakdown energy(const CMat& C, const OrthoModel& model) {
  const int N = static_cast<int>(C.cols());
  EnergyBreakdown e;
  e.J = Mat::Zero(N, N);
  e.K = Mat::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    e.core += (C.col(i).adjoint() * model.h * C.col(i)).value().real();
    for (int j = 0; j <= i; ++j) {
      // (ij|kl) = sum D^{ij}_{mv} (mv|ls) D^{kl}_{ls} with D^{ij} = conj(c_i) c_j^T.
      const CMat Dii = C.col(i).conjugate() * C.col(i).transpose();
      const CMat Djj = C.col(j).conjugate() * C.col(j).transpose();
      const CMat Dij = C.col(i).conjugate() * C.col(j).transpose();
      const CMat Dji = C.col(j).conjugate() * C.col(i).transpose();
      const CMat Vjj = coulomb_matrix(model, Djj.transpose());
      const CMat Vji = coulomb_matrix(model, Dji.transpose());
      const double Jij = Dii.cwiseProduct(Vjj).sum().real();
      const double Kij = Dij.cwiseProduct(Vji).sum().real();
      e.J(i, j) = e.J(j, i) = Jij;
      e.K(i, j) = e.K(j, i) = Kij;
    }
  }
  e.coulomb = 0.5 * e.J.sum();
  e.exchange = 0.5 * e.K.sum();
  double pairs = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) pairs += e.J(i, j) - e.K(i, j);
  e.total = e.core + pairs;
  return e;
}

double energy_from_density(const CMat& C, const OrthoModel& model) {
  const CMat P = density(C);
  const CMat G = coulomb_matrix(model, P) - exchange_matrix(model, P);
  // tr(A P) with P Hermitian.
  const double one = (model.h.cast<cplx>() * P).trace().real();
  const double two = 0.5 * (G * P).trace().real();
  return one + two;
}

double lagrangian_f(const HfVector& z, const OrthoModel& model) {
  double f = energy(z.orbitals, model).total;
  for (int i = 0; i < z.n_orbitals(); ++i)
    f -= z.scalars(i) * (z.orbitals.col(i).squaredNorm() - 1.0);
  return f;
}

HfVector residual_F(const HfVector& z, const OrthoModel& model) {
  const CMat F = fock(z.orbitals, model);
  HfVector r{F * z.orbitals, Vec(z.n_orbitals())};
  for (int i = 0; i < z.n_orbitals(); ++i) {
    r.orbitals.col(i) -= z.scalars(i) * z.orbitals.col(i);
    r.scalars(i) = 1.0 - z.orbitals.col(i).squaredNorm();
  }
  return r;
}

double pairing(const HfVector& a, const HfVector& b) {
  check_same_shape(a, b);
  double s = 0.0;
  for (int i = 0; i < a.n_orbitals(); ++i)
    s += 2.0 * a.orbitals.col(i).dot(b.orbitals.col(i)).real();
  return s + a.scalars.dot(b.scalars);
}

double pairing_norm(const HfVector& y) { return std::sqrt(std::max(0.0, pairing(y, y))); }

Vec orbital_energies_from(const CMat& C, const OrthoModel& model) {
  const CMat F = fock(C, model);
  Vec eps(C.cols());
  for (int i = 0; i < C.cols(); ++i) {
    const cplx v = C.col(i).dot(F * C.col(i));
    if (std::abs(v.imag()) > 1e-12) throw ContractError("orbital_energies_from: complex expectation");
    eps(i) = v.real();
  }
  return eps;
}

double orthogonality_residual(const CMat& C) {
  const CMat G = C.adjoint() * C;
  double worst = 0.0;
  for (int i = 0; i < G.rows(); ++i)
    for (int j = 0; j < G.cols(); ++j)
      if (i != j) worst = std::max(worst, std::abs(G(i, j)));
  return worst;
}

double norm_residual(const CMat& C) {
  double worst = 0.0;
  for (int i = 0; i < C.cols(); ++i)
    worst = std::max(worst, std::abs(C.col(i).squaredNorm() - 1.0));
  return worst;
}

}  // namespace hfs
