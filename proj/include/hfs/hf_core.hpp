#pragma once

#include "hfs/integrals.hpp"
#include "hfs/types.hpp"

namespace hfs {

/// Integral tables expressed in the Loewdin-orthonormalized basis, so the
/// discretized L2 inner product is the plain complex dot product.
struct OrthoModel {
  Mat X;             // S^{-1/2}
  Mat h;             // X^T (T + V) X
  EriTensor eri;     // transformed, exactly 8-fold symmetric
  Mat coulomb;       // supermatrix [(m + n v), (l + n s)] = (mv|ls)
  Mat exchange;      // supermatrix [(m + n v), (l + n s)] = (ms|lv)
  Vec h_values;      // ascending spectrum of h
  Mat h_vectors;

  int nbf() const { return static_cast<int>(h.rows()); }
  double h_min() const { return h_values(0); }

  static OrthoModel from_tables(const IntegralTables& tables);
};

/// An element of the (Phi, e) spaces: N orbital columns plus N reals. Used
/// for points, directions, and residuals alike.
struct HfVector {
  CMat orbitals;  // nbf x N
  Vec scalars;    // N

  int n_orbitals() const { return static_cast<int>(orbitals.cols()); }
  static HfVector zero(int nbf, int n) { return {CMat::Zero(nbf, n), Vec::Zero(n)}; }

  HfVector& operator+=(const HfVector& o);
  HfVector& operator-=(const HfVector& o);
  HfVector& operator*=(double s);
};

HfVector operator+(HfVector a, const HfVector& b);
HfVector operator-(HfVector a, const HfVector& b);
HfVector operator*(double s, HfVector a);

struct EnergyBreakdown {
  double total = 0.0;
  double core = 0.0;      // sum_i <phi_i, h phi_i>
  double coulomb = 0.0;   // 1/2 sum_ij J_ij
  double exchange = 0.0;  // 1/2 sum_ij K_ij
  Mat J;                  // pair Coulomb integrals, J_ij >= 0
  Mat K;                  // pair exchange integrals, K_ii = J_ii
};

/// Pair operators of orbitals (i, j) as nbf x nbf matrices.
/// Q acts multiplicatively; S is the exchange-type integral operator; the
/// conjugate-linear map w -> Sbar_ij w is `sbar * w.conjugate()`.
struct PairOperators {
  CMat Q;
  CMat S;
  CMat sbar;
};

/// P = C C^H.
CMat density(const CMat& C);

/// J(X)_{mv} = sum_ls (mv|ls) X_{sl}; with X = P this is the Coulomb matrix.
CMat coulomb_matrix(const OrthoModel& model, const CMat& X);
/// K(X)_{mv} = sum_ls (ms|lv) X_{sl}; with X = P this is the exchange matrix.
CMat exchange_matrix(const OrthoModel& model, const CMat& X);

/// F = h + J(P) - K(P).
CMat fock(const CMat& C, const OrthoModel& model);

PairOperators pair_operators(const CMat& C, const OrthoModel& model, int i, int j);

/// Pairwise form: sum <phi_i,h phi_i> + sum_{i<j} (J_ij - K_ij).
EnergyBreakdown energy(const CMat& C, const OrthoModel& model);

/// Density-matrix form: tr(hP) + 1/2 tr(J(P) P) - 1/2 tr(K(P) P).
double energy_from_density(const CMat& C, const OrthoModel& model);

/// f(Phi, e) = E(Phi) - sum_i e_i (|phi_i|^2 - 1).
double lagrangian_f(const HfVector& z, const OrthoModel& model);

/// Orbital block i = F(Phi) c_i - e_i c_i; scalar block i = 1 - |c_i|^2.
HfVector residual_F(const HfVector& z, const OrthoModel& model);

/// sum_i 2 Re<a_i, b_i> + sum_i a_e b_e. Throws ContractError on shape mismatch.
double pairing(const HfVector& a, const HfVector& b);

/// sqrt(pairing(y, y)).
double pairing_norm(const HfVector& y);

/// e_i = Re <c_i, F c_i>; throws ContractError if the imaginary part exceeds 1e-12.
Vec orbital_energies_from(const CMat& C, const OrthoModel& model);

/// max_{i != j} |<phi_i, phi_j>|.
double orthogonality_residual(const CMat& C);

/// max_i | |phi_i|^2 - 1 |.
double norm_residual(const CMat& C);

}  // namespace hfs
