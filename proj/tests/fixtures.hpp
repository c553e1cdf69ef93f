#pragma once

// Small model systems and random generators shared by the test binaries.

#include <random>
#include <vector>

#include <Eigen/QR>

#include "hfs/hf_core.hpp"
#include "hfs/integrals.hpp"
#include "hfs/scf.hpp"

namespace fixtures {

using namespace hfs;

struct System {
  MoleculeSpec mol;
  BasisSet basis;
  IntegralTables tables;
  OrthoModel model;
};

inline Shell single(const Vec3& c, double a) { return make_normalized_shell(c, {{a, 1.0}}); }

inline System assemble(MoleculeSpec mol, BasisSet basis) {
  System s{std::move(mol), std::move(basis), {}, {}};
  s.tables = build_tables(s.mol, s.basis);
  s.model = OrthoModel::from_tables(s.tables);
  return s;
}

/// Two protons 1.4 bohr apart, three s functions on each.
inline System h2_3s(int n_electrons = 2) {
  const Vec3 A(0, 0, 0), B(0, 0, 1.4);
  MoleculeSpec mol{{{1.0, A}, {1.0, B}}, n_electrons};
  BasisSet basis;
  for (const Vec3& c : {A, B})
    for (double a : {0.2, 1.0, 5.0}) basis.shells.push_back(single(c, a));
  return assemble(mol, basis);
}

/// He-H pair with two electrons, three functions on He and two on H.
inline System heh_plus() {
  const Vec3 A(0, 0, 0), B(0, 0, 1.4632);
  MoleculeSpec mol{{{2.0, A}, {1.0, B}}, 2};
  BasisSet basis;
  for (double a : {0.3, 1.2, 5.0}) basis.shells.push_back(single(A, a));
  for (double a : {0.25, 1.2}) basis.shells.push_back(single(B, a));
  return assemble(mol, basis);
}

/// Two He nuclei with three electrons.
inline System he2_three() {
  const Vec3 A(0, 0, 0), B(0, 0, 1.4);
  MoleculeSpec mol{{{2.0, A}, {2.0, B}}, 3};
  BasisSet basis;
  for (const Vec3& c : {A, B})
    for (double a : {0.2, 1.0, 5.0}) basis.shells.push_back(single(c, a));
  return assemble(mol, basis);
}

/// Z=3 and Z=1 nuclei with four electrons and seven functions.
inline System lih_like() {
  const Vec3 A(0, 0, 0), B(0, 0, 3.0);
  MoleculeSpec mol{{{3.0, A}, {1.0, B}}, 4};
  BasisSet basis;
  for (double a : {0.1, 0.5, 2.0, 8.0}) basis.shells.push_back(single(A, a));
  for (double a : {0.2, 1.0, 4.0}) basis.shells.push_back(single(B, a));
  return assemble(mol, basis);
}

inline std::vector<Primitive> sto3g_h() {
  return {{3.42525091, 0.15432897}, {0.62391373, 0.53532814}, {0.16885540, 0.44463454}};
}

inline System h2_sto3g() {
  const Vec3 A(0, 0, 0), B(0, 0, 1.4);
  MoleculeSpec mol{{{1.0, A}, {1.0, B}}, 2};
  BasisSet basis{{make_normalized_shell(A, sto3g_h()), make_normalized_shell(B, sto3g_h())}};
  return assemble(mol, basis);
}

inline CMat random_complex(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat M(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) M(i, j) = cplx(g(rng), g(rng));
  return M;
}

inline CMat random_orthonormal(int nbf, int n, std::mt19937_64& rng) {
  const CMat Q = Eigen::HouseholderQR<CMat>(random_complex(nbf, n, rng)).householderQ();
  return Q.leftCols(n);
}

/// Unit-norm but mutually non-orthogonal columns.
inline CMat random_unit_columns(int nbf, int n, std::mt19937_64& rng) {
  CMat C = random_complex(nbf, n, rng);
  for (int j = 0; j < n; ++j) C.col(j).normalize();
  return C;
}

/// Unit-norm, mutually non-orthogonal columns drawn from the span of the
/// lowest n + 1 eigenvectors of h, so the energy is usually negative.
inline CMat random_low_columns(const OrthoModel& m, int n, std::mt19937_64& rng) {
  const int k = std::min(m.nbf(), n + 1);
  CMat C = m.h_vectors.leftCols(k).cast<cplx>() * random_complex(k, n, rng);
  for (int j = 0; j < n; ++j) C.col(j).normalize();
  return C;
}

/// Generic point of (Phi, e) space: random coefficients of order one.
inline HfVector random_point(int nbf, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  HfVector z{random_complex(nbf, n, rng) / std::sqrt(2.0 * nbf), Vec(n)};
  for (int j = 0; j < n; ++j) z.scalars(j) = g(rng);
  return z;
}

inline CriticalPointRecord solve(const System& s, int n) {
  return scf_solve(s.model, n, initial_guess(s.model, n, GuessMode::Core, 0), ScfOptions{});
}

}  // namespace fixtures
