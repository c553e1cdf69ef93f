#pragma once

#include <cstddef>
#include <vector>

#include "hfs/types.hpp"

namespace hfs {

struct Nucleus {
  double charge = 0.0;
  Vec3 position = Vec3::Zero();  // bohr
};

/// Nuclei and electron count. The constructor-free aggregate is checked by
/// `validate()`; loaders and `build_tables` call it.
struct MoleculeSpec {
  std::vector<Nucleus> nuclei;
  int n_electrons = 0;

  void validate() const;
};

struct Primitive {
  double exponent = 0.0;
  double coefficient = 0.0;
};

/// Contracted s-type function sum_k d_k exp(-a_k |r - center|^2). The stored
/// coefficients multiply unnormalized primitives and already include the
/// contraction normalization.
struct Shell {
  Vec3 center = Vec3::Zero();
  std::vector<Primitive> primitives;
};

struct BasisSet {
  std::vector<Shell> shells;

  std::size_t size() const { return shells.size(); }
};

/// Builds a normalized shell from coefficients quoted for normalized
/// primitives (the convention of published basis tables).
Shell make_normalized_shell(const Vec3& center, const std::vector<Primitive>& normalized_prims);

/// Shell scaled so its self-overlap is exactly one.
Shell normalize_shell(Shell shell);

/// Electron-repulsion integrals (mu nu|lam sig) over real functions, stored
/// densely with every one of the 8 permutation images assigned from the
/// canonical value.
class EriTensor {
 public:
  EriTensor() = default;
  explicit EriTensor(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  int dim() const { return n_; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }

  /// Writes `value` to all permutation images of (ij|kl).
  void set_canonical(int i, int j, int k, int l, double value);

  /// (n^2 x n^2) matrix with entry [(i + n j), (k + n l)] = (ij|kl).
  Mat coulomb_supermatrix() const;
  /// (n^2 x n^2) matrix with entry [(i + n j), (k + n l)] = (i l|k j).
  Mat exchange_supermatrix() const;

  /// Four-index transform with the same matrix on every index, re-canonicalized.
  EriTensor transformed(const Mat& X) const;

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l;
  }
  int n_ = 0;
  std::vector<double> data_;
};

struct IntegralTables {
  Mat overlap;
  Mat kinetic;
  Mat nuclear;
  Mat core;  // kinetic + nuclear
  EriTensor eri;
  double overlap_min_eigenvalue = 0.0;

  int nbf() const { return static_cast<int>(overlap.rows()); }
};

/// Overlap matrix is numerically singular.
class LinearDependenceError : public Error {
 public:
  LinearDependenceError(const std::string& what, std::vector<int> shells)
      : Error(what), offending_shells(std::move(shells)) {}
  std::vector<int> offending_shells;
};

/// F0(t) = int_0^1 exp(-t u^2) du. Throws DomainError for t < 0.
double boys_f0(double t);

// Closed-form integrals over unnormalized s primitives exp(-a |r - A|^2).
// Kinetic energy uses the -1/2 Laplacian of atomic units.
double overlap_prim(double a, const Vec3& A, double b, const Vec3& B);
double kinetic_prim(double a, const Vec3& A, double b, const Vec3& B);
double nuclear_prim(double a, const Vec3& A, double b, const Vec3& B, const MoleculeSpec& mol);
double eri_prim(double a, const Vec3& A, double b, const Vec3& B, double c, const Vec3& C,
                double d, const Vec3& D);

/// Assembles every table over the contracted basis. `workers` <= 0 picks the
/// hardware concurrency; results are bit-identical for any worker count.
/// Throws LinearDependenceError when min eig(S) < 1e-10.
IntegralTables build_tables(const MoleculeSpec& mol, const BasisSet& basis, int workers = 0);

/// Direct numerical integration of the defining integrals, independent of the
/// Gaussian product theorem and the Boys reduction. Target accuracy is 1e-10
/// for one-electron kinds and 1e-6 for repulsion integrals.
namespace oracle {
double overlap(double a, const Vec3& A, double b, const Vec3& B);
double kinetic(double a, const Vec3& A, double b, const Vec3& B);
double nuclear(double a, const Vec3& A, double b, const Vec3& B, const MoleculeSpec& mol);
double eri(double a, const Vec3& A, double b, const Vec3& B, double c, const Vec3& C, double d,
           const Vec3& D);
}  // namespace oracle

}  // namespace hfs
