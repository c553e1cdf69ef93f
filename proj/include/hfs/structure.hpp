#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hfs/hf_core.hpp"
#include "hfs/scf.hpp"

namespace hfs {

// ---------------------------------------------------------------------------
// Realification
//
// (Phi, e) is flattened to [sqrt2 Re c_1, sqrt2 Im c_1, ..., sqrt2 Re c_N,
// sqrt2 Im c_N, e_1..e_N]. The sqrt2 makes the Euclidean dot product equal to
// pairing(), so the Jacobian of the residual map is a symmetric matrix and
// SVD thresholds are measured in the pairing geometry.

struct RealLayout {
  int nbf = 0;
  int n = 0;

  int size() const { return 2 * nbf * n + n; }
  int re(int orbital, int mu) const { return 2 * nbf * orbital + mu; }
  int im(int orbital, int mu) const { return 2 * nbf * orbital + nbf + mu; }
  int eps(int orbital) const { return 2 * nbf * n + orbital; }
  int orbital_block() const { return 2 * nbf * n; }
};

Vec realify(const HfVector& y);
HfVector derealify(const Vec& v, const RealLayout& layout);
inline RealLayout layout_of(const HfVector& y) {
  return {static_cast<int>(y.orbitals.rows()), y.n_orbitals()};
}

// ---------------------------------------------------------------------------
// Jacobian and its L + M split

/// F'(Phi, e) in realified coordinates.
struct RealJacobian {
  Mat J;
  RealLayout layout;
};

/// Analytic Jacobian assembled from the pair-operator blocks. Valid at any
/// point, not only at solutions.
RealJacobian jacobian(const HfVector& z, const OrthoModel& model);

/// Central-difference Jacobian of residual_F, column by column.
Mat jacobian_fd(const HfVector& z, const OrthoModel& model, double step);

/// Realified pieces of the orbital block of F'. Their sum with the
/// constraint coupling is the Jacobian:
///   H1 + H2 + R - Q + S + Sbar = orbital block,
/// with H1 = diag(h (1 - E) - e_i), H2 = diag(h E), E the spectral projector of
/// h onto eigenvalues <= -split/2.
struct JacobianParts {
  Mat H1, H2, R, Q, S, Sbar;
  Mat coupling;  // e-columns -c_i and constraint rows -2 Re<w_i, c_i>
  RealLayout layout;
  Mat h_low;     // h E as an nbf x nbf matrix
  int h_low_rank = 0;
};

/// `split` <= 0 puts the whole of h into H1.
JacobianParts jacobian_parts(const HfVector& z, const OrthoModel& model, double split);

struct LMDecomposition {
  Mat L, M;
  double split = 0.0;
  double lambda_min_L = 0.0;       // orbital block of L
  double sigma_min_L = 0.0;        // whole L
  double reconstruction_err = 0.0; // ||L + M - J|| / ||J|| (Frobenius)
  double lambda_min_R_minus_Q = 0.0;
  int h2_rank = 0;                 // rank of h E, one orbital slot
  int h2_expected_rank = 0;        // #{eigenvalues of h <= -split/2}
  int h2_full_rank = 0;            // realified rank of H2 over all slots
  int coupling_rank = 0;
};

/// min(-max e_i, 0.05). Non-positive means no admissible split exists.
double default_split(const Vec& eps);

/// Throws ContractError unless split > 0 and every e_i <= -split.
LMDecomposition lm_decomposition(const HfVector& z, const OrthoModel& model, double split);

// ---------------------------------------------------------------------------
// Kernel and continuation

struct KernelBasis {
  Mat vectors;  // columns, orthonormal
  int dim = 0;
  Vec singular_values;  // descending
  double sigma_max = 0.0;
  double rank_tol_rel = 1e-7;
  double gap = 0.0;     // smallest kept / largest dropped singular value
  bool ambiguous = false;  // gap < 10
};

KernelBasis kernel_basis(const Mat& J, double rank_tol_rel = 1e-7);

/// Realified, unit-normalized d/dtheta of phi_j -> exp(i theta) phi_j.
/// Throws ContractError for a zero orbital.
Vec phase_tangent(const HfVector& z, int j);

/// Unit tangent of the global phase orbit (all orbitals rotated together).
Vec global_phase_tangent(const HfVector& z);

/// phi_j -> exp(i theta_j) phi_j; e unchanged.
HfVector orbit_sample(const HfVector& z, const Vec& theta);

struct CorrectorOptions {
  double residual_tol = 1e-9;
  int max_iter = 20;
  double rank_tol_rel = 1e-7;
  /// Number of smallest singular directions excluded from the Newton step.
  /// Negative: decide from rank_tol_rel at each iterate.
  int kernel_dim = -1;
};

enum class StepOutcome { Accepted, ShortStep, StepCollapsed, CorrectorDiverged };

std::string to_string(StepOutcome o);

struct StepResult {
  HfVector point;
  StepOutcome outcome = StepOutcome::CorrectorDiverged;
  int iterations = 0;
  double final_residual = 0.0;
  double distance = 0.0;  // realified distance from the start
};

/// Predictor z + delta * tangent, then minimum-norm Newton corrections with
/// the kernel directions excluded from the pseudo-inverse.
StepResult continue_step(const HfVector& z, const Vec& tangent, double delta,
                         const OrthoModel& model, const CorrectorOptions& opts);

struct ContinuationRecord {
  int direction = 0;
  int sign = 1;
  StepOutcome outcome = StepOutcome::CorrectorDiverged;
  int iterations = 0;
  double final_residual = 0.0;
  double distance = 0.0;
  double energy_change = 0.0;
  double orthogonality_residual = 0.0;
  double phase_fraction = 0.0;  // squared norm of the direction inside the phase-tangent span
};

struct ProbeOptions {
  double delta = 1e-2;
  double rank_tol_rel = 1e-7;
  double residual_tol = 1e-9;
};

struct ManifoldReport {
  KernelBasis kernel;
  std::vector<double> phase_tangent_residuals;  // ||J v_j|| / sigma_max
  double phase_gram_min_eig = 0.0;
  std::vector<double> phase_in_kernel;          // |P_ker v_j|
  std::vector<ContinuationRecord> continuation;
  double max_orthogonality_drift = 0.0;
  bool non_isolated = false;
  std::string verdict;  // "non_isolated" | "isolated" | "inconclusive"
};

/// Throws ContractError unless the record is a converged solution.
ManifoldReport manifold_probe(const CriticalPointRecord& rec, const OrthoModel& model,
                              const ProbeOptions& opts);

// ---------------------------------------------------------------------------
// Energy identities and bounds

/// Entry k: E_N(Phi) - E_{N-1}(Phi without orbital k) - e_k.
Vec koopmans_check(const CMat& C, const Vec& eps, const OrthoModel& model);

struct BoundsReport {
  double h_min = 0.0;
  bool lower_ok = true;       // e_i >= h_min - 1e-9
  bool upper_applies = false; // E <= threshold - eps_gate
  bool upper_ok = true;       // e_i <= -eps_gate + 1e-8 when it applies
  double max_eps = 0.0;
  double min_eps = 0.0;
};

BoundsReport bounds_check(const CriticalPointRecord& rec, const OrthoModel& model,
                          std::optional<double> threshold, double eps_gate);

struct RescalingResult {
  CMat rotated;   // Phi-hat = Phi-tilde U, pairwise orthogonal
  CMat orbitals;  // orthonormal
  Vec gram_eigenvalues;
  double energy_in = 0.0;        // explicit functional of Phi-tilde
  double energy_rotated = 0.0;   // explicit functional of Phi-hat
  double energy_out = 0.0;       // explicit functional of the orthonormal output
  double determinant_energy_in = 0.0;  // <Psi, H Psi> of the unnormalized determinant
  bool fallback = false;         // energy_in >= 0: no comparison is made
  bool monotone = true;          // energy_out <= energy_in + 1e-10 (when !fallback)
  bool determinant_fallback = false;  // determinant_energy_in >= 0: no comparison is made
  bool determinant_monotone = true;   // energy_out <= determinant_energy_in + 1e-10
};

/// Diagonalizes the Gram matrix D = Phi^H Phi, rotates, rescales to unit norm.
/// Throws ContractError when a column is not unit-norm within 1e-10 or D is
/// numerically singular (min eigenvalue < 1e-10).
RescalingResult rescaling_construction(const CMat& tilde, const OrthoModel& model);

/// <Psi, H Psi> for the Slater determinant of possibly non-orthogonal
/// orbitals: det(D) times the energy of the projector C D^{-1} C^H.
double determinant_energy(const CMat& C, const OrthoModel& model);

struct GradientCheck {
  double err_coarse = 0.0;  // max |fd - pairing| at h = 1e-3
  double err_fine = 0.0;    // at h = 1e-4
  double ratio = 0.0;       // err_fine / err_coarse
  double order = 0.0;       // log10(err_coarse / err_fine)
};

/// Central differences of lagrangian_f along seeded random unit directions
/// against pairing(direction, residual_F).
GradientCheck gradient_check(const HfVector& z, const OrthoModel& model, int n_dirs,
                             std::uint64_t seed);

struct JacobianCheck {
  double entry_err_coarse = 0.0;  // max entry |J - J_fd| at h = 1e-3
  double entry_err_fine = 0.0;    // at h = 1e-4
  double dir_err_coarse = 0.0;    // max |J v - (F(z+hv) - F(z-hv)) / 2h| at h = 1e-3
  double dir_err_fine = 0.0;      // at h = 1e-4
  double dir_ratio = 0.0;         // dir_err_fine / dir_err_coarse
  double symmetry_err = 0.0;      // ||J - J^T|| / ||J||
};

/// Column-wise and directional central differences against the analytic
/// Jacobian. Along a single coordinate the residual map is at most quadratic
/// (the self-interaction of an orbital cancels), so column-wise differences
/// carry only rounding error; the O(h^2) truncation is visible along
/// directions that move several orbitals at once.
JacobianCheck jacobian_check(const HfVector& z, const OrthoModel& model, int n_dirs,
                             std::uint64_t seed);

/// Random direction in (Phi, e) space with unit pairing norm.
HfVector random_direction(int nbf, int n, std::uint64_t seed);

}  // namespace hfs
