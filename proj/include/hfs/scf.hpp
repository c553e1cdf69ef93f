#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hfs/hf_core.hpp"

namespace hfs {

struct ScfOptions {
  int max_iter = 500;
  double residual_tol = 1e-9;  // sqrt(pairing(F, F))
  double energy_tol = 1e-12;
  double damping = 0.3;        // Fock mixing weight of the previous iterate, in [0, 1)
  double level_shift = 0.1;    // virtual shift, dropped once residual < 1e-4
  std::uint64_t seed = 0;

  void validate() const;
};

enum class ScfStatus { Converged, MaxIterExceeded, OscillationDetected };

std::string to_string(ScfStatus s);

/// Basis-set classification gates. `threshold` is the finite-basis estimate
/// of the (N-1)-electron energy infimum; both gates are only as good as it.
struct Classification {
  std::optional<double> threshold;
  bool below_threshold = false;  // E < threshold
  std::optional<double> eps_gate;
  bool b_eps_member = false;     // all e_i < -eps_gate
};

struct CriticalPointRecord {
  int n_electrons = 0;
  CMat orbitals;  // orthonormal-basis coefficients, nbf x N
  Vec eps;
  EnergyBreakdown energy;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  ScfStatus status = ScfStatus::MaxIterExceeded;
  double orthogonality_residual = 0.0;
  Classification gates;
  std::uint64_t seed = 0;

  HfVector point() const { return {orbitals, eps}; }
};

/// Assembles a record from any (Phi, e), recomputing energy and residuals.
CriticalPointRecord make_record(const CMat& C, const Vec& eps, const OrthoModel& model);

void classify(CriticalPointRecord& rec, std::optional<double> threshold,
              std::optional<double> eps_gate);

enum class GuessMode { Core, Random };

/// Core: lowest N eigenvectors of h. Random: the core guess rotated by a
/// seeded random unitary with seeded per-orbital phases. Throws if N > nbf.
CMat initial_guess(const OrthoModel& model, int n, GuessMode mode, std::uint64_t seed);

/// Roothaan fixed-point iteration with Fock damping and level shifting.
/// Non-convergence is reported through `status`, never thrown; the returned
/// record then holds the iterate with the smallest residual.
CriticalPointRecord scf_solve(const OrthoModel& model, int n, const CMat& guess,
                              const ScfOptions& opts);

struct StartLog {
  std::uint64_t seed = 0;
  bool converged = false;
  double energy = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

struct SolutionCatalog {
  std::vector<CriticalPointRecord> records;  // ascending energy
  std::vector<StartLog> log;                 // one entry per start, in start order
};

/// Two converged records describe the same critical point.
bool same_solution(const CriticalPointRecord& a, const CriticalPointRecord& b);

/// Inserts unless a duplicate is already present; keeps the energy order.
/// Returns true when inserted.
bool catalog_insert(SolutionCatalog& catalog, CriticalPointRecord rec);

/// Start 0 uses the core guess; start k > 0 a random guess seeded from
/// (opts.seed, k).
SolutionCatalog multistart_search(const OrthoModel& model, int n, int n_starts,
                                  const ScfOptions& opts);

struct ThresholdEstimate {
  double value = 0.0;  // min converged (N-1)-electron energy
  int n_electrons = 0;
  int n_starts = 0;
  int n_converged = 0;
  CriticalPointRecord best;
};

/// Throws Error when no start converges.
ThresholdEstimate threshold_j(const OrthoModel& model, int n_minus_1, int n_starts,
                              const ScfOptions& opts);

/// Seed of start k under base seed s.
std::uint64_t start_seed(std::uint64_t base, int k);

}  // namespace hfs
