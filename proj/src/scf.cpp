#include "hfs/scf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "hfs/linalg.hpp"

namespace hfs {

void ScfOptions::validate() const {
  if (max_iter < 1) throw ContractError("ScfOptions: max_iter must be >= 1");
  if (!(residual_tol > 0.0) || !(energy_tol > 0.0))
    throw ContractError("ScfOptions: tolerances must be positive");
  if (!(damping >= 0.0 && damping < 1.0)) throw ContractError("ScfOptions: damping must be in [0,1)");
  if (!(level_shift >= 0.0)) throw ContractError("ScfOptions: level_shift must be >= 0");
}

std::string to_string(ScfStatus s) {
  switch (s) {
    case ScfStatus::Converged: return "converged";
    case ScfStatus::MaxIterExceeded: return "max_iter_exceeded";
    case ScfStatus::OscillationDetected: return "oscillation_detected";
  }
  return "unknown";
}

std::uint64_t start_seed(std::uint64_t base, int k) {
  // splitmix64 step so neighbouring starts get unrelated streams.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CriticalPointRecord make_record(const CMat& C, const Vec& eps, const OrthoModel& model) {
  CriticalPointRecord rec;
  rec.n_electrons = static_cast<int>(C.cols());
  rec.orbitals = C;
  rec.eps = eps;
  rec.energy = energy(C, model);
  rec.residual_norm = pairing_norm(residual_F({C, eps}, model));
  rec.orthogonality_residual = orthogonality_residual(C);
  return rec;
}

void classify(CriticalPointRecord& rec, std::optional<double> threshold,
              std::optional<double> eps_gate) {
  rec.gates = {};
  rec.gates.threshold = threshold;
  if (threshold) rec.gates.below_threshold = rec.energy.total < *threshold;
  rec.gates.eps_gate = eps_gate;
  if (eps_gate) rec.gates.b_eps_member = rec.eps.size() > 0 && rec.eps.maxCoeff() < -*eps_gate;
}

CMat initial_guess(const OrthoModel& model, int n, GuessMode mode, std::uint64_t seed) {
  const int nbf = model.nbf();
  if (n < 1) throw ContractError("initial_guess: need at least one orbital");
  if (n > nbf) throw ContractError("initial_guess: more orbitals than basis functions");
  const CMat core = model.h_vectors.cast<cplx>();
  if (mode == GuessMode::Core) return core.leftCols(n);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  CMat Z(nbf, nbf);
  for (int j = 0; j < nbf; ++j)
    for (int i = 0; i < nbf; ++i) Z(i, j) = cplx(normal(rng), normal(rng));
  const CMat Q = Eigen::HouseholderQR<CMat>(Z).householderQ();
  CMat C = Q * core.leftCols(n);
  for (int j = 0; j < n; ++j) C.col(j) *= std::polar(1.0, angle(rng));
  // Re-orthonormalize against accumulated round-off.
  const CMat G = C.adjoint() * C;
  const auto eig = linalg::eigh<cplx>(G);
  const CMat Ginv = eig.vectors * eig.values.cwiseSqrt().cwiseInverse().asDiagonal() *
                    eig.vectors.adjoint();
  return C * Ginv;
}

namespace {

// Lowest-n eigenvectors of F. Inside a cluster of eigenvalues closer than
// 1e-10, the vectors are rotated to maximize overlap with the previous
// orbitals (singular vectors of the projected overlap, largest first), which
// also decides which members of a cluster straddling the occupation boundary
// are occupied. Each new orbital's phase is aligned to its predecessor.
CMat aufbau(const CMat& F, const CMat& previous, int n) {
  const auto eig = linalg::eigh<cplx>(F);
  const int m = static_cast<int>(eig.values.size());
  CMat V = eig.vectors;
  int a = 0;
  while (a < n) {
    int b = a + 1;
    while (b < m && eig.values(b) - eig.values(b - 1) < 1e-10) ++b;
    if (b - a > 1) {
      const CMat sub = V.middleCols(a, b - a);
      const CMat overlap = sub.adjoint() * previous;
      Eigen::JacobiSVD<CMat> svd(overlap, Eigen::ComputeFullU);
      V.middleCols(a, b - a) = sub * svd.matrixU();
    }
    a = b;
  }
  CMat C = V.leftCols(n);
  for (int j = 0; j < n; ++j) {
    const cplx ov = previous.col(j).dot(C.col(j));
    if (std::abs(ov) > 1e-8) C.col(j) *= std::conj(ov) / std::abs(ov);
  }
  return C;
}

}  // namespace

CriticalPointRecord scf_solve(const OrthoModel& model, int n, const CMat& guess,
                              const ScfOptions& opts) {
  opts.validate();
  if (guess.rows() != model.nbf() || guess.cols() != n)
    throw ContractError("scf_solve: guess has the wrong shape");
  if (norm_residual(guess) > 1e-8) throw ContractError("scf_solve: guess is not feasible");

  const int nbf = model.nbf();
  const CMat I = CMat::Identity(nbf, nbf);
  CMat C = guess;
  CMat F_damped;
  CriticalPointRecord best;
  best.residual_norm = std::numeric_limits<double>::infinity();

  std::vector<double> energies;
  int two_cycle_run = 0;
  ScfStatus status = ScfStatus::MaxIterExceeded;
  int it = 0;
  for (; it <= opts.max_iter; ++it) {
    const CMat F = fock(C, model);
    Vec eps(n);
    for (int i = 0; i < n; ++i) eps(i) = C.col(i).dot(F * C.col(i)).real();
    HfVector r{F * C, Vec(n)};
    for (int i = 0; i < n; ++i) {
      r.orbitals.col(i) -= eps(i) * C.col(i);
      r.scalars(i) = 1.0 - C.col(i).squaredNorm();
    }
    const double res = pairing_norm(r);
    const double E = energy_from_density(C, model);
    energies.push_back(E);

    if (res < best.residual_norm) {
      best.orbitals = C;
      best.eps = eps;
      best.residual_norm = res;
      best.iterations = it;
    }
    if (res <= opts.residual_tol) {
      status = ScfStatus::Converged;
      break;
    }
    const std::size_t k = energies.size();
    if (k >= 3) {
      const double d1 = std::abs(energies[k - 1] - energies[k - 2]);
      const double d2 = std::abs(energies[k - 1] - energies[k - 3]);
      const bool cycling = d1 > std::sqrt(opts.energy_tol) && d2 < 1e-3 * d1;
      two_cycle_run = cycling ? two_cycle_run + 1 : 0;
      if (two_cycle_run >= 50) {
        status = ScfStatus::OscillationDetected;
        break;
      }
    }
    if (it == opts.max_iter) break;

    if (F_damped.size() == 0 || opts.damping == 0.0)
      F_damped = F;
    else
      F_damped = (1.0 - opts.damping) * F + opts.damping * F_damped;
    const double shift = res < 1e-4 ? 0.0 : opts.level_shift;
    const CMat P = density(C);
    const CMat F_step = F_damped + shift * (I - P);
    C = aufbau(0.5 * (F_step + F_step.adjoint()), C, n);
  }

  CriticalPointRecord rec = make_record(best.orbitals, best.eps, model);
  rec.iterations = status == ScfStatus::Converged ? best.iterations : it;
  rec.status = status;
  rec.converged = status == ScfStatus::Converged && norm_residual(rec.orbitals) <= 1e-9;
  if (!rec.converged && status == ScfStatus::Converged) rec.status = ScfStatus::MaxIterExceeded;
  return rec;
}

bool same_solution(const CriticalPointRecord& a, const CriticalPointRecord& b) {
  if (a.eps.size() != b.eps.size() || a.orbitals.rows() != b.orbitals.rows()) return false;
  if (std::abs(a.energy.total - b.energy.total) > 1e-8) return false;
  Vec ea = a.eps, eb = b.eps;
  std::sort(ea.begin(), ea.end());
  std::sort(eb.begin(), eb.end());
  if ((ea - eb).cwiseAbs().maxCoeff() > 1e-6) return false;
  return (density(a.orbitals) - density(b.orbitals)).norm() <= 1e-5;
}

bool catalog_insert(SolutionCatalog& catalog, CriticalPointRecord rec) {
  for (const auto& r : catalog.records)
    if (same_solution(r, rec)) return false;
  auto pos = std::upper_bound(
      catalog.records.begin(), catalog.records.end(), rec.energy.total,
      [](double e, const CriticalPointRecord& r) { return e < r.energy.total; });
  catalog.records.insert(pos, std::move(rec));
  return true;
}

SolutionCatalog multistart_search(const OrthoModel& model, int n, int n_starts,
                                  const ScfOptions& opts) {
  if (n_starts < 1) throw ContractError("multistart_search: n_starts must be >= 1");
  SolutionCatalog cat;
  for (int k = 0; k < n_starts; ++k) {
    const std::uint64_t seed = k == 0 ? opts.seed : start_seed(opts.seed, k);
    const CMat guess =
        initial_guess(model, n, k == 0 ? GuessMode::Core : GuessMode::Random, seed);
    CriticalPointRecord rec = scf_solve(model, n, guess, opts);
    rec.seed = seed;
    cat.log.push_back({seed, rec.converged, rec.energy.total, rec.iterations, rec.residual_norm});
    if (rec.converged) catalog_insert(cat, std::move(rec));
  }
  return cat;
}

ThresholdEstimate threshold_j(const OrthoModel& model, int n_minus_1, int n_starts,
                              const ScfOptions& opts) {
  if (n_minus_1 < 1) throw ContractError("threshold_j: need at least one electron");
  SolutionCatalog cat = multistart_search(model, n_minus_1, n_starts, opts);
  if (cat.records.empty()) throw Error("threshold_j: no start converged");
  ThresholdEstimate est;
  est.n_electrons = n_minus_1;
  est.n_starts = n_starts;
  est.n_converged = static_cast<int>(
      std::count_if(cat.log.begin(), cat.log.end(), [](const StartLog& l) { return l.converged; }));
  est.best = cat.records.front();
  est.value = est.best.energy.total;
  return est;
}

}  // namespace hfs
