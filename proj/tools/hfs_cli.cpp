// hfs: solve, analyze, search, threshold and continue runs over JSON files.
//
// Exit codes: 0 success, 1 input or precondition error, 2 non-convergence,
// 3 an invariant check failed.

#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "hfs/hf_core.hpp"
#include "hfs/integrals.hpp"
#include "hfs/io.hpp"
#include "hfs/scf.hpp"
#include "hfs/structure.hpp"

namespace {

using namespace hfs;

constexpr int kOk = 0;
constexpr int kInput = 1;
constexpr int kNotConverged = 2;
constexpr int kCheckFailed = 3;

struct RunConfig {
  std::string molecule;
  std::string basis;
  std::string out;
  std::string record;
  std::string run_log;
  std::string guess = "core";
  std::string direction = "global";
  std::uint64_t seed = 0;
  int max_iter = 500;
  double tol = 1e-9;
  double level_shift = 0.1;
  double damping = 0.3;
  int n_starts = 8;
  double eps_gate = 0.1;
  double rank_tol = 1e-7;
  double delta = 1e-2;
  int steps = 10;

  ScfOptions scf() const {
    ScfOptions o;
    o.max_iter = max_iter;
    o.residual_tol = tol;
    o.level_shift = level_shift;
    o.damping = damping;
    o.seed = seed;
    return o;
  }
};

struct Problem {
  MoleculeSpec mol;
  OrthoModel model;
};

Problem load_problem(const RunConfig& cfg) {
  Problem p;
  p.mol = io::load_molecule(cfg.molecule);
  const BasisSet basis = io::load_basis(cfg.basis, p.mol);
  p.model = OrthoModel::from_tables(build_tables(p.mol, basis));
  return p;
}

// Loads a record and re-derives everything from its orbitals; the stored
// flags are not trusted.
CriticalPointRecord load_solution(const RunConfig& cfg, const Problem& p) {
  const CriticalPointRecord stored = io::load_record(cfg.record);
  if (stored.orbitals.rows() != p.model.nbf())
    throw ContractError(cfg.record + ": basis size does not match the basis file");
  if (!stored.converged) throw ContractError(cfg.record + ": record is not converged");
  const double norm_err = norm_residual(stored.orbitals);
  if (norm_err > 1e-9)
    throw ContractError(cfg.record + ": orbitals violate the norm constraints (max |<c,c>-1| = " +
                        std::to_string(norm_err) + ")");
  CriticalPointRecord rec = make_record(stored.orbitals, stored.eps, p.model);
  if (rec.residual_norm > cfg.tol)
    throw ContractError(cfg.record + ": residual " + std::to_string(rec.residual_norm) +
                        " exceeds the tolerance");
  rec.iterations = stored.iterations;
  rec.status = stored.status;
  rec.converged = true;
  rec.seed = stored.seed;
  rec.gates = stored.gates;
  return rec;
}

void print_record(const CriticalPointRecord& rec) {
  std::printf("status      %s\n", to_string(rec.status).c_str());
  std::printf("energy      %.12f\n", rec.energy.total);
  std::printf("residual    %.3e\n", rec.residual_norm);
  std::printf("iterations  %d\n", rec.iterations);
  std::printf("eps        ");
  for (Eigen::Index i = 0; i < rec.eps.size(); ++i) std::printf(" %.10f", rec.eps(i));
  std::printf("\n");
}

int cmd_scf(const RunConfig& cfg) {
  const Problem p = load_problem(cfg);
  const int n = p.mol.n_electrons;
  const GuessMode mode = cfg.guess == "random" ? GuessMode::Random : GuessMode::Core;
  CriticalPointRecord rec =
      scf_solve(p.model, n, initial_guess(p.model, n, mode, cfg.seed), cfg.scf());
  rec.seed = cfg.seed;
  classify(rec, std::nullopt, cfg.eps_gate);
  io::write_json_file(cfg.out, io::to_json(rec));
  print_record(rec);
  return rec.converged ? kOk : kNotConverged;
}

int cmd_analyze(const RunConfig& cfg) {
  const Problem p = load_problem(cfg);
  CriticalPointRecord rec = load_solution(cfg, p);
  const int n = rec.n_electrons;

  io::StructureReport rep;
  rep.n_electrons = n;
  rep.eps_gate = cfg.eps_gate;
  if (n >= 2) rep.threshold = threshold_j(p.model, n - 1, cfg.n_starts, cfg.scf()).value;
  classify(rec, rep.threshold, cfg.eps_gate);

  const Mat J = jacobian(rec.point(), p.model).J;
  rep.jacobian_symmetry_err = (J - J.transpose()).norm() / std::max(J.norm(), 1e-300);
  rep.manifold = manifold_probe(rec, p.model, {cfg.delta, cfg.rank_tol, cfg.tol});
  const double split = default_split(rec.eps);
  if (split > 0.0) rep.lm = lm_decomposition(rec.point(), p.model, split);
  rep.koopmans = koopmans_check(rec.orbitals, rec.eps, p.model);
  rep.bounds = bounds_check(rec, p.model, rep.threshold, cfg.eps_gate);

  const auto& m = rep.manifold;
  double phase_worst = 0.0;
  for (double r : m.phase_tangent_residuals) phase_worst = std::max(phase_worst, r);
  rep.checks = {
      {"jacobian_symmetric", rep.jacobian_symmetry_err <= 1e-10},
      {"phase_tangents_in_kernel", phase_worst <= 1e-8},
      {"phase_tangents_independent", m.phase_gram_min_eig > 1e-6},
      {"kernel_dim_at_least_n", m.kernel.dim >= n},
      {"rank_gap_clear", !m.kernel.ambiguous},
      {"non_isolated", m.non_isolated},
      {"koopmans", rep.koopmans.cwiseAbs().maxCoeff() <= 1e-8},
      {"lower_bound", rep.bounds.lower_ok},
      {"upper_bound", rep.bounds.upper_ok},
  };
  if (rep.lm) {
    const auto& d = *rep.lm;
    rep.checks.push_back({"lm_reconstruction", d.reconstruction_err <= 1e-10});
    rep.checks.push_back({"lm_coercive", d.lambda_min_L >= d.split / 2 - 1e-8});
    rep.checks.push_back({"lm_h2_rank", d.h2_rank == d.h2_expected_rank});
  }

  io::write_json_file(cfg.out, io::to_json(rep));
  std::printf("kernel_dim  %d (gap %.3e)\n", m.kernel.dim, m.kernel.gap);
  std::printf("verdict     %s\n", m.verdict.c_str());
  for (const auto& c : rep.checks) std::printf("%-28s %s\n", c.first.c_str(), c.second ? "ok" : "FAILED");
  return rep.all_pass() ? kOk : kCheckFailed;
}

void write_run_log(const std::string& path, const std::vector<StartLog>& log) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io::InputError(path + ": cannot write file");
  for (const auto& l : log) out << io::to_json(l).dump() << '\n';
}

int cmd_search(const RunConfig& cfg) {
  const Problem p = load_problem(cfg);
  SolutionCatalog cat = multistart_search(p.model, p.mol.n_electrons, cfg.n_starts, cfg.scf());
  for (auto& r : cat.records) classify(r, std::nullopt, cfg.eps_gate);
  io::write_json_file(cfg.out, io::to_json(cat));
  write_run_log(cfg.run_log, cat.log);
  std::printf("solutions   %zu of %d starts\n", cat.records.size(), cfg.n_starts);
  for (const auto& r : cat.records) std::printf("  E = %.12f\n", r.energy.total);
  return cat.records.empty() ? kNotConverged : kOk;
}

int cmd_threshold(const RunConfig& cfg) {
  const Problem p = load_problem(cfg);
  const int n1 = p.mol.n_electrons - 1;
  if (n1 < 1) throw ContractError("threshold: the molecule needs at least two electrons");
  ThresholdEstimate est;
  try {
    est = threshold_j(p.model, n1, cfg.n_starts, cfg.scf());
  } catch (const ContractError&) {
    throw;
  } catch (const Error& e) {
    std::fprintf(stderr, "hfs: %s\n", e.what());
    return kNotConverged;
  }
  io::write_json_file(cfg.out, io::to_json(est));
  std::printf("threshold   %.12f (N-1 = %d, %d of %d starts converged)\n", est.value, n1,
              est.n_converged, est.n_starts);
  return kOk;
}

int cmd_continue(const RunConfig& cfg) {
  const Problem p = load_problem(cfg);
  const CriticalPointRecord rec = load_solution(cfg, p);
  HfVector z = rec.point();

  int phase_index = -1, kernel_index = -1;
  if (cfg.direction.rfind("phase:", 0) == 0) {
    phase_index = std::stoi(cfg.direction.substr(6));
    if (phase_index < 0 || phase_index >= rec.n_electrons)
      throw ContractError("continue: phase index out of range");
  } else if (cfg.direction != "global") {
    try {
      kernel_index = std::stoi(cfg.direction);
    } catch (const std::exception&) {
      throw ContractError("continue: direction must be 'global', 'phase:j' or a kernel index");
    }
  }

  Vec previous;
  std::vector<io::PathPoint> path;
  bool ok = true;
  for (int s = 1; s <= cfg.steps; ++s) {
    const KernelBasis ker = kernel_basis(jacobian(z, p.model).J, cfg.rank_tol);
    Vec t;
    if (kernel_index >= 0) {
      if (s == 1) {
        if (kernel_index >= ker.dim) throw ContractError("continue: kernel index out of range");
        t = ker.vectors.col(kernel_index);
      } else {
        // Follow the kernel direction closest to the previous tangent.
        t = ker.vectors * (ker.vectors.transpose() * previous);
        if (t.norm() < 1e-3) {
          ok = false;
          break;
        }
        t.normalize();
      }
    } else {
      t = phase_index >= 0 ? phase_tangent(z, phase_index) : global_phase_tangent(z);
    }
    CorrectorOptions copts;
    copts.residual_tol = cfg.tol;
    copts.rank_tol_rel = cfg.rank_tol;
    copts.kernel_dim = ker.dim;
    const StepResult r = continue_step(z, t, cfg.delta, p.model, copts);
    io::PathPoint pt;
    pt.step = s;
    pt.outcome = r.outcome;
    pt.corrector_iterations = r.iterations;
    pt.residual = r.final_residual;
    pt.energy = energy(r.point.orbitals, p.model).total;
    pt.distance = r.distance;
    pt.orthogonality_residual = orthogonality_residual(r.point.orbitals);
    pt.point = r.point;
    path.push_back(pt);
    if (r.outcome != StepOutcome::Accepted) {
      ok = false;
      break;
    }
    previous = t;
    z = r.point;
  }
  io::write_json_file(cfg.out, io::path_to_json(cfg.direction, cfg.delta, path));
  std::printf("steps       %zu accepted of %d\n",
              static_cast<std::size_t>(std::count_if(path.begin(), path.end(),
                                                     [](const io::PathPoint& q) {
                                                       return q.outcome == StepOutcome::Accepted;
                                                     })),
              cfg.steps);
  if (!path.empty()) std::printf("energy      %.12f\n", path.back().energy);
  return ok ? kOk : kNotConverged;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--molecule", cfg.molecule, "Molecule JSON file")->required();
  sub->add_option("--basis", cfg.basis, "Basis JSON file")->required();
  sub->add_option("--out", cfg.out, "Output JSON file")->required();
  sub->add_option("--seed", cfg.seed, "Base random seed");
  sub->add_option("--max-iter", cfg.max_iter, "SCF iteration limit");
  sub->add_option("--tol", cfg.tol, "Residual tolerance");
  sub->add_option("--level-shift", cfg.level_shift, "SCF level shift");
  sub->add_option("--damping", cfg.damping, "SCF Fock damping weight in [0,1)");
  sub->add_option("--eps-gate", cfg.eps_gate, "Orbital-energy gate for B(eps) classification");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hartree-Fock solver and critical-point analyzer"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* scf = app.add_subcommand("scf", "Solve from the core or a random guess");
  add_common(scf, cfg);
  scf->add_option("--guess", cfg.guess, "core | random")->check(CLI::IsMember({"core", "random"}));

  auto* analyze = app.add_subcommand("analyze", "Structure report for a converged record");
  add_common(analyze, cfg);
  analyze->add_option("--record", cfg.record, "Record JSON from scf")->required();
  analyze->add_option("--n-starts", cfg.n_starts, "Starts for the N-1 threshold estimate");
  analyze->add_option("--rank-tol", cfg.rank_tol, "Relative singular-value cutoff for the kernel");
  analyze->add_option("--delta", cfg.delta, "Continuation step length");

  auto* search = app.add_subcommand("search", "Multistart catalog of solutions");
  add_common(search, cfg);
  search->add_option("--n-starts", cfg.n_starts, "Number of starts");
  search->add_option("--run-log", cfg.run_log, "JSON-lines log, one line per start");

  auto* threshold = app.add_subcommand("threshold", "Estimate the N-1 electron energy threshold");
  add_common(threshold, cfg);
  threshold->add_option("--n-starts", cfg.n_starts, "Number of starts");

  auto* cont = app.add_subcommand("continue", "Follow the solution set from a record");
  add_common(cont, cfg);
  cont->add_option("--record", cfg.record, "Record JSON from scf")->required();
  cont->add_option("--direction", cfg.direction, "global | phase:j | kernel index");
  cont->add_option("--delta", cfg.delta, "Step length");
  cont->add_option("--steps", cfg.steps, "Number of steps");
  cont->add_option("--rank-tol", cfg.rank_tol, "Relative singular-value cutoff for the kernel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }

  try {
    if (*scf) return cmd_scf(cfg);
    if (*analyze) return cmd_analyze(cfg);
    if (*search) return cmd_search(cfg);
    if (*threshold) return cmd_threshold(cfg);
    if (*cont) return cmd_continue(cfg);
  } catch (const io::InputError& e) {
    std::fprintf(stderr, "hfs: %s\n", e.what());
    return kInput;
  } catch (const LinearDependenceError& e) {
    std::fprintf(stderr, "hfs: %s\n", e.what());
    return kInput;
  } catch (const ContractError& e) {
    std::fprintf(stderr, "hfs: %s\n", e.what());
    return kInput;
  } catch (const Error& e) {
    std::fprintf(stderr, "hfs: %s\n", e.what());
    return kNotConverged;
  }
  return kInput;
}
