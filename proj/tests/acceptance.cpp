// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
// usage: acceptance <hfs binary> <data dir> <work dir>
// Criterion 11 (CLI reproducibility) is skipped with a FAIL line when the
// arguments are missing.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "hfs/linalg.hpp"
#include "hfs/structure.hpp"

using namespace hfs;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Solved {
  std::string name;
  const fixtures::System* sys;
  CriticalPointRecord rec;
  std::optional<double> threshold;
};

std::vector<fixtures::System>& systems() {
  static std::vector<fixtures::System> s = {fixtures::h2_3s(), fixtures::heh_plus(),
                                            fixtures::he2_three(), fixtures::lih_like()};
  return s;
}

const std::vector<Solved>& catalog() {
  static std::vector<Solved> out = [] {
    std::vector<Solved> v;
    const char* names[] = {"h2", "heh+", "he2(3e)", "lih-like"};
    int k = 0;
    for (const auto& s : systems()) {
      const int n = s.mol.n_electrons;
      ScfOptions o;
      o.seed = 17;
      const double thr = threshold_j(s.model, n - 1, 8, o).value;
      for (const auto& r : multistart_search(s.model, n, 8, o).records)
        v.push_back({names[k], &s, r, thr});
      ++k;
    }
    return v;
  }();
  return out;
}

// --------------------------------------------------------------------------

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> expo(0.1, 5.0), coord(-1.5, 1.5), charge(0.5, 3.0);
  auto pt = [&] { return Vec3(coord(rng), coord(rng), coord(rng)); };
  double one = 0.0, two = 0.0;
  const int n = 50;
  for (int k = 0; k < n; ++k) {
    const double a = expo(rng), b = expo(rng), c = expo(rng), d = expo(rng);
    const Vec3 A = pt(), B = pt(), C = pt(), D = pt();
    MoleculeSpec mol{{{charge(rng), pt()}, {charge(rng), pt()}}, 2};
    one = std::max(one, std::abs(overlap_prim(a, A, b, B) - oracle::overlap(a, A, b, B)));
    one = std::max(one, std::abs(kinetic_prim(a, A, b, B) - oracle::kinetic(a, A, b, B)));
    one = std::max(one, std::abs(nuclear_prim(a, A, b, B, mol) - oracle::nuclear(a, A, b, B, mol)));
    two = std::max(two, std::abs(eri_prim(a, A, b, B, c, C, d, D) - oracle::eri(a, A, b, B, c, C, d, D)));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(1, one <= 1e-10 && two <= 1e-6 && secs < 60.0, "integral oracle agreement",
         std::to_string(n) + " configs, one-electron err " + fmt("%.1e", one) + ", eri err " +
             fmt("%.1e", two) + ", " + fmt("%.1f", secs) + " s");
}

void criterion2() {
  std::mt19937_64 rng(2);
  double worst_ratio = 0.0, worst_abs = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto& s = systems()[k % systems().size()];
    const int n = 1 + k % s.mol.n_electrons;
    const HfVector z = fixtures::random_point(s.model.nbf(), n, rng);
    const auto g = gradient_check(z, s.model, 10, 1000 + k);
    worst_ratio = std::max(worst_ratio, g.ratio);
    worst_abs = std::max(worst_abs, g.err_fine);
  }
  report(2, worst_ratio <= 0.02 && worst_abs <= 1e-6, "gradient identity",
         "20 points x 10 directions, worst err(1e-4)/err(1e-3) " + fmt("%.4f", worst_ratio) +
             ", worst err(1e-4) " + fmt("%.1e", worst_abs));
}

void criterion3() {
  double worst = 0.0;
  bool ok = true;
  for (const auto& s : systems()) {
    const auto rec = fixtures::solve(s, 1);
    ok = ok && rec.converged;
    worst = std::max({worst, std::abs(rec.energy.total - s.model.h_min()), std::abs(rec.eps(0) - s.model.h_min())});
  }
  const auto& h2 = systems()[0];
  const auto two = fixtures::solve(h2, 2);
  ok = ok && worst <= 1e-10 && two.converged && two.residual_norm <= 1e-9 && two.iterations <= 500;
  report(3, ok, "solver correctness",
         "N=1 max |E - h_min|, |e - h_min| " + fmt("%.1e", worst) + "; H2 N=2 residual " +
             fmt("%.1e", two.residual_norm) + " after " + std::to_string(two.iterations) + " iterations");
}

void criterion4() {
  double worst = 0.0;
  for (const auto& c : catalog())
    worst = std::max(worst, koopmans_check(c.rec.orbitals, c.rec.eps, c.sys->model).cwiseAbs().maxCoeff());
  report(4, !catalog().empty() && worst <= 1e-8, "Koopmans identity",
         std::to_string(catalog().size()) + " records, worst drop-one residual " + fmt("%.1e", worst));
}

void criterion5() {
  bool ok = true;
  int gated = 0;
  for (const auto& c : catalog()) {
    const auto b = bounds_check(c.rec, c.sys->model, c.threshold, 0.1);
    ok = ok && b.lower_ok && b.upper_ok;
    gated += b.upper_applies;
  }
  report(5, ok, "orbital-energy bounds",
         std::to_string(catalog().size()) + " records, " + std::to_string(gated) + " under the J(N-1) - 0.1 gate");
}

void criterion6() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  double worst_pair = 0.0, worst_rq = 0.0;
  for (const auto& s : systems()) {
    const int n = s.mol.n_electrons;
    for (int p = 0; p < 5; ++p) {
      const CMat C = fixtures::random_unit_columns(s.model.nbf(), n, rng);
      const auto parts = jacobian_parts({C, Vec::Zero(n)}, s.model, 0.0);
      const int ob = parts.layout.orbital_block();
      const Mat RQ = (parts.R - parts.Q).topLeftCorner(ob, ob);
      for (int k = 0; k < 100; ++k) {
        const int i = k % n;
        const auto ops = pair_operators(C, s.model, i, i);
        const CVec w = fixtures::random_complex(s.model.nbf(), 1, rng);
        worst_pair = std::min(worst_pair, w.dot((ops.Q - ops.S) * w).real() / w.squaredNorm());
        Vec W(ob);
        for (int q = 0; q < ob; ++q) W(q) = g(rng);
        worst_rq = std::min(worst_rq, W.dot(RQ * W) / W.squaredNorm());
      }
    }
  }
  report(6, worst_pair >= -1e-12 && worst_rq >= -1e-12, "positivity",
         "min <w,(Q_ii - S_ii)w> " + fmt("%.1e", worst_pair) + ", min <W,(R - Q)W> " + fmt("%.1e", worst_rq));
}

void criterion7() {
  std::mt19937_64 rng(7);
  double entry = 0.0, ratio = 0.0, sym = 0.0, smallest_dir = 1e300;
  int probes = 0;
  auto probe = [&](const HfVector& z, const OrthoModel& m) {
    const auto c = jacobian_check(z, m, 5, 700 + probes++);
    entry = std::max({entry, c.entry_err_coarse, c.entry_err_fine});
    ratio = std::max(ratio, c.dir_ratio);
    sym = std::max(sym, c.symmetry_err);
    smallest_dir = std::min(smallest_dir, c.dir_err_coarse);
  };
  for (const auto& s : systems())
    for (int k = 0; k < 2; ++k) probe(fixtures::random_point(s.model.nbf(), s.mol.n_electrons, rng), s.model);
  for (const auto& c : catalog()) probe(c.rec.point(), c.sys->model);
  report(7, entry <= 1e-6 && ratio <= 0.02 && sym <= 1e-10, "Jacobian fidelity",
         std::to_string(probes) + " points, max entry err " + fmt("%.1e", entry) +
             ", worst directional err(1e-4)/err(1e-3) " + fmt("%.4f", ratio) + " (err(1e-3) >= " +
             fmt("%.1e", smallest_dir) + "), symmetry " + fmt("%.1e", sym));
}

void criterion8() {
  bool ok = true;
  int admissible = 0;
  double worst_rec = 0.0, worst_margin = 1e300;
  for (const auto& c : catalog()) {
    const double split = default_split(c.rec.eps);
    if (!(split > 0.0)) continue;
    ++admissible;
    const auto d = lm_decomposition(c.rec.point(), c.sys->model, split);
    worst_rec = std::max(worst_rec, d.reconstruction_err);
    worst_margin = std::min(worst_margin, d.lambda_min_L - split / 2);
    ok = ok && d.reconstruction_err <= 1e-10 && d.lambda_min_L >= split / 2 - 1e-8 &&
         d.h2_rank == d.h2_expected_rank;
  }
  report(8, ok && admissible > 0, "L+M decomposition",
         std::to_string(admissible) + " of " + std::to_string(catalog().size()) +
             " records admit a split, worst reconstruction " + fmt("%.1e", worst_rec) +
             ", min(lambda_min(L) - split/2) " + fmt("%.3e", worst_margin));
}

void criterion9() {
  bool ok = true;
  double worst_phase = 0.0, worst_res = 0.0, worst_dE = 0.0, min_gap = 1e300;
  for (const auto& c : catalog()) {
    const auto& m = c.sys->model;
    const auto rep = manifold_probe(c.rec, m, {});
    const int n = c.rec.n_electrons;
    for (double r : rep.phase_tangent_residuals) worst_phase = std::max(worst_phase, r);
    min_gap = std::min(min_gap, rep.kernel.gap);
    ok = ok && rep.kernel.dim >= n && rep.kernel.gap >= 10.0 && rep.non_isolated;

    HfVector z = c.rec.point();
    CorrectorOptions opts;
    opts.kernel_dim = rep.kernel.dim;
    for (int step = 0; step < 10; ++step) {
      const auto r = continue_step(z, global_phase_tangent(z), 1e-2, m, opts);
      ok = ok && r.outcome == StepOutcome::Accepted;
      worst_res = std::max(worst_res, r.final_residual);
      worst_dE = std::max(worst_dE, std::abs(energy(r.point.orbitals, m).total - c.rec.energy.total));
      z = r.point;
    }
  }
  ok = ok && worst_phase <= 1e-8 && worst_res <= 1e-9 && worst_dE <= 1e-8;
  report(9, ok, "kernel and manifold structure",
         "worst |J v|/sigma_max " + fmt("%.1e", worst_phase) + ", min gap " + fmt("%.1e", min_gap) +
             ", path residual " + fmt("%.1e", worst_res) + ", path |dE| " + fmt("%.1e", worst_dE));
}

void criterion10() {
  std::mt19937_64 rng(10);
  const auto& s = systems()[0];
  int samples = 0, increased = 0, det_increased = 0, det_compared = 0;
  double worst_orth = 0.0, worst_rise = -1e300;
  while (samples < 50) {
    const int n = 2 + samples % 2;
    const CMat T = fixtures::random_low_columns(s.model, n, rng);
    if (energy(T, s.model).total >= 0.0) continue;
    const auto r = rescaling_construction(T, s.model);
    ++samples;
    worst_orth = std::max(worst_orth, (r.orbitals.adjoint() * r.orbitals - CMat::Identity(n, n)).cwiseAbs().maxCoeff());
    worst_rise = std::max(worst_rise, r.energy_out - r.energy_in);
    increased += !r.monotone;
    det_increased += !r.determinant_monotone;
    det_compared += !r.determinant_fallback;
  }
  report(10, worst_orth <= 1e-10 && increased == 0, "rescaling construction",
         "50 samples, orthonormality err " + fmt("%.1e", worst_orth) + ", energy rose in " +
             std::to_string(increased) + " (worst +" + fmt("%.3e", std::max(0.0, worst_rise)) + ")");
  std::printf("       note: against the determinant energy <Psi,H Psi> = det(D) E(output), negative in %d "
              "of the 50 samples, the energy rose in %d\n",
              det_compared, det_increased);
}

// --------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void criterion11(int argc, char** argv) {
  if (argc < 4) {
    report(11, false, "reproducibility", "needs <hfs> <data dir> <work dir> arguments");
    return;
  }
  const std::string hfs = argv[1];
  const fs::path data = argv[2], work = argv[3];
  fs::create_directories(work);
  const std::string common = " --molecule " + (data / "h2.json").string() + " --basis " +
                             (data / "h2_3s.json").string() + " --seed 7";
  const std::string rec = (work / "base_record.json").string();
  std::vector<std::pair<std::string, std::string>> commands = {
      {"scf", "scf" + common},
      {"scf_random", "scf --guess random" + common},
      {"search", "search --n-starts 4" + common},
      {"threshold", "threshold --n-starts 4" + common},
      {"analyze", "analyze --n-starts 4 --record " + rec + common},
      {"continue", "continue --steps 3 --record " + rec + common},
  };
  bool ok = std::system((hfs + " scf" + common + " --out " + rec + " > /dev/null").c_str()) == 0;
  int identical = 0;
  for (const auto& [name, args] : commands) {
    std::string out[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path file = work / (name + "_" + std::to_string(k) + ".json");
      const fs::path log = work / (name + "_" + std::to_string(k) + ".txt");
      fs::remove(file);
      const int rc = std::system((hfs + " " + args + " --out " + file.string() + " > " + log.string() + " 2>&1").c_str());
      out[k] = "exit " + std::to_string(rc) + "\n";
      out[k] += slurp(file) + "\n--\n" + slurp(log);
    }
    const bool same = !out[0].empty() && out[0] == out[1] && out[0].size() > 10;
    identical += same;
    ok = ok && same;
  }
  report(11, ok, "reproducibility",
         std::to_string(identical) + " of " + std::to_string(commands.size()) +
             " CLI commands byte-identical across repeated runs");
}

}  // namespace

int main(int argc, char** argv) {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  criterion11(argc, argv);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
