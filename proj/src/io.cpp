#include "hfs/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace hfs::io {
namespace {

[[noreturn]] void fail(const std::string& source, const std::string& path, const std::string& msg) {
  throw InputError(source + ": " + path + ": " + msg);
}

const json& field(const json& obj, const char* key, const std::string& source,
                  const std::string& path) {
  if (!obj.is_object()) fail(source, path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(source, path + "." + key, "missing field");
  return *it;
}

double number(const json& v, const std::string& source, const std::string& path) {
  if (!v.is_number()) fail(source, path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(source, path, "expected a finite number");
  return x;
}

long long integer(const json& v, const std::string& source, const std::string& path) {
  if (!v.is_number_integer()) fail(source, path, "expected an integer");
  return v.get<long long>();
}

const json& array(const json& v, const std::string& source, const std::string& path) {
  if (!v.is_array()) fail(source, path, "expected an array");
  return v;
}

std::string idx(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

Vec vector_of(const json& v, const std::string& source, const std::string& path) {
  array(v, source, path);
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = number(v[i], source, idx(path, i));
  return out;
}

json to_array(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json orbitals_json(const CMat& C) {
  json a = json::array();
  for (Eigen::Index j = 0; j < C.cols(); ++j)
    a.push_back({{"re", to_array(C.col(j).real())}, {"im", to_array(C.col(j).imag())}});
  return a;
}

ScfStatus status_from(const std::string& s, const std::string& source) {
  for (auto st : {ScfStatus::Converged, ScfStatus::MaxIterExceeded, ScfStatus::OscillationDetected})
    if (to_string(st) == s) return st;
  fail(source, "status", "unknown status '" + s + "'");
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InputError(path + ": line " + std::to_string(line) + ", column " + std::to_string(col) +
                     ": malformed JSON");
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(path + ": cannot write file");
  out << j.dump(2) << '\n';
  if (!out) throw InputError(path + ": write failed");
}

// ---------------------------------------------------------------------------

MoleculeSpec parse_molecule(const json& j, const std::string& source) {
  MoleculeSpec mol;
  const json& nuclei = array(field(j, "nuclei", source, "$"), source, "$.nuclei");
  if (nuclei.empty()) fail(source, "$.nuclei", "at least one nucleus is required");
  for (std::size_t i = 0; i < nuclei.size(); ++i) {
    const std::string p = idx("$.nuclei", i);
    Nucleus n;
    n.charge = number(field(nuclei[i], "Z", source, p), source, p + ".Z");
    if (!(n.charge > 0.0)) fail(source, p + ".Z", "charge must be positive");
    const json& pos = array(field(nuclei[i], "pos", source, p), source, p + ".pos");
    if (pos.size() != 3) fail(source, p + ".pos", "expected 3 coordinates");
    for (int k = 0; k < 3; ++k) n.position(k) = number(pos[k], source, idx(p + ".pos", k));
    mol.nuclei.push_back(n);
  }
  const long long ne = integer(field(j, "n_electrons", source, "$"), source, "$.n_electrons");
  if (ne < 1) fail(source, "$.n_electrons", "must be >= 1");
  mol.n_electrons = static_cast<int>(ne);
  try {
    mol.validate();
  } catch (const ContractError& e) {
    fail(source, "$", e.what());
  }
  return mol;
}

MoleculeSpec load_molecule(const std::string& path) { return parse_molecule(read_json_file(path), path); }

BasisSet parse_basis(const json& j, const MoleculeSpec& mol, const std::string& source) {
  BasisSet basis;
  const json& shells = array(field(j, "shells", source, "$"), source, "$.shells");
  if (shells.empty()) fail(source, "$.shells", "at least one shell is required");
  for (std::size_t s = 0; s < shells.size(); ++s) {
    const std::string p = idx("$.shells", s);
    const long long c = integer(field(shells[s], "center_index", source, p), source, p + ".center_index");
    if (c < 0 || c >= static_cast<long long>(mol.nuclei.size()))
      fail(source, p + ".center_index", "no nucleus with index " + std::to_string(c));
    const json& prims = array(field(shells[s], "primitives", source, p), source, p + ".primitives");
    if (prims.empty()) fail(source, p + ".primitives", "at least one primitive is required");
    std::vector<Primitive> list;
    for (std::size_t k = 0; k < prims.size(); ++k) {
      const std::string q = idx(p + ".primitives", k);
      Primitive pr;
      pr.exponent = number(field(prims[k], "exponent", source, q), source, q + ".exponent");
      pr.coefficient = number(field(prims[k], "coefficient", source, q), source, q + ".coefficient");
      if (!(pr.exponent > 0.0)) fail(source, q + ".exponent", "must be positive");
      list.push_back(pr);
    }
    try {
      basis.shells.push_back(make_normalized_shell(mol.nuclei[static_cast<std::size_t>(c)].position, list));
    } catch (const ContractError& e) {
      fail(source, p, e.what());
    }
  }
  return basis;
}

BasisSet load_basis(const std::string& path, const MoleculeSpec& mol) {
  return parse_basis(read_json_file(path), mol, path);
}

// ---------------------------------------------------------------------------

json to_json(const CriticalPointRecord& rec) {
  json g = {{"label", "basis-set gates"},
            {"threshold", opt(rec.gates.threshold)},
            {"below_threshold", rec.gates.below_threshold},
            {"eps_gate", opt(rec.gates.eps_gate)},
            {"b_eps_member", rec.gates.b_eps_member}};
  return {{"schema", "hfs.record/1"},
          {"n_electrons", rec.n_electrons},
          {"nbf", rec.orbitals.rows()},
          {"energy",
           {{"total", rec.energy.total},
            {"core", rec.energy.core},
            {"coulomb", rec.energy.coulomb},
            {"exchange", rec.energy.exchange}}},
          {"eps", to_array(rec.eps)},
          {"residual_norm", rec.residual_norm},
          {"iterations", rec.iterations},
          {"converged", rec.converged},
          {"status", to_string(rec.status)},
          {"orthogonality_residual", rec.orthogonality_residual},
          {"seed", rec.seed},
          {"gates", g},
          {"orbitals", orbitals_json(rec.orbitals)}};
}

CriticalPointRecord record_from_json(const json& j, const std::string& source) {
  CriticalPointRecord rec;
  const long long n = integer(field(j, "n_electrons", source, "$"), source, "$.n_electrons");
  const long long nbf = integer(field(j, "nbf", source, "$"), source, "$.nbf");
  if (n < 1 || nbf < n) fail(source, "$", "inconsistent n_electrons / nbf");
  rec.n_electrons = static_cast<int>(n);
  const json& e = field(j, "energy", source, "$");
  rec.energy.total = number(field(e, "total", source, "$.energy"), source, "$.energy.total");
  rec.energy.core = number(field(e, "core", source, "$.energy"), source, "$.energy.core");
  rec.energy.coulomb = number(field(e, "coulomb", source, "$.energy"), source, "$.energy.coulomb");
  rec.energy.exchange = number(field(e, "exchange", source, "$.energy"), source, "$.energy.exchange");
  rec.eps = vector_of(field(j, "eps", source, "$"), source, "$.eps");
  if (rec.eps.size() != n) fail(source, "$.eps", "expected n_electrons entries");
  rec.residual_norm = number(field(j, "residual_norm", source, "$"), source, "$.residual_norm");
  rec.iterations = static_cast<int>(integer(field(j, "iterations", source, "$"), source, "$.iterations"));
  const json& conv = field(j, "converged", source, "$");
  if (!conv.is_boolean()) fail(source, "$.converged", "expected a boolean");
  rec.converged = conv.get<bool>();
  const json& st = field(j, "status", source, "$");
  if (!st.is_string()) fail(source, "$.status", "expected a string");
  rec.status = status_from(st.get<std::string>(), source);
  rec.orthogonality_residual =
      number(field(j, "orthogonality_residual", source, "$"), source, "$.orthogonality_residual");
  const json& seed = field(j, "seed", source, "$");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) fail(source, "$.seed", "expected an integer");
  rec.seed = seed.get<std::uint64_t>();

  const json& orbs = array(field(j, "orbitals", source, "$"), source, "$.orbitals");
  if (static_cast<long long>(orbs.size()) != n) fail(source, "$.orbitals", "expected n_electrons orbitals");
  rec.orbitals.resize(nbf, n);
  for (std::size_t k = 0; k < orbs.size(); ++k) {
    const std::string p = idx("$.orbitals", k);
    const Vec re = vector_of(field(orbs[k], "re", source, p), source, p + ".re");
    const Vec im = vector_of(field(orbs[k], "im", source, p), source, p + ".im");
    if (re.size() != nbf || im.size() != nbf) fail(source, p, "expected nbf coefficients");
    for (Eigen::Index mu = 0; mu < nbf; ++mu)
      rec.orbitals(mu, static_cast<Eigen::Index>(k)) = cplx(re(mu), im(mu));
  }

  if (j.contains("gates")) {
    const json& g = j["gates"];
    if (g.contains("threshold") && !g["threshold"].is_null())
      rec.gates.threshold = number(g["threshold"], source, "$.gates.threshold");
    if (g.contains("eps_gate") && !g["eps_gate"].is_null())
      rec.gates.eps_gate = number(g["eps_gate"], source, "$.gates.eps_gate");
    rec.gates.below_threshold = g.value("below_threshold", false);
    rec.gates.b_eps_member = g.value("b_eps_member", false);
  }
  return rec;
}

CriticalPointRecord load_record(const std::string& path) {
  return record_from_json(read_json_file(path), path);
}

json to_json(const StartLog& log) {
  return {{"seed", log.seed},
          {"converged", log.converged},
          {"E", log.energy},
          {"iterations", log.iterations},
          {"residual", log.residual}};
}

json to_json(const SolutionCatalog& cat) {
  json recs = json::array(), log = json::array();
  for (const auto& r : cat.records) recs.push_back(to_json(r));
  for (const auto& l : cat.log) log.push_back(to_json(l));
  return {{"schema", "hfs.catalog/1"}, {"n_solutions", cat.records.size()}, {"records", recs}, {"log", log}};
}

json to_json(const ThresholdEstimate& est) {
  return {{"schema", "hfs.threshold/1"},
          {"label", "basis-set estimate"},
          {"value", est.value},
          {"n_electrons", est.n_electrons},
          {"n_starts", est.n_starts},
          {"n_converged", est.n_converged},
          {"best", to_json(est.best)}};
}

// ---------------------------------------------------------------------------

bool StructureReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.second) return false;
  return true;
}

json to_json(const StructureReport& rep) {
  const auto& m = rep.manifold;
  json cont = json::array();
  for (const auto& c : m.continuation)
    cont.push_back({{"direction", c.direction},
                    {"sign", c.sign},
                    {"outcome", to_string(c.outcome)},
                    {"iterations", c.iterations},
                    {"final_residual", c.final_residual},
                    {"distance", c.distance},
                    {"energy_change", c.energy_change},
                    {"orthogonality_residual", c.orthogonality_residual},
                    {"phase_fraction", c.phase_fraction}});
  json lm = nullptr;
  if (rep.lm) {
    const auto& d = *rep.lm;
    lm = {{"split", d.split},
          {"lambda_min_L", d.lambda_min_L},
          {"sigma_min_L", d.sigma_min_L},
          {"reconstruction_err", d.reconstruction_err},
          {"lambda_min_R_minus_Q", d.lambda_min_R_minus_Q},
          {"h2_rank", d.h2_rank},
          {"h2_expected_rank", d.h2_expected_rank},
          {"h2_realified_rank", d.h2_full_rank},
          {"coupling_rank", d.coupling_rank}};
  }
  json checks = json::object();
  for (const auto& c : rep.checks) checks[c.first] = c.second;
  const Vec& sv = m.kernel.singular_values;
  return {{"schema", "hfs.report/1"},
          {"n_electrons", rep.n_electrons},
          {"kernel_dim", m.kernel.dim},
          {"sigma_gap", m.kernel.gap},
          {"sigma_max", m.kernel.sigma_max},
          {"rank_tol", m.kernel.rank_tol_rel},
          {"rank_ambiguous", m.kernel.ambiguous},
          {"smallest_singular_values", to_array(sv.tail(std::min<Eigen::Index>(sv.size(), m.kernel.dim + 3)))},
          {"jacobian_symmetry_err", rep.jacobian_symmetry_err},
          {"phase_tangent_residuals", m.phase_tangent_residuals},
          {"phase_tangent_gram_min_eig", m.phase_gram_min_eig},
          {"phase_tangent_in_kernel", m.phase_in_kernel},
          {"lm", lm},
          {"koopmans", to_array(rep.koopmans)},
          {"bounds",
           {{"h_min", rep.bounds.h_min},
            {"min_eps", rep.bounds.min_eps},
            {"max_eps", rep.bounds.max_eps},
            {"lower_ok", rep.bounds.lower_ok},
            {"upper_gate",
             {{"label", "basis-set gate"},
              {"threshold", opt(rep.threshold)},
              {"eps_gate", rep.eps_gate},
              {"applies", rep.bounds.upper_applies},
              {"ok", rep.bounds.upper_ok}}}}},
          {"continuation", cont},
          {"max_orthogonality_drift", m.max_orthogonality_drift},
          {"non_isolated", m.non_isolated},
          {"verdict", m.verdict},
          {"checks", checks},
          {"all_checks_pass", rep.all_pass()}};
}

json path_to_json(const std::string& direction, double delta, const std::vector<PathPoint>& pts) {
  json arr = json::array();
  for (const auto& p : pts)
    arr.push_back({{"step", p.step},
                   {"outcome", to_string(p.outcome)},
                   {"corrector_iterations", p.corrector_iterations},
                   {"residual", p.residual},
                   {"energy", p.energy},
                   {"distance", p.distance},
                   {"orthogonality_residual", p.orthogonality_residual},
                   {"eps", to_array(p.point.scalars)},
                   {"orbitals", orbitals_json(p.point.orbitals)}});
  return {{"schema", "hfs.path/1"}, {"direction", direction}, {"delta", delta}, {"points", arr}};
}

}  // namespace hfs::io
