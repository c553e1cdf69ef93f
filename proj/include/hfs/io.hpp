#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfs/integrals.hpp"
#include "hfs/scf.hpp"
#include "hfs/structure.hpp"

namespace hfs::io {

using json = nlohmann::json;

/// Malformed or unreadable input. The message names the file and either the
/// line/column of a syntax error or the offending field path.
class InputError : public Error {
 public:
  using Error::Error;
};

json read_json_file(const std::string& path);
/// Writes `j.dump(2)` plus a trailing newline.
void write_json_file(const std::string& path, const json& j);

MoleculeSpec parse_molecule(const json& j, const std::string& source = "molecule");
MoleculeSpec load_molecule(const std::string& path);

/// Coefficients are read as multiplying normalized primitives (the usual
/// basis-table convention); every shell is renormalized to unit self-overlap.
BasisSet parse_basis(const json& j, const MoleculeSpec& mol, const std::string& source = "basis");
BasisSet load_basis(const std::string& path, const MoleculeSpec& mol);

// Records hold orthonormal-basis coefficients, so they are only meaningful
// together with the molecule and basis files that produced them.
json to_json(const CriticalPointRecord& rec);
CriticalPointRecord record_from_json(const json& j, const std::string& source = "record");
CriticalPointRecord load_record(const std::string& path);

json to_json(const StartLog& log);
json to_json(const SolutionCatalog& cat);
json to_json(const ThresholdEstimate& est);

/// Everything `analyze` measures at one record, with the pass/fail of each
/// invariant.
struct StructureReport {
  int n_electrons = 0;
  double jacobian_symmetry_err = 0.0;  // ||J - J^T|| / ||J||
  ManifoldReport manifold;
  std::optional<LMDecomposition> lm;   // empty when no admissible split exists
  Vec koopmans;
  BoundsReport bounds;
  std::optional<double> threshold;
  double eps_gate = 0.1;
  std::vector<std::pair<std::string, bool>> checks;

  bool all_pass() const;
};

json to_json(const StructureReport& rep);

struct PathPoint {
  int step = 0;
  StepOutcome outcome = StepOutcome::Accepted;
  int corrector_iterations = 0;
  double residual = 0.0;
  double energy = 0.0;
  double distance = 0.0;
  double orthogonality_residual = 0.0;
  HfVector point;
};

json path_to_json(const std::string& direction, double delta, const std::vector<PathPoint>& pts);

}  // namespace hfs::io
