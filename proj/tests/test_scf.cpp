#include <cmath>
#include <random>

#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "hfs/linalg.hpp"
#include "hfs/scf.hpp"

using namespace hfs;

TEST_CASE("option validation") {
  ScfOptions o;
  CHECK_NOTHROW(o.validate());
  o.damping = 1.0;
  CHECK_THROWS_AS(o.validate(), ContractError);
  o = {};
  o.residual_tol = 0.0;
  CHECK_THROWS_AS(o.validate(), ContractError);
  o = {};
  o.level_shift = -0.1;
  CHECK_THROWS_AS(o.validate(), ContractError);
}

TEST_CASE("initial guesses") {
  const auto s = fixtures::h2_3s();
  const CMat core = initial_guess(s.model, 1, GuessMode::Core, 0);
  CHECK((core.col(0).real() - s.model.h_vectors.col(0)).norm() == 0.0);
  const CMat r1 = initial_guess(s.model, 3, GuessMode::Random, 42);
  const CMat r2 = initial_guess(s.model, 3, GuessMode::Random, 42);
  const CMat r3 = initial_guess(s.model, 3, GuessMode::Random, 43);
  CHECK((r1 - r2).norm() == 0.0);
  CHECK((r1 - r3).norm() > 0.1);
  CHECK((r1.adjoint() * r1 - CMat::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(initial_guess(s.model, 7, GuessMode::Core, 0), ContractError);
}

TEST_CASE("one electron: the lowest eigenpair of h") {
  for (const auto& s : {fixtures::h2_3s(1), fixtures::heh_plus()}) {
    const auto rec = fixtures::solve(s, 1);
    REQUIRE(rec.converged);
    CHECK(rec.iterations <= 2);
    CHECK(rec.energy.total == Catch::Approx(s.model.h_min()).margin(1e-10));
    CHECK(rec.eps(0) == Catch::Approx(s.model.h_min()).margin(1e-10));
  }
}

TEST_CASE("one electron from a random guess") {
  const auto s = fixtures::h2_3s(1);
  const auto rec = scf_solve(s.model, 1, initial_guess(s.model, 1, GuessMode::Random, 3), {});
  REQUIRE(rec.converged);
  CHECK(rec.energy.total == Catch::Approx(s.model.h_min()).margin(1e-10));
}

TEST_CASE("two electrons on two centres") {
  const auto s = fixtures::h2_3s();
  const auto rec = fixtures::solve(s, 2);
  REQUIRE(rec.converged);
  CHECK(rec.status == ScfStatus::Converged);
  CHECK(rec.iterations <= 500);
  CHECK(rec.residual_norm <= 1e-9);
  CHECK(rec.orthogonality_residual <= 1e-9);
  CHECK(norm_residual(rec.orbitals) <= 1e-9);
  // The orbital energies are the lowest Fock eigenvalues.
  const auto eig = linalg::eigh<cplx>(fock(rec.orbitals, s.model));
  CHECK(rec.eps(0) == Catch::Approx(eig.values(0)).margin(1e-8));
  CHECK(rec.eps(1) == Catch::Approx(eig.values(1)).margin(1e-8));
  // Regression value for this basis.
  CHECK(rec.energy.total == Catch::Approx(-1.4553625847).margin(1e-8));
}

TEST_CASE("fully occupied basis: energy of the trace density") {
  // With N = nbf the density is the identity for any orthonormal orbitals, so
  // E = tr h + 1/2 sum_mv [(mm|vv) - (mv|vm)].
  const auto s = fixtures::h2_sto3g();
  const auto rec = fixtures::solve(s, 2);
  REQUIRE(rec.converged);
  const auto& g = s.model.eri;
  double ref = s.model.h.trace();
  for (int m = 0; m < 2; ++m)
    for (int v = 0; v < 2; ++v) ref += 0.5 * (g(m, m, v, v) - g(m, v, v, m));
  CHECK(rec.energy.total == Catch::Approx(ref).margin(1e-12));
}

TEST_CASE("level shift does not change the solution reached") {
  const auto s = fixtures::heh_plus();
  ScfOptions plain;
  plain.level_shift = 0.0;
  const CMat guess = initial_guess(s.model, 2, GuessMode::Core, 0);
  const auto a = scf_solve(s.model, 2, guess, plain);
  const auto b = scf_solve(s.model, 2, guess, ScfOptions{});
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(same_solution(a, b));
}

TEST_CASE("non-convergence is reported, not thrown") {
  const auto s = fixtures::he2_three();
  ScfOptions o;
  o.max_iter = 2;
  const auto rec = scf_solve(s.model, 3, initial_guess(s.model, 3, GuessMode::Random, 9), o);
  CHECK_FALSE(rec.converged);
  CHECK(rec.status == ScfStatus::MaxIterExceeded);
  CHECK(std::isfinite(rec.residual_norm));
  CHECK(to_string(rec.status) == "max_iter_exceeded");
}

TEST_CASE("infeasible guesses are rejected") {
  const auto s = fixtures::h2_3s();
  CMat guess = initial_guess(s.model, 2, GuessMode::Core, 0);
  guess.col(0) *= 1.1;
  CHECK_THROWS_AS(scf_solve(s.model, 2, guess, {}), ContractError);
}

TEST_CASE("converged records satisfy the record invariants") {
  for (const auto& s : {fixtures::h2_3s(), fixtures::heh_plus(), fixtures::he2_three(), fixtures::lih_like()}) {
    const int n = s.mol.n_electrons;
    const auto rec = fixtures::solve(s, n);
    REQUIRE(rec.converged);
    CHECK(rec.residual_norm <= 1e-9);
    CHECK(norm_residual(rec.orbitals) <= 1e-9);
    CHECK(rec.orthogonality_residual <= 1e-9);
    CHECK(pairing_norm(residual_F(rec.point(), s.model)) == Catch::Approx(rec.residual_norm).margin(1e-15));
  }
}

TEST_CASE("multistart catalog") {
  const auto s = fixtures::h2_3s();
  ScfOptions o;
  o.seed = 2024;
  const auto one = multistart_search(s.model, 2, 1, o);
  CHECK(one.records.size() == 1);
  CHECK(one.log.size() == 1);

  const auto a = multistart_search(s.model, 2, 6, o);
  const auto b = multistart_search(s.model, 2, 6, o);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    CHECK(a.records[k].energy.total == b.records[k].energy.total);
    CHECK((a.records[k].orbitals - b.records[k].orbitals).norm() == 0.0);
  }
  for (std::size_t k = 1; k < a.records.size(); ++k)
    CHECK(a.records[k - 1].energy.total <= a.records[k].energy.total);
  CHECK(a.log.size() == 6);
  CHECK_THROWS_AS(multistart_search(s.model, 2, 0, o), ContractError);
}

TEST_CASE("gauge-rotated duplicates collapse") {
  const auto s = fixtures::heh_plus();
  const auto rec = fixtures::solve(s, 2);
  REQUIRE(rec.converged);
  SolutionCatalog cat;
  CHECK(catalog_insert(cat, rec));
  CriticalPointRecord rotated = rec;
  rotated.orbitals.col(0) *= std::polar(1.0, 1.3);
  rotated.orbitals.col(1) *= std::polar(1.0, -0.4);
  std::swap(rotated.eps(0), rotated.eps(1));
  rotated.orbitals.col(0).swap(rotated.orbitals.col(1));
  CHECK_FALSE(catalog_insert(cat, rotated));
  CHECK(cat.records.size() == 1);
  // Idempotence.
  CHECK_FALSE(catalog_insert(cat, rec));
}

TEST_CASE("threshold estimate") {
  const auto s = fixtures::h2_3s();
  const auto est = threshold_j(s.model, 1, 4, {});
  CHECK(est.value == Catch::Approx(s.model.h_min()).margin(1e-10));
  CHECK(est.value < 0.0);
  CHECK(est.n_electrons == 1);
  CHECK(est.n_converged >= 1);
  CHECK_THROWS_AS(threshold_j(s.model, 0, 4, {}), ContractError);

  const auto he = fixtures::he2_three();
  const auto two = threshold_j(he.model, 2, 4, {});
  const auto cat = multistart_search(he.model, 2, 4, {});
  for (const auto& r : cat.records) CHECK(two.value <= r.energy.total);
}

TEST_CASE("start seeds are distinct and reproducible") {
  CHECK(start_seed(7, 1) == start_seed(7, 1));
  CHECK(start_seed(7, 1) != start_seed(7, 2));
  CHECK(start_seed(7, 1) != start_seed(8, 1));
}

TEST_CASE("classification gates") {
  const auto s = fixtures::h2_3s();
  auto rec = fixtures::solve(s, 2);
  classify(rec, -1.0, 0.1);
  CHECK(rec.gates.below_threshold == (rec.energy.total < -1.0));
  CHECK(rec.gates.b_eps_member == (rec.eps.maxCoeff() < -0.1));
  classify(rec, std::nullopt, std::nullopt);
  CHECK_FALSE(rec.gates.threshold.has_value());
}
