#include "hfs/structure.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "hfs/linalg.hpp"

namespace hfs {
namespace {

const double kSqrt2 = std::numbers::sqrt2;

// Adds the realification of w -> A w to block (i, j).
void add_linear(Mat& M, const RealLayout& L, int i, int j, const CMat& A) {
  const int n = L.nbf;
  const Mat Ar = A.real(), Ai = A.imag();
  M.block(L.re(i, 0), L.re(j, 0), n, n) += Ar;
  M.block(L.re(i, 0), L.im(j, 0), n, n) -= Ai;
  M.block(L.im(i, 0), L.re(j, 0), n, n) += Ai;
  M.block(L.im(i, 0), L.im(j, 0), n, n) += Ar;
}

// Adds the realification of w -> B conj(w) to block (i, j).
void add_conjugate(Mat& M, const RealLayout& L, int i, int j, const CMat& B) {
  const int n = L.nbf;
  const Mat Br = B.real(), Bi = B.imag();
  M.block(L.re(i, 0), L.re(j, 0), n, n) += Br;
  M.block(L.re(i, 0), L.im(j, 0), n, n) += Bi;
  M.block(L.im(i, 0), L.re(j, 0), n, n) += Bi;
  M.block(L.im(i, 0), L.im(j, 0), n, n) -= Br;
}

int numerical_rank(const Mat& A, double rel = 1e-10) {
  if (A.size() == 0) return 0;
  const auto s = linalg::svd(A).sigma;
  if (s(0) == 0.0) return 0;
  int r = 0;
  for (int k = 0; k < s.size(); ++k)
    if (s(k) > rel * s(0)) ++r;
  return r;
}

Mat scalar_identity(const RealLayout& L) {
  Mat I = Mat::Zero(L.size(), L.size());
  I.bottomRightCorner(L.n, L.n).setIdentity();
  return I;
}

}  // namespace

// ---------------------------------------------------------------------------

Vec realify(const HfVector& y) {
  const RealLayout L = layout_of(y);
  Vec v(L.size());
  for (int i = 0; i < L.n; ++i) {
    v.segment(L.re(i, 0), L.nbf) = kSqrt2 * y.orbitals.col(i).real();
    v.segment(L.im(i, 0), L.nbf) = kSqrt2 * y.orbitals.col(i).imag();
  }
  v.tail(L.n) = y.scalars;
  return v;
}

HfVector derealify(const Vec& v, const RealLayout& L) {
  if (v.size() != L.size()) throw ContractError("derealify: size mismatch");
  HfVector y = HfVector::zero(L.nbf, L.n);
  for (int i = 0; i < L.n; ++i) {
    y.orbitals.col(i).real() = v.segment(L.re(i, 0), L.nbf) / kSqrt2;
    y.orbitals.col(i).imag() = v.segment(L.im(i, 0), L.nbf) / kSqrt2;
  }
  y.scalars = v.tail(L.n);
  return y;
}

// ---------------------------------------------------------------------------

JacobianParts jacobian_parts(const HfVector& z, const OrthoModel& model, double split) {
  const RealLayout L = layout_of(z);
  if (L.nbf != model.nbf()) throw ContractError("jacobian: basis size mismatch");
  const int N = L.n, n = L.nbf, dim = L.size();
  const CMat& C = z.orbitals;

  JacobianParts p;
  p.layout = L;
  p.H1 = p.H2 = p.R = p.Q = p.S = p.Sbar = p.coupling = Mat::Zero(dim, dim);

  p.h_low = Mat::Zero(n, n);
  if (split > 0.0) {
    for (int k = 0; k < n; ++k)
      if (model.h_values(k) <= -0.5 * split) {
        p.h_low += model.h_values(k) * model.h_vectors.col(k) * model.h_vectors.col(k).transpose();
        ++p.h_low_rank;
      }
  }
  const Mat h_high = model.h - p.h_low;

  std::vector<std::vector<PairOperators>> ops(N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) ops[i].push_back(pair_operators(C, model, i, j));

  const CMat In = CMat::Identity(n, n);
  for (int i = 0; i < N; ++i) {
    add_linear(p.H1, L, i, i, h_high.cast<cplx>() - z.scalars(i) * In);
    add_linear(p.H2, L, i, i, p.h_low.cast<cplx>());
    CMat Ri = CMat::Zero(n, n), Si = CMat::Zero(n, n);
    for (int k = 0; k < N; ++k)
      if (k != i) {
        Ri += ops[k][k].Q;
        Si += ops[k][k].S;
      }
    add_linear(p.R, L, i, i, Ri);
    add_linear(p.S, L, i, i, -Si);
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      add_linear(p.Q, L, i, j, ops[i][j].Q);
      add_linear(p.S, L, i, j, ops[i][j].S);
      add_conjugate(p.Sbar, L, i, j, ops[i][j].sbar - ops[j][i].sbar);
    }
    // e-column: d(F_i)/d(e_i) = -c_i; constraint row: -2 Re<w_i, c_i>.
    for (int mu = 0; mu < n; ++mu) {
      const double re = -kSqrt2 * C(mu, i).real();
      const double im = -kSqrt2 * C(mu, i).imag();
      p.coupling(L.re(i, mu), L.eps(i)) = re;
      p.coupling(L.im(i, mu), L.eps(i)) = im;
      p.coupling(L.eps(i), L.re(i, mu)) = re;
      p.coupling(L.eps(i), L.im(i, mu)) = im;
    }
  }
  return p;
}

RealJacobian jacobian(const HfVector& z, const OrthoModel& model) {
  const JacobianParts p = jacobian_parts(z, model, 0.0);
  return {p.H1 + p.H2 + p.R - p.Q + p.S + p.Sbar + p.coupling, p.layout};
}

Mat jacobian_fd(const HfVector& z, const OrthoModel& model, double step) {
  const RealLayout L = layout_of(z);
  const Vec x = realify(z);
  Mat J(L.size(), L.size());
  for (int k = 0; k < L.size(); ++k) {
    Vec xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    J.col(k) = (realify(residual_F(derealify(xp, L), model)) -
                realify(residual_F(derealify(xm, L), model))) /
               (2.0 * step);
  }
  return J;
}

double default_split(const Vec& eps) { return std::min(-eps.maxCoeff(), 0.05); }

LMDecomposition lm_decomposition(const HfVector& z, const OrthoModel& model, double split) {
  if (!(split > 0.0)) throw ContractError("lm_decomposition: split must be positive");
  if (z.scalars.maxCoeff() > -split)
    throw ContractError("lm_decomposition: orbital energies must satisfy e_i <= -split");
  const JacobianParts p = jacobian_parts(z, model, split);
  const RealLayout& Lay = p.layout;
  const Mat I_e = scalar_identity(Lay);

  LMDecomposition d;
  d.split = split;
  d.L = p.H1 + p.R - p.Q + I_e;
  d.M = p.H2 + p.S + p.Sbar + p.coupling - I_e;
  const Mat J = jacobian(z, model).J;
  d.reconstruction_err = (d.L + d.M - J).norm() / std::max(J.norm(), 1e-300);

  const int ob = Lay.orbital_block();
  const Mat Lorb = d.L.topLeftCorner(ob, ob);
  d.lambda_min_L = linalg::eigh<double>(0.5 * (Lorb + Lorb.transpose())).values(0);
  d.sigma_min_L = linalg::svd(d.L).sigma.tail(1)(0);
  const Mat RQ = (p.R - p.Q).topLeftCorner(ob, ob);
  d.lambda_min_R_minus_Q = linalg::eigh<double>(0.5 * (RQ + RQ.transpose())).values(0);

  d.h2_rank = numerical_rank(p.h_low);
  d.h2_expected_rank = p.h_low_rank;
  d.h2_full_rank = numerical_rank(p.H2);
  d.coupling_rank = numerical_rank(p.coupling);
  return d;
}

// ---------------------------------------------------------------------------

KernelBasis kernel_basis(const Mat& J, double rank_tol_rel) {
  if (J.rows() != J.cols()) throw ContractError("kernel_basis: matrix is not square");
  const auto sv = linalg::svd(J);
  const int n = static_cast<int>(sv.sigma.size());
  KernelBasis k;
  k.rank_tol_rel = rank_tol_rel;
  k.singular_values = sv.sigma;
  k.sigma_max = n > 0 ? sv.sigma(0) : 0.0;
  const double cut = rank_tol_rel * k.sigma_max;
  for (int i = 0; i < n; ++i)
    if (sv.sigma(i) <= cut) ++k.dim;
  k.vectors = sv.V.rightCols(k.dim);
  const double tiny = std::numeric_limits<double>::min();
  if (k.dim == n) {
    k.gap = std::numeric_limits<double>::infinity();
  } else if (k.dim == 0) {
    k.gap = sv.sigma(n - 1) / std::max(cut, tiny);
  } else {
    k.gap = sv.sigma(n - k.dim - 1) / std::max(sv.sigma(n - k.dim), tiny);
  }
  k.ambiguous = k.gap < 10.0;
  return k;
}

Vec phase_tangent(const HfVector& z, int j) {
  if (j < 0 || j >= z.n_orbitals()) throw ContractError("phase_tangent: index out of range");
  if (z.orbitals.col(j).norm() == 0.0) throw ContractError("phase_tangent: zero orbital");
  HfVector t = HfVector::zero(static_cast<int>(z.orbitals.rows()), z.n_orbitals());
  t.orbitals.col(j) = cplx(0.0, 1.0) * z.orbitals.col(j);
  return realify(t).normalized();
}

Vec global_phase_tangent(const HfVector& z) {
  HfVector t = HfVector::zero(static_cast<int>(z.orbitals.rows()), z.n_orbitals());
  t.orbitals = cplx(0.0, 1.0) * z.orbitals;
  const Vec v = realify(t);
  if (v.norm() == 0.0) throw ContractError("global_phase_tangent: zero orbitals");
  return v.normalized();
}

HfVector orbit_sample(const HfVector& z, const Vec& theta) {
  if (theta.size() != z.n_orbitals()) throw ContractError("orbit_sample: need one angle per orbital");
  HfVector out = z;
  for (int j = 0; j < z.n_orbitals(); ++j) out.orbitals.col(j) *= std::polar(1.0, theta(j));
  return out;
}

std::string to_string(StepOutcome o) {
  switch (o) {
    case StepOutcome::Accepted: return "accepted";
    case StepOutcome::ShortStep: return "short_step";
    case StepOutcome::StepCollapsed: return "step_collapsed";
    case StepOutcome::CorrectorDiverged: return "corrector_diverged";
  }
  return "unknown";
}

StepResult continue_step(const HfVector& z, const Vec& tangent, double delta,
                         const OrthoModel& model, const CorrectorOptions& opts) {
  const RealLayout L = layout_of(z);
  if (tangent.size() != L.size()) throw ContractError("continue_step: tangent size mismatch");
  const Vec x0 = realify(z);
  StepResult res;
  if (delta == 0.0) {
    res.point = z;
    res.outcome = StepOutcome::Accepted;
    res.final_residual = pairing_norm(residual_F(z, model));
    return res;
  }

  Vec x = x0 + delta * tangent;
  HfVector y = derealify(x, L);
  double r = pairing_norm(residual_F(y, model));
  int it = 0;
  while (r > opts.residual_tol && it < opts.max_iter) {
    const Mat J = jacobian(y, model).J;
    const auto sv = linalg::svd(J);
    const int n = static_cast<int>(sv.sigma.size());
    int drop = opts.kernel_dim;
    if (drop < 0) {
      drop = 0;
      for (int k = 0; k < n; ++k)
        if (sv.sigma(k) <= opts.rank_tol_rel * sv.sigma(0)) ++drop;
    }
    const int keep = n - drop;
    const Vec rv = realify(residual_F(y, model));
    const Vec coeff = (sv.U.leftCols(keep).transpose() * rv).cwiseQuotient(sv.sigma.head(keep));
    x -= sv.V.leftCols(keep) * coeff;
    y = derealify(x, L);
    r = pairing_norm(residual_F(y, model));
    ++it;
  }
  res.point = y;
  res.iterations = it;
  res.final_residual = r;
  res.distance = (x - x0).norm();
  if (r > opts.residual_tol || !std::isfinite(r))
    res.outcome = StepOutcome::CorrectorDiverged;
  else if (res.distance < std::abs(delta) / 10.0)
    res.outcome = StepOutcome::StepCollapsed;
  else if (res.distance < std::abs(delta) / 2.0)
    res.outcome = StepOutcome::ShortStep;
  else
    res.outcome = StepOutcome::Accepted;
  return res;
}

ManifoldReport manifold_probe(const CriticalPointRecord& rec, const OrthoModel& model,
                              const ProbeOptions& opts) {
  const HfVector z = rec.point();
  if (!rec.converged) throw ContractError("manifold_probe: record is not converged");
  if (norm_residual(z.orbitals) > 1e-9)
    throw ContractError("manifold_probe: orbitals violate the norm constraints");
  const double r0 = pairing_norm(residual_F(z, model));
  if (r0 > opts.residual_tol) throw ContractError("manifold_probe: residual above tolerance");

  ManifoldReport rep;
  const Mat J = jacobian(z, model).J;
  rep.kernel = kernel_basis(J, opts.rank_tol_rel);

  const int N = z.n_orbitals();
  Mat T(J.rows(), N);
  for (int j = 0; j < N; ++j) {
    T.col(j) = phase_tangent(z, j);
    rep.phase_tangent_residuals.push_back((J * T.col(j)).norm() /
                                          std::max(rep.kernel.sigma_max, 1e-300));
    rep.phase_in_kernel.push_back((rep.kernel.vectors.transpose() * T.col(j)).norm());
  }
  rep.phase_gram_min_eig = linalg::eigh<double>(T.transpose() * T).values(0);

  const double E0 = rec.energy.total;
  const double orth0 = orthogonality_residual(z.orbitals);
  CorrectorOptions copts{opts.residual_tol, 20, opts.rank_tol_rel, rep.kernel.dim};
  for (int k = 0; k < rep.kernel.dim; ++k) {
    const Vec v = rep.kernel.vectors.col(k);
    for (int sign : {1, -1}) {
      const StepResult s = continue_step(z, sign * v, opts.delta, model, copts);
      ContinuationRecord c;
      c.direction = k;
      c.sign = sign;
      c.outcome = s.outcome;
      c.iterations = s.iterations;
      c.final_residual = s.final_residual;
      c.distance = s.distance;
      c.energy_change = energy(s.point.orbitals, model).total - E0;
      c.orthogonality_residual = orthogonality_residual(s.point.orbitals);
      c.phase_fraction = (T.transpose() * v).squaredNorm();
      rep.max_orthogonality_drift =
          std::max(rep.max_orthogonality_drift, c.orthogonality_residual - orth0);
      if (s.outcome == StepOutcome::Accepted) rep.non_isolated = true;
      rep.continuation.push_back(c);
    }
  }
  if (rep.kernel.ambiguous)
    rep.verdict = "inconclusive";
  else
    rep.verdict = rep.non_isolated ? "non_isolated" : "isolated";
  return rep;
}

// ---------------------------------------------------------------------------

Vec koopmans_check(const CMat& C, const Vec& eps, const OrthoModel& model) {
  const int N = static_cast<int>(C.cols());
  if (eps.size() != N) throw ContractError("koopmans_check: eps size mismatch");
  const double EN = energy(C, model).total;
  Vec out(N);
  for (int k = 0; k < N; ++k) {
    CMat rest(C.rows(), N - 1);
    for (int j = 0, c = 0; j < N; ++j)
      if (j != k) rest.col(c++) = C.col(j);
    const double Em1 = N > 1 ? energy(rest, model).total : 0.0;
    out(k) = EN - Em1 - eps(k);
  }
  return out;
}

BoundsReport bounds_check(const CriticalPointRecord& rec, const OrthoModel& model,
                          std::optional<double> threshold, double eps_gate) {
  BoundsReport b;
  b.h_min = model.h_min();
  b.max_eps = rec.eps.maxCoeff();
  b.min_eps = rec.eps.minCoeff();
  b.lower_ok = b.min_eps >= b.h_min - 1e-9;
  if (threshold && rec.energy.total <= *threshold - eps_gate) {
    b.upper_applies = true;
    b.upper_ok = b.max_eps <= -eps_gate + 1e-8;
  }
  return b;
}

double determinant_energy(const CMat& C, const OrthoModel& model) {
  const CMat D = C.adjoint() * C;
  const auto eig = linalg::eigh<cplx>(D);
  if (eig.values(0) <= 0.0) throw ContractError("determinant_energy: singular Gram matrix");
  const CMat ortho = C * eig.vectors * eig.values.cwiseSqrt().cwiseInverse().asDiagonal();
  return eig.values.prod() * energy(ortho, model).total;
}

RescalingResult rescaling_construction(const CMat& tilde, const OrthoModel& model) {
  for (int i = 0; i < tilde.cols(); ++i)
    if (std::abs(tilde.col(i).norm() - 1.0) > 1e-10)
      throw ContractError("rescaling_construction: input orbitals must have unit norm");
  const CMat D = tilde.adjoint() * tilde;
  const auto eig = linalg::eigh<cplx>(D);
  if (eig.values(0) < 1e-10) throw ContractError("rescaling_construction: Gram matrix is singular");

  RescalingResult r;
  r.gram_eigenvalues = eig.values;
  r.rotated = tilde * eig.vectors;
  r.orbitals = r.rotated * eig.values.cwiseSqrt().cwiseInverse().asDiagonal();
  r.energy_in = energy(tilde, model).total;
  r.energy_rotated = energy(r.rotated, model).total;
  r.energy_out = energy(r.orbitals, model).total;
  r.determinant_energy_in = eig.values.prod() * r.energy_out;
  r.fallback = r.energy_in >= 0.0;
  r.determinant_fallback = r.determinant_energy_in >= 0.0;
  if (!r.fallback) r.monotone = r.energy_out <= r.energy_in + 1e-10;
  if (!r.determinant_fallback) r.determinant_monotone = r.energy_out <= r.determinant_energy_in + 1e-10;
  return r;
}

// ---------------------------------------------------------------------------

HfVector random_direction(int nbf, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  HfVector v = HfVector::zero(nbf, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < nbf; ++i) v.orbitals(i, j) = cplx(g(rng), g(rng));
  for (int j = 0; j < n; ++j) v.scalars(j) = g(rng);
  v *= 1.0 / pairing_norm(v);
  return v;
}

JacobianCheck jacobian_check(const HfVector& z, const OrthoModel& model, int n_dirs,
                             std::uint64_t seed) {
  JacobianCheck c;
  const RealLayout L = layout_of(z);
  const Mat J = jacobian(z, model).J;
  c.symmetry_err = (J - J.transpose()).norm() / std::max(J.norm(), 1e-300);
  c.entry_err_coarse = (J - jacobian_fd(z, model, 1e-3)).cwiseAbs().maxCoeff();
  c.entry_err_fine = (J - jacobian_fd(z, model, 1e-4)).cwiseAbs().maxCoeff();
  for (int d = 0; d < n_dirs; ++d) {
    const HfVector v = random_direction(L.nbf, L.n, seed + static_cast<std::uint64_t>(d));
    const Vec Jv = J * realify(v);
    auto err = [&](double h) {
      const Vec fd = (realify(residual_F(z + h * v, model)) - realify(residual_F(z - h * v, model))) /
                     (2.0 * h);
      return (fd - Jv).norm();
    };
    c.dir_err_coarse = std::max(c.dir_err_coarse, err(1e-3));
    c.dir_err_fine = std::max(c.dir_err_fine, err(1e-4));
  }
  c.dir_ratio = c.dir_err_coarse > 0.0 ? c.dir_err_fine / c.dir_err_coarse : 0.0;
  return c;
}

GradientCheck gradient_check(const HfVector& z, const OrthoModel& model, int n_dirs,
                             std::uint64_t seed) {
  const HfVector F = residual_F(z, model);
  GradientCheck g;
  for (int d = 0; d < n_dirs; ++d) {
    const HfVector v = random_direction(static_cast<int>(z.orbitals.rows()), z.n_orbitals(),
                                        seed + static_cast<std::uint64_t>(d));
    const double exact = pairing(v, F);
    auto fd = [&](double h) {
      return (lagrangian_f(z + h * v, model) - lagrangian_f(z - h * v, model)) / (2.0 * h);
    };
    g.err_coarse = std::max(g.err_coarse, std::abs(fd(1e-3) - exact));
    g.err_fine = std::max(g.err_fine, std::abs(fd(1e-4) - exact));
  }
  g.ratio = g.err_coarse > 0.0 ? g.err_fine / g.err_coarse : 0.0;
  g.order = (g.err_coarse > 0.0 && g.err_fine > 0.0) ? std::log10(g.err_coarse / g.err_fine) : 0.0;
  return g;
}

}  // namespace hfs
