#include "hfs/integrals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "hfs/linalg.hpp"
#include "hfs/quadrature.hpp"

namespace hfs {

using std::numbers::pi;

void MoleculeSpec::validate() const {
  if (nuclei.empty()) throw ContractError("molecule: no nuclei");
  if (n_electrons < 1) throw ContractError("molecule: n_electrons must be >= 1");
  for (std::size_t j = 0; j < nuclei.size(); ++j) {
    if (!(nuclei[j].charge > 0.0) || !std::isfinite(nuclei[j].charge))
      throw ContractError("molecule: nucleus " + std::to_string(j) + " has non-positive charge");
    if (!nuclei[j].position.allFinite())
      throw ContractError("molecule: nucleus " + std::to_string(j) + " has non-finite position");
    for (std::size_t k = 0; k < j; ++k)
      if ((nuclei[j].position - nuclei[k].position).norm() == 0.0)
        throw ContractError("molecule: nuclei " + std::to_string(k) + " and " +
                            std::to_string(j) + " coincide");
  }
}

Shell normalize_shell(Shell shell) {
  if (shell.primitives.empty()) throw ContractError("shell: no primitives");
  double self = 0.0;
  for (const auto& p : shell.primitives) {
    if (!(p.exponent > 0.0)) throw ContractError("shell: exponent must be positive");
    for (const auto& q : shell.primitives)
      self += p.coefficient * q.coefficient *
              overlap_prim(p.exponent, shell.center, q.exponent, shell.center);
  }
  if (!(self > 0.0)) throw ContractError("shell: zero contraction");
  const double scale = 1.0 / std::sqrt(self);
  for (auto& p : shell.primitives) p.coefficient *= scale;
  return shell;
}

Shell make_normalized_shell(const Vec3& center, const std::vector<Primitive>& normalized_prims) {
  Shell s{center, {}};
  for (const auto& p : normalized_prims) {
    if (!(p.exponent > 0.0)) throw ContractError("shell: exponent must be positive");
    const double norm = std::pow(2.0 * p.exponent / pi, 0.75);
    s.primitives.push_back({p.exponent, p.coefficient * norm});
  }
  return normalize_shell(std::move(s));
}

// ---------------------------------------------------------------------------
// EriTensor

void EriTensor::set_canonical(int i, int j, int k, int l, double value) {
  const std::array<std::array<int, 4>, 8> images = {{{i, j, k, l},
                                                     {j, i, k, l},
                                                     {i, j, l, k},
                                                     {j, i, l, k},
                                                     {k, l, i, j},
                                                     {l, k, i, j},
                                                     {k, l, j, i},
                                                     {l, k, j, i}}};
  for (const auto& p : images) data_[index(p[0], p[1], p[2], p[3])] = value;
}

Mat EriTensor::coulomb_supermatrix() const {
  const int n = n_;
  Mat M(n * n, n * n);
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) M(i + n * j, k + n * l) = (*this)(i, j, k, l);
  return M;
}

Mat EriTensor::exchange_supermatrix() const {
  const int n = n_;
  Mat M(n * n, n * n);
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) M(i + n * j, k + n * l) = (*this)(i, l, k, j);
  return M;
}

EriTensor EriTensor::transformed(const Mat& X) const {
  const int n = n_;
  if (X.rows() != n || X.cols() != n) throw ContractError("EriTensor::transformed: shape");
  // (X (x) X)^T M (X (x) X) with the pair index i + n j.
  Mat XX(n * n, n * n);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) XX(i + n * j, a + n * b) = X(i, a) * X(j, b);
  const Mat M = XX.transpose() * coulomb_supermatrix() * XX;
  EriTensor out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l <= k; ++l) {
          const int ij = i * (i + 1) / 2 + j;
          const int kl = k * (k + 1) / 2 + l;
          if (kl > ij) continue;
          out.set_canonical(i, j, k, l, M(i + n * j, k + n * l));
        }
  return out;
}

// ---------------------------------------------------------------------------
// Boys function

namespace {

// erfc(x) for x >= 5 by the Laplace continued fraction, evaluated with the
// modified Lentz algorithm.
double erfc_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double C = x;
  double D = 0.0;
  for (int k = 1; k < 500; ++k) {
    const double a = 0.5 * k;
    D = x + a * D;
    if (std::abs(D) < tiny) D = tiny;
    C = x + a / C;
    if (std::abs(C) < tiny) C = tiny;
    D = 1.0 / D;
    const double delta = C * D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x * x) / (std::sqrt(pi) * f);
}

}  // namespace

double boys_f0(double t) {
  if (!(t >= 0.0)) throw DomainError("boys_f0: argument must be non-negative");
  if (t < 25.0) {
    // F0(t) = exp(-t) sum_k (2t)^k / (2k+1)!!, all terms positive.
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 400; ++k) {
      term *= 2.0 * t / (2.0 * k + 1.0);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::exp(-t) * sum;
  }
  const double x = std::sqrt(t);
  return 0.5 * std::sqrt(pi) / x * (1.0 - erfc_continued_fraction(x));
}

// ---------------------------------------------------------------------------
// Closed forms

double overlap_prim(double a, const Vec3& A, double b, const Vec3& B) {
  const double p = a + b;
  return std::pow(pi / p, 1.5) * std::exp(-a * b / p * (A - B).squaredNorm());
}

double kinetic_prim(double a, const Vec3& A, double b, const Vec3& B) {
  const double p = a + b;
  const double mu = a * b / p;
  const double r2 = (A - B).squaredNorm();
  return mu * (3.0 - 2.0 * mu * r2) * overlap_prim(a, A, b, B);
}

double nuclear_prim(double a, const Vec3& A, double b, const Vec3& B, const MoleculeSpec& mol) {
  const double p = a + b;
  const Vec3 P = (a * A + b * B) / p;
  const double pref = 2.0 * pi / p * std::exp(-a * b / p * (A - B).squaredNorm());
  double v = 0.0;
  for (const auto& nuc : mol.nuclei)
    v -= nuc.charge * pref * boys_f0(p * (P - nuc.position).squaredNorm());
  return v;
}

double eri_prim(double a, const Vec3& A, double b, const Vec3& B, double c, const Vec3& C,
                double d, const Vec3& D) {
  const double p = a + b;
  const double q = c + d;
  const Vec3 P = (a * A + b * B) / p;
  const Vec3 Q = (c * C + d * D) / q;
  const double kab = std::exp(-a * b / p * (A - B).squaredNorm());
  const double kcd = std::exp(-c * d / q * (C - D).squaredNorm());
  const double rho = p * q / (p + q);
  return 2.0 * std::pow(pi, 2.5) / (p * q * std::sqrt(p + q)) * kab * kcd *
         boys_f0(rho * (P - Q).squaredNorm());
}

// ---------------------------------------------------------------------------
// Table assembly

namespace {

double contract2(const Shell& s1, const Shell& s2,
                 double (*prim)(double, const Vec3&, double, const Vec3&)) {
  double v = 0.0;
  for (const auto& p : s1.primitives)
    for (const auto& q : s2.primitives)
      v += p.coefficient * q.coefficient * prim(p.exponent, s1.center, q.exponent, s2.center);
  return v;
}

double contract_nuclear(const Shell& s1, const Shell& s2, const MoleculeSpec& mol) {
  double v = 0.0;
  for (const auto& p : s1.primitives)
    for (const auto& q : s2.primitives)
      v += p.coefficient * q.coefficient *
           nuclear_prim(p.exponent, s1.center, q.exponent, s2.center, mol);
  return v;
}

double contract_eri(const Shell& s1, const Shell& s2, const Shell& s3, const Shell& s4) {
  double v = 0.0;
  for (const auto& p : s1.primitives)
    for (const auto& q : s2.primitives)
      for (const auto& r : s3.primitives)
        for (const auto& s : s4.primitives)
          v += p.coefficient * q.coefficient * r.coefficient * s.coefficient *
               eri_prim(p.exponent, s1.center, q.exponent, s2.center, r.exponent, s3.center,
                        s.exponent, s4.center);
  return v;
}

}  // namespace

IntegralTables build_tables(const MoleculeSpec& mol, const BasisSet& basis, int workers) {
  const int n = static_cast<int>(basis.size());
  if (n == 0) throw ContractError("build_tables: empty basis");
  for (const auto& sh : basis.shells) {
    double self = 0.0;
    for (const auto& p : sh.primitives) {
      if (!(p.exponent > 0.0)) throw ContractError("build_tables: exponent must be positive");
      for (const auto& q : sh.primitives)
        self += p.coefficient * q.coefficient *
                overlap_prim(p.exponent, sh.center, q.exponent, sh.center);
    }
    if (std::abs(self - 1.0) > 1e-12)
      throw ContractError("build_tables: basis function is not normalized");
  }

  IntegralTables t;
  t.overlap = Mat::Zero(n, n);
  t.kinetic = Mat::Zero(n, n);
  t.nuclear = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const auto& a = basis.shells[i];
      const auto& b = basis.shells[j];
      t.overlap(i, j) = t.overlap(j, i) = (i == j) ? 1.0 : contract2(a, b, overlap_prim);
      t.kinetic(i, j) = t.kinetic(j, i) = contract2(a, b, kinetic_prim);
      t.nuclear(i, j) = t.nuclear(j, i) = contract_nuclear(a, b, mol);
    }
  t.core = t.kinetic + t.nuclear;

  const auto eig = linalg::eigh<double>(t.overlap);
  t.overlap_min_eigenvalue = eig.values(0);
  if (t.overlap_min_eigenvalue < 1e-10) {
    const Vec v = eig.vectors.col(0).cwiseAbs();
    std::vector<int> offending;
    std::ostringstream msg;
    msg << "build_tables: basis is linearly dependent (min overlap eigenvalue "
        << t.overlap_min_eigenvalue << "); offending shells:";
    for (int i = 0; i < n; ++i)
      if (v(i) >= 0.1 * v.maxCoeff()) {
        offending.push_back(i);
        msg << ' ' << i;
      }
    throw LinearDependenceError(msg.str(), offending);
  }

  std::vector<std::array<int, 4>> quads;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      for (int k = 0; k <= i; ++k)
        for (int l = 0; l <= k; ++l) {
          const int ij = i * (i + 1) / 2 + j;
          const int kl = k * (k + 1) / 2 + l;
          if (kl <= ij) quads.push_back({i, j, k, l});
        }
  std::vector<double> values(quads.size());
  const int nw = std::max(1, workers > 0 ? workers
                                         : static_cast<int>(std::thread::hardware_concurrency()));
  auto work = [&](int w) {
    for (std::size_t q = w; q < quads.size(); q += nw) {
      const auto& [i, j, k, l] = quads[q];
      values[q] = contract_eri(basis.shells[i], basis.shells[j], basis.shells[k], basis.shells[l]);
    }
  };
  if (nw == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  t.eri = EriTensor(n);
  for (std::size_t q = 0; q < quads.size(); ++q) {
    const auto& [i, j, k, l] = quads[q];
    t.eri.set_canonical(i, j, k, l, values[q]);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Quadrature oracle

namespace oracle {
namespace {

constexpr double kWindow = 40.0;  // exp(-40) ~ 4e-18 cut for Gaussian tails
constexpr double kSpike = 7.0;    // exp(-49) cut for the exp(-t^2) factor

// exp(-a (x-A)^2 - b (x-B)^2) evaluated directly.
struct Gauss1D {
  double a, A, b, B;
  double operator()(double x) const {
    return std::exp(-a * (x - A) * (x - A) - b * (x - B) * (x - B));
  }
  double exponent() const { return a + b; }
  // Where the product is non-negligible; the product's peak lies between A and B.
  double center() const { return (a * A + b * B) / (a + b); }
  double half_width() const { return std::sqrt(kWindow / (a + b)); }
};

int segments_for(double length, double feature_exponent) {
  const double width = 2.0 / std::sqrt(feature_exponent);
  return std::clamp(static_cast<int>(std::ceil(length / width)), 1, 200);
}

double integrate_window(const std::function<double(double)>& f, const Gauss1D& g,
                        double feature_exponent, double tol) {
  const double lo = g.center() - g.half_width();
  const double hi = g.center() + g.half_width();
  return quad::integrate(f, lo, hi, tol, segments_for(hi - lo, feature_exponent)).value;
}

// int g(x) exp(-u^2 (x - c)^2) dx, changing variable to t = u (x - c) when the
// Coulomb factor is the narrower one.
double attraction_1d(const Gauss1D& g, double c, double u, double tol) {
  const double p = g.exponent();
  if (u * u <= p) {
    return integrate_window([&](double x) { return g(x) * std::exp(-u * u * (x - c) * (x - c)); },
                            g, p, tol);
  }
  const double lo = std::max(-kSpike, u * (g.center() - g.half_width() - c));
  const double hi = std::min(kSpike, u * (g.center() + g.half_width() - c));
  if (!(hi > lo)) return 0.0;
  const auto r = quad::integrate([&](double t) { return g(c + t / u) * std::exp(-t * t); }, lo,
                                 hi, tol * u, segments_for(hi - lo, 1.0));
  return r.value / u;
}

// Integrates (2/sqrt(pi)) int_0^inf G(u) du via u = tan(theta).
double coulomb_transform(const std::function<double(double)>& G, double tol) {
  auto integrand = [&](double theta) {
    const double u = std::tan(theta);
    const double sec = 1.0 / std::cos(theta);
    return G(u) * sec * sec;
  };
  const double half = 0.5 * pi;
  return 2.0 / std::sqrt(pi) * quad::integrate(integrand, 0.0, half, tol, 8).value;
}

}  // namespace

double overlap(double a, const Vec3& A, double b, const Vec3& B) {
  double v = 1.0;
  for (int d = 0; d < 3; ++d) {
    const Gauss1D g{a, A(d), b, B(d)};
    v *= integrate_window(g, g, g.exponent(), 1e-14);
  }
  return v;
}

double kinetic(double a, const Vec3& A, double b, const Vec3& B) {
  // 1/2 int grad(ga) . grad(gb), separable per Cartesian direction.
  std::array<double, 3> s{}, dd{};
  for (int d = 0; d < 3; ++d) {
    const Gauss1D g{a, A(d), b, B(d)};
    s[d] = integrate_window(g, g, g.exponent(), 1e-14);
    dd[d] = integrate_window(
        [&](double x) { return 4.0 * a * b * (x - g.A) * (x - g.B) * g(x); }, g, g.exponent(),
        1e-14);
  }
  return 0.5 * (dd[0] * s[1] * s[2] + s[0] * dd[1] * s[2] + s[0] * s[1] * dd[2]);
}

double nuclear(double a, const Vec3& A, double b, const Vec3& B, const MoleculeSpec& mol) {
  double v = 0.0;
  for (const auto& nuc : mol.nuclei) {
    const Vec3 C = nuc.position;
    auto G = [&](double u) {
      double prod = 1.0;
      for (int d = 0; d < 3; ++d) {
        prod *= attraction_1d({a, A(d), b, B(d)}, C(d), u, 1e-14);
        if (prod == 0.0) break;
      }
      return prod;
    };
    v -= nuc.charge * coulomb_transform(G, 1e-12);
  }
  return v;
}

double eri(double a, const Vec3& A, double b, const Vec3& B, double c, const Vec3& C, double d,
           const Vec3& D) {
  auto G = [&](double u) {
    double prod = 1.0;
    for (int k = 0; k < 3; ++k) {
      const Gauss1D gab{a, A(k), b, B(k)};
      const Gauss1D gcd{c, C(k), d, D(k)};
      const double q = gcd.exponent();
      // The inner integral, as a function of x, is a Gaussian of exponent
      // below min(q, u^2); the outer features are no narrower than that.
      const double feature = std::max(gab.exponent(), std::min(q, u * u));
      const double outer = integrate_window(
          [&](double x) { return gab(x) * attraction_1d(gcd, x, u, 1e-10); }, gab, feature,
          1e-9);
      prod *= outer;
      if (prod == 0.0) break;
    }
    return prod;
  };
  return coulomb_transform(G, 1e-8);
}

}  // namespace oracle
}  // namespace hfs
