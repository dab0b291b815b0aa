#include "macroq/measures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

#include "macroq/states.hpp"

namespace macroq::measures {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Eigen::Matrix2cd;
using Eigen::Matrix3d;
using Eigen::MatrixXcd;
using Eigen::Vector3d;
using Eigen::VectorXcd;
using Eigen::VectorXd;

const Matrix2cd& pauli(int a) {
  static const Matrix2cd sx = (Matrix2cd() << 0, 1, 1, 0).finished();
  static const Matrix2cd sy =
      (Matrix2cd() << 0, cx(0, -1), cx(0, 1), 0).finished();
  static const Matrix2cd sz = (Matrix2cd() << 1, 0, 0, -1).finished();
  static const Matrix2cd* p[3] = {&sx, &sy, &sz};
  return *p[a];
}

Matrix2cd bloch_op(const Vector3d& u) {
  return u[0] * pauli(0) + u[1] * pauli(1) + u[2] * pauli(2);
}

double entropy_of(const MatrixXcd& rho) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho,
                                              Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (double lam : es.eigenvalues())
    if (lam > 1e-14) s -= lam * std::log(lam);
  return s;
}

double trace_norm(const MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m.adjoint() * m,
                                              Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (double lam : es.eigenvalues()) s += std::sqrt(std::max(lam, 0.0));
  return s;
}

// Site i occupies bit n-1-i; adjacent transpositions generate the full
// permutation group, so swap-invariance under each of them is enough.
long swap_adjacent(long idx, int n, int site) {
  const int b1 = n - 1 - site, b2 = b1 - 1;
  const long x1 = (idx >> b1) & 1, x2 = (idx >> b2) & 1;
  return x1 == x2 ? idx : idx ^ ((1L << b1) | (1L << b2));
}

bool is_permutation_symmetric(const spin::SpinState& s) {
  const long dim = s.dim();
  if (s.pure()) {
    const double scale = s.amp.cwiseAbs().maxCoeff();
    for (int site = 0; site + 1 < s.n; ++site)
      for (long i = 0; i < dim; ++i)
        if (std::abs(s.amp(swap_adjacent(i, s.n, site)) - s.amp(i)) >
            1e-10 * scale)
          return false;
    return true;
  }
  const double scale = std::max(s.rho.cwiseAbs().maxCoeff(), 1e-300);
  for (int site = 0; site + 1 < s.n; ++site)
    for (long i = 0; i < dim; ++i)
      for (long j = 0; j < dim; ++j)
        if (std::abs(s.rho(swap_adjacent(i, s.n, site),
                           swap_adjacent(j, s.n, site)) -
                     s.rho(i, j)) > 1e-10 * scale)
          return false;
  return true;
}

std::vector<int> mask_sites(unsigned mask, int n) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (mask & (1u << i)) out.push_back(i);
  return out;
}

// ---- generic disconnectivity skeleton over an entropy-by-mask callback ----

DisconnectivityProfile disconnectivity_profile(
    int n, SubsetPolicy policy, bool symmetric,
    const std::function<double(unsigned)>& subset_entropy) {
  if (policy == SubsetPolicy::automatic)
    policy = symmetric ? SubsetPolicy::first_n : SubsetPolicy::maximize;

  std::map<unsigned, double> memo;
  auto ent = [&](unsigned mask) {
    auto it = memo.find(mask);
    if (it != memo.end()) return it->second;
    double v = subset_entropy(mask);
    memo.emplace(mask, v);
    return v;
  };

  DisconnectivityProfile out;
  out.delta.assign(n, 0.0);
  for (int k = 2; k <= n; ++k) {
    unsigned chosen = 0;
    if (policy == SubsetPolicy::first_n) {
      chosen = (1u << k) - 1;
    } else {
      double best = policy == SubsetPolicy::maximize
                        ? -std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::infinity();
      for (unsigned m = 0; m < (1u << n); ++m) {
        if (__builtin_popcount(m) != k) continue;
        const double v = ent(m);
        const bool better =
            policy == SubsetPolicy::maximize ? v > best : v < best;
        if (better) {
          best = v;
          chosen = m;
        }
      }
    }
    const double sn = ent(chosen);
    double den = std::numeric_limits<double>::infinity();
    for (unsigned x = (chosen - 1) & chosen; x; x = (x - 1) & chosen)
      den = std::min(den, ent(x) + ent(chosen ^ x));
    // Subadditivity keeps sn <= den; a vanishing denominator therefore
    // means uncorrelated pure marginals, which count as delta = 1.
    out.delta[k - 1] = den < 1e-12 ? 1.0 : sn / den;
  }

  double dmin = out.delta[0];
  for (double d : out.delta) dmin = std::min(dmin, d);
  for (int k = 0; k < n; ++k)
    if (out.delta[k] <= dmin + 1e-9) out.depth = k + 1;
  out.metadata["policy"] = static_cast<double>(policy);
  out.metadata["symmetric"] = symmetric ? 1.0 : 0.0;
  out.metadata["sites"] = n;
  return out;
}

// ---- sphere-constrained quadratic: max u'Qu + b'u over |u| = 1 ----

Vector3d sphere_quadratic_max(const Matrix3d& q, const Vector3d& b) {
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(q);
  const Vector3d qv = es.eigenvalues();
  const Matrix3d e = es.eigenvectors();
  if (b.norm() < 1e-12) return e.col(2);  // pure quadratic: top eigenvector
  const Vector3d beta = e.transpose() * b;

  auto norm_at = [&](double lam) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double d = lam - qv[k];
      s += 0.25 * beta[k] * beta[k] / (d * d);
    }
    return std::sqrt(s);
  };

  const double top = qv[2];
  if (std::abs(beta[2]) < 1e-13) {
    // Multiplier pinned at the top eigenvalue: fill the remaining norm
    // along the top eigendirection if the transverse part fits.
    Vector3d y = Vector3d::Zero();
    bool fits = true;
    double n2 = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double d = top - qv[k];
      if (d < 1e-13) {
        if (std::abs(beta[k]) > 1e-13) fits = false;
        y[k] = 0.0;
      } else {
        y[k] = 0.5 * beta[k] / d;
      }
      n2 += y[k] * y[k];
    }
    if (fits && n2 <= 1.0) {
      y[2] = std::sqrt(1.0 - n2);
      return e * y;
    }
  }
  double lo = top + 1e-14, hi = top + std::max(1.0, b.norm());
  for (int it = 0; it < 200 && norm_at(hi) > 1.0; ++it) hi *= 2.0;
  for (int it = 0; it < 200 && norm_at(lo) < 1.0; ++it)
    lo = top + (lo - top) * 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (norm_at(mid) > 1.0 ? lo : hi) = mid;
  }
  const double lam = 0.5 * (lo + hi);
  Vector3d y;
  for (int k = 0; k < 3; ++k) y[k] = 0.5 * beta[k] / (lam - qv[k]);
  Vector3d u = e * y;
  const double nn = u.norm();
  return nn > 1e-14 ? Vector3d(u / nn) : Vector3d(e.col(2));
}

// ---- spectral decomposition of a state, kept as weighted kets ----

struct StateSpectrum {
  std::vector<double> pi;        // weights above 1e-12
  std::vector<VectorXcd> phi;
};

StateSpectrum spectral(const spin::SpinState& s) {
  StateSpectrum out;
  if (s.pure()) {
    out.pi.push_back(1.0);
    out.phi.push_back(s.amp);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(s.rho);
  for (long k = 0; k < es.eigenvalues().size(); ++k)
    if (es.eigenvalues()[k] > 1e-12) {
      out.pi.push_back(es.eigenvalues()[k]);
      out.phi.push_back(es.eigenvectors().col(k));
    }
  return out;
}

VectorXcd apply_direction(const VectorXcd& v, int n, int site,
                          const Vector3d& u) {
  return spin::apply_local(v, n, site, bloch_op(u));
}

VectorXcd apply_additive(const VectorXcd& v, int n,
                         const std::vector<Vector3d>& dirs) {
  VectorXcd out = VectorXcd::Zero(v.size());
  for (int site = 0; site < n; ++site)
    out += apply_direction(v, n, site, dirs[site]);
  return out;
}

std::vector<Vector3d> random_directions(int n, std::mt19937& gen) {
  std::normal_distribution<double> g;
  std::vector<Vector3d> dirs(n);
  for (auto& u : dirs) {
    do {
      u = Vector3d(g(gen), g(gen), g(gen));
    } while (u.norm() < 1e-8);
    u.normalize();
  }
  return dirs;
}

// Collective 3x3 covariance: Var(sum_i n.sigma_i) = n' G n.
Matrix3d collective_covariance(const StateSpectrum& sp, int n) {
  const long K = static_cast<long>(sp.pi.size());
  Matrix3d g2 = Matrix3d::Zero();
  Vector3d m = Vector3d::Zero();
  for (long k = 0; k < K; ++k) {
    VectorXcd w[3];
    for (int a = 0; a < 3; ++a) {
      w[a] = VectorXcd::Zero(sp.phi[k].size());
      for (int site = 0; site < n; ++site)
        w[a] += spin::apply_local(sp.phi[k], n, site, pauli(a));
    }
    for (int a = 0; a < 3; ++a) {
      m[a] += sp.pi[k] * sp.phi[k].dot(w[a]).real();
      for (int b = a; b < 3; ++b)
        g2(a, b) += sp.pi[k] * w[a].dot(w[b]).real();
    }
  }
  // Re<A_a phi, A_b phi> is already the symmetrized second moment.
  Matrix3d g;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      g(a, b) = g2(std::min(a, b), std::max(a, b)) - m[a] * m[b];
  return g;
}

struct AscentResult {
  double value = 0.0;
  bool converged = false;
};

// Coordinate ascent of Var(sum_i u_i.sigma_i) over per-site unit Bloch
// vectors.  Fixing all sites but one leaves a sphere-constrained quadratic
// solved exactly, so every step is monotone.
AscentResult variance_ascent(const StateSpectrum& sp, int n,
                             std::vector<Vector3d> dirs, int max_sweeps) {
  const long K = static_cast<long>(sp.pi.size());
  std::vector<VectorXcd> w(K);
  for (long k = 0; k < K; ++k) w[k] = apply_additive(sp.phi[k], n, dirs);

  auto objective = [&]() {
    double a2 = 0.0, a1 = 0.0;
    for (long k = 0; k < K; ++k) {
      a2 += sp.pi[k] * w[k].squaredNorm();
      a1 += sp.pi[k] * sp.phi[k].dot(w[k]).real();
    }
    return a2 - a1 * a1;
  };

  double prev = objective();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int site = 0; site < n; ++site) {
      Vector3d m = Vector3d::Zero(), c = Vector3d::Zero();
      double r = 0.0;
      std::vector<std::array<VectorXcd, 3>> g(K);
      std::vector<VectorXcd> rphi(K);
      for (long k = 0; k < K; ++k) {
        for (int a = 0; a < 3; ++a)
          g[k][a] = spin::apply_local(sp.phi[k], n, site, pauli(a));
        VectorXcd us = dirs[site][0] * g[k][0] + dirs[site][1] * g[k][1] +
                       dirs[site][2] * g[k][2];
        rphi[k] = w[k] - us;
        r += sp.pi[k] * sp.phi[k].dot(rphi[k]).real();
        for (int a = 0; a < 3; ++a) {
          m[a] += sp.pi[k] * sp.phi[k].dot(g[k][a]).real();
          c[a] += sp.pi[k] * g[k][a].dot(rphi[k]).real();
        }
      }
      const Matrix3d q = -m * m.transpose();
      const Vector3d b = 2.0 * (c - r * m);
      dirs[site] = sphere_quadratic_max(q, b);
      for (long k = 0; k < K; ++k)
        w[k] = rphi[k] + dirs[site][0] * g[k][0] + dirs[site][1] * g[k][1] +
               dirs[site][2] * g[k][2];
    }
    const double cur = objective();
    if (std::abs(cur - prev) < 1e-9) return {cur, true};
    prev = cur;
  }
  return {prev, false};
}

// ---- Fisher information pieces ----

double qfi_from_dense(const MatrixXcd& rho, const MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho);
  const VectorXd piv = es.eigenvalues().cwiseMax(0.0);
  const MatrixXcd at = es.eigenvectors().adjoint() * a * es.eigenvectors();
  const long d = piv.size();
  double f = 0.0;
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) {
      const double den = piv[i] + piv[j];
      if (den < 1e-12) continue;
      const double num = piv[i] - piv[j];
      f += 2.0 * num * num / den * std::norm(at(i, j));
    }
  return f;
}

// F over the support decomposition: pair weights 2 w_ij - 4 pi_i on the
// support block plus 4 sum_i pi_i |A phi_i|^2 picking up the null space.
double fisher_objective(const StateSpectrum& sp,
                        const std::vector<VectorXcd>& w) {
  const long K = static_cast<long>(sp.pi.size());
  double f = 0.0;
  for (long i = 0; i < K; ++i) {
    f += 4.0 * sp.pi[i] * w[i].squaredNorm();
    for (long j = 0; j < K; ++j) {
      const double den = sp.pi[i] + sp.pi[j];
      const double num = sp.pi[i] - sp.pi[j];
      const double coef = 2.0 * num * num / den - 4.0 * sp.pi[i];
      f += coef * std::norm(sp.phi[i].dot(w[j]));
    }
  }
  return f;
}

AscentResult fisher_ascent(const StateSpectrum& sp, int n,
                           std::vector<Vector3d> dirs, int max_sweeps) {
  const long K = static_cast<long>(sp.pi.size());
  std::vector<VectorXcd> w(K);
  for (long k = 0; k < K; ++k) w[k] = apply_additive(sp.phi[k], n, dirs);

  double prev = fisher_objective(sp, w);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int site = 0; site < n; ++site) {
      std::vector<std::array<VectorXcd, 3>> g(K);
      std::vector<VectorXcd> rphi(K);
      for (long k = 0; k < K; ++k) {
        for (int a = 0; a < 3; ++a)
          g[k][a] = spin::apply_local(sp.phi[k], n, site, pauli(a));
        rphi[k] = w[k] - (dirs[site][0] * g[k][0] + dirs[site][1] * g[k][1] +
                          dirs[site][2] * g[k][2]);
      }
      Matrix3d q = Matrix3d::Zero();
      Vector3d b = Vector3d::Zero();
      for (long i = 0; i < K; ++i) {
        // null-space part: 4 pi_i |A phi_i|^2, quadratic term constant
        for (int a = 0; a < 3; ++a)
          b[a] += 8.0 * sp.pi[i] * g[i][a].dot(rphi[i]).real();
        for (long j = 0; j < K; ++j) {
          const double den = sp.pi[i] + sp.pi[j];
          const double num = sp.pi[i] - sp.pi[j];
          const double coef = 2.0 * num * num / den - 4.0 * sp.pi[i];
          const cx rt = sp.phi[i].dot(rphi[j]);
          cx vt[3];
          for (int a = 0; a < 3; ++a) vt[a] = sp.phi[i].dot(g[j][a]);
          for (int a = 0; a < 3; ++a) {
            b[a] += coef * 2.0 * (std::conj(rt) * vt[a]).real();
            for (int bb = 0; bb < 3; ++bb)
              q(a, bb) += coef * (vt[a] * std::conj(vt[bb])).real();
          }
        }
      }
      dirs[site] = sphere_quadratic_max(0.5 * (q + q.transpose()), b);
      for (long k = 0; k < K; ++k)
        w[k] = rphi[k] + dirs[site][0] * g[k][0] + dirs[site][1] * g[k][1] +
               dirs[site][2] * g[k][2];
    }
    const double cur = fisher_objective(sp, w);
    if (std::abs(cur - prev) < 1e-9 * std::max(1.0, std::abs(cur)))
      return {cur, true};
    prev = cur;
  }
  return {prev, false};
}

Matrix3d collective_fisher_form(const StateSpectrum& sp, int n) {
  const long K = static_cast<long>(sp.pi.size());
  std::vector<std::array<VectorXcd, 3>> w(K);
  for (long k = 0; k < K; ++k)
    for (int a = 0; a < 3; ++a) {
      w[k][a] = VectorXcd::Zero(sp.phi[k].size());
      for (int site = 0; site < n; ++site)
        w[k][a] += spin::apply_local(sp.phi[k], n, site, pauli(a));
    }
  Matrix3d g = Matrix3d::Zero();
  for (long i = 0; i < K; ++i) {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        g(a, b) += 4.0 * sp.pi[i] * 0.5 *
                   (w[i][a].dot(w[i][b]) + w[i][b].dot(w[i][a])).real();
    for (long j = 0; j < K; ++j) {
      const double den = sp.pi[i] + sp.pi[j];
      const double num = sp.pi[i] - sp.pi[j];
      const double coef = 2.0 * num * num / den - 4.0 * sp.pi[i];
      cx vt[3];
      for (int a = 0; a < 3; ++a) vt[a] = sp.phi[i].dot(w[j][a]);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          g(a, b) += coef * 0.5 *
                     (vt[a] * std::conj(vt[b]) + vt[b] * std::conj(vt[a]))
                         .real();
    }
  }
  return g;
}

// Shared restart loop: one start from the collective top direction, the
// remaining seven random, per the 8-restart policy.
template <typename Engine>
double best_over_restarts(const StateSpectrum& sp, int n, unsigned seed,
                          const Matrix3d& collective_form, Engine&& engine) {
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(collective_form);
  Vector3d top = es.eigenvectors().col(2);
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (int restart = 0; restart < 8; ++restart) {
    std::vector<Vector3d> dirs;
    if (restart == 0) {
      dirs.assign(n, top);
    } else {
      std::mt19937 gen(seed + 1000003u * restart);
      dirs = random_directions(n, gen);
    }
    const AscentResult r = engine(sp, n, std::move(dirs), 300);
    if (r.converged) {
      any = true;
      best = std::max(best, r.value);
    }
  }
  if (!any)
    throw std::runtime_error(
        "observable maximization failed to converge in any restart");
  return best;
}

// ---- piecewise-linear moments of a sampled density ----

struct Moments {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
};

// Integrates the linear interpolant of (xs, d) times 1, x, x^2 over
// [lo, hi]; exact for the interpolant, so region splits are consistent.
Moments interval_moments(const VectorXd& xs, const VectorXd& d, double lo,
                         double hi) {
  Moments out;
  const long n = xs.size();
  lo = std::max(lo, xs[0]);
  hi = std::min(hi, xs[n - 1]);
  if (lo >= hi) return out;
  auto cell_value = [&](long k, double x) {
    const double t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    return d[k] * (1.0 - t) + d[k + 1] * t;
  };
  for (long k = 0; k + 1 < n; ++k) {
    const double a = std::max(lo, xs[k]), b = std::min(hi, xs[k + 1]);
    if (a >= b) continue;
    const double pa = cell_value(k, a), pb = cell_value(k, b);
    const double h = b - a;
    out.m0 += h * (pa + pb) / 2.0;
    out.m1 += h * (a * (pa + pb) / 2.0 + h * (pa + 2.0 * pb) / 6.0);
    out.m2 += h * (a * a * (pa + pb) / 2.0 + a * h * (pa + 2.0 * pb) / 3.0 +
                   h * h * (pa + 3.0 * pb) / 12.0);
  }
  return out;
}

}  // namespace

// ---- disconnectivity ----

DisconnectivityProfile disconnectivity(const spin::SpinState& s,
                                       SubsetPolicy policy) {
  spin::validate(s);
  if (s.n < 1 || s.n > 10)
    throw std::invalid_argument("disconnectivity handles 1..10 sites");
  auto ent = [&](unsigned mask) {
    return entropy_of(
        spin::to_density(spin::reduced_state(s, mask_sites(mask, s.n))));
  };
  return disconnectivity_profile(s.n, policy, is_permutation_symmetric(s),
                                 ent);
}

DisconnectivityProfile disconnectivity(const fock::DensityOperator& s,
                                       SubsetPolicy policy) {
  fock::validate(s);
  const int m = static_cast<int>(s.dims.size());
  if (m < 1 || m > 10)
    throw std::invalid_argument("disconnectivity handles 1..10 modes");
  if (s.rho.rows() > 4096)
    throw std::invalid_argument("total dimension above 4096");

  bool symmetric = true;
  for (int i = 0; i + 1 < m && symmetric; ++i)
    if (s.dims[i] != s.dims[i + 1]) symmetric = false;
  if (symmetric && m > 1) {
    const auto strides = fock::mode_strides(s.dims);
    const double scale = std::max(s.rho.cwiseAbs().maxCoeff(), 1e-300);
    const long dim = s.rho.rows();
    auto swapped = [&](long idx, int i) {
      const long di = (idx / strides[i]) % s.dims[i];
      const long dj = (idx / strides[i + 1]) % s.dims[i + 1];
      return idx + (dj - di) * strides[i] + (di - dj) * strides[i + 1];
    };
    for (int i = 0; i + 1 < m && symmetric; ++i)
      for (long r = 0; r < dim && symmetric; ++r)
        for (long c = 0; c < dim; ++c)
          if (std::abs(s.rho(swapped(r, i), swapped(c, i)) - s.rho(r, c)) >
              1e-10 * scale) {
            symmetric = false;
            break;
          }
  }

  auto ent = [&](unsigned mask) {
    return fock::von_neumann_entropy(
        fock::partial_trace(s, mask_sites(mask, m)));
  };
  return disconnectivity_profile(m, policy, symmetric, ent);
}

// ---- decoherence-scaling effective size ----

MeasureReport dur_effective_size(int n, double epsilon, double gamma,
                                 DurMode mode) {
  if (n < 1) throw std::invalid_argument("need at least one site");
  if (!(epsilon > 0.0) || epsilon > kPi / 2.0 + 1e-12)
    throw std::invalid_argument("epsilon outside (0, pi/2]");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");

  MeasureReport out;
  if (mode == DurMode::analytic) {
    const double s = std::sin(epsilon);
    out.value = epsilon <= 0.3 ? n * epsilon * epsilon : n * s * s;
    out.method = "analytic";
    out.metadata["small_angle"] = epsilon <= 0.3 ? 1.0 : 0.0;
    return out;
  }

  if (n > 10) throw std::invalid_argument("simulated mode handles up to 10 sites");
  const long dim = 1L << n;
  VectorXcd bra(dim);
  const double c = std::cos(epsilon), sn = std::sin(epsilon);
  for (long i = 0; i < dim; ++i) {
    const int ones = __builtin_popcountll(i);
    bra(i) = std::pow(c, n - ones) * std::pow(sn, ones);
  }
  MatrixXcd dyad = MatrixXcd::Zero(dim, dim);
  dyad.row(0) = bra.adjoint();  // |0...0><eps...eps|

  const int pts = 20;
  const double window = 0.02 / gamma;
  VectorXd ts(pts), ys(pts);
  for (int k = 0; k < pts; ++k) {
    const double t = window * k / (pts - 1);
    const double p0 = 0.5 * (1.0 + std::exp(-gamma * t));
    ts[k] = t;
    ys[k] = std::log(trace_norm(spin::dephase_block(dyad, n, p0)));
  }
  const double tbar = ts.mean(), ybar = ys.mean();
  double sxx = 0.0, sxy = 0.0;
  for (int k = 0; k < pts; ++k) {
    sxx += (ts[k] - tbar) * (ts[k] - tbar);
    sxy += (ts[k] - tbar) * (ys[k] - ybar);
  }
  const double slope = sxy / sxx;
  double ss = 0.0;
  for (int k = 0; k < pts; ++k) {
    const double r = ys[k] - ybar - slope * (ts[k] - tbar);
    ss += r * r;
  }
  const double rms = std::sqrt(ss / pts);
  if (rms > 1e-3)
    throw std::runtime_error("dephasing decay is not exponential in the fit window");

  out.value = -slope / gamma;
  out.method = "dephasing-fit";
  out.error_estimate = std::sqrt(ss / std::max(1, pts - 2) / sxx) / gamma;
  out.metadata["fit_points"] = pts;
  out.metadata["window"] = window;
  out.metadata["residual_rms"] = rms;
  return out;
}

// ---- overlap-decay size ----

MeasureReport bjork_mana(const VectorXd& values, const VectorXd& weights) {
  if (values.size() != weights.size() || values.size() < 2)
    throw std::invalid_argument("need matching value/weight arrays");
  if (weights.minCoeff() < -1e-12)
    throw std::invalid_argument("negative spectral weight");
  const double total = weights.sum();
  if (total < 1e-300) throw std::invalid_argument("empty spectral weight");
  const VectorXd w = weights / total;

  MeasureReport out;
  out.method = "overlap-decay";
  const double amin = values.minCoeff(), amax = values.maxCoeff();
  const double span = amax - amin;
  if (span < 1e-12) {
    out.metadata["no_superposition"] = 1.0;
    return out;
  }

  // Spectral width of the right branch: weighted std of the eigenvalues at
  // or above the mean.  The split tolerates eigensolver noise, otherwise a
  // degenerate level sitting exactly on the mean falls on a random side.
  const double mu = w.dot(values);
  const double half_tol = 1e-9 * std::max(1.0, span);
  double wr = 0.0, mr = 0.0;
  for (long i = 0; i < values.size(); ++i)
    if (values[i] >= mu - half_tol) {
      wr += w[i];
      mr += w[i] * values[i];
    }
  mr /= wr;
  double vr = 0.0;
  for (long i = 0; i < values.size(); ++i)
    if (values[i] >= mu - half_tol)
      vr += w[i] * (values[i] - mr) * (values[i] - mr);
  const double da = std::sqrt(vr / wr);
  if (da < 1e-12 * std::max(1.0, span))
    throw std::invalid_argument(
        "branch spectral width vanishes; rotation-scale ratio undefined");

  const double theta_sing = kPi / da;
  out.metadata["delta_a"] = da;
  out.metadata["theta_sing"] = theta_sing;

  auto f = [&](double th) {
    cx acc = 0.0;
    for (long i = 0; i < values.size(); ++i)
      acc += w[i] * std::polar(1.0, th * values[i]);
    return std::abs(acc);
  };

  // Zero = local minimum below 1e-4 followed by a revival above 1e-2;
  // a one-branch overlap decays through the threshold without coming back.
  const double h = std::min(theta_sing / 2000.0, kPi / (64.0 * span));
  const long steps = static_cast<long>(std::ceil(theta_sing / h));
  double fprev = 1.0, fcur = f(h);
  double theta_half = 0.0;
  double theta_sup = 0.0;
  for (long k = 1; k < steps; ++k) {
    const double th_next = (k + 1) * h;
    const double fnext = f(th_next);
    if (theta_half == 0.0 && fcur <= 0.5 && fprev > 0.5) {
      const double t = (fprev - 0.5) / (fprev - fcur);
      theta_half = (k - 1 + t) * h;
    }
    if (fcur < 0.3 && fcur <= fprev && fcur <= fnext) {
      // A true zero rarely lands on a scan node, so every dip is refined
      // first and the depth test runs on the refined minimum.
      double a = (k - 1) * h, b = th_next;
      const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      double f1 = f(x1), f2 = f(x2);
      for (int it = 0; it < 120 && b - a > 1e-12; ++it) {
        if (f1 < f2) {
          b = x2; x2 = x1; f2 = f1;
          x1 = b - gr * (b - a); f1 = f(x1);
        } else {
          a = x1; x1 = x2; f1 = f2;
          x2 = a + gr * (b - a); f2 = f(x2);
        }
      }
      const double th_min = 0.5 * (a + b), fmin = f(th_min);
      if (fmin < 1e-4) {
        double revival = 0.0;
        for (double th = th_next; th <= theta_sing; th += h)
          revival = std::max(revival, f(th));
        if (revival > 1e-2) {
          theta_sup = th_min;
          out.metadata["revival"] = revival;
        }
        break;  // first deep dip decides either way
      }
      // Shallow beat minimum: not a zero, keep scanning.
    }
    fprev = fcur;
    fcur = fnext;
  }

  if (theta_half > 0.0) out.metadata["theta_half"] = theta_half;
  if (theta_sup == 0.0) {
    out.metadata["no_superposition"] = 1.0;
    return out;
  }
  out.metadata["theta_sup"] = theta_sup;
  out.value = theta_sing / theta_sup;
  out.error_estimate = out.value * 1e-10 / theta_sup;
  return out;
}

MeasureReport bjork_mana(const fock::FockPureState& s,
                         const Eigen::MatrixXcd& obs) {
  fock::validate(s);
  if (s.modes() != 1)
    throw std::invalid_argument("spectral route expects a single mode");
  if (obs.rows() != s.dim() || obs.cols() != s.dim())
    throw std::invalid_argument("observable dimension mismatch");
  if ((obs - obs.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("observable not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(obs);
  const VectorXcd c = es.eigenvectors().adjoint() * s.amp;
  return bjork_mana(es.eigenvalues(), c.cwiseAbs2());
}

MeasureReport bjork_mana(const spin::SpinState& s,
                         const spin::AdditiveObservable& obs) {
  spin::validate(s);
  if (!s.pure())
    throw std::invalid_argument("overlap-decay size is defined for pure states");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(
      spin::additive_matrix(obs, s.n));
  const VectorXcd c = es.eigenvectors().adjoint() * s.amp;
  return bjork_mana(es.eigenvalues(), c.cwiseAbs2());
}

// ---- index p ----

double max_additive_variance(const spin::SpinState& s, unsigned seed) {
  spin::validate(s);
  if (s.n > 10) throw std::invalid_argument("variance search handles up to 10 sites");
  const StateSpectrum sp = spectral(s);
  const Matrix3d g = collective_covariance(sp, s.n);
  if (is_permutation_symmetric(s)) {
    Eigen::SelfAdjointEigenSolver<Matrix3d> es(g, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[2];
  }
  return best_over_restarts(sp, s.n, seed, g,
                            [](const StateSpectrum& q, int n,
                               std::vector<Vector3d> dirs, int sweeps) {
                              return variance_ascent(q, n, std::move(dirs),
                                                     sweeps);
                            });
}

MeasureReport index_p_estimate(
    const std::function<spin::SpinState(int)>& family,
    const std::vector<int>& sizes, unsigned seed) {
  std::vector<int> ns = sizes;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.size() < 3)
    throw std::invalid_argument("exponent fit needs at least 3 distinct sizes");

  MeasureReport out;
  out.method = "variance-scaling";
  std::vector<double> lx, ly;
  for (int n : ns) {
    const double v = max_additive_variance(family(n), seed);
    if (v < 1e-12)
      throw std::runtime_error("family variance degenerate; no exponent");
    lx.push_back(std::log(n));
    ly.push_back(std::log(v));
    out.metadata["var_" + std::to_string(n)] = v;
  }
  const long m = static_cast<long>(lx.size());
  double xb = 0.0, yb = 0.0;
  for (long i = 0; i < m; ++i) {
    xb += lx[i];
    yb += ly[i];
  }
  xb /= m;
  yb /= m;
  double sxx = 0.0, sxy = 0.0;
  for (long i = 0; i < m; ++i) {
    sxx += (lx[i] - xb) * (lx[i] - xb);
    sxy += (lx[i] - xb) * (ly[i] - yb);
  }
  out.value = sxy / sxx;
  double ss = 0.0;
  for (long i = 0; i < m; ++i) {
    const double r = ly[i] - yb - out.value * (lx[i] - xb);
    ss += r * r;
  }
  out.error_estimate = m > 2 ? std::sqrt(ss / (m - 2) / sxx) : 0.0;
  out.metadata["sizes"] = static_cast<double>(m);
  return out;
}

// ---- index q ----

MeasureReport index_q_correlator(const spin::SpinState& s,
                                 const spin::AdditiveObservable& a,
                                 const spin::ProjectorSpec& eta) {
  spin::validate(s);
  spin::validate_observable(a);
  spin::validate_projector(eta);
  if (static_cast<int>(a.locals.size()) != s.n)
    throw std::invalid_argument("observable does not match the register");
  if (eta.matrix.rows() != s.dim())
    throw std::invalid_argument("projector does not match the register");

  const MatrixXcd am = spin::additive_matrix(a, s.n);
  const MatrixXcd rho = spin::to_density(s);
  const MatrixXcd& pm = eta.matrix;
  const double dense =
      (rho * (am * am * pm - 2.0 * am * pm * am + pm * am * am))
          .trace()
          .real();

  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(am);
  const MatrixXcd pt = es.eigenvectors().adjoint() * pm * es.eigenvectors();
  const MatrixXcd rt = es.eigenvectors().adjoint() * rho * es.eigenvectors();
  const VectorXd& av = es.eigenvalues();
  double spectral_route = 0.0;
  const long d = av.size();
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) {
      const double gap = av[i] - av[j];
      spectral_route += gap * gap * (pt(i, j) * rt(j, i)).real();
    }

  const double gap = std::abs(dense - spectral_route);
  if (gap > 1e-8 * std::max({1.0, std::abs(dense), std::abs(spectral_route)}))
    throw std::runtime_error("correlator routes disagree beyond 1e-8");

  MeasureReport out;
  out.value = dense;
  out.method = "double-commutator";
  out.error_estimate = gap;
  out.metadata["route_gap"] = gap;
  return out;
}

// ---- quadrature-partition inequality ----

InequalityVerdict cavalcanti_reid(const phase::QuadratureDistribution& px,
                                  const phase::QuadratureDistribution& pp,
                                  double s, bool include_bare_s_half,
                                  double center) {
  if (!(s > 0.0)) throw std::invalid_argument("scale S must be positive");
  if (std::abs(px.angle) > 1e-9)
    throw std::invalid_argument("px must be the angle-0 marginal");
  if (std::abs(pp.angle - kPi / 2.0) > 1e-9)
    throw std::invalid_argument("pp must be the angle-pi/2 marginal");
  const double lo = px.xs[0], hi = px.xs[px.xs.size() - 1];
  if (center - s / 2.0 < lo || center + s / 2.0 > hi)
    throw std::invalid_argument("partition outside the sampled range");

  const Moments right =
      interval_moments(px.xs, px.density, center + s / 2.0, hi);
  const Moments left =
      interval_moments(px.xs, px.density, lo, center - s / 2.0);
  const Moments mid = interval_moments(px.xs, px.density, center - s / 2.0,
                                       center + s / 2.0);

  auto stats = [&](const Moments& m) {
    if (m.m0 < 1e-12) return std::pair<double, double>{0.0, 0.0};
    const double mean = m.m1 / m.m0;
    return std::pair<double, double>{mean - center,
                                     std::max(m.m2 / m.m0 - mean * mean, 0.0)};
  };
  const auto [mu_p, var_p_x] = stats(right);
  const auto [mu_m, var_m_x] = stats(left);

  const Moments full = interval_moments(pp.xs, pp.density, pp.xs[0],
                                        pp.xs[pp.xs.size() - 1]);
  const double pmean = full.m1 / full.m0;
  const double var_p = full.m2 / full.m0 - pmean * pmean;

  InequalityVerdict v;
  v.s = s;
  v.p0 = mid.m0;
  v.var_ave_x = right.m0 * var_p_x + left.m0 * var_m_x;
  v.delta_term = (mu_p + s / 2.0) * (mu_p + s / 2.0) +
                 (mu_m - s / 2.0) * (mu_m - s / 2.0) + var_p_x + var_m_x +
                 (include_bare_s_half ? s / 2.0 : 0.0);
  v.var_p = var_p;
  v.lhs = (v.var_ave_x + v.p0 * v.delta_term) * v.var_p;
  v.violated = v.lhs < v.bound - 1e-6;
  return v;
}

MeasureReport scan_S_max(const fock::DensityOperator& state,
                         std::vector<double> s_grid,
                         bool include_bare_s_half) {
  if (s_grid.empty())
    for (double s = 1.0; s <= 8.0 + 1e-12; s += 0.25) s_grid.push_back(s);
  const auto px = phase::quadrature_distribution(state, 0.0);
  const auto pp = phase::quadrature_distribution(state, kPi / 2.0);

  MeasureReport out;
  out.method = "partition-inequality-scan";
  double smax = 0.0;
  int violations = 0;
  for (double s : s_grid) {
    const InequalityVerdict v =
        cavalcanti_reid(px, pp, s, include_bare_s_half);
    if (v.violated) {
      ++violations;
      smax = std::max(smax, s);
    }
  }
  out.value = smax;
  out.metadata["violations"] = violations;
  out.metadata["grid_size"] = static_cast<double>(s_grid.size());
  out.metadata["bare_s_half"] = include_bare_s_half ? 1.0 : 0.0;
  return out;
}

// ---- measurement-count size ----

MeasureReport korsbakken_size(const spin::SpinState& branch_a,
                              const spin::SpinState& branch_b, double delta) {
  spin::validate(branch_a);
  spin::validate(branch_b);
  if (branch_a.n != branch_b.n)
    throw std::invalid_argument("branches must share the register size");
  if (!(delta > 0.0) || !(delta < 0.5))
    throw std::invalid_argument("delta outside (0, 1/2)");
  const int n = branch_a.n;
  if (n > 10) throw std::invalid_argument("subset search handles up to 10 sites");

  const bool symmetric = is_permutation_symmetric(branch_a) &&
                         is_permutation_symmetric(branch_b);
  // Exhaustive subset search costs 2^N trace norms; past 8 sites fall back
  // to the leading block, which is also the only option that keeps the
  // measurement count deterministic.
  const bool exhaustive = !symmetric && n <= 8;
  auto p_of_mask = [&](unsigned mask) {
    const auto sites = mask_sites(mask, n);
    const MatrixXcd d =
        spin::to_density(spin::reduced_state(branch_a, sites)) -
        spin::to_density(spin::reduced_state(branch_b, sites));
    return 0.5 + 0.25 * trace_norm(d);
  };

  MeasureReport out;
  out.method = "branch-distinguishability";
  out.metadata["symmetric"] = symmetric ? 1.0 : 0.0;
  out.metadata["exhaustive"] = exhaustive ? 1.0 : 0.0;
  for (int k = 1; k <= n; ++k) {
    double p = 0.0;
    if (exhaustive) {
      for (unsigned m = 0; m < (1u << n); ++m)
        if (__builtin_popcount(m) == k) p = std::max(p, p_of_mask(m));
    } else {
      p = p_of_mask((1u << k) - 1);
    }
    if (p >= 1.0 - delta - 1e-12) {
      out.value = static_cast<double>(n) / k;
      out.metadata["n_min"] = k;
      out.metadata["p_at_n_min"] = p;
      return out;
    }
  }
  out.value = 0.0;
  out.metadata["undefined"] = 1.0;
  return out;
}

// ---- branch-distance size ----

MeasureReport marquardt_size(int n, double theta) {
  const states::BranchPair pair = states::marquardt_pair(n, theta);
  const VectorXd dist = fock::photon_distribution(pair.b, 1);
  double size = 0.0;
  for (long d = 0; d < dist.size(); ++d) size += d * dist[d];

  MeasureReport out;
  out.value = size;
  out.method = "transfer-count";
  const double analytic = n * std::sin(theta) * std::sin(theta);
  out.error_estimate = std::abs(size - analytic);
  out.metadata["analytic"] = analytic;
  return out;
}

// ---- Fisher information ----

double qfi(const spin::SpinState& s, const spin::AdditiveObservable& a) {
  spin::validate(s);
  spin::validate_observable(a);
  if (static_cast<int>(a.locals.size()) != s.n)
    throw std::invalid_argument("observable does not match the register");
  return qfi_from_dense(spin::to_density(s), spin::additive_matrix(a, s.n));
}

MeasureReport fisher_neff(const spin::SpinState& s, unsigned seed) {
  spin::validate(s);
  if (s.n > 10) throw std::invalid_argument("Fisher search handles up to 10 sites");
  const StateSpectrum sp = spectral(s);
  const Matrix3d g = collective_fisher_form(sp, s.n);

  MeasureReport out;
  double fmax = 0.0;
  if (is_permutation_symmetric(s)) {
    Eigen::SelfAdjointEigenSolver<Matrix3d> es(g, Eigen::EigenvaluesOnly);
    fmax = std::max(es.eigenvalues()[2], 0.0);
    out.method = "fisher-collective";
  } else {
    fmax = best_over_restarts(sp, s.n, seed, g,
                              [](const StateSpectrum& q, int n,
                                 std::vector<Vector3d> dirs, int sweeps) {
                                return fisher_ascent(q, n, std::move(dirs),
                                                     sweeps);
                              });
    out.method = "fisher-ascent";
  }
  out.value = fmax / (4.0 * s.n);
  out.metadata["max_fisher"] = fmax;
  return out;
}

// ---- detector-resolution size ----

double detector_probability(const fock::FockPureState& branch_a,
                            const fock::FockPureState& branch_b,
                            const DetectorModel& d) {
  fock::validate(branch_a);
  fock::validate(branch_b);
  if (branch_a.modes() != 1 || branch_b.modes() != 1)
    throw std::invalid_argument("pointer model reads a single mode");
  if (d.sigma < 0.0) throw std::invalid_argument("blur must be nonnegative");

  const VectorXd pa = fock::photon_distribution(branch_a, 0);
  const VectorXd pb = fock::photon_distribution(branch_b, 0);
  const long na = pa.size(), nb = pb.size();

  if (d.sigma < 1e-12) {
    double tv = 0.0;
    for (long k = 0; k < std::max(na, nb); ++k)
      tv += std::abs((k < na ? pa[k] : 0.0) - (k < nb ? pb[k] : 0.0));
    return 0.5 * (1.0 + 0.5 * tv);
  }

  // pointer reads x + n: each n-photon component lands at -n, blurred
  const double h = std::min(0.1, d.sigma / 10.0);
  const double lo = -(static_cast<double>(std::max(na, nb)) + 6.0 * d.sigma);
  const double hi = 6.0 * d.sigma;
  const long pts = static_cast<long>(std::ceil((hi - lo) / h)) + 1;
  const double norm = 1.0 / (d.sigma * std::sqrt(2.0 * kPi));
  const double inv2s2 = 1.0 / (2.0 * d.sigma * d.sigma);
  auto blurred = [&](const VectorXd& p, long np, double x) {
    double acc = 0.0;
    for (long k = 0; k < np; ++k) {
      const double u = x + k;
      const double e = u * u * inv2s2;
      if (e < 40.0) acc += p[k] * std::exp(-e);
    }
    return acc * norm;
  };
  double tv = 0.0;
  for (long i = 0; i < pts; ++i) {
    const double x = lo + i * h;
    const double w = (i == 0 || i == pts - 1) ? 0.5 : 1.0;
    tv += w * std::abs(blurred(pa, na, x) - blurred(pb, nb, x));
  }
  return 0.5 * (1.0 + 0.5 * tv * h);
}

MeasureReport sekatski_size(const fock::FockPureState& branch_a,
                            const fock::FockPureState& branch_b, double p_g) {
  if (!(p_g > 0.5) || !(p_g < 1.0))
    throw std::invalid_argument("guess probability outside (1/2, 1)");

  MeasureReport out;
  out.method = "pointer-blur";
  const double p0 = detector_probability(branch_a, branch_b, {0.0, p_g});
  out.metadata["p_sharp"] = p0;
  if (p0 < p_g) {
    out.metadata["indistinct"] = 1.0;
    return out;
  }

  auto p_at = [&](double sigma) {
    return detector_probability(branch_a, branch_b, {sigma, p_g});
  };
  double lo = 0.0, hi = 1.0;
  while (p_at(hi) >= p_g) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6)
      throw std::runtime_error("no finite blur defeats the discrimination");
  }
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    (p_at(mid) >= p_g ? lo : hi) = mid;
  }
  out.value = lo;
  out.error_estimate = 1e-3;
  out.metadata["sigma_sq"] = lo * lo;
  out.metadata["p_at_sigma"] = p_at(lo);
  return out;
}

}  // namespace macroq::measures
