#include "macroq/phase.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "macroq/quadrature.hpp"

namespace macroq::phase {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

int digit_of(long idx, long stride, int d) { return static_cast<int>((idx / stride) % d); }

}  // namespace

Eigen::MatrixXcd displacement_matrix(int d, cx alpha) {
  if (d < 1) throw std::invalid_argument("displacement_matrix: need d >= 1");
  Eigen::MatrixXcd m(d, d);
  const double t = std::norm(alpha);
  if (t == 0.0) {
    m.setIdentity();
    return m;
  }
  // Each diagonal family m = n + k is a weighted Laguerre function
  //   g_n^{(k)} = sqrt(n!/(n+k)!) t^{k/2} e^{-t/2} L_n^{(k)}(t),
  // with <n+k|D|n> = g_n^{(k)} u^k and <n|D|n+k> = g_n^{(k)} (-conj(u))^k for
  // u = alpha/|alpha|.  The g recurrence keeps every intermediate O(1), which
  // a column-wise recurrence does not (it cancels catastrophically once
  // |alpha|^2 is comparable to d).  Seeds go through log space so deep-tail
  // diagonals underflow cleanly to zero instead of polluting the recurrence.
  const cx u = alpha / std::abs(alpha);
  cx up(1.0, 0.0), lo(1.0, 0.0);
  for (int k = 0; k < d; ++k) {
    const double lg0 = 0.5 * (k * std::log(t) - std::lgamma(k + 1.0)) - 0.5 * t;
    double gp = std::exp(lg0);  // g_0
    m(k, 0) = gp * up;
    if (k > 0) m(0, k) = gp * lo;
    if (d - k > 1) {
      double gc = (k + 1.0 - t) / std::sqrt(k + 1.0) * gp;  // g_1
      m(k + 1, 1) = gc * up;
      if (k > 0) m(1, k + 1) = gc * lo;
      for (int n = 1; n + 1 < d - k; ++n) {
        const double c1 =
            (2.0 * n + k + 1.0 - t) / std::sqrt((n + 1.0) * (n + k + 1.0));
        const double c2 =
            std::sqrt(double(n) * (n + k) / ((n + 1.0) * (n + k + 1.0)));
        const double gn = c1 * gc - c2 * gp;
        gp = gc;
        gc = gn;
        m(k + 1 + n, n + 1) = gc * up;
        if (k > 0) m(n + 1, k + 1 + n) = gc * lo;
      }
    }
    up *= u;
    lo *= -std::conj(u);
  }
  return m;
}

cx characteristic_function(const fock::DensityOperator& s, const std::vector<cx>& xi) {
  if (static_cast<int>(xi.size()) != s.modes())
    throw std::invalid_argument("characteristic_function: one xi per mode");
  if (s.modes() == 1) {
    const Eigen::MatrixXcd d = displacement_matrix(s.dims[0], xi[0]);
    return (s.rho.transpose().cwiseProduct(d)).sum();
  }
  if (s.modes() == 2) {
    const int d1 = s.dims[0], d2 = s.dims[1];
    const Eigen::MatrixXcd da = displacement_matrix(d1, xi[0]);
    const Eigen::MatrixXcd db = displacement_matrix(d2, xi[1]);
    cx acc(0.0, 0.0);
    for (long i = 0; i < s.dim(); ++i) {
      const int i1 = static_cast<int>(i / d2), i2 = static_cast<int>(i % d2);
      for (long j = 0; j < s.dim(); ++j) {
        const int j1 = static_cast<int>(j / d2), j2 = static_cast<int>(j % d2);
        acc += s.rho(i, j) * da(j1, i1) * db(j2, i2);
      }
    }
    return acc;
  }
  throw std::invalid_argument(
      "characteristic_function: density route handles at most two modes");
}

cx characteristic_function(const fock::FockPureState& s, const std::vector<cx>& xi) {
  if (static_cast<int>(xi.size()) != s.modes())
    throw std::invalid_argument("characteristic_function: one xi per mode");
  fock::FockPureState cur = s;
  for (int m = 0; m < s.modes(); ++m) {
    if (xi[m] == cx(0.0, 0.0)) continue;
    fock::ModeOperator op{{m}, displacement_matrix(s.dims[m], xi[m])};
    cur = fock::apply(op, cur);
  }
  return fock::overlap(s, cur);
}

CharacteristicGrid characteristic_grid(const fock::DensityOperator& s, int mode,
                                       double extent, int n) {
  if (mode < 0 || mode >= s.modes())
    throw std::invalid_argument("characteristic_grid: bad mode index");
  if (n < 3 || extent <= 0.0) throw std::invalid_argument("characteristic_grid: bad grid");
  if (n % 2 == 0) ++n;  // keep the origin on the grid
  // Other modes pinned at xi = 0, which is exactly the reduced state's chi.
  fock::DensityOperator red =
      (s.modes() == 1) ? s : fock::partial_trace(s, std::vector<int>{mode});
  CharacteristicGrid g;
  g.mode = mode;
  g.extent = extent;
  g.spacing = 2.0 * extent / (n - 1);
  g.re.resize(n);
  g.im.resize(n);
  for (int i = 0; i < n; ++i) g.re[i] = g.im[i] = -extent + g.spacing * i;
  g.values.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::MatrixXcd d = displacement_matrix(red.dims[0], cx(g.re[i], g.im[j]));
      g.values(i, j) = (red.rho.transpose().cwiseProduct(d)).sum();
    }
  return g;
}

void validate(const CharacteristicGrid& g) {
  const int n = static_cast<int>(g.re.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(g.values(i, j)) > 1.0 + 1e-9)
        throw std::runtime_error("characteristic grid exceeds unit modulus: |chi| = " +
                                 fmt_sci(std::abs(g.values(i, j))));
  const int c = n / 2;
  if (std::abs(g.re[c]) < 1e-12 && std::abs(g.im[c]) < 1e-12 &&
      std::abs(g.values(c, c) - 1.0) > 1e-9)
    throw std::runtime_error("characteristic grid origin deviates from 1");
}

WignerGrid wigner(const fock::DensityOperator& s, double extent, int n) {
  if (s.modes() != 1) throw std::invalid_argument("wigner: single-mode states only");
  if (n < 11) throw std::invalid_argument("wigner: grid too coarse");
  if (n % 2 == 0) ++n;
  const double nbar = fock::mean_photon(s);
  // Coverage: coherent content sits at |beta| = sqrt(2 nbar); the anti-squeezed
  // axis of a squeezed state needs ~5 sigma = 7 sqrt(nbar + 1) in beta units.
  const double policy = std::max(2.0 * std::sqrt(nbar) + 6.0, 7.0 * std::sqrt(nbar + 1.0));
  if (extent <= 0.0) extent = policy;
  const int d = s.dims[0];
  WignerGrid g;
  g.re.resize(n);
  g.im.resize(n);
  const double h = 2.0 * extent / (n - 1);
  for (int i = 0; i < n; ++i) g.re[i] = g.im[i] = -extent + h * i;
  g.values.resize(n, n);
  Eigen::VectorXd par(d);
  for (int k = 0; k < d; ++k) par[k] = (k % 2) ? -1.0 : 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      // W(beta) = (1/pi) Re Tr[rho D(sqrt(2) beta) parity].
      const cx beta(g.re[i], g.im[j]);
      const Eigen::MatrixXcd dm = displacement_matrix(d, std::sqrt(2.0) * beta);
      cx acc(0.0, 0.0);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) acc += s.rho(b, a) * dm(a, b) * par[b];
      g.values(i, j) = acc.real() / kPi;
    }
  const double mass = wigner_mass(g);
  if (std::abs(mass - 1.0) > 1e-4)
    throw std::runtime_error("wigner: grid too small, integrated mass " + fmt_sci(mass));
  return g;
}

double wigner_mass(const WignerGrid& g) {
  const int n = static_cast<int>(g.re.size());
  const double h = g.re[1] - g.re[0];
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    for (int j = 0; j < n; ++j) {
      const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      mass += wi * wj * g.values(i, j);
    }
  }
  return mass * h * h;
}

QuadratureDistribution quadrature_distribution(const fock::DensityOperator& s,
                                               double angle,
                                               const Eigen::VectorXd& xs) {
  if (s.modes() != 1)
    throw std::invalid_argument("quadrature_distribution: single-mode states only");
  if (xs.size() < 2) throw std::invalid_argument("quadrature_distribution: bad grid");
  const int d = s.dims[0];
  const Eigen::MatrixXd psi = quad::hermite_functions(d, xs);
  // p(x) = sum_{mn} rho_{mn} e^{-i theta (m-n)} psi_m(x) psi_n(x).
  Eigen::MatrixXcd r(d, d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n)
      r(m, n) = s.rho(m, n) * std::exp(cx(0.0, -angle * (m - n)));
  const Eigen::MatrixXcd v = r * psi.cast<cx>();
  QuadratureDistribution q;
  q.angle = angle;
  q.xs = xs;
  q.density.resize(xs.size());
  for (Eigen::Index k = 0; k < xs.size(); ++k) {
    cx acc(0.0, 0.0);
    for (int m = 0; m < d; ++m) acc += psi(m, k) * v(m, k);
    q.density[k] = acc.real();
  }
  return q;
}

QuadratureDistribution quadrature_distribution(const fock::DensityOperator& s,
                                               double angle) {
  const double nbar = fock::mean_photon(s);
  const double extent =
      std::max(2.0 * std::sqrt(nbar) + 6.0, 8.0 * std::sqrt(2.0 * nbar + 1.0));
  int npts = static_cast<int>(std::ceil(100.0 * extent)) + 1;
  if (npts % 2 == 0) ++npts;
  Eigen::VectorXd xs(npts);
  for (int i = 0; i < npts; ++i) xs[i] = -extent + 2.0 * extent * i / (npts - 1);
  return quadrature_distribution(s, angle, xs);
}

void validate(const QuadratureDistribution& q) {
  const Eigen::Index n = q.xs.size();
  double mass = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (q.density[i] < -1e-12)
      throw std::runtime_error("quadrature density negative: " + fmt_sci(q.density[i]));
    mass += q.density[i] * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
  }
  mass *= q.xs[1] - q.xs[0];
  if (std::abs(mass - 1.0) > 1e-6)
    throw std::runtime_error("quadrature density mass " + fmt_sci(mass));
}

// ---- integral route ----

namespace {

// Angular Fourier expansion of one mode's displacement sandwich at fixed
// radius: D(sqrt(t) e^{i phi})_{mn} = e^{i phi (m-n)} D(sqrt(t))_{mn}, so the
// angle dependence is a trig polynomial with coefficients indexed by
// q = m - n stored at row q + d - 1.
//
// Trace mode: one column, c_q(t) = sum_{m-n=q} rho_{nm} D_{mn}.
// Schmidt mode: K^2 columns, F_q(l,k) = sum_{m-n=q} conj(U_{ml}) D_{mn} U_{nk}
// flattened as column l*K + k.
Eigen::MatrixXcd fourier_coefficients(const Eigen::MatrixXcd& rho_or_unit,
                                      bool schmidt, const Eigen::MatrixXcd& dm) {
  const int d = static_cast<int>(dm.rows());
  const int k = schmidt ? static_cast<int>(rho_or_unit.cols()) : 1;
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(2 * d - 1, k * k);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n) {
      const int row = m - n + d - 1;
      if (schmidt) {
        for (int l = 0; l < k; ++l)
          for (int k2 = 0; k2 < k; ++k2)
            c(row, l * k + k2) +=
                std::conj(rho_or_unit(m, l)) * dm(m, n) * rho_or_unit(n, k2);
      } else {
        c(row, 0) += rho_or_unit(n, m) * dm(m, n);
      }
    }
  return c;
}

struct ModeIntegrals {
  // M0 = (1/pi) int a a+ d2xi, M1 = same with the (|xi|^2 - 1) weight;
  // a = vec of the Schmidt sandwich (or a 1-vector holding chi itself).
  Eigen::MatrixXcd m0, m1;
};

// One mode's pair integrals on an (n_r, n_phi) polar rule.
ModeIntegrals mode_integrals(const Eigen::MatrixXcd& rho_or_unit, bool schmidt,
                             int d, int n_r, int n_phi) {
  const quad::Rule rad = quad::gauss_laguerre_scaled(n_r);
  const quad::Rule ang = quad::gauss_legendre(n_phi, 0.0, 2.0 * kPi);
  const int kdim = schmidt ? static_cast<int>(rho_or_unit.cols()) : 1;
  const int vlen = kdim * kdim;
  // E(j, q + d - 1) = e^{i phi_j q}: one evaluation of the trig basis per level.
  Eigen::MatrixXcd e(n_phi, 2 * d - 1);
  for (int j = 0; j < n_phi; ++j)
    for (int q = -(d - 1); q <= d - 1; ++q)
      e(j, q + d - 1) = std::polar(1.0, ang.nodes[j] * q);
  Eigen::VectorXd wphi(n_phi);
  for (int j = 0; j < n_phi; ++j) wphi[j] = ang.weights[j] / (2.0 * kPi);
  ModeIntegrals out;
  out.m0 = Eigen::MatrixXcd::Zero(vlen, vlen);
  out.m1 = Eigen::MatrixXcd::Zero(vlen, vlen);
  for (int ir = 0; ir < n_r; ++ir) {
    const double t = rad.nodes[ir];
    const Eigen::MatrixXcd dm = displacement_matrix(d, std::sqrt(t));
    const Eigen::MatrixXcd coef = fourier_coefficients(rho_or_unit, schmidt, dm);
    const Eigen::MatrixXcd a = e * coef;  // n_phi x K^2 samples of the sandwich
    const Eigen::MatrixXcd g =
        a.adjoint() * (rad.weights[ir] * wphi).asDiagonal() * a;
    out.m0 += g;
    out.m1 += (t - 1.0) * g;
  }
  return out;
}

// The radial integrand is e^{-t} times a polynomial of degree < 2 n_r once
// n_r >= d + 2, so radial refinement stops one doubling past that point while
// the angular rule keeps doubling (Legendre nodes thin out mid-interval, so
// resolving angular frequency q needs roughly pi*q nodes).
int radial_nodes_for(int d, int lvl) {
  const int base = std::max(128, d + 2);
  const int cap = std::max(base, 2 * (d + 2));
  return std::min(base << lvl, cap);
}

constexpr int kMaxRefine = 6;

struct SchmidtPair {
  Eigen::MatrixXcd u, v;   // d1 x K, d2 x K
  Eigen::VectorXd weights; // singular values
};

SchmidtPair schmidt_split(const fock::FockPureState& s) {
  const int d1 = s.dims[0], d2 = s.dims[1];
  Eigen::MatrixXcd psi(d1, d2);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d2; ++j) psi(i, j) = s.amp[long(i) * d2 + j];
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(psi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  int k = 0;
  while (k < svd.singularValues().size() && svd.singularValues()[k] > 1e-9) ++k;
  if (k > 8)
    throw std::invalid_argument(
        "measure_I_integral: Schmidt rank above 8; use the algebraic route");
  SchmidtPair out;
  out.u = svd.matrixU().leftCols(k);
  // psi = U S V+, so the second mode's basis amplitudes are conj(V) columns.
  out.v = svd.matrixV().leftCols(k).conjugate();
  out.weights = svd.singularValues().head(k);
  return out;
}

double integral_level_one_mode(const fock::DensityOperator& s, int lvl) {
  ModeIntegrals mi = mode_integrals(s.rho, false, s.dims[0],
                                    radial_nodes_for(s.dims[0], lvl), 64 << lvl);
  return 0.5 * mi.m1(0, 0).real();
}

double integral_level_two_mode(const SchmidtPair& sp, const std::vector<int>& dims,
                               int lvl) {
  const int k = static_cast<int>(sp.weights.size());
  const int n_phi = 64 << lvl;
  ModeIntegrals a =
      mode_integrals(sp.u, true, dims[0], radial_nodes_for(dims[0], lvl), n_phi);
  ModeIntegrals b =
      mode_integrals(sp.v, true, dims[1], radial_nodes_for(dims[1], lvl), n_phi);
  // chi = sum_{k,k'} s_k s_k' A_{k'k}(xi1) B_{k'k}(xi2); the double integral
  // factorizes into elementwise products of the per-mode pair integrals.
  cx acc(0.0, 0.0);
  for (int t1 = 0; t1 < k * k; ++t1) {
    const double c1 = sp.weights[t1 / k] * sp.weights[t1 % k];
    for (int t2 = 0; t2 < k * k; ++t2) {
      const double c2 = sp.weights[t2 / k] * sp.weights[t2 % k];
      acc += c1 * c2 * (a.m1(t1, t2) * b.m0(t1, t2) + a.m0(t1, t2) * b.m1(t1, t2));
    }
  }
  return 0.5 * acc.real();
}

// Schmidt vector index packing note: a[l * K + k] pairs with weight
// s_l s_k via t / K and t % K above, matching fourier_sandwich's (l, k).

MeasureReport refine(const std::function<double(int)>& level_value, int max_dim) {
  MeasureReport rep;
  double prev = level_value(0);
  for (int lvl = 1; lvl <= kMaxRefine; ++lvl) {
    const double cur = level_value(lvl);
    const double delta = std::abs(cur - prev);
    if (delta < 1e-7) {
      rep.value = cur;
      rep.error_estimate = delta;
      rep.metadata["radial_nodes"] = double(radial_nodes_for(max_dim, lvl));
      rep.metadata["angular_nodes"] = double(64 << lvl);
      rep.metadata["refinements"] = double(lvl);
      return rep;
    }
    prev = cur;
  }
  throw std::runtime_error("measure_I_integral: quadrature did not converge");
}

void apply_offset(MeasureReport& rep, bool remove_offset, int modes, double purity) {
  rep.metadata["offset_removed"] = remove_offset ? 1.0 : 0.0;
  if (remove_offset) {
    rep.value += 0.5 * modes * purity;
    rep.metadata["purity"] = purity;
  }
}

}  // namespace

MeasureReport measure_I_integral(const fock::DensityOperator& s, bool remove_offset) {
  fock::validate(s);
  if (s.modes() == 1) {
    MeasureReport rep = refine(
        [&](int lvl) { return integral_level_one_mode(s, lvl); }, s.dims[0]);
    rep.method = "integral";
    apply_offset(rep, remove_offset, 1, fock::purity(s));
    return rep;
  }
  if (s.modes() == 2) {
    // The two-mode route factorizes through a Schmidt split of a pure state.
    const double pur = fock::purity(s);
    if (pur < 1.0 - 1e-9)
      throw std::invalid_argument(
          "measure_I_integral: mixed two-mode states unsupported; use the algebraic route");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s.rho);
    fock::FockPureState psi{s.dims, es.eigenvectors().col(s.dim() - 1)};
    psi.amp /= psi.amp.norm();
    MeasureReport rep = measure_I_integral(psi, false);
    apply_offset(rep, remove_offset, 2, 1.0);
    return rep;
  }
  throw std::invalid_argument(
      "measure_I_integral: at most two modes; the algebraic route is authoritative");
}

MeasureReport measure_I_integral(const fock::FockPureState& s, bool remove_offset) {
  fock::validate(s);
  if (s.modes() == 1) return measure_I_integral(fock::to_density(s), remove_offset);
  if (s.modes() != 2)
    throw std::invalid_argument(
        "measure_I_integral: at most two modes; the algebraic route is authoritative");
  const SchmidtPair sp = schmidt_split(s);
  MeasureReport rep =
      refine([&](int lvl) { return integral_level_two_mode(sp, s.dims, lvl); },
             std::max(s.dims[0], s.dims[1]));
  rep.method = "integral";
  rep.metadata["schmidt_terms"] = double(sp.weights.size());
  apply_offset(rep, remove_offset, 2, 1.0);
  return rep;
}

MeasureReport measure_I_algebraic(const fock::DensityOperator& s, bool remove_offset) {
  fock::validate(s);
  const auto strides = fock::mode_strides(s.dims);
  const long dim = s.dim();
  Eigen::VectorXd diag2(dim);
  for (long i = 0; i < dim; ++i) diag2[i] = s.rho.row(i).squaredNorm();
  double total = 0.0;
  for (int m = 0; m < s.modes(); ++m) {
    const int d = s.dims[m];
    const long st = strides[m];
    double number_term = 0.0;
    for (long i = 0; i < dim; ++i) number_term += digit_of(i, st, d) * diag2[i];
    cx cross(0.0, 0.0);
    for (long i = 0; i < dim; ++i) {
      const int ni = digit_of(i, st, d);
      if (ni + 1 >= d) continue;
      for (long j = 0; j < dim; ++j) {
        const int nj = digit_of(j, st, d);
        if (nj + 1 >= d) continue;
        cross += std::sqrt(double(ni + 1) * (nj + 1)) * s.rho(i + st, j + st) * s.rho(j, i);
      }
    }
    total += number_term - cross.real();
  }
  MeasureReport rep;
  rep.value = total;
  rep.method = "algebraic";
  rep.error_estimate = 0.0;
  apply_offset(rep, remove_offset, s.modes(), fock::purity(s));
  return rep;
}

MeasureReport measure_I_algebraic(const fock::FockPureState& s, bool remove_offset) {
  fock::validate(s);
  double total = 0.0;
  for (int m = 0; m < s.modes(); ++m)
    total += fock::mode_mean_photon(s, m) - std::norm(fock::mode_annihilation_mean(s, m));
  MeasureReport rep;
  rep.value = total;
  rep.method = "algebraic-pure";
  rep.error_estimate = 0.0;
  apply_offset(rep, remove_offset, s.modes(), 1.0);
  return rep;
}

}  // namespace macroq::phase
