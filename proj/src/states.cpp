#include "macroq/states.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "macroq/quadrature.hpp"

namespace macroq::states {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Tail tolerance: strict for policy-chosen cutoffs, relaxed when the caller
// pinned the truncation explicitly (the override is an accuracy assertion).
double tail_tol(int override_cutoff) { return override_cutoff > 0 ? 1e-6 : 1e-8; }

void finish(fock::FockPureState& s, int override_cutoff) {
  const double nrm = s.amp.norm();
  if (nrm < 1e-12) throw std::runtime_error("state builder produced a null vector");
  s.amp /= nrm;
  fock::validate(s);
  fock::require_tail(s, tail_tol(override_cutoff));
}

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 0; i < k; ++i) b *= double(n - i) / double(i + 1);
  return b;
}

}  // namespace

int cutoff_for_alpha(cx alpha) {
  const double a = std::abs(alpha);
  const int policy = fock::auto_cutoff(a * a);
  const int accuracy = static_cast<int>(std::ceil(a * a + 5.0 * a + 4.0));
  return std::max({policy, accuracy, 8});
}

int squeezed_cutoff(double r, bool with_photon) {
  if (r < 0.0) throw std::invalid_argument("squeezed_cutoff: need r >= 0");
  if (r > 2.0) throw std::invalid_argument("squeezed_cutoff: r > 2 not supported");
  const int floor_dim = std::max(16, static_cast<int>(std::ceil(4.0 * std::exp(2.0 * r))));
  if (r == 0.0) return floor_dim;
  const double t2 = std::tanh(r) * std::tanh(r);
  // Exact even/odd level weights: start at P(0) = 1/cosh (vacuum branch) or
  // P(1) = 1/cosh^3 (single-photon branch); consecutive ratios are
  // t^2 (2k+1)/(2k+2) resp. t^2 (2k+3)/(2k+2), so once the ratio q drops
  // below 1 the remaining tail is bounded by w q / (1 - q).
  double w = with_photon ? 1.0 / std::pow(std::cosh(r), 3) : 1.0 / std::cosh(r);
  int m = with_photon ? 1 : 0;
  for (int k = 0; k < 100000; ++k) {
    const double q = with_photon ? t2 * (2.0 * k + 3.0) / (2.0 * k + 2.0)
                                 : t2 * (2.0 * k + 1.0) / (2.0 * k + 2.0);
    if (q < 1.0 && w * q / (1.0 - q) < 1e-9) break;
    w *= q;
    m += 2;
  }
  return std::max(m + 4, floor_dim);
}

Eigen::VectorXcd coherent_amplitudes(int d, cx alpha) {
  if (d < 1) throw std::invalid_argument("coherent_amplitudes: need d >= 1");
  Eigen::VectorXcd c(d);
  c[0] = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n + 1 < d; ++n) c[n + 1] = c[n] * alpha / std::sqrt(n + 1.0);
  return c;
}

fock::FockPureState vacuum_state(int cutoff) {
  if (cutoff < 1) throw std::invalid_argument("vacuum_state: need cutoff >= 1");
  return fock::basis_state({cutoff}, {0});
}

fock::FockPureState coherent_state(cx alpha, int cutoff) {
  const int d = cutoff > 0 ? cutoff : cutoff_for_alpha(alpha);
  fock::FockPureState s{{d}, coherent_amplitudes(d, alpha)};
  finish(s, cutoff);
  return s;
}

fock::FockPureState number_state(int n, int cutoff) {
  if (n < 0) throw std::invalid_argument("number_state: need n >= 0");
  const int d = cutoff > 0 ? cutoff : std::max(fock::auto_cutoff(double(n)), n + 3);
  if (n >= d) throw std::invalid_argument("number_state: level does not fit the cutoff");
  return fock::basis_state({d}, {n});
}

fock::FockPureState squeezed_vacuum_state(double r, int cutoff) {
  const int d = cutoff > 0 ? cutoff : squeezed_cutoff(r, false);
  fock::FockPureState s = vacuum_state(d);
  s = fock::apply(fock::squeeze({d}, 0, r), s);
  finish(s, cutoff);
  return s;
}

fock::FockPureState superposed_coherent(cx alpha, double phi, int cutoff) {
  const int d = cutoff > 0 ? cutoff : cutoff_for_alpha(alpha);
  const Eigen::VectorXcd c = coherent_amplitudes(d, alpha);
  const cx ph = std::exp(cx(0.0, phi));
  Eigen::VectorXcd v(d);
  for (int n = 0; n < d; ++n) v[n] = c[n] * (1.0 + ph * ((n % 2) ? -1.0 : 1.0));
  fock::FockPureState s{{d}, v};
  finish(s, cutoff);
  return s;
}

fock::FockPureState entangled_coherent(cx alpha, double phi, int cutoff) {
  const int d = cutoff > 0 ? cutoff : cutoff_for_alpha(alpha);
  const Eigen::VectorXcd c = coherent_amplitudes(d, alpha);
  const cx ph = std::exp(cx(0.0, phi));
  Eigen::VectorXcd v(long(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      v[long(i) * d + j] = c[i] * c[j] * (1.0 + ph * (((i + j) % 2) ? -1.0 : 1.0));
  fock::FockPureState s{{d, d}, v};
  finish(s, cutoff);
  return s;
}

fock::FockPureState hybrid_qubit_field(cx alpha, int cutoff) {
  const int d = cutoff > 0 ? cutoff : cutoff_for_alpha(alpha);
  const Eigen::VectorXcd c = coherent_amplitudes(d, alpha);
  Eigen::VectorXcd v(2L * d);
  for (int j = 0; j < d; ++j) {
    v[j] = c[j];                                   // |0>|alpha>
    v[d + j] = c[j] * ((j % 2) ? -1.0 : 1.0);      // |1>|-alpha>
  }
  fock::FockPureState s{{2, d}, v};
  finish(s, cutoff);
  return s;
}

fock::FockPureState single_photon_entangled(int cutoff) {
  if (cutoff < 2) throw std::invalid_argument("single_photon_entangled: need cutoff >= 2");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(long(cutoff) * cutoff);
  const double w = 1.0 / std::sqrt(2.0);
  v[long(cutoff)] = w;  // |10>
  v[1] = w;             // |01>
  fock::FockPureState s{{cutoff, cutoff}, v};
  fock::validate(s);
  return s;
}

fock::FockPureState displaced_single_photon(cx alpha, bool both_modes, int cutoff) {
  const double a2 = std::norm(alpha);
  const int d = cutoff > 0
                    ? cutoff
                    : std::max(fock::auto_cutoff(a2 + 1.0), cutoff_for_alpha(alpha));
  // The undisplaced mode never holds more than one photon.
  const int d0 = both_modes ? d : 4;
  fock::FockPureState s = single_photon_entangled(std::max(d0, d));
  if (!both_modes && d0 < d) {
    // Rebuild with the slim first mode.
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(long(d0) * d);
    v[long(d)] = 1.0 / std::sqrt(2.0);
    v[1] = 1.0 / std::sqrt(2.0);
    s = fock::FockPureState{{d0, d}, v};
  }
  s = fock::apply(fock::displace(s.dims, 1, alpha), s);
  if (both_modes) s = fock::apply(fock::displace(s.dims, 0, alpha), s);
  finish(s, cutoff);
  return s;
}

fock::FockPureState squeezed_single_photon(double r, int cutoff) {
  const int d = cutoff > 0 ? cutoff : squeezed_cutoff(r, true);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4L * d);
  v[long(d)] = 1.0 / std::sqrt(2.0);
  v[1] = 1.0 / std::sqrt(2.0);
  fock::FockPureState s{{4, d}, v};
  s = fock::apply(fock::squeeze(s.dims, 1, r), s);
  finish(s, cutoff);
  return s;
}

fock::FockPureState amplified_single_photon(double g, int order_cap) {
  if (g < 0.0) throw std::invalid_argument("amplified_single_photon: need g >= 0");
  if (order_cap < 0 || order_cap > 80)
    throw std::invalid_argument("amplified_single_photon: order_cap out of range");
  const double t = std::tanh(g);
  const double lc = std::log(std::cosh(g));
  const int nc = order_cap + 1;
  // Pair-production weights Delta_ij, evaluated in log space; sign (-1)^i.
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(nc, nc);
  double sum2 = 0.0;
  for (int i = 0; i < nc; ++i)
    for (int j = 0; j < nc; ++j) {
      if (t == 0.0) {
        delta(i, j) = (i == 0 && j == 0) ? 1.0 : 0.0;
      } else {
        const double lt = (i + j > 0) ? (i + j) * std::log(t / 2.0) : 0.0;
        const double ln = -2.0 * lc + lt +
                          0.5 * (std::lgamma(2.0 * i + 2.0) + std::lgamma(2.0 * j + 1.0)) -
                          std::lgamma(i + 1.0) - std::lgamma(j + 1.0);
        delta(i, j) = ((i % 2) ? -1.0 : 1.0) * std::exp(ln);
      }
      sum2 += delta(i, j) * delta(i, j);
    }
  if (sum2 < 1.0 - 1e-8)
    throw std::invalid_argument("amplified_single_photon: order_cap too small for this gain");

  const int db = 2 * order_cap + 2;
  const std::vector<int> dims = {2, 2, db, db};
  const long sb = db;            // stride of mode 3
  const long s2 = long(db) * db; // stride of mode 1
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4L * db * db);
  const double w = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < nc; ++i)
    for (int j = 0; j < nc; ++j) {
      // |R>_A |Phi^L>_B - |L>_A |Phi^R>_B, dual-rail A = modes 0,1.
      v[(1L * 2 + 0) * s2 + (2L * j) * sb + (2L * i + 1)] += w * delta(i, j);
      v[(0L * 2 + 1) * s2 + (2L * i + 1) * sb + (2L * j)] -= w * delta(i, j);
    }
  fock::FockPureState s{dims, v};
  const double nrm = s.amp.norm();
  s.amp /= nrm;
  fock::validate(s);
  // The order cap is this builder's own accuracy knob; a cap passing the
  // completeness check above leaves at most ~1e-8 in the top levels.
  fock::require_tail(s, 1e-7);
  return s;
}

// ---- spin registers ----

spin::SpinState ghz_state(int n) {
  if (n < 2 || n > spin::kMaxQubits) throw std::invalid_argument("ghz_state: bad n");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1L << n);
  v[0] = v[(1L << n) - 1] = 1.0 / std::sqrt(2.0);
  return spin::pure_state(n, v);
}

spin::SpinState product_plus(int n) {
  if (n < 1 || n > spin::kMaxQubits) throw std::invalid_argument("product_plus: bad n");
  const long dim = 1L << n;
  Eigen::VectorXcd v = Eigen::VectorXcd::Constant(dim, 1.0 / std::sqrt(double(dim)));
  return spin::pure_state(n, v);
}

spin::SpinState generalized_ghz(int n, double epsilon) {
  if (n < 2 || n > spin::kMaxQubits) throw std::invalid_argument("generalized_ghz: bad n");
  if (!(epsilon > 0.0 && epsilon <= kPi / 2.0))
    throw std::invalid_argument("generalized_ghz: need epsilon in (0, pi/2]");
  const double c = std::cos(epsilon), s = std::sin(epsilon);
  const long dim = 1L << n;
  Eigen::VectorXcd v(dim);
  for (long idx = 0; idx < dim; ++idx) {
    const int pop = std::popcount(static_cast<unsigned long>(idx));
    v[idx] = std::pow(c, n - pop) * std::pow(s, pop);
  }
  v[0] += 1.0;
  v /= std::sqrt(2.0 * (1.0 + std::pow(c, n)));
  return spin::pure_state(n, v);
}

spin::SpinState mixed_ghz(int n, double gamma) {
  if (n < 2 || n > 10) throw std::invalid_argument("mixed_ghz: need 2 <= n <= 10");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("mixed_ghz: need Gamma in [0,1]");
  const long dim = 1L << n;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  rho(0, 0) = rho(dim - 1, dim - 1) = 0.5;
  rho(0, dim - 1) = rho(dim - 1, 0) = 0.5 * gamma;
  return spin::density_state(n, rho);
}

spin::SpinState dn_state(int n) {
  if (n < 1 || n > spin::kMaxQubits) throw std::invalid_argument("dn_state: bad n");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1L << n);
  const double nrm = std::sqrt(double(n) + 4.0);
  v[0] = 2.0 / nrm;
  for (int k = 1; k <= n; ++k) {
    const long idx = ((1L << k) - 1) << (n - k);  // |1^k 0^{n-k}>, site 0 most significant
    v[idx] += 1.0 / nrm;
  }
  return spin::pure_state(n, v);
}

spin::SpinState cooper_product(int n_pairs, double phi) {
  if (n_pairs < 1 || 2 * n_pairs > spin::kMaxQubits)
    throw std::invalid_argument("cooper_product: bad pair count");
  const int n = 2 * n_pairs;
  const cx ph = std::exp(cx(0.0, phi));
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1L << n);
  const double w = std::pow(0.5, 0.5 * n_pairs);
  for (long m = 0; m < (1L << n_pairs); ++m) {
    long idx = 0;
    cx phase = 1.0;
    for (int p = 0; p < n_pairs; ++p)
      if ((m >> p) & 1) {
        idx |= 3L << (n - 2 - 2 * p);  // pair p = sites (2p, 2p+1), 11 pattern
        phase *= ph;
      }
    v[idx] = w * phase;
  }
  return spin::pure_state(n, v);
}

BranchPair marquardt_pair(int n, double theta) {
  if (n < 1 || n > 40) throw std::invalid_argument("marquardt_pair: need 1 <= n <= 40");
  const int d = n + 1;
  BranchPair out;
  out.a = fock::basis_state({d, d}, {n, 0});
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(long(d) * d);
  const double c = std::cos(theta), s = std::sin(theta);
  for (int k = 0; k <= n; ++k)
    v[long(n - k) * d + k] = std::sqrt(binom(n, k)) * std::pow(c, n - k) * std::pow(s, k);
  v /= v.norm();
  out.b = fock::FockPureState{{d, d}, v};
  fock::validate(out.b);
  return out;
}

// ---- conditional preparation schemes ----

namespace {

// Eigen-decompose a conditional density, fill purity and the dominant pure
// component.
void analyze_output(SchemeResult& r) {
  fock::validate(r.state);
  r.purity = fock::purity(r.state);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r.state.rho);
  const Eigen::Index top = r.state.rho.rows() - 1;  // eigenvalues ascend
  fock::FockPureState lead{r.state.dims, es.eigenvectors().col(top)};
  lead.amp /= lead.amp.norm();
  r.pure_view = std::move(lead);
}

}  // namespace

SchemeResult scheme_photon_subtraction(double r, int n_sub) {
  if (n_sub < 1 || n_sub > 4)
    throw std::invalid_argument("scheme_photon_subtraction: need 1 <= n_sub <= 4");
  if (r <= 0.0) throw std::invalid_argument("scheme_photon_subtraction: need r > 0");
  const int d = squeezed_cutoff(r, false);
  fock::FockPureState s = squeezed_vacuum_state(r, d);
  double weight = 1.0;
  const fock::ModeOperator a = fock::ladder({d}, 0, false);
  for (int k = 0; k < n_sub; ++k) {
    s = fock::apply(a, s);
    const double n2 = s.amp.squaredNorm();
    if (n2 < 1e-300) throw std::runtime_error("scheme_photon_subtraction: null outcome");
    weight *= n2;
    s.amp /= std::sqrt(n2);
  }
  double fact = 1.0;
  for (int k = 2; k <= n_sub; ++k) fact *= k;
  SchemeResult out;
  out.state = fock::to_density(s);
  out.pure_view = std::move(s);
  out.purity = 1.0;
  out.probability = weight / fact;
  out.metadata["heralding_weight"] = weight / fact;
  out.metadata["subtracted"] = double(n_sub);
  return out;
}

SchemeResult scheme_homodyne_conditioning(int n, double x0, double aux_squeeze) {
  if (n < 0) throw std::invalid_argument("scheme_homodyne_conditioning: need n >= 0");
  if (!(x0 > 0.0)) throw std::invalid_argument("scheme_homodyne_conditioning: need x0 > 0");
  const int d = std::max({n + 4, squeezed_cutoff(std::abs(aux_squeeze), false), 12});
  fock::FockPureState s = fock::basis_state({d, d}, {n, 0});
  if (aux_squeeze != 0.0) s = fock::apply(fock::squeeze(s.dims, 1, aux_squeeze), s);
  s = fock::apply(fock::beam_splitter_op(s.dims, 0, 1, 0.5), s);

  // Window POVM element on the measured arm: trapezoid over the grid points
  // inside |x| <= x0.
  const int npts = 2001;
  Eigen::VectorXd xs(npts);
  for (int i = 0; i < npts; ++i) xs[i] = -12.0 + 24.0 * i / (npts - 1);
  const double h = xs[1] - xs[0];
  int i0 = -1, i1 = -1;
  for (int i = 0; i < npts; ++i)
    if (std::abs(xs[i]) <= x0 + 1e-12) {
      if (i0 < 0) i0 = i;
      i1 = i;
    }
  if (i0 < 0) throw std::invalid_argument("scheme_homodyne_conditioning: window misses the grid");
  const int m = i1 - i0 + 1;
  const Eigen::MatrixXd psi = quad::hermite_functions(d, xs.segment(i0, m));
  Eigen::VectorXd wts = Eigen::VectorXd::Constant(m, h);
  if (m > 1) wts[0] = wts[m - 1] = 0.5 * h;
  const Eigen::MatrixXd p_window =
      psi * wts.asDiagonal() * psi.transpose();  // d x d, symmetric

  Eigen::Map<const Eigen::MatrixXcd> amp_t(s.amp.data(), d, d);  // column-major: (arm, kept)
  const Eigen::MatrixXcd psi_mat = amp_t.transpose();            // (kept, arm)
  Eigen::MatrixXcd rho = psi_mat * p_window.cast<cx>() * psi_mat.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const double prob = rho.trace().real();
  if (prob < 1e-12) throw std::runtime_error("scheme_homodyne_conditioning: window weight vanished");
  rho /= prob;

  SchemeResult out;
  out.state = fock::DensityOperator{{d}, rho};
  out.probability = prob;
  out.metadata["window_halfwidth"] = x0;
  analyze_output(out);
  return out;
}

SchemeResult scheme_amplification(double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("scheme_amplification: need alpha >= 0");
  if (alpha == 0.0) {
    // Degenerate input: both superpositions collapse to vacuum and the
    // detectors can never click.
    SchemeResult out;
    out.state = fock::to_density(vacuum_state(8));
    out.pure_view = vacuum_state(8);
    out.probability = 0.0;
    out.metadata["target_amplitude"] = 0.0;
    return out;
  }
  const int d = cutoff_for_alpha(2.0 * alpha);  // arm content reaches 2 alpha
  const Eigen::VectorXcd scs = superposed_coherent(alpha, 0.0, d).amp;
  const Eigen::VectorXcd aux = coherent_amplitudes(d, std::sqrt(2.0) * alpha);
  const long dd = long(d) * d;
  Eigen::VectorXcd v(dd * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const cx sij = scs[i] * scs[j];
      for (int k = 0; k < d; ++k) v[(long(i) * d + j) * d + k] = sij * aux[k];
    }
  fock::FockPureState s{{d, d, d}, v};
  s = fock::apply(fock::beam_splitter_op(s.dims, 0, 1, 0.5), s);
  s = fock::apply(fock::beam_splitter_op(s.dims, 1, 2, 0.5), s);

  // Both on/off detectors click: keep n1 >= 1 and n2 >= 1, trace the arms.
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  Eigen::VectorXcd col(d);
  for (int n1 = 1; n1 < d; ++n1)
    for (int n2 = 1; n2 < d; ++n2) {
      for (int i = 0; i < d; ++i) col[i] = s.amp[(long(i) * d + n1) * d + n2];
      rho.noalias() += col * col.adjoint();
    }
  const double prob = rho.trace().real();
  if (prob < 1e-12) throw std::runtime_error("scheme_amplification: click probability vanished");
  rho /= prob;
  rho = 0.5 * (rho + rho.adjoint()).eval();

  SchemeResult out;
  out.state = fock::DensityOperator{{d}, rho};
  out.probability = prob;
  out.metadata["target_amplitude"] = std::sqrt(2.0) * alpha;
  analyze_output(out);
  return out;
}

// ---- dispatcher ----

BuiltState build_state(const StateSpec& spec) {
  BuiltState out;
  const std::string& k = spec.kind;
  if (k == "vacuum") {
    out.fockp = vacuum_state(spec.truncation > 0 ? spec.truncation : 8);
  } else if (k == "coherent") {
    out.fockp = coherent_state(spec.alpha, spec.truncation);
  } else if (k == "fock") {
    out.fockp = number_state(spec.n, spec.truncation);
  } else if (k == "squeezed_vacuum") {
    out.fockp = squeezed_vacuum_state(spec.r, spec.truncation);
  } else if (k == "scs") {
    out.fockp = superposed_coherent(spec.alpha, spec.phi, spec.truncation);
  } else if (k == "ecs") {
    out.fockp = entangled_coherent(spec.alpha, spec.phi, spec.truncation);
  } else if (k == "hybrid") {
    out.fockp = hybrid_qubit_field(spec.alpha, spec.truncation);
  } else if (k == "spe") {
    out.fockp = single_photon_entangled(spec.truncation > 0 ? spec.truncation : 8);
  } else if (k == "displaced_spe") {
    out.fockp = displaced_single_photon(spec.alpha, spec.both_modes, spec.truncation);
  } else if (k == "squeezed_spe") {
    out.fockp = squeezed_single_photon(spec.r, spec.truncation);
  } else if (k == "qiopa") {
    out.fockp = amplified_single_photon(spec.g, spec.order_cap);
  } else if (k == "ghz") {
    out.is_fock = false;
    out.spins = ghz_state(spec.n);
  } else if (k == "product_plus") {
    out.is_fock = false;
    out.spins = product_plus(spec.n);
  } else if (k == "generalized_ghz") {
    out.is_fock = false;
    out.spins = generalized_ghz(spec.n, spec.epsilon);
  } else if (k == "mixed_ghz") {
    out.is_fock = false;
    out.spins = mixed_ghz(spec.n, spec.gamma);
  } else if (k == "dn") {
    out.is_fock = false;
    out.spins = dn_state(spec.n);
  } else if (k == "cooper") {
    out.is_fock = false;
    out.spins = cooper_product(spec.n, spec.phi);
  } else {
    throw std::invalid_argument("build_state: unknown state kind '" + k + "'");
  }
  return out;
}

}  // namespace macroq::states
