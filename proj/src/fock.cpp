#include "macroq/fock.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "macroq/linalg.hpp"

namespace macroq::fock {

namespace {

std::string fmt_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

int digit_of(long idx, long stride, int d) {
  return static_cast<int>((idx / stride) % d);
}

void check_mode(const std::vector<int>& dims, int mode) {
  if (mode < 0 || mode >= static_cast<int>(dims.size()))
    throw std::invalid_argument("mode index out of range");
}

}  // namespace

long total_dim(const std::vector<int>& dims) {
  long n = 1;
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("mode dimension must be >= 1");
    n *= d;
  }
  return n;
}

std::vector<long> mode_strides(const std::vector<int>& dims) {
  std::vector<long> s(dims.size());
  long acc = 1;
  for (int m = static_cast<int>(dims.size()) - 1; m >= 0; --m) {
    s[m] = acc;
    acc *= dims[m];
  }
  return s;
}

int auto_cutoff(double nbar) {
  if (nbar < 0) throw std::invalid_argument("negative mean photon number");
  return static_cast<int>(std::ceil(nbar + 6.0 * std::sqrt(nbar) + 10.0));
}

void validate(const FockPureState& s) {
  if (s.amp.size() != total_dim(s.dims))
    throw std::runtime_error("amplitude length does not match dimensions");
  const double n = s.amp.norm();
  if (std::abs(n - 1.0) > 1e-10)
    throw std::runtime_error("pure state norm off unity by " +
                             fmt_sci(std::abs(n - 1.0)));
}

void validate(const DensityOperator& s) {
  const long d = total_dim(s.dims);
  if (s.rho.rows() != d || s.rho.cols() != d)
    throw std::runtime_error("density matrix shape does not match dimensions");
  const double herm = (s.rho - s.rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10) throw std::runtime_error("density matrix not Hermitian");
  const double tr = std::abs(s.rho.trace() - cx(1.0, 0.0));
  if (tr > 1e-9) throw std::runtime_error("density matrix trace off unity");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(s.rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw std::runtime_error("density matrix has negative eigenvalue");
}

double mode_tail_mass(const FockPureState& s, int mode) {
  check_mode(s.dims, mode);
  const auto st = mode_strides(s.dims);
  const int d = s.dims[mode];
  double mass = 0.0;
  for (long i = 0; i < s.amp.size(); ++i)
    if (digit_of(i, st[mode], d) >= d - 2) mass += std::norm(s.amp[i]);
  return mass;
}

double mode_tail_mass(const DensityOperator& s, int mode) {
  check_mode(s.dims, mode);
  const auto st = mode_strides(s.dims);
  const int d = s.dims[mode];
  double mass = 0.0;
  for (long i = 0; i < s.rho.rows(); ++i)
    if (digit_of(i, st[mode], d) >= d - 2) mass += s.rho(i, i).real();
  return mass;
}

void require_tail(const FockPureState& s, double tol) {
  for (int m = 0; m < s.modes(); ++m)
    if (s.dims[m] > 2 && mode_tail_mass(s, m) > tol)
      throw std::runtime_error("truncation tail above tolerance on mode " +
                               std::to_string(m));
}

void require_tail(const DensityOperator& s, double tol) {
  for (int m = 0; m < s.modes(); ++m)
    if (s.dims[m] > 2 && mode_tail_mass(s, m) > tol)
      throw std::runtime_error("truncation tail above tolerance on mode " +
                               std::to_string(m));
}

FockPureState basis_state(const std::vector<int>& dims,
                          const std::vector<int>& occupation) {
  if (occupation.size() != dims.size())
    throw std::invalid_argument("occupation list length mismatch");
  const auto st = mode_strides(dims);
  long off = 0;
  for (size_t m = 0; m < dims.size(); ++m) {
    if (occupation[m] < 0 || occupation[m] >= dims[m])
      throw std::invalid_argument("occupation exceeds mode truncation");
    off += occupation[m] * st[m];
  }
  FockPureState s{dims, VectorXcd::Zero(total_dim(dims))};
  s.amp[off] = 1.0;
  return s;
}

DensityOperator to_density(const FockPureState& s) {
  return {s.dims, s.amp * s.amp.adjoint()};
}

MatrixXcd annihilation(int d) {
  if (d < 2) throw std::invalid_argument("truncation must be >= 2");
  MatrixXcd a = MatrixXcd::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

MatrixXcd creation(int d) { return annihilation(d).adjoint(); }

MatrixXcd number_operator(int d) {
  MatrixXcd n = MatrixXcd::Zero(d, d);
  for (int k = 0; k < d; ++k) n(k, k) = double(k);
  return n;
}

double unitarity_defect(const MatrixXcd& u) {
  MatrixXcd g = u * u.adjoint();
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

MatrixXcd displacement(int d, cx alpha) {
  const double a = std::abs(alpha);
  if (a * a + 5.0 * a + 4.0 > d)
    throw std::invalid_argument(
        "truncation too small for displacement amplitude");
  const MatrixXcd an = annihilation(d);
  MatrixXcd gen = alpha * an.adjoint() - std::conj(alpha) * an;
  MatrixXcd u = gen.exp();
  if (unitarity_defect(u) > 1e-7)
    throw std::runtime_error("displacement lost unitarity under truncation");
  return u;
}

MatrixXcd squeezing(int d, cx z) {
  const double r = std::abs(z);
  if (4.0 * std::exp(2.0 * r) > d)
    throw std::invalid_argument("truncation too small for squeezing strength");
  const MatrixXcd an = annihilation(d);
  MatrixXcd gen = 0.5 * (std::conj(z) * an * an -
                         z * an.adjoint() * an.adjoint());
  MatrixXcd u = gen.exp();
  if (unitarity_defect(u) > 1e-7)
    throw std::runtime_error("squeezing lost unitarity under truncation");
  return u;
}

MatrixXcd beam_splitter(int d, double transmissivity) {
  if (transmissivity < 0.0 || transmissivity > 1.0)
    throw std::invalid_argument("transmissivity outside [0,1]");
  const double theta = std::acos(std::sqrt(transmissivity));
  const MatrixXcd an = annihilation(d);
  MatrixXcd gen = theta * (linalg::kron(an.adjoint(), an) -
                           linalg::kron(an, an.adjoint()));
  MatrixXcd u = gen.exp();
  if (unitarity_defect(u) > 1e-7)
    throw std::runtime_error("beam splitter lost unitarity under truncation");
  return u;
}

ModeOperator ladder(const std::vector<int>& dims, int mode, bool create) {
  check_mode(dims, mode);
  if (dims[mode] < 2) throw std::invalid_argument("truncation must be >= 2");
  return {{mode}, create ? creation(dims[mode]) : annihilation(dims[mode])};
}

ModeOperator displace(const std::vector<int>& dims, int mode, cx alpha) {
  check_mode(dims, mode);
  return {{mode}, displacement(dims[mode], alpha)};
}

ModeOperator squeeze(const std::vector<int>& dims, int mode, cx z) {
  check_mode(dims, mode);
  return {{mode}, squeezing(dims[mode], z)};
}

ModeOperator beam_splitter_op(const std::vector<int>& dims, int mode_a,
                              int mode_b, double transmissivity) {
  check_mode(dims, mode_a);
  check_mode(dims, mode_b);
  if (mode_a == mode_b) throw std::invalid_argument("modes must differ");
  if (dims[mode_a] != dims[mode_b])
    throw std::invalid_argument("beam splitter requires equal truncations");
  return {{mode_a, mode_b}, beam_splitter(dims[mode_a], transmissivity)};
}

namespace {

// Applies op.mat to the designated mode slots of a flat coefficient vector.
void apply_to_vector(const ModeOperator& op, const std::vector<int>& dims,
                     VectorXcd& v) {
  const auto st = mode_strides(dims);
  if (op.acts_on.size() == 1) {
    const int m = op.acts_on[0];
    const int d = dims[m];
    if (op.mat.rows() != d) throw std::invalid_argument("operator dim mismatch");
    const long s = st[m];
    VectorXcd buf(d);
    const long nblocks = v.size() / (static_cast<long>(d) * s);
    for (long b = 0; b < nblocks; ++b) {
      const long base0 = b * d * s;
      for (long in = 0; in < s; ++in) {
        const long base = base0 + in;
        for (int k = 0; k < d; ++k) buf[k] = v[base + k * s];
        buf = op.mat * buf;
        for (int k = 0; k < d; ++k) v[base + k * s] = buf[k];
      }
    }
    return;
  }
  if (op.acts_on.size() == 2) {
    const int p = op.acts_on[0], q = op.acts_on[1];
    const int dp = dims[p], dq = dims[q];
    if (op.mat.rows() != static_cast<long>(dp) * dq)
      throw std::invalid_argument("operator dim mismatch");
    const long sp = st[p], sq = st[q];
    // Odometer over the remaining modes.
    std::vector<int> rest;
    for (int m = 0; m < static_cast<int>(dims.size()); ++m)
      if (m != p && m != q) rest.push_back(m);
    std::vector<int> digit(rest.size(), 0);
    VectorXcd buf(static_cast<long>(dp) * dq);
    while (true) {
      long base = 0;
      for (size_t i = 0; i < rest.size(); ++i) base += digit[i] * st[rest[i]];
      for (int kp = 0; kp < dp; ++kp)
        for (int kq = 0; kq < dq; ++kq)
          buf[static_cast<long>(kp) * dq + kq] = v[base + kp * sp + kq * sq];
      buf = op.mat * buf;
      for (int kp = 0; kp < dp; ++kp)
        for (int kq = 0; kq < dq; ++kq)
          v[base + kp * sp + kq * sq] = buf[static_cast<long>(kp) * dq + kq];
      size_t i = 0;
      for (; i < rest.size(); ++i) {
        if (++digit[i] < dims[rest[i]]) break;
        digit[i] = 0;
      }
      if (i == rest.size()) break;
    }
    return;
  }
  throw std::invalid_argument("operators act on one or two modes");
}

}  // namespace

FockPureState apply(const ModeOperator& op, const FockPureState& s,
                    bool renormalize) {
  FockPureState out = s;
  apply_to_vector(op, s.dims, out.amp);
  if (renormalize) {
    const double n = out.amp.norm();
    if (n < 1e-12) throw std::runtime_error("state annihilated by operator");
    out.amp /= n;
  }
  return out;
}

DensityOperator sandwich(const ModeOperator& op, const DensityOperator& s) {
  DensityOperator out = s;
  // O rho: transform each column, then close with the adjoint from the right.
  for (long j = 0; j < out.rho.cols(); ++j) {
    VectorXcd col = out.rho.col(j);
    apply_to_vector(op, s.dims, col);
    out.rho.col(j) = col;
  }
  MatrixXcd t = out.rho.adjoint();
  for (long j = 0; j < t.cols(); ++j) {
    VectorXcd col = t.col(j);
    apply_to_vector(op, s.dims, col);
    t.col(j) = col;
  }
  out.rho = t.adjoint();
  return out;
}

double mode_mean_photon(const FockPureState& s, int mode) {
  check_mode(s.dims, mode);
  const auto st = mode_strides(s.dims);
  double acc = 0.0;
  for (long i = 0; i < s.amp.size(); ++i)
    acc += digit_of(i, st[mode], s.dims[mode]) * std::norm(s.amp[i]);
  return acc;
}

double mode_mean_photon(const DensityOperator& s, int mode) {
  check_mode(s.dims, mode);
  const auto st = mode_strides(s.dims);
  double acc = 0.0;
  for (long i = 0; i < s.rho.rows(); ++i)
    acc += digit_of(i, st[mode], s.dims[mode]) * s.rho(i, i).real();
  return acc;
}

double mean_photon(const FockPureState& s) {
  double acc = 0.0;
  for (int m = 0; m < s.modes(); ++m) acc += mode_mean_photon(s, m);
  return acc;
}

double mean_photon(const DensityOperator& s) {
  double acc = 0.0;
  for (int m = 0; m < s.modes(); ++m) acc += mode_mean_photon(s, m);
  return acc;
}

cx mode_annihilation_mean(const FockPureState& s, int mode) {
  check_mode(s.dims, mode);
  const auto st = mode_strides(s.dims);
  const long str = st[mode];
  const int d = s.dims[mode];
  cx acc = 0.0;
  for (long i = 0; i < s.amp.size(); ++i) {
    const int n = digit_of(i, str, d);
    if (n >= 1)
      acc += std::conj(s.amp[i - str]) * s.amp[i] * std::sqrt(double(n));
  }
  return acc;
}

cx mode_annihilation_mean(const DensityOperator& s, int mode) {
  check_mode(s.dims, mode);
  const auto st = mode_strides(s.dims);
  const long str = st[mode];
  const int d = s.dims[mode];
  cx acc = 0.0;
  // tr(rho a) picks rho_{i-1, i} sqrt(n_i) on the acting mode.
  for (long i = 0; i < s.rho.rows(); ++i) {
    const int n = digit_of(i, str, d);
    if (n >= 1) acc += s.rho(i - str, i) * std::sqrt(double(n));
  }
  return acc;
}

Eigen::VectorXd photon_distribution(const FockPureState& s, int mode) {
  check_mode(s.dims, mode);
  const auto st = mode_strides(s.dims);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(s.dims[mode]);
  for (long i = 0; i < s.amp.size(); ++i)
    p[digit_of(i, st[mode], s.dims[mode])] += std::norm(s.amp[i]);
  return p;
}

namespace {

// In-place accumulation of the loss generator applied to rho.
void loss_derivative(const std::vector<int>& dims,
                     const std::vector<int>& modes, const MatrixXcd& rho,
                     MatrixXcd& out) {
  const auto st = mode_strides(dims);
  const long dtot = rho.rows();
  out.setZero();
  for (int m : modes) {
    const long s = st[m];
    const int d = dims[m];
    for (long i = 0; i < dtot; ++i) {
      const int ni = digit_of(i, s, d);
      for (long j = 0; j < dtot; ++j) {
        const int nj = digit_of(j, s, d);
        cx v = -0.5 * (ni + nj) * rho(i, j);
        if (ni + 1 < d && nj + 1 < d)
          v += std::sqrt(double(ni + 1)) * std::sqrt(double(nj + 1)) *
               rho(i + s, j + s);
        out(i, j) += v;
      }
    }
  }
}

MatrixXcd embed_single(const std::vector<int>& dims, int mode,
                       const MatrixXcd& op) {
  MatrixXcd acc = MatrixXcd::Identity(1, 1);
  for (int m = 0; m < static_cast<int>(dims.size()); ++m) {
    const MatrixXcd factor = (m == mode)
                                 ? op
                                 : MatrixXcd::Identity(dims[m], dims[m]);
    acc = linalg::kron(acc, factor);
  }
  return acc;
}

}  // namespace

DensityOperator apply_loss(const DensityOperator& s, double tau,
                           const std::vector<int>& modes) {
  if (tau < 0) throw std::invalid_argument("loss parameter must be >= 0");
  for (int m : modes) check_mode(s.dims, m);
  if (tau == 0.0) return s;
  const long d = s.rho.rows();
  DensityOperator out = s;
  if (d <= 20) {
    // Column-major vectorization: vec(a rho b) = (b^T (x) a) vec(rho).
    MatrixXcd gen = MatrixXcd::Zero(d * d, d * d);
    const MatrixXcd id = MatrixXcd::Identity(d, d);
    for (int m : modes) {
      const MatrixXcd a = embed_single(s.dims, m, annihilation(s.dims[m]));
      const MatrixXcd n = a.adjoint() * a;
      gen += linalg::kron(a.conjugate(), a) -
             0.5 * (linalg::kron(id, n) + linalg::kron(n.transpose(), id));
    }
    MatrixXcd prop = (tau * gen).exp();
    Eigen::Map<const VectorXcd> vin(s.rho.data(), d * d);
    VectorXcd vout = prop * vin;
    out.rho = Eigen::Map<const MatrixXcd>(vout.data(), d, d);
  } else {
    int dmax = 2;
    for (int m : modes) dmax = std::max(dmax, s.dims[m]);
    long nsteps = std::max<long>(16, static_cast<long>(
                                         std::ceil(tau * dmax / 2.0)));
    MatrixXcd k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);
    auto integrate = [&](long n) {
      MatrixXcd rho = s.rho;
      const double h = tau / double(n);
      for (long step = 0; step < n; ++step) {
        loss_derivative(s.dims, modes, rho, k1);
        tmp = rho + 0.5 * h * k1;
        loss_derivative(s.dims, modes, tmp, k2);
        tmp = rho + 0.5 * h * k2;
        loss_derivative(s.dims, modes, tmp, k3);
        tmp = rho + h * k3;
        loss_derivative(s.dims, modes, tmp, k4);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      return rho;
    };
    MatrixXcd coarse = integrate(nsteps);
    double err = 1.0;
    for (int round = 0; round < 12; ++round) {
      nsteps *= 2;
      MatrixXcd fine = integrate(nsteps);
      err = (fine - coarse).cwiseAbs().maxCoeff() / 15.0;
      coarse.swap(fine);
      if (err < 1e-8) break;
    }
    if (err >= 1e-8)
      throw std::runtime_error("loss integrator stalled at error " +
                               fmt_sci(err));
    out.rho = coarse;
  }
  out.rho = linalg::hermitize(out.rho);
  return out;
}

DensityOperator apply_loss(const DensityOperator& s, double tau) {
  std::vector<int> all(s.modes());
  for (int m = 0; m < s.modes(); ++m) all[m] = m;
  return apply_loss(s, tau, all);
}

LossTrajectory loss_trajectory(const DensityOperator& s,
                               const std::vector<double>& taus) {
  LossTrajectory tr;
  tr.tau_grid = taus;
  double at = 0.0;
  DensityOperator cur = s;
  for (double t : taus) {
    if (t < at) throw std::invalid_argument("loss grid must be nondecreasing");
    cur = apply_loss(cur, t - at);
    at = t;
    tr.states.push_back(cur);
  }
  return tr;
}

namespace {

// Index split helpers shared by both partial traces.
struct IndexSplit {
  std::vector<long> keep_of;  // collapsed kept-part index per full index
  std::vector<long> rest_of;  // collapsed traced-part index per full index
  std::vector<int> keep_dims;
  long keep_dim = 1, rest_dim = 1;
};

IndexSplit split_indices(const std::vector<int>& dims,
                         std::vector<int> keep) {
  if (keep.empty()) throw std::invalid_argument("keep set must be nonempty");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
    throw std::invalid_argument("duplicate mode in keep set");
  for (int m : keep) check_mode(dims, m);
  IndexSplit sp;
  std::vector<bool> kept(dims.size(), false);
  for (int m : keep) {
    kept[m] = true;
    sp.keep_dims.push_back(dims[m]);
    sp.keep_dim *= dims[m];
  }
  for (size_t m = 0; m < dims.size(); ++m)
    if (!kept[m]) sp.rest_dim *= dims[m];
  const long dtot = total_dim(dims);
  const auto st = mode_strides(dims);
  sp.keep_of.resize(dtot);
  sp.rest_of.resize(dtot);
  for (long i = 0; i < dtot; ++i) {
    long k = 0, r = 0;
    for (size_t m = 0; m < dims.size(); ++m) {
      const int dig = digit_of(i, st[m], dims[m]);
      if (kept[m])
        k = k * dims[m] + dig;
      else
        r = r * dims[m] + dig;
    }
    sp.keep_of[i] = k;
    sp.rest_of[i] = r;
  }
  return sp;
}

}  // namespace

DensityOperator partial_trace(const DensityOperator& s,
                              const std::vector<int>& keep) {
  const auto sp = split_indices(s.dims, keep);
  MatrixXcd out = MatrixXcd::Zero(sp.keep_dim, sp.keep_dim);
  const long d = s.rho.rows();
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j)
      if (sp.rest_of[i] == sp.rest_of[j])
        out(sp.keep_of[i], sp.keep_of[j]) += s.rho(i, j);
  return {sp.keep_dims, std::move(out)};
}

DensityOperator partial_trace(const FockPureState& s,
                              const std::vector<int>& keep) {
  const auto sp = split_indices(s.dims, keep);
  MatrixXcd gathered = MatrixXcd::Zero(sp.keep_dim, sp.rest_dim);
  for (long i = 0; i < s.amp.size(); ++i)
    gathered(sp.keep_of[i], sp.rest_of[i]) = s.amp[i];
  MatrixXcd out = gathered * gathered.adjoint();
  return {sp.keep_dims, std::move(out)};
}

double purity(const DensityOperator& s) { return s.rho.squaredNorm(); }

double von_neumann_entropy(const DensityOperator& s) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(s.rho, Eigen::EigenvaluesOnly);
  return linalg::entropy_from_eigs(es.eigenvalues());
}

double trace_distance(const DensityOperator& a, const DensityOperator& b) {
  if (a.rho.rows() != b.rho.rows())
    throw std::invalid_argument("trace_distance: dimension mismatch");
  return linalg::trace_distance_herm(a.rho, b.rho);
}

double fidelity(const DensityOperator& a, const DensityOperator& b) {
  if (a.rho.rows() != b.rho.rows())
    throw std::invalid_argument("fidelity: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> ea(a.rho);
  Eigen::VectorXd lam = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  MatrixXcd sqrt_a = ea.eigenvectors() * lam.asDiagonal() *
                     ea.eigenvectors().adjoint();
  MatrixXcd m = sqrt_a * b.rho * sqrt_a;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> em(linalg::hermitize(m),
                                              Eigen::EigenvaluesOnly);
  // Eigenvalues at noise level would inflate the root sum by ~sqrt(eps) each.
  const double floor =
      1e-13 * std::max(1.0, em.eigenvalues().cwiseAbs().maxCoeff());
  double root_sum = 0.0;
  for (Eigen::Index i = 0; i < em.eigenvalues().size(); ++i)
    if (em.eigenvalues()[i] > floor) root_sum += std::sqrt(em.eigenvalues()[i]);
  return root_sum * root_sum;
}

cx overlap(const FockPureState& a, const FockPureState& b) {
  if (a.amp.size() != b.amp.size())
    throw std::invalid_argument("overlap: dimension mismatch");
  return a.amp.dot(b.amp);
}

double fidelity(const FockPureState& a, const FockPureState& b) {
  return std::norm(overlap(a, b));
}

double fidelity(const FockPureState& a, const DensityOperator& b) {
  if (a.amp.size() != b.rho.rows())
    throw std::invalid_argument("fidelity: dimension mismatch");
  return (a.amp.adjoint() * b.rho * a.amp)(0).real();
}

}  // namespace macroq::fock
