#include "macroq/spin.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "macroq/linalg.hpp"

namespace macroq::spin {

namespace {

void check_qubit_count(int n) {
  if (n < 1 || n > kMaxQubits)
    throw std::invalid_argument("qubit count outside [1, " +
                                std::to_string(kMaxQubits) + "]");
}

int bit_at(long idx, int n, int site) { return (idx >> (n - 1 - site)) & 1; }

VectorXcd product_vector(int n, const std::vector<Vector2cd>& kets) {
  if (static_cast<int>(kets.size()) != n)
    throw std::invalid_argument("one site ket required per qubit");
  for (const auto& k : kets)
    if (std::abs(k.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("site kets must be normalized");
  VectorXcd v(1L << n);
  for (long i = 0; i < v.size(); ++i) {
    cx a = 1.0;
    for (int m = 0; m < n; ++m) a *= kets[m][bit_at(i, n, m)];
    v[i] = a;
  }
  return v;
}

VectorXcd label_vector(int n, const std::string& bits) {
  if (static_cast<int>(bits.size()) != n)
    throw std::invalid_argument("block label length must equal qubit count");
  long idx = 0;
  for (char c : bits) {
    if (c != '0' && c != '1')
      throw std::invalid_argument("block label must be a 0/1 string");
    idx = (idx << 1) | (c - '0');
  }
  VectorXcd v = VectorXcd::Zero(1L << n);
  v[idx] = 1.0;
  return v;
}

cx matrix_element(const SpinState& s, const VectorXcd& a, const VectorXcd& b) {
  if (s.pure()) return a.dot(s.amp) * s.amp.dot(b);
  return (a.adjoint() * s.rho * b)(0);
}

}  // namespace

SpinState pure_state(int n, VectorXcd amp) {
  check_qubit_count(n);
  if (amp.size() != (1L << n))
    throw std::invalid_argument("amplitude length must be 2^n");
  SpinState s;
  s.n = n;
  s.amp = std::move(amp);
  validate(s);
  return s;
}

SpinState density_state(int n, MatrixXcd rho) {
  check_qubit_count(n);
  if (rho.rows() != (1L << n) || rho.cols() != (1L << n))
    throw std::invalid_argument("density matrix must be 2^n x 2^n");
  SpinState s;
  s.n = n;
  s.rho = std::move(rho);
  validate(s);
  return s;
}

SpinState basis(int n, unsigned long bits) {
  check_qubit_count(n);
  if (bits >= (1UL << n)) throw std::invalid_argument("basis index too large");
  VectorXcd v = VectorXcd::Zero(1L << n);
  v[bits] = 1.0;
  return pure_state(n, std::move(v));
}

void validate(const SpinState& s) {
  check_qubit_count(s.n);
  if (s.pure()) {
    if (s.amp.size() != s.dim())
      throw std::runtime_error("amplitude length mismatch");
    if (std::abs(s.amp.norm() - 1.0) > 1e-10)
      throw std::runtime_error("spin state norm off unity");
    return;
  }
  if (s.rho.rows() != s.dim() || s.rho.cols() != s.dim())
    throw std::runtime_error("density shape mismatch");
  if ((s.rho - s.rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::runtime_error("spin density not Hermitian");
  if (std::abs(s.rho.trace() - cx(1.0)) > 1e-10)
    throw std::runtime_error("spin density trace off unity");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(s.rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw std::runtime_error("spin density has negative eigenvalue");
}

MatrixXcd to_density(const SpinState& s) {
  if (s.pure()) return s.amp * s.amp.adjoint();
  return s.rho;
}

void validate_observable(const AdditiveObservable& a) {
  if (a.locals.empty())
    throw std::invalid_argument("observable needs at least one site");
  for (const auto& m : a.locals) {
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
      throw std::invalid_argument("local term not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix2cd> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1.0 - 1e-9 ||
        es.eigenvalues().maxCoeff() > 1.0 + 1e-9)
      throw std::invalid_argument("local spectrum outside [-1, 1]");
  }
  if (!a.grouping.empty()) {
    std::vector<int> seen(a.locals.size(), 0);
    for (const auto& g : a.grouping)
      for (int site : g) {
        if (site < 0 || site >= static_cast<int>(a.locals.size()))
          throw std::invalid_argument("grouping site out of range");
        if (seen[site]++)
          throw std::invalid_argument("grouping repeats a site");
      }
    for (int c : seen)
      if (!c) throw std::invalid_argument("grouping must cover all sites");
  }
}

void validate_projector(const ProjectorSpec& p) {
  if (p.matrix.rows() != p.matrix.cols())
    throw std::invalid_argument("projector must be square");
  if ((p.matrix - p.matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("projector not Hermitian");
  if ((p.matrix * p.matrix - p.matrix).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("projector not idempotent");
}

MatrixXcd dephase_block(const MatrixXcd& block, int n, double p0) {
  if (p0 < 0.5 || p0 > 1.0)
    throw std::invalid_argument("dephasing weight outside [1/2, 1]");
  if (block.rows() != (1L << n) || block.cols() != (1L << n))
    throw std::invalid_argument("block must be 2^n x 2^n");
  const double f = 2.0 * p0 - 1.0;
  MatrixXcd out = block;
  for (long i = 0; i < out.rows(); ++i)
    for (long j = 0; j < out.cols(); ++j) {
      const int h = std::popcount(static_cast<unsigned long>(i ^ j));
      if (h) out(i, j) *= std::pow(f, h);
    }
  return out;
}

SpinState dephase_each(const SpinState& s, double p0) {
  if (p0 < 0.5 || p0 > 1.0)
    throw std::invalid_argument("dephasing weight outside [1/2, 1]");
  if (p0 == 1.0) return s;
  SpinState out;
  out.n = s.n;
  out.rho = dephase_block(to_density(s), s.n, p0);
  return out;
}

double offdiag_trace_norm(const SpinState& s, const std::string& block_a,
                          const std::string& block_b) {
  return std::abs(
      matrix_element(s, label_vector(s.n, block_a), label_vector(s.n, block_b)));
}

double offdiag_trace_norm(const SpinState& s,
                          const std::vector<Vector2cd>& block_a,
                          const std::vector<Vector2cd>& block_b) {
  return std::abs(matrix_element(s, product_vector(s.n, block_a),
                                 product_vector(s.n, block_b)));
}

VectorXcd apply_local(const VectorXcd& amp, int n, int site,
                      const Matrix2cd& op) {
  check_qubit_count(n);
  if (site < 0 || site >= n) throw std::invalid_argument("site out of range");
  if (amp.size() != (1L << n))
    throw std::invalid_argument("amplitude length must be 2^n");
  const long stride = 1L << (n - 1 - site);
  VectorXcd out(amp.size());
  for (long i = 0; i < amp.size(); ++i) {
    if (i & stride) continue;
    const cx a0 = amp[i], a1 = amp[i | stride];
    out[i] = op(0, 0) * a0 + op(0, 1) * a1;
    out[i | stride] = op(1, 0) * a0 + op(1, 1) * a1;
  }
  return out;
}

namespace {

// A applied column-wise to a dense matrix, streaming over sites.
MatrixXcd apply_additive(const AdditiveObservable& a, int n,
                         const MatrixXcd& m) {
  MatrixXcd out = MatrixXcd::Zero(m.rows(), m.cols());
  for (long j = 0; j < m.cols(); ++j) {
    VectorXcd col = m.col(j);
    VectorXcd acc = VectorXcd::Zero(col.size());
    for (int site = 0; site < n; ++site)
      acc += apply_local(col, n, site, a.locals[site]);
    out.col(j) = acc;
  }
  return out;
}

}  // namespace

double additive_mean(const SpinState& s, const AdditiveObservable& a) {
  validate_observable(a);
  if (static_cast<int>(a.locals.size()) != s.n)
    throw std::invalid_argument("observable size does not match qubit count");
  if (s.pure()) {
    VectorXcd acc = VectorXcd::Zero(s.dim());
    for (int site = 0; site < s.n; ++site)
      acc += apply_local(s.amp, s.n, site, a.locals[site]);
    return s.amp.dot(acc).real();
  }
  return apply_additive(a, s.n, s.rho).trace().real();
}

double variance(const SpinState& s, const AdditiveObservable& a) {
  validate_observable(a);
  if (static_cast<int>(a.locals.size()) != s.n)
    throw std::invalid_argument("observable size does not match qubit count");
  if (s.pure()) {
    VectorXcd acc = VectorXcd::Zero(s.dim());
    for (int site = 0; site < s.n; ++site)
      acc += apply_local(s.amp, s.n, site, a.locals[site]);
    const double mean = s.amp.dot(acc).real();
    return acc.squaredNorm() - mean * mean;
  }
  const MatrixXcd arho = apply_additive(a, s.n, s.rho);
  const double mean = arho.trace().real();
  return apply_additive(a, s.n, arho).trace().real() - mean * mean;
}

SpinState reduced_state(const SpinState& s, const std::vector<int>& keep) {
  if (keep.empty()) throw std::invalid_argument("keep set must be nonempty");
  std::vector<int> k = keep;
  std::sort(k.begin(), k.end());
  if (std::adjacent_find(k.begin(), k.end()) != k.end())
    throw std::invalid_argument("duplicate site in keep set");
  for (int site : k)
    if (site < 0 || site >= s.n)
      throw std::invalid_argument("keep site out of range");
  const int nk = static_cast<int>(k.size());
  const long dim = s.dim(), kdim = 1L << nk, rdim = dim >> nk;
  std::vector<long> kee(dim), rest(dim);
  for (long i = 0; i < dim; ++i) {
    long ki = 0, ri = 0;
    int kpos = 0;
    for (int m = 0; m < s.n; ++m) {
      const int b = bit_at(i, s.n, m);
      if (kpos < nk && k[kpos] == m) {
        ki = (ki << 1) | b;
        ++kpos;
      } else {
        ri = (ri << 1) | b;
      }
    }
    kee[i] = ki;
    rest[i] = ri;
  }
  MatrixXcd out = MatrixXcd::Zero(kdim, kdim);
  if (s.pure()) {
    MatrixXcd gathered = MatrixXcd::Zero(kdim, rdim);
    for (long i = 0; i < dim; ++i) gathered(kee[i], rest[i]) = s.amp[i];
    out = gathered * gathered.adjoint();
  } else {
    for (long i = 0; i < dim; ++i)
      for (long j = 0; j < dim; ++j)
        if (rest[i] == rest[j]) out(kee[i], kee[j]) += s.rho(i, j);
  }
  SpinState r;
  r.n = nk;
  r.rho = std::move(out);
  return r;
}

MatrixXcd additive_matrix(const AdditiveObservable& a, int n) {
  validate_observable(a);
  if (static_cast<int>(a.locals.size()) != n)
    throw std::invalid_argument("observable size does not match qubit count");
  if (n > 10)
    throw std::invalid_argument("dense additive observable limited to 10 sites");
  const long d = 1L << n;
  MatrixXcd out = MatrixXcd::Zero(d, d);
  for (int site = 0; site < n; ++site) {
    MatrixXcd term = MatrixXcd::Identity(1, 1);
    for (int m = 0; m < n; ++m)
      term = linalg::kron(term, m == site
                                    ? MatrixXcd(a.locals[site])
                                    : MatrixXcd(Matrix2cd::Identity()));
    out += term;
  }
  return out;
}

}  // namespace macroq::spin
