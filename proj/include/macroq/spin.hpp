#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace macroq::spin {

using cx = std::complex<double>;
using Eigen::Matrix2cd;
using Eigen::MatrixXcd;
using Eigen::Vector2cd;
using Eigen::VectorXcd;

inline constexpr int kMaxQubits = 12;

// Site 0 carries the most significant bit of the basis index.
struct SpinState {
  int n = 0;
  VectorXcd amp;  // nonempty iff the state is pure
  MatrixXcd rho;  // used otherwise
  bool pure() const { return amp.size() > 0; }
  long dim() const { return 1L << n; }
};

SpinState pure_state(int n, VectorXcd amp);
SpinState density_state(int n, MatrixXcd rho);
SpinState basis(int n, unsigned long bits);
// Throws std::runtime_error on broken normalization/Hermiticity/PSD.
void validate(const SpinState& s);
MatrixXcd to_density(const SpinState& s);

// One Hermitian local term per site, each with spectrum inside [-1, 1].
// The optional grouping partitions sites for bookkeeping by consumers that
// treat blocks of sites as single constituents; it does not change the
// operator sum.
struct AdditiveObservable {
  std::vector<Matrix2cd> locals;
  std::vector<std::vector<int>> grouping;
};
void validate_observable(const AdditiveObservable& a);

struct ProjectorSpec {
  MatrixXcd matrix;
};
// Hermitian idempotent within 1e-9.
void validate_projector(const ProjectorSpec& p);

// E(rho) = p0 rho + (1-p0) sz rho sz on every site independently; scales
// entry (i,j) by (2 p0 - 1)^hamming(i xor j). Keeps pure inputs pure only
// at p0 = 1.
SpinState dephase_each(const SpinState& s, double p0);
// The same entrywise map on an arbitrary operator block. The map is diagonal
// in the computational dyad basis, so it acts on non-Hermitian cross blocks
// (branch dyads |A><B|) exactly as on densities.
MatrixXcd dephase_block(const MatrixXcd& block, int n, double p0);

// |<a| rho |b>| for product labels; the coherence-block weight between the
// two designated product states. Labels as bit strings ("0010") or as one
// normalized 2-vector per site.
double offdiag_trace_norm(const SpinState& s, const std::string& block_a,
                          const std::string& block_b);
double offdiag_trace_norm(const SpinState& s,
                          const std::vector<Vector2cd>& block_a,
                          const std::vector<Vector2cd>& block_b);

double additive_mean(const SpinState& s, const AdditiveObservable& a);
double variance(const SpinState& s, const AdditiveObservable& a);

SpinState reduced_state(const SpinState& s, const std::vector<int>& keep);

// op applied to one site of a pure amplitude vector.
VectorXcd apply_local(const VectorXcd& amp, int n, int site,
                      const Matrix2cd& op);
// Dense sum of embedded locals; guarded to n <= 10 to bound memory.
MatrixXcd additive_matrix(const AdditiveObservable& a, int n);

}  // namespace macroq::spin
