#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace macroq::fock {

using cx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

long total_dim(const std::vector<int>& dims);
// Row-major layout: mode 0 carries the largest stride.
std::vector<long> mode_strides(const std::vector<int>& dims);

// Automatic cutoff for a mode holding mean photon number nbar.
int auto_cutoff(double nbar);

struct FockPureState {
  std::vector<int> dims;  // per-mode truncation dimensions
  VectorXcd amp;          // length prod(dims)
  int modes() const { return static_cast<int>(dims.size()); }
  long dim() const { return amp.size(); }
};

struct DensityOperator {
  std::vector<int> dims;
  MatrixXcd rho;
  int modes() const { return static_cast<int>(dims.size()); }
  long dim() const { return rho.rows(); }
};

struct LossTrajectory {
  std::vector<double> tau_grid;
  std::vector<DensityOperator> states;
};

// Throws std::runtime_error when the stated invariants fail
// (norm within 1e-10; Hermitian 1e-10 / trace 1e-9 / eigenvalues >= -1e-9).
void validate(const FockPureState& s);
void validate(const DensityOperator& s);

// Population of the top two Fock levels of one mode; the tail-tolerance
// subject of the truncation policy.
double mode_tail_mass(const FockPureState& s, int mode);
double mode_tail_mass(const DensityOperator& s, int mode);
void require_tail(const FockPureState& s, double tol = 1e-8);
void require_tail(const DensityOperator& s, double tol = 1e-8);

FockPureState basis_state(const std::vector<int>& dims,
                          const std::vector<int>& occupation);
DensityOperator to_density(const FockPureState& s);

// Single-mode matrices on a d-dimensional truncation.
MatrixXcd annihilation(int d);
MatrixXcd creation(int d);
MatrixXcd number_operator(int d);
// exp(alpha a+ - alpha* a); requires |alpha|^2 + 5|alpha| + 4 <= d.
MatrixXcd displacement(int d, cx alpha);
// exp((z* a^2 - z a+^2)/2); x = a + a+ variance of S(r)|0> is e^{-2r}.
MatrixXcd squeezing(int d, cx z);
// exp(theta (a+ b - a b+)) with theta = arccos(sqrt(T)), on the d*d
// two-mode product space (both modes truncated at d).
MatrixXcd beam_splitter(int d, double transmissivity);
// Max-norm deviation of U U+ from identity.
double unitarity_defect(const MatrixXcd& u);

// An operator acting on one or two named modes of a larger register.
struct ModeOperator {
  std::vector<int> acts_on;
  MatrixXcd mat;
};

ModeOperator ladder(const std::vector<int>& dims, int mode, bool create);
ModeOperator displace(const std::vector<int>& dims, int mode, cx alpha);
ModeOperator squeeze(const std::vector<int>& dims, int mode, cx z);
ModeOperator beam_splitter_op(const std::vector<int>& dims, int mode_a,
                              int mode_b, double transmissivity);

// psi -> O psi. Non-unitary O leaves the result unnormalized unless
// renormalize is set (throws on zero norm in that case).
FockPureState apply(const ModeOperator& op, const FockPureState& s,
                    bool renormalize = false);
// rho -> O rho O+ (no renormalization).
DensityOperator sandwich(const ModeOperator& op, const DensityOperator& s);

double mean_photon(const FockPureState& s);
double mean_photon(const DensityOperator& s);
double mode_mean_photon(const FockPureState& s, int mode);
double mode_mean_photon(const DensityOperator& s, int mode);
cx mode_annihilation_mean(const FockPureState& s, int mode);
cx mode_annihilation_mean(const DensityOperator& s, int mode);
// Per-mode photon number distribution p(n).
Eigen::VectorXd photon_distribution(const FockPureState& s, int mode);

// d rho / d tau = sum_m a_m rho a_m+ - {a_m+ a_m, rho}/2 over the listed
// modes. Exact vectorized exponential when the superoperator dimension
// stays small, classic 4th-order stepping with step-doubling control
// (target 1e-8) otherwise. Result is re-Hermitized.
DensityOperator apply_loss(const DensityOperator& s, double tau);
DensityOperator apply_loss(const DensityOperator& s, double tau,
                           const std::vector<int>& modes);
LossTrajectory loss_trajectory(const DensityOperator& s,
                               const std::vector<double>& taus);

DensityOperator partial_trace(const DensityOperator& s,
                              const std::vector<int>& keep);
DensityOperator partial_trace(const FockPureState& s,
                              const std::vector<int>& keep);

double purity(const DensityOperator& s);
double von_neumann_entropy(const DensityOperator& s);
double trace_distance(const DensityOperator& a, const DensityOperator& b);
// Squared-overlap convention: equals |<a|b>|^2 for pure arguments.
double fidelity(const DensityOperator& a, const DensityOperator& b);
double fidelity(const FockPureState& a, const FockPureState& b);
double fidelity(const FockPureState& a, const DensityOperator& b);
cx overlap(const FockPureState& a, const FockPureState& b);

}  // namespace macroq::fock
