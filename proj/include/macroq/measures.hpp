#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "macroq/fock.hpp"
#include "macroq/phase.hpp"
#include "macroq/report.hpp"
#include "macroq/spin.hpp"

namespace macroq::measures {

using cx = std::complex<double>;

// ---- entanglement depth from reduced entropies ----

// Subset selection when the state is not permutation symmetric.  automatic
// picks first_n for symmetric states and maximize otherwise; the choice is
// recorded in the profile metadata.
enum class SubsetPolicy { automatic, first_n, maximize, minimize };

struct DisconnectivityProfile {
  std::vector<double> delta;  // delta[k] belongs to subset size k+1; delta[0] = 0
  int depth = 1;              // largest size attaining the minimum of delta
  std::map<std::string, double> metadata;
};

// delta_n = S_n / min over bipartitions (X, X^c) of the chosen n-subset of
// (S_X + S_{X^c}), entropies taken on reduced states of the full input.
// 0/0 counts as 1 (uncorrelated pure marginals).  Ties in the depth minimum
// are resolved toward larger n at 1e-9 resolution.  Guarded to 10 sites.
DisconnectivityProfile disconnectivity(
    const spin::SpinState& s, SubsetPolicy policy = SubsetPolicy::automatic);
// Same profile over the modes of a multi-mode density operator; the total
// Hilbert dimension is capped at 4096.
DisconnectivityProfile disconnectivity(
    const fock::DensityOperator& s,
    SubsetPolicy policy = SubsetPolicy::automatic);

// ---- decoherence-scaling effective size ----

enum class DurMode { analytic, simulated };

// Effective size of N (|0...0> + |eps...eps>): the single-site dephasing
// rate that reproduces the decay of the cross-branch coherence, in units of
// the ideal-GHZ rate.  simulated evolves the branch dyad under dephase_block
// over a short window (0.02 / gamma, 20 points) and fits the log trace norm;
// analytic returns the closed form (N eps^2 in the small-angle regime).
MeasureReport dur_effective_size(int n, double epsilon, double gamma,
                                 DurMode mode);

// ---- interference-utility size (overlap decay under rotation) ----

// Ratio theta_sing / theta_sup for the overlap F(theta) = |<psi|e^{i theta
// A}|psi>|: theta_sup is the first genuine zero of F (bracketed scan +
// golden-section, zero means < 1e-4 with a revival after it), theta_sing =
// pi / (single-branch width), the scale on which one branch alone would kill
// the overlap.  The branch width is the weighted std of the upper half of
// the spectral distribution about its own mean.  No zero inside the window
// (0, theta_sing] reports value 0 with metadata no_superposition = 1.
MeasureReport bjork_mana(const Eigen::VectorXd& values,
                         const Eigen::VectorXd& weights);
// Spectral distribution of a Hermitian single-mode operator in the state.
MeasureReport bjork_mana(const fock::FockPureState& s,
                         const Eigen::MatrixXcd& obs);
MeasureReport bjork_mana(const spin::SpinState& s,
                         const spin::AdditiveObservable& obs);

// ---- index p: variance scaling of additive observables ----

// Largest variance of sum_i u_i . sigma_i over unit local Bloch vectors.
// Permutation-symmetric states use the exact collective-direction shortcut
// (top eigenvalue of the 3x3 collective covariance); everything else runs
// per-site coordinate ascent with 8 seeded restarts.
double max_additive_variance(const spin::SpinState& s, unsigned seed = 1234);

// Fits log Var_max against log N over the family; the slope is the index.
// Needs at least 3 distinct sizes.
MeasureReport index_p_estimate(
    const std::function<spin::SpinState(int)>& family,
    const std::vector<int>& sizes, unsigned seed = 1234);

// ---- index q: double-commutator correlator ----

// <[A, [A, eta]]> evaluated both as a dense double commutator and as
// sum_{ij} (a_i - a_j)^2 eta_ij rho_ji in the eigenbasis of A; the two
// routes must agree within 1e-8 or the call throws.
MeasureReport index_q_correlator(const spin::SpinState& s,
                                 const spin::AdditiveObservable& a,
                                 const spin::ProjectorSpec& eta);

// ---- quadrature-partition inequality ----

struct InequalityVerdict {
  double lhs = 0.0;
  double bound = 1.0;
  double s = 0.0;
  bool violated = false;  // lhs < bound - 1e-6
  // components of the left-hand side
  double var_ave_x = 0.0;
  double p0 = 0.0;
  double delta_term = 0.0;
  double var_p = 0.0;
};

// Partition the x axis at center +- S/2 into I = -1, 0, +1 regions and test
// (Delta^2_ave x + P0 delta) Delta^2 p >= 1 with delta = (mu_+ + S/2)^2 +
// (mu_- - S/2)^2 + S/2 + Delta^2_+ x + Delta^2_- x (means taken relative to
// the center).  The bare S/2 inside delta is kept verbatim from the source
// inequality; include_bare_s_half = false drops it.  Regions with no mass
// contribute nothing.  px must be the angle-0 marginal and pp the angle-pi/2
// one, in the x = a + a+ convention whose vacuum saturates the bound.
InequalityVerdict cavalcanti_reid(const phase::QuadratureDistribution& px,
                                  const phase::QuadratureDistribution& pp,
                                  double s, bool include_bare_s_half = true,
                                  double center = 0.0);

// Largest S in the grid whose verdict is a violation, 0 if none violates.
// An empty grid means S = 1.0, 1.25, ..., 8.0.
MeasureReport scan_S_max(const fock::DensityOperator& state,
                         std::vector<double> s_grid = {},
                         bool include_bare_s_half = true);

// ---- measurement-count size ----

// C_delta = N / n_min where n_min is the fewest sites whose reduced states
// distinguish the branches with probability P(n) = 1/2 + tracenorm(rho_A^(n)
// - rho_B^(n))/4 >= 1 - delta.  Symmetric branch pairs reduce the first n
// sites; otherwise P(n) is maximized over all n-subsets (guarded to 10
// sites).  If even n = N misses the threshold the size is reported as value
// 0 with metadata undefined = 1.
MeasureReport korsbakken_size(const spin::SpinState& branch_a,
                              const spin::SpinState& branch_b, double delta);

// ---- branch-distance size ----

// Mean number of single-particle transfers separating the two branches of
// the binomial pair at angle theta: sum_d d |beta_d|^2 = N sin^2 theta.
MeasureReport marquardt_size(int n, double theta);

// ---- Fisher information ----

// Quantum Fisher information 2 sum_{ij} (pi_i - pi_j)^2 / (pi_i + pi_j)
// |A_ij|^2 through the spectral decomposition of rho; 4 Var for pure states.
double qfi(const spin::SpinState& s, const spin::AdditiveObservable& a);

// max_A F(rho, A) / (4 n) over additive observables with unit local terms
// (same optimizer as index p); 1 for product states, N for GHZ.
MeasureReport fisher_neff(const spin::SpinState& s, unsigned seed = 1234);

// ---- detector-resolution size ----

// Gaussian pointer that reads the photon number with rms blur sigma.
struct DetectorModel {
  double sigma = 0.0;  // >= 0
  double p_g = 0.75;   // target guess probability, in (1/2, 1)
};

// P^sigma = (1 + D)/2 where D is the total-variation distance between the
// blurred photon-number distributions of the two branches.
double detector_probability(const fock::FockPureState& branch_a,
                            const fock::FockPureState& branch_b,
                            const DetectorModel& d);

// Largest sigma at which the branches can still be told apart with
// probability p_g: monotone bisection to 1e-3 in sigma.  Branches that
// cannot be distinguished even at sigma = 0 report value 0 with metadata
// indistinct = 1.
MeasureReport sekatski_size(const fock::FockPureState& branch_a,
                            const fock::FockPureState& branch_b, double p_g);

}  // namespace macroq::measures
