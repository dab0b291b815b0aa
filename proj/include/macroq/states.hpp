#pragma once

#include <complex>
#include <map>
#include <string>

#include "macroq/fock.hpp"
#include "macroq/spin.hpp"

// Builders for the benchmark states (optical superpositions, entangled spin
// registers) plus the three conditional preparation schemes.  Truncations are
// chosen automatically so that the top two Fock levels of every mode carry
// less than 1e-8 of the population; an explicit override bypasses the policy
// but is still sanity-checked at 1e-6.

namespace macroq::states {

using cx = std::complex<double>;

// ---- truncation policies ----

// Cutoff for content displaced by alpha: max of the mean-photon policy and
// the displacement-operator accuracy bound |a|^2 + 5|a| + 4.
int cutoff_for_alpha(cx alpha);

// Cutoff large enough that a squeezed vacuum (or squeezed single photon when
// with_photon is set) of parameter r keeps its two top Fock levels below
// 1e-9.  Uses the exact even/odd weight recurrences, not the Gaussian rule of
// thumb, because the squeezed tail is geometric with ratio tanh^2 r.
int squeezed_cutoff(double r, bool with_photon);

// ---- single-mode basics ----

fock::FockPureState vacuum_state(int cutoff);
fock::FockPureState coherent_state(cx alpha, int cutoff = 0);  // 0 = policy
fock::FockPureState number_state(int n, int cutoff = 0);
fock::FockPureState squeezed_vacuum_state(double r, int cutoff = 0);

// Normalized amplitudes of |alpha> on d levels (stable product recurrence).
Eigen::VectorXcd coherent_amplitudes(int d, cx alpha);

// ---- optical superpositions ----

// N_phi (|alpha> + e^{i phi} |-alpha>), N_phi^2 = 1 / (2 + 2 cos(phi) e^{-2|alpha|^2}).
fock::FockPureState superposed_coherent(cx alpha, double phi, int cutoff = 0);

// Two-mode entangled version N (|alpha,alpha> + e^{i phi} |-alpha,-alpha>).
fock::FockPureState entangled_coherent(cx alpha, double phi, int cutoff = 0);

// (|0>|alpha> + |1>|-alpha>)/sqrt(2): qubit in mode 0, field in mode 1.
fock::FockPureState hybrid_qubit_field(cx alpha, int cutoff = 0);

// (|10> + |01>)/sqrt(2) on two modes of the given dimension.
fock::FockPureState single_photon_entangled(int cutoff = 8);

// Single-photon entangled state with D(alpha) applied to mode 1, or to both
// modes when both_modes is set.
fock::FockPureState displaced_single_photon(cx alpha, bool both_modes = false,
                                            int cutoff = 0);

// Single-photon entangled state with S(r) applied to mode 1.
fock::FockPureState squeezed_single_photon(double r, int cutoff = 0);

// Polarization-entangled output of a strongly pumped parametric amplifier:
// a dual-rail micro qubit (modes 0, 1, dimension 2) against a macro pair of
// orthogonally polarized beams (modes 2, 3).  order_cap bounds the
// two-photon-pair order i, j <= order_cap in the amplifier expansion.
fock::FockPureState amplified_single_photon(double g, int order_cap = 40);

// ---- spin registers ----

spin::SpinState ghz_state(int n);
spin::SpinState product_plus(int n);

// N (|0...0> + |eps ... eps>) with |eps> = cos(eps)|0> + sin(eps)|1>,
// eps in (0, pi/2]; norm constant K = 2 (1 + cos^N eps).
spin::SpinState generalized_ghz(int n, double epsilon);

// Mixed GHZ with coherence knob Gamma in [0, 1].
spin::SpinState mixed_ghz(int n, double gamma);

// (2|0...0> + sum_k |1^k 0^{N-k}>) / sqrt(N + 4): a state whose pieces
// differ on every prefix, used for partition-based size measures.
spin::SpinState dn_state(int n);

// ((|00> + e^{i phi}|11>)/sqrt(2))^{tensor N}: N Bell pairs on 2N qubits.
spin::SpinState cooper_product(int n_pairs, double phi);

// ---- two-branch bosonic pair ----

// |A> = |N, 0>, |B> = sum_d sqrt(C(N,d)) cos^{N-d} sin^d |N-d, d>: the
// branch pair behind the binomial branch-distance size measure.
struct BranchPair {
  fock::FockPureState a;
  fock::FockPureState b;
};
BranchPair marquardt_pair(int n, double theta);

// ---- conditional preparation schemes ----

struct SchemeResult {
  fock::DensityOperator state;    // conditional output (always set)
  fock::FockPureState pure_view;  // exact when pure, else leading eigenvector
  double purity = 1.0;
  double probability = 1.0;       // heralding probability (weight for ideal ladder ops)
  std::map<std::string, double> metadata;
};

// n_sub ideal annihilation events on a squeezed vacuum S(r)|0>, normalized.
// probability reports ||a^n S(r)|0>||^2 / n_sub! (the standard heralding
// weight convention for ideal ladder conditioning).
SchemeResult scheme_photon_subtraction(double r, int n_sub);

// |n> and an auxiliary squeezed vacuum S(aux_squeeze)|0> meet on a 50:50
// beam splitter; a homodyne x-measurement on arm 1 conditions on |x| < x0.
// The window POVM element is integrated on a 2001-point grid over [-12,12].
SchemeResult scheme_homodyne_conditioning(int n, double x0, double aux_squeeze);

// Conditional amplification of a coherent-state superposition: two equal
// superposed inputs plus an auxiliary |sqrt(2) alpha> pass through two 50:50
// beam splitters and both on/off detectors must click.  Output approaches
// the superposition at amplitude sqrt(2) alpha.
SchemeResult scheme_amplification(double alpha);

// ---- serialized state description (CLI unit) ----

struct StateSpec {
  std::string kind;
  cx alpha{0.0, 0.0};
  double phi = 0.0;
  double r = 0.0;
  double g = 0.0;
  double epsilon = 0.0;
  double gamma = 1.0;   // mixed GHZ coherence
  double theta = 0.0;
  int n = 0;            // photon number / qubit count / pair count
  int order_cap = 40;
  int truncation = 0;   // fock cutoff override; 0 = automatic
  bool both_modes = false;
};

struct BuiltState {
  bool is_fock = true;
  fock::FockPureState fockp;
  spin::SpinState spins;
};

// Dispatch on spec.kind.  Fock kinds: vacuum, coherent, fock,
// squeezed_vacuum, scs, ecs, hybrid, spe, displaced_spe, squeezed_spe,
// qiopa.  Spin kinds: ghz, product_plus, generalized_ghz, mixed_ghz, dn,
// cooper.  Unknown kinds throw.
BuiltState build_state(const StateSpec& spec);

}  // namespace macroq::states
