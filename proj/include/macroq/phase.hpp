#pragma once

#include <complex>
#include <vector>

#include "macroq/fock.hpp"
#include "macroq/report.hpp"

// Characteristic functions, Wigner functions, quadrature marginals, and the
// quadrature-fluctuation measure I via two independent routes.
//
// Conventions: chi(xi) = Tr[rho exp(xi a+ - xi* a)].  The Wigner function
// lives on the standard phase plane beta = (x + ip)/sqrt(2) where x = a + a+
// (so W_vac = exp(-|beta|^2)/pi, plain Lebesgue integral 1).  Quadrature
// marginals use the x = a e^{-i theta} + a+ e^{i theta} scaling directly
// (vacuum variance 1).

namespace macroq::phase {

using cx = std::complex<double>;

// <m|D(alpha)|n> on a d-level truncation: exact full-space matrix elements
// (not exp of the truncated generator), evaluated by a stable per-diagonal
// Laguerre-function recurrence with every intermediate bounded.
Eigen::MatrixXcd displacement_matrix(int d, cx alpha);

// chi at a single multi-index point; one xi entry per mode.  The density
// overload accepts at most two modes; the pure overload accepts any count.
cx characteristic_function(const fock::DensityOperator& s, const std::vector<cx>& xi);
cx characteristic_function(const fock::FockPureState& s, const std::vector<cx>& xi);

// chi sampled over a square grid in one mode's xi plane (other modes pinned
// at 0): values(i, j) = chi at xi = re[i] + i im[j].
struct CharacteristicGrid {
  int mode = 0;
  Eigen::VectorXd re, im;
  Eigen::MatrixXcd values;
  double extent = 0.0, spacing = 0.0;
};
CharacteristicGrid characteristic_grid(const fock::DensityOperator& s, int mode,
                                       double extent, int n);
// chi(0) = 1 within 1e-9 and |chi| <= 1 + 1e-9 everywhere.
void validate(const CharacteristicGrid& g);

struct WignerGrid {
  Eigen::VectorXd re, im;   // beta axes
  Eigen::MatrixXd values;   // values(i, j) = W(re[i] + i im[j])
};
// Single-mode states only.  extent 0 picks a coverage-policy default; the
// grid must integrate to 1 within 1e-4 or the call throws.
WignerGrid wigner(const fock::DensityOperator& s, double extent = 0.0, int n = 201);
double wigner_mass(const WignerGrid& g);

struct QuadratureDistribution {
  double angle = 0.0;
  Eigen::VectorXd xs;
  Eigen::VectorXd density;
};
// Born-rule density of x_theta = a e^{-i theta} + a+ e^{i theta} for a
// single-mode state, on the given grid (or an automatic one wide enough for
// any quadrature direction).
QuadratureDistribution quadrature_distribution(const fock::DensityOperator& s,
                                               double angle,
                                               const Eigen::VectorXd& xs);
QuadratureDistribution quadrature_distribution(const fock::DensityOperator& s,
                                               double angle);
// Integrates to 1 within 1e-6; density >= -1e-12.
void validate(const QuadratureDistribution& q);

// Quadrature-fluctuation measure, integral route: Gaussian-weighted polar
// product quadrature of (1/2 pi^M) int d^2xi sum_m (|xi_m|^2 - 1) |chi|^2,
// refined by node doubling until the delta drops below 1e-7 (that delta is
// the error estimate).  Supports one mode directly and two modes through a
// Schmidt factorization; three or more modes throw (the algebraic route is
// authoritative there).  remove_offset drops the "-1" (adds M/2 * purity).
MeasureReport measure_I_integral(const fock::DensityOperator& s,
                                 bool remove_offset = false);
MeasureReport measure_I_integral(const fock::FockPureState& s,
                                 bool remove_offset = false);

// Algebraic route: sum_m ( Tr[a+_m a_m rho^2] - Tr[a_m rho a+_m rho] ), the
// purity-decay form; reduces to sum_m (<n_m> - |<a_m>|^2) for pure states.
MeasureReport measure_I_algebraic(const fock::DensityOperator& s,
                                  bool remove_offset = false);
MeasureReport measure_I_algebraic(const fock::FockPureState& s,
                                  bool remove_offset = false);

}  // namespace macroq::phase
