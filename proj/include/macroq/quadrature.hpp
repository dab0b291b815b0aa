#pragma once

#include <Eigen/Dense>

namespace macroq::quad {

struct Rule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// n-point Gauss-Legendre rule mapped onto [a, b].
Rule gauss_legendre(int n, double a, double b);

// n-point Gauss-Laguerre rule with the e^{-t} factor folded back into the
// weights, i.e. sum_i w_i f(t_i) approximates the plain integral of f over
// (0, inf) for integrands with (sub-)exponential decay.  Weights are computed
// through the half-exponential-scaled recurrence so no underflow occurs even
// for n in the hundreds.
Rule gauss_laguerre_scaled(int n);

// Position-representation oscillator eigenfunctions for the x = a + a^dag
// scaling (vacuum variance 1): psi_0 = (2*pi)^{-1/4} exp(-x^2/4), and
// psi_{n+1} = (x psi_n - sqrt(n) psi_{n-1}) / sqrt(n+1).  Row n of the result
// holds psi_n evaluated on xs, n = 0 .. n_levels-1.
Eigen::MatrixXd hermite_functions(int n_levels, const Eigen::VectorXd& xs);

}  // namespace macroq::quad
