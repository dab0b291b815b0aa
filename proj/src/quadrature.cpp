#include "macroq/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace macroq::quad {

Rule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double xm = 0.5 * (b + a);
  const double xl = 0.5 * (b - a);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev estimate of the i-th root, then Newton on P_n.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    const double w = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    r.nodes[i] = xm - xl * z;
    r.nodes[n - 1 - i] = xm + xl * z;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

Rule gauss_laguerre_scaled(int n) {
  if (n < 1) throw std::invalid_argument("gauss_laguerre_scaled: need n >= 1");
  // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix of the
  // Laguerre recurrence (diag 2k+1, off-diag k).
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    jac(k, k) = 2.0 * k + 1.0;
    if (k > 0) {
      jac(k, k - 1) = k;
      jac(k - 1, k) = k;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac, Eigen::EigenvaluesOnly);
  Rule r;
  r.nodes = es.eigenvalues();
  r.weights.resize(n);
  // Standard weight w_i = t_i / ((n+1) L_{n+1}(t_i))^2.  Evaluating instead
  // l_k = L_k e^{-t/2} keeps every intermediate bounded (|l_k| <= 1) and
  // directly yields the e^{+t}-scaled weight t_i / ((n+1) l_{n+1}(t_i))^2.
  // The seed e^{-t/2} underflows double for the top nodes of large rules
  // (t ~ 4n), so the recurrence runs in extended precision.
  for (int i = 0; i < n; ++i) {
    const long double t = r.nodes[i];
    long double lm = std::exp(-0.5L * t);  // l_0
    long double lk = (1.0L - t) * lm;      // l_1
    for (int k = 1; k <= n; ++k) {
      const long double lp = ((2.0L * k + 1.0L - t) * lk - k * lm) / (k + 1.0L);
      lm = lk;
      lk = lp;
    }
    const long double d = (n + 1.0L) * lk;
    r.weights[i] = static_cast<double>(t / (d * d));
  }
  return r;
}

Eigen::MatrixXd hermite_functions(int n_levels, const Eigen::VectorXd& xs) {
  if (n_levels < 1) throw std::invalid_argument("hermite_functions: need n_levels >= 1");
  const Eigen::Index m = xs.size();
  Eigen::MatrixXd psi(n_levels, m);
  const double c0 = std::pow(2.0 * M_PI, -0.25);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double x = xs[k];
    psi(0, k) = c0 * std::exp(-0.25 * x * x);
    if (n_levels > 1) psi(1, k) = x * psi(0, k);
    for (int n = 1; n + 1 < n_levels; ++n)
      psi(n + 1, k) = (x * psi(n, k) - std::sqrt(double(n)) * psi(n - 1, k)) / std::sqrt(n + 1.0);
  }
  return psi;
}

}  // namespace macroq::quad
