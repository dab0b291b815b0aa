#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

namespace macroq::linalg {

inline Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& m) {
  return 0.5 * (m + m.adjoint());
}

// Sum of singular values; valid for arbitrary (non-Hermitian) blocks.
inline double trace_norm(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues().sum();
}

// 0.5 * tr|a - b| for Hermitian a, b (eigenvalue route, cheaper than SVD).
inline double trace_distance_herm(const Eigen::MatrixXcd& a,
                                  const Eigen::MatrixXcd& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a - b,
                                                     Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// -sum p ln p over the spectrum; entries below the floor contribute zero.
inline double entropy_from_eigs(const Eigen::VectorXd& p,
                                double floor = 1e-12) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > floor) s -= p[i] * std::log(p[i]);
  return s;
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a,
                             const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace macroq::linalg
