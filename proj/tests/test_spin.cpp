#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "macroq/linalg.hpp"
#include "macroq/spin.hpp"

using namespace macroq::spin;

namespace {

const Matrix2cd kSz = (Matrix2cd() << 1, 0, 0, -1).finished();
const Matrix2cd kSx = (Matrix2cd() << 0, 1, 1, 0).finished();

SpinState ghz(int n) {
  VectorXcd v = VectorXcd::Zero(1L << n);
  v[0] = v[(1L << n) - 1] = 1.0 / std::sqrt(2.0);
  return pure_state(n, std::move(v));
}

SpinState plus_product(int n) {
  VectorXcd v = VectorXcd::Constant(1L << n, 1.0 / std::sqrt(1L << n));
  return pure_state(n, std::move(v));
}

SpinState random_pure(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  VectorXcd v(1L << n);
  for (long i = 0; i < v.size(); ++i) v[i] = cx(g(rng), g(rng));
  v /= v.norm();
  return pure_state(n, std::move(v));
}

AdditiveObservable all_sites(int n, const Matrix2cd& m) {
  return {std::vector<Matrix2cd>(n, m), {}};
}

}  // namespace

TEST_CASE("construction guards") {
  CHECK_THROWS_AS(basis(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(basis(13, 0), std::invalid_argument);
  CHECK_THROWS_AS(basis(2, 4), std::invalid_argument);
  CHECK_THROWS_AS(pure_state(2, VectorXcd::Zero(3)), std::invalid_argument);
  VectorXcd bad = VectorXcd::Zero(4);
  bad[0] = 0.7;
  CHECK_THROWS_AS(pure_state(2, std::move(bad)), std::runtime_error);
  // site 0 is the most significant bit
  auto s = basis(3, 0b100);
  CHECK(s.amp[4] == cx(1.0));
}

TEST_CASE("observable and projector validation") {
  CHECK_NOTHROW(validate_observable(all_sites(3, kSz)));
  Matrix2cd skew;
  skew << 0, 1, 0, 0;
  CHECK_THROWS_AS(validate_observable({{skew}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(validate_observable({{Matrix2cd(1.5 * kSz)}, {}}),
                  std::invalid_argument);
  AdditiveObservable grouped = all_sites(4, kSz);
  grouped.grouping = {{0, 1}, {2, 3}};
  CHECK_NOTHROW(validate_observable(grouped));
  grouped.grouping = {{0, 1}, {1, 2, 3}};
  CHECK_THROWS_AS(validate_observable(grouped), std::invalid_argument);
  grouped.grouping = {{0, 1}, {3}};
  CHECK_THROWS_AS(validate_observable(grouped), std::invalid_argument);

  ProjectorSpec p{MatrixXcd::Identity(4, 4)};
  CHECK_NOTHROW(validate_projector(p));
  p.matrix(0, 0) = 0.5;
  CHECK_THROWS_AS(validate_projector(p), std::invalid_argument);
}

TEST_CASE("dephasing map basics") {
  auto g = ghz(3);
  auto same = dephase_each(g, 1.0);
  CHECK(same.pure());

  // p0 = 1/2 on |+> gives the maximally mixed qubit
  VectorXcd plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  auto mixed = dephase_each(pure_state(1, std::move(plus)), 0.5);
  CHECK((mixed.rho - 0.5 * MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-12);

  // off-diagonal scaled by (2 p0 - 1) per differing site, diagonal untouched
  const double p0 = 0.8;
  auto deph = dephase_each(g, p0);
  const MatrixXcd before = to_density(g);
  CHECK(std::abs(deph.rho(0, 0) - before(0, 0)) < 1e-14);
  CHECK(std::abs(deph.rho(0, 7) - before(0, 7) * std::pow(0.6, 3)) < 1e-14);
  CHECK_NOTHROW(validate(deph));
  CHECK_THROWS_AS(dephase_each(g, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(dephase_each(g, 1.1), std::invalid_argument);
}

TEST_CASE("dephasing is trace preserving and composes") {
  auto s = random_pure(4, 5);
  auto once = dephase_each(s, 0.9);
  CHECK(std::abs(once.rho.trace() - cx(1.0)) < 1e-12);
  auto twice = dephase_each(once, 0.9);
  // two applications equal one map with squared off-diagonal factor
  const double eff = 0.8 * 0.8;
  const double p_eff = (1.0 + eff) / 2.0;
  auto direct = dephase_each(s, p_eff);
  CHECK((twice.rho - direct.rho).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("coherence block weight") {
  auto g = ghz(4);
  CHECK(offdiag_trace_norm(g, "0000", "1111") == doctest::Approx(0.5));
  CHECK(offdiag_trace_norm(g, "0000", "0111") == doctest::Approx(0.0));
  CHECK_THROWS_AS(offdiag_trace_norm(g, "000", "1111"),
                  std::invalid_argument);
  CHECK_THROWS_AS(offdiag_trace_norm(g, "0a00", "1111"),
                  std::invalid_argument);

  // per-qubit factor f on a GHZ coherence accumulates as f^N
  const double p0 = 0.85, f = 2.0 * p0 - 1.0;
  auto deph = dephase_each(g, p0);
  CHECK(offdiag_trace_norm(deph, "0000", "1111") ==
        doctest::Approx(0.5 * std::pow(f, 4)).epsilon(1e-12));

  // fully dephased: no coherence left
  auto dead = dephase_each(g, 0.5);
  CHECK(offdiag_trace_norm(dead, "0000", "1111") < 1e-15);

  // rotated product labels: <0000|rho|eps^4> = (cos^4 + sin^4)/2 for GHZ
  const double eps = 0.3;
  std::vector<Vector2cd> zero(4), tilted(4);
  for (int m = 0; m < 4; ++m) {
    zero[m] << 1.0, 0.0;
    tilted[m] << std::cos(eps), std::sin(eps);
  }
  const double expect =
      0.5 * (std::pow(std::cos(eps), 4) + std::pow(std::sin(eps), 4));
  CHECK(offdiag_trace_norm(g, zero, tilted) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("variance closed forms") {
  for (int n : {2, 4, 6}) {
    CHECK(variance(ghz(n), all_sites(n, kSz)) ==
          doctest::Approx(double(n) * n).epsilon(1e-10));
    CHECK(variance(plus_product(n), all_sites(n, kSz)) ==
          doctest::Approx(double(n)).epsilon(1e-10));
    // |+>^n is an eigenstate of sum sx
    CHECK(variance(plus_product(n), all_sites(n, kSx)) ==
          doctest::Approx(0.0).epsilon(1e-10));
  }
  CHECK_THROWS_AS(variance(ghz(3), all_sites(4, kSz)), std::invalid_argument);
}

TEST_CASE("variance: dense oracle, phase and permutation invariance") {
  auto s = random_pure(5, 17);
  auto obs = all_sites(5, kSz);
  obs.locals[2] = kSx;  // break homogeneity
  const MatrixXcd a = additive_matrix(obs, 5);
  const MatrixXcd rho = to_density(s);
  const double mean = (a * rho).trace().real();
  const double dense_var = (a * a * rho).trace().real() - mean * mean;
  CHECK(variance(s, obs) == doctest::Approx(dense_var).epsilon(1e-10));

  SpinState phased = s;
  phased.amp *= std::exp(cx(0, 0.7));
  CHECK(variance(phased, obs) == doctest::Approx(variance(s, obs)));

  // density route agrees with the pure route
  auto as_density = density_state(5, to_density(s));
  CHECK(variance(as_density, obs) ==
        doctest::Approx(variance(s, obs)).epsilon(1e-9));

  // permutation-symmetric state: swapping local terms changes nothing
  auto g = ghz(4);
  AdditiveObservable mixed_axes = all_sites(4, kSz);
  mixed_axes.locals[0] = kSx;
  AdditiveObservable swapped = mixed_axes;
  std::swap(swapped.locals[0], swapped.locals[3]);
  CHECK(variance(g, mixed_axes) ==
        doctest::Approx(variance(g, swapped)).epsilon(1e-10));
}

TEST_CASE("reduced states") {
  auto r = reduced_state(ghz(3), {0});
  CHECK((r.rho - 0.5 * MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-12);

  // product state reduces to the product of kept factors
  std::vector<Vector2cd> kets(4);
  for (int m = 0; m < 4; ++m) kets[m] << std::cos(0.2 + m), std::sin(0.2 + m);
  VectorXcd v(16);
  for (long i = 0; i < 16; ++i) {
    cx a = 1.0;
    for (int m = 0; m < 4; ++m) a *= kets[m][(i >> (3 - m)) & 1];
    v[i] = a;
  }
  auto prod = pure_state(4, std::move(v));
  auto keep13 = reduced_state(prod, {1, 3});
  MatrixXcd expect = macroq::linalg::kron(kets[1] * kets[1].adjoint(),
                                          kets[3] * kets[3].adjoint());
  CHECK((keep13.rho - expect).cwiseAbs().maxCoeff() < 1e-12);

  // generalized GHZ single-site reduction against the closed form
  const int n = 5;
  const double eps = 0.3;
  const double c = std::cos(eps), s_ = std::sin(eps);
  VectorXcd g = VectorXcd::Zero(1L << n);
  g[0] = 1.0;
  for (long i = 0; i < (1L << n); ++i) {
    double w = 1.0;
    for (int m = 0; m < n; ++m) w *= ((i >> (n - 1 - m)) & 1) ? s_ : c;
    g[i] += w;
  }
  g /= g.norm();
  auto red = reduced_state(pure_state(n, std::move(g)), {0});
  const double k2 = 2.0 * (1.0 + std::pow(c, n));
  const double off = s_ * (c + std::pow(c, n - 1)) / k2;
  CHECK(red.rho(0, 1).real() == doctest::Approx(off).epsilon(1e-10));
  CHECK(red.rho(0, 1).imag() == doctest::Approx(0.0));

  // trace preserved, density route agrees
  auto red_d = reduced_state(density_state(3, to_density(ghz(3))), {0, 2});
  CHECK(std::abs(red_d.rho.trace() - cx(1.0)) < 1e-12);
  auto red_p = reduced_state(ghz(3), {0, 2});
  CHECK((red_d.rho - red_p.rho).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(reduced_state(ghz(3), {}), std::invalid_argument);
  CHECK_THROWS_AS(reduced_state(ghz(3), {3}), std::invalid_argument);
  CHECK_THROWS_AS(reduced_state(ghz(3), {1, 1}), std::invalid_argument);
}

TEST_CASE("reduced state linearity under mixing") {
  auto a = to_density(random_pure(3, 1));
  auto b = to_density(random_pure(3, 2));
  auto mix = density_state(3, 0.3 * a + 0.7 * b);
  auto lhs = reduced_state(mix, {1});
  MatrixXcd rhs = 0.3 * reduced_state(density_state(3, a), {1}).rho +
                  0.7 * reduced_state(density_state(3, b), {1}).rho;
  CHECK((lhs.rho - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dense additive matrix guard") {
  CHECK_THROWS_AS(additive_matrix(all_sites(11, kSz), 11),
                  std::invalid_argument);
  const MatrixXcd m = additive_matrix(all_sites(2, kSz), 2);
  Eigen::Vector4cd diag;
  diag << 2, 0, 0, -2;
  CHECK((m - MatrixXcd(diag.asDiagonal())).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("cross-block dephasing and decay-rate ratio across tilt angles") {
  // Branch dyad |A><B| evolved entrywise; trace-norm decay is e^{-gamma N t}
  // for the plain GHZ pair and ~N eps^2 slower for the tilted pair.
  const int n = 8;
  const double eps = 0.1, gamma = 1.0;
  const long dim = 1L << n;

  // plain pair: dyad |0..0><1..1| keeps exactly f^N of its norm
  MatrixXcd dyad0 = MatrixXcd::Zero(dim, dim);
  dyad0(0, dim - 1) = 1.0;
  const double f = std::exp(-gamma * 0.3);
  auto evolved = dephase_block(dyad0, n, (1.0 + f) / 2.0);
  CHECK(macroq::linalg::trace_norm(evolved) ==
        doctest::Approx(std::pow(f, n)).epsilon(1e-10));

  // tilted pair |0^n><eps^n|
  VectorXcd tilt(dim);
  for (long i = 0; i < dim; ++i) {
    double w = 1.0;
    for (int m = 0; m < n; ++m)
      w *= ((i >> (n - 1 - m)) & 1) ? std::sin(eps) : std::cos(eps);
    tilt[i] = w;
  }
  VectorXcd e0 = VectorXcd::Zero(dim);
  e0[0] = 1.0;

  auto fit_rate = [&](const MatrixXcd& dyad, double window) {
    // least squares slope of ln trace-norm over 20 points in [0, window]
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int pts = 20;
    for (int k = 1; k <= pts; ++k) {
      const double t = window * k / pts;
      const double p0 = (1.0 + std::exp(-gamma * t)) / 2.0;
      const double cnow =
          macroq::linalg::trace_norm(dephase_block(dyad, n, p0));
      sx += t;
      sy += std::log(cnow);
      sxx += t * t;
      sxy += t * std::log(cnow);
    }
    return -(pts * sxy - sx * sy) / (pts * sxx - sx * sx);
  };

  const double window = 0.02 / gamma;
  const double rate_pi2 = fit_rate(dyad0, window);
  CHECK(rate_pi2 == doctest::Approx(gamma * n).epsilon(1e-6));
  const MatrixXcd dyad_tilt = e0 * tilt.adjoint();
  const double rate_eps = fit_rate(dyad_tilt, window);
  CHECK(rate_eps / rate_pi2 == doctest::Approx(eps * eps).epsilon(0.05));
}
