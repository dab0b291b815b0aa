#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "macroq/measures.hpp"
#include "macroq/phase.hpp"
#include "macroq/states.hpp"

using namespace macroq;
using measures::SubsetPolicy;
using cx = std::complex<double>;

namespace {

const spin::Matrix2cd kSz = (spin::Matrix2cd() << 1, 0, 0, -1).finished();
const spin::Matrix2cd kSx = (spin::Matrix2cd() << 0, 1, 1, 0).finished();

spin::AdditiveObservable all_sites(int n, const spin::Matrix2cd& m) {
  return {std::vector<spin::Matrix2cd>(n, m), {}};
}

spin::SpinState random_pure(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  spin::VectorXcd v(1L << n);
  for (long i = 0; i < v.size(); ++i) v[i] = cx(g(rng), g(rng));
  v /= v.norm();
  return spin::pure_state(n, std::move(v));
}

spin::SpinState random_mixed(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  long d = 1L << n;
  spin::MatrixXcd m(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) m(i, j) = cx(g(rng), g(rng));
  spin::MatrixXcd rho = m * m.adjoint();
  rho /= rho.trace().real();
  return spin::density_state(n, std::move(rho));
}

spin::AdditiveObservable random_obs(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  std::vector<spin::Matrix2cd> locals(n);
  for (auto& m : locals) {
    double a = g(rng), b = g(rng), c = g(rng);
    double r = std::sqrt(a * a + b * b + c * c);  // unit spectrum contract
    m = (a * kSx + b * kSz +
         c * (spin::Matrix2cd() << 0, cx(0, -1), cx(0, 1), 0).finished()) /
        r;
  }
  return {std::move(locals), {}};
}

// GHZ with a local basis rotation on site 0; breaks permutation symmetry
// without changing any size measure.
spin::SpinState rotated_ghz(int n) {
  double s = 1.0 / std::sqrt(2.0);
  spin::Matrix2cd h = (spin::Matrix2cd() << s, s, s, -s).finished();
  auto g = states::ghz_state(n);
  return spin::pure_state(n, spin::apply_local(g.amp, n, 0, h));
}

spin::MatrixXcd ghz_projector(int n) {
  auto g = states::ghz_state(n);
  return g.amp * g.amp.adjoint();
}

// Position operator a + a^dag on d levels.
Eigen::MatrixXcd position_op(int d) {
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(d, d);
  for (int m = 0; m + 1 < d; ++m) {
    x(m, m + 1) = std::sqrt(m + 1.0);
    x(m + 1, m) = std::sqrt(m + 1.0);
  }
  return x;
}

Eigen::MatrixXcd kron_density(const Eigen::MatrixXcd& a,
                              const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

TEST_CASE("disconnectivity separates product, cat and decohered registers") {
  for (int n = 2; n <= 6; ++n) {
    auto r = measures::disconnectivity(states::ghz_state(n));
    CHECK(r.depth == n);
    auto& d = r.delta;
    REQUIRE(int(d.size()) == n);
    CHECK(d[0] == doctest::Approx(0.0));
    if (n >= 4) CHECK(d[n / 2 - 1] == doctest::Approx(0.5));  // S_k = ln 2 all k < n
    CHECK(d[n - 1] == doctest::Approx(0.0).epsilon(1e-9));
  }

  // Product states never pass the first level.
  spin::VectorXcd e0 = spin::VectorXcd::Zero(32);
  e0[0] = 1.0;
  CHECK(measures::disconnectivity(spin::pure_state(5, e0)).depth == 1);
  CHECK(measures::disconnectivity(states::product_plus(5)).depth == 1);

  // Partial dephasing keeps delta_N well above the pure-state dip.
  CHECK(measures::disconnectivity(states::mixed_ghz(3, 0.5)).depth == 1);
  CHECK(measures::disconnectivity(states::mixed_ghz(3, 1.0)).depth == 3);
  CHECK(measures::disconnectivity(states::generalized_ghz(4, 0.3)).depth == 4);

  // Asymmetric register exercises the subset search.
  auto rot = measures::disconnectivity(rotated_ghz(3), SubsetPolicy::maximize);
  CHECK(rot.depth == 3);
  CHECK(rot.metadata.at("symmetric") == 0);

  // A register of Bell pairs: every qubit is entangled, but only with its
  // partner.  The worst-case subset chain stops at the pair, the best-case
  // chain never leaves delta = 1.
  auto pairs = states::cooper_product(2, 0.0);
  CHECK(measures::disconnectivity(pairs, SubsetPolicy::maximize).depth == 1);
  CHECK(measures::disconnectivity(pairs, SubsetPolicy::minimize).depth == 2);

  CHECK_THROWS_AS(measures::disconnectivity(random_pure(11, 3)),
                  std::invalid_argument);
}

TEST_CASE("disconnectivity of field modes") {
  auto ecs = states::entangled_coherent(1.0, 0.0);
  auto r = measures::disconnectivity(fock::to_density(ecs));
  CHECK(r.depth == 2);
  CHECK(r.delta[0] == doctest::Approx(0.0));
  CHECK(r.delta[1] <= 1e-9);  // pure state: top level always closes to 0
  CHECK(fock::von_neumann_entropy(fock::partial_trace(ecs, {0})) > 0.2);

  auto one = states::coherent_state(1.0, 12);
  fock::DensityOperator rho1 = fock::to_density(one);
  fock::DensityOperator prod;
  prod.dims = {12, 12};
  prod.rho = kron_density(rho1.rho, rho1.rho);
  CHECK(measures::disconnectivity(prod).depth == 1);
}

TEST_CASE("effective size from the dephasing rate") {
  using measures::DurMode;
  auto a = measures::dur_effective_size(100, 0.1, 1.0, DurMode::analytic);
  CHECK(a.value == doctest::Approx(1.0).epsilon(1e-12));
  auto full = measures::dur_effective_size(8, M_PI / 2, 1.0, DurMode::analytic);
  CHECK(full.value == doctest::Approx(8.0).epsilon(1e-12));

  auto sim = measures::dur_effective_size(8, 0.1, 0.7, DurMode::simulated);
  CHECK(sim.value == doctest::Approx(8 * std::pow(std::sin(0.1), 2)).epsilon(0.01));
  CHECK(std::abs(sim.value - 0.08) < 0.004);  // the small-angle target

  auto cat = measures::dur_effective_size(5, M_PI / 2, 1.3, DurMode::simulated);
  CHECK(cat.value == doctest::Approx(5.0).epsilon(1e-6));

  // The fitted size is a property of the state, not of the decay rate.
  auto g1 = measures::dur_effective_size(6, 0.4, 0.3, DurMode::simulated);
  auto g2 = measures::dur_effective_size(6, 0.4, 2.0, DurMode::simulated);
  CHECK(g1.value == doctest::Approx(g2.value).epsilon(1e-6));

  CHECK_THROWS_AS(measures::dur_effective_size(4, 0.0, 1.0, DurMode::analytic),
                  std::invalid_argument);
  CHECK_THROWS_AS(measures::dur_effective_size(4, 2.0, 1.0, DurMode::analytic),
                  std::invalid_argument);
  CHECK_THROWS_AS(measures::dur_effective_size(4, 0.1, 0.0, DurMode::simulated),
                  std::invalid_argument);
  CHECK_THROWS_AS(measures::dur_effective_size(11, 0.1, 1.0, DurMode::simulated),
                  std::invalid_argument);
}

TEST_CASE("overlap decay ratio on a sampled spectrum") {
  // Two unit-width Gaussians at +-5: the branch width is 20x smaller than
  // the separation, and the ratio recovers exactly that factor of 10
  // (precession kills the cross term at pi / 10, the envelope at pi / 1).
  int npts = 4001;
  Eigen::VectorXd vals(npts), w(npts);
  for (int i = 0; i < npts; ++i) {
    double x = -10.0 + 20.0 * i / (npts - 1);
    vals[i] = x;
    w[i] = std::exp(-0.5 * std::pow(x - 5.0, 2)) +
           std::exp(-0.5 * std::pow(x + 5.0, 2));
  }
  auto r = measures::bjork_mana(vals, w);
  CHECK(r.value == doctest::Approx(10.0).epsilon(0.01));
  CHECK(r.metadata.at("theta_sup") == doctest::Approx(M_PI / 10).epsilon(1e-3));

  // Superposed coherent state probed along x: branch separation 2 * 2alpha
  // against vacuum width, giving ratio ~ 4 alpha^2 for alpha = 3.
  auto cat = states::superposed_coherent(3.0, 0.0);
  auto rc = measures::bjork_mana(cat, position_op(cat.dim()));
  CHECK(rc.value == doctest::Approx(12.0).epsilon(0.1));

  // A single coherent branch decays smoothly: no revival, no ratio.
  auto coh = states::coherent_state(2.0, 0);
  auto rs = measures::bjork_mana(coh, position_op(coh.dim()));
  CHECK(rs.metadata.at("no_superposition") == 1);
  CHECK(rs.value == 0);

  // GHZ under sum sigma_x never dips below 1/2; under sum sigma_z each
  // branch is a single eigenvector, so there is no width to precess.
  auto g4 = states::ghz_state(4);
  auto rx = measures::bjork_mana(g4, all_sites(4, kSx));
  CHECK(rx.metadata.at("no_superposition") == 1);
  CHECK_THROWS_AS(measures::bjork_mana(g4, all_sites(4, kSz)),
                  std::invalid_argument);

  CHECK_THROWS_AS(measures::bjork_mana(vals, w.head(10)), std::invalid_argument);
}

TEST_CASE("index p from the variance growth exponent") {
  std::vector<int> sizes{2, 3, 4, 5, 6, 7, 8, 9};
  auto ghz_fam = [](int n) { return states::ghz_state(n); };
  auto prod_fam = [](int n) { return states::product_plus(n); };
  CHECK(measures::index_p_estimate(ghz_fam, sizes).value ==
        doctest::Approx(2.0).epsilon(0.025));
  CHECK(measures::index_p_estimate(prod_fam, sizes).value ==
        doctest::Approx(1.0).epsilon(0.05));

  // Asymmetric family goes through the iterative direction search.
  std::vector<int> small{3, 4, 5};
  auto rot_fam = [](int n) { return rotated_ghz(n); };
  CHECK(measures::index_p_estimate(rot_fam, small).value ==
        doctest::Approx(2.0).epsilon(0.05));

  CHECK(measures::max_additive_variance(states::ghz_state(4)) ==
        doctest::Approx(16.0).epsilon(1e-9));
  CHECK(measures::max_additive_variance(rotated_ghz(4)) ==
        doctest::Approx(16.0).epsilon(1e-7));

  CHECK_THROWS_AS(measures::index_p_estimate(ghz_fam, {2, 3}),
                  std::invalid_argument);
}

TEST_CASE("index q correlator agrees across both evaluation routes") {
  for (int n : {3, 4, 5}) {
    auto r = measures::index_q_correlator(states::ghz_state(n),
                                          all_sites(n, kSz),
                                          {ghz_projector(n)});
    CHECK(r.value == doctest::Approx(2.0 * n * n).epsilon(1e-8));
  }

  // Fully dephased GHZ commutes with sum sigma_z: correlator vanishes.
  auto dead = measures::index_q_correlator(states::mixed_ghz(4, 0.0),
                                           all_sites(4, kSz),
                                           {ghz_projector(4)});
  CHECK(std::abs(dead.value) < 1e-10);

  // Projector onto an eigenvector of the observable also commutes.
  spin::VectorXcd e0 = spin::VectorXcd::Zero(8);
  e0[0] = 1.0;
  auto comm = measures::index_q_correlator(states::ghz_state(3),
                                           all_sites(3, kSz),
                                           {e0 * e0.adjoint()});
  CHECK(std::abs(comm.value) < 1e-10);

  // Random instances: the dense and spectral routes must agree internally.
  for (unsigned seed : {11u, 12u, 13u, 14u, 15u}) {
    auto rho = random_mixed(3, seed);
    auto obs = random_obs(3, seed + 100);
    spin::VectorXcd v = random_pure(3, seed + 200).amp;
    auto r = measures::index_q_correlator(rho, obs, {v * v.adjoint()});
    CHECK(std::isfinite(r.value));
    CHECK(r.error_estimate < 1e-8 * std::max(1.0, std::abs(r.value)));
  }

  spin::MatrixXcd half = 0.5 * ghz_projector(3);
  CHECK_THROWS_AS(
      measures::index_q_correlator(states::ghz_state(3), all_sites(3, kSz),
                                   {half}),
      std::invalid_argument);
}

TEST_CASE("partition inequality on quadrature marginals") {
  auto marginals = [](const fock::DensityOperator& rho) {
    return std::pair{phase::quadrature_distribution(rho, 0.0),
                     phase::quadrature_distribution(rho, M_PI / 2)};
  };

  // Vacuum obeys the bound for every partition width.
  auto vac = fock::to_density(states::vacuum_state(8));
  auto [vx, vp] = marginals(vac);
  for (double s = 1.0; s <= 8.0; s += 1.0) {
    auto v = measures::cavalcanti_reid(vx, vp, s);
    CHECK_FALSE(v.violated);
    CHECK(v.lhs >= 1.0 - 1e-9);
  }

  // Small cat: coherence across the gap beats the bound at narrow widths.
  auto cat2 = fock::to_density(states::superposed_coherent(2.0, 0.0));
  auto [cx2, cp2] = marginals(cat2);
  auto v2 = measures::cavalcanti_reid(cx2, cp2, 0.25);
  CHECK(v2.violated);
  CHECK(v2.lhs < 1.0 - 1e-6);

  // Larger cat: the p-variance deficit is ~5e-7, far inside the verdict
  // band (and below the grid quadrature bias), so the flag must stay off.
  auto cat3 = fock::to_density(states::superposed_coherent(3.0, 0.0));
  auto [cx3, cp3] = marginals(cat3);
  auto v3 = measures::cavalcanti_reid(cx3, cp3, 0.4);
  CHECK_FALSE(v3.violated);
  CHECK(v3.lhs > 0.999);
  CHECK(v3.lhs < 1.0 + 5e-4);

  // The classical mixture of the same two branches never violates.
  auto plus = fock::to_density(states::coherent_state(3.0, 0));
  auto minus = fock::to_density(states::coherent_state(-3.0, 0));
  fock::DensityOperator mix;
  mix.dims = plus.dims;
  mix.rho = 0.5 * (plus.rho + minus.rho);
  auto [mx, mp] = marginals(mix);
  for (double s = 1.0; s <= 8.0; s += 1.0) {
    CHECK_FALSE(measures::cavalcanti_reid(mx, mp, s).violated);
  }

  auto scan = measures::scan_S_max(cat2, {0.125, 0.25, 0.5, 1.0});
  CHECK(scan.value >= 0.125);
  CHECK(scan.metadata.at("violations") >= 1);
  auto scan_mix = measures::scan_S_max(mix);
  CHECK(scan_mix.value == 0);

  CHECK_THROWS_AS(measures::cavalcanti_reid(vx, vp, 100.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(measures::cavalcanti_reid(vx, vx, 1.0),
                  std::invalid_argument);
}

TEST_CASE("partition inequality is displacement invariant") {
  // Generous cutoff: the displaced copy must not lose population off the
  // top levels, or the two sides differ by the truncation error instead of
  // the quadrature bias.
  auto cat = states::superposed_coherent(1.5, 0.0, 48);
  auto rho = fock::to_density(cat);
  double beta = 0.7;
  auto moved = fock::sandwich(fock::displace(rho.dims, 0, beta), rho);

  int npts = 2801;
  Eigen::VectorXd xs(npts), xs_shift(npts);
  for (int i = 0; i < npts; ++i) {
    xs[i] = -14.0 + 28.0 * i / (npts - 1);
    xs_shift[i] = xs[i] + 2.0 * beta;  // x -> x + 2 Re beta under D(beta)
  }
  auto px = phase::quadrature_distribution(rho, 0.0, xs);
  auto pp = phase::quadrature_distribution(rho, M_PI / 2, xs);
  auto qx = phase::quadrature_distribution(moved, 0.0, xs_shift);
  auto qp = phase::quadrature_distribution(moved, M_PI / 2, xs);

  for (double s : {0.5, 1.0, 2.0}) {
    auto a = measures::cavalcanti_reid(px, pp, s, true, 0.0);
    auto b = measures::cavalcanti_reid(qx, qp, s, true, 2.0 * beta);
    CHECK(a.lhs == doctest::Approx(b.lhs).epsilon(1e-6));
    CHECK(a.violated == b.violated);
  }
}

TEST_CASE("branch distinguishability size") {
  spin::VectorXcd a5 = spin::VectorXcd::Zero(32), b5 = a5;
  a5[0] = 1.0;
  b5[31] = 1.0;
  for (double delta : {0.3, 0.1, 0.01}) {
    auto r = measures::korsbakken_size(spin::pure_state(5, a5),
                                       spin::pure_state(5, b5), delta);
    CHECK(r.value == doctest::Approx(5.0));
    CHECK(r.metadata.at("n_min") == 1);
  }

  spin::VectorXcd a2 = spin::VectorXcd::Zero(4), b2 = a2;
  a2[0] = 1.0;
  b2[3] = 1.0;
  auto bell = measures::korsbakken_size(spin::pure_state(2, a2),
                                        spin::pure_state(2, b2), 0.1);
  CHECK(bell.value == doctest::Approx(2.0));

  // |01> vs |10>: single-site marginals already differ, via subset search.
  spin::VectorXcd a01 = spin::VectorXcd::Zero(4), b10 = a01;
  a01[1] = 1.0;
  b10[2] = 1.0;
  auto asym = measures::korsbakken_size(spin::pure_state(2, a01),
                                        spin::pure_state(2, b10), 0.1);
  CHECK(asym.value == doctest::Approx(2.0));

  // Domain-wall branch against the empty register, walls on the trailing
  // sites: the leading block agrees on both branches until nearly every
  // site is read out, so the size collapses to ~1.
  int n = 9;
  spin::VectorXcd wa = spin::VectorXcd::Zero(1L << n), wb = wa;
  wa[0] = 1.0;
  for (int k = 0; k <= n; ++k) wb[(1L << k) - 1] += 1.0;
  wb /= wb.norm();
  auto dn = measures::korsbakken_size(spin::pure_state(n, wa),
                                      spin::pure_state(n, wb), 0.05);
  CHECK(dn.value == doctest::Approx(1.0).epsilon(0.25));
  CHECK(dn.metadata.at("n_min") == doctest::Approx(9));
  CHECK(dn.metadata.at("exhaustive") == 0);

  auto same = measures::korsbakken_size(spin::pure_state(2, a2),
                                        spin::pure_state(2, a2), 0.1);
  CHECK(same.value == 0);
  CHECK(same.metadata.at("undefined") == 1);

  CHECK_THROWS_AS(measures::korsbakken_size(spin::pure_state(2, a2),
                                            spin::pure_state(2, b2), 0.6),
                  std::invalid_argument);
}

TEST_CASE("binomial branch-transfer size") {
  auto r1 = measures::marquardt_size(10, M_PI / 6);
  CHECK(r1.value == doctest::Approx(2.5).epsilon(1e-9));
  auto r2 = measures::marquardt_size(10, M_PI / 2);
  CHECK(r2.value == doctest::Approx(10.0).epsilon(1e-9));
  auto r3 = measures::marquardt_size(6, 1.0);
  CHECK(r3.value ==
        doctest::Approx(6.0 * std::pow(std::sin(1.0), 2)).epsilon(1e-9));
  CHECK(r1.error_estimate < 1e-9);
}

TEST_CASE("Fisher information and its effective size") {
  // Pure states: the generic spectral formula must land on 4 Var exactly.
  for (unsigned seed = 1; seed <= 20; ++seed) {
    auto s = random_pure(5, seed);
    auto obs = random_obs(5, seed + 50);
    double f = measures::qfi(s, obs);
    double var4 = 4.0 * spin::variance(s, obs);
    CHECK(f == doctest::Approx(var4).epsilon(1e-8));
  }

  for (int n : {3, 4, 5, 6}) {
    double fg = measures::qfi(states::ghz_state(n), all_sites(n, kSz));
    double fp = measures::qfi(states::product_plus(n), all_sites(n, kSz));
    CHECK(fg == doctest::Approx(4.0 * n * n).epsilon(1e-10));
    CHECK(fg / fp == doctest::Approx(n).epsilon(1e-10));
  }

  // Convexity: mixing never increases the information.  (20 random pairs.)
  for (unsigned seed = 1; seed <= 20; ++seed) {
    auto r1 = random_mixed(3, seed);
    auto r2 = random_mixed(3, seed + 40);
    auto obs = random_obs(3, seed + 80);
    spin::MatrixXcd mix = 0.5 * (r1.rho + r2.rho);
    double fmix = measures::qfi(spin::density_state(3, mix), obs);
    double favg = 0.5 * (measures::qfi(r1, obs) + measures::qfi(r2, obs));
    CHECK(fmix <= favg + 1e-9);
  }

  auto ng = measures::fisher_neff(states::ghz_state(4));
  CHECK(ng.value == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(ng.metadata.at("max_fisher") == doctest::Approx(64.0));
  CHECK(measures::fisher_neff(states::product_plus(4)).value ==
        doctest::Approx(1.0).epsilon(1e-9));
  auto nr = measures::fisher_neff(rotated_ghz(3));
  CHECK(nr.value == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(nr.method == "fisher-ascent");

  spin::MatrixXcd eye = spin::MatrixXcd::Identity(8, 8) / 8.0;
  CHECK(measures::fisher_neff(spin::density_state(3, eye)).value ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pointer-blur size") {
  auto zero = states::vacuum_state(6);
  auto coh = states::coherent_state(3.0, 0);

  // Sharp pointer: branches differ on the vacuum count with weight e^-9.
  measures::DetectorModel sharp{0.0, 0.75};
  double p0 = measures::detector_probability(zero, coh, sharp);
  double e9 = std::exp(-9.0);
  CHECK(p0 == doctest::Approx(0.5 * (1.0 + (1.0 - e9))).epsilon(1e-10));

  double prev = 1e9;
  for (double pg : {0.6, 0.75, 0.9}) {
    auto r = measures::sekatski_size(zero, coh, pg);
    CHECK(r.value > 0);
    CHECK(r.value <= prev + 1e-9);
    prev = r.value;

    // The bracket is tight: sigma_max still meets the guess probability,
    // a hair beyond it does not.
    double at = measures::detector_probability(zero, coh, {r.value, pg});
    double past =
        measures::detector_probability(zero, coh, {r.value + 2e-3, pg});
    CHECK(at >= pg - 1e-9);
    CHECK(past < pg);
  }

  auto same = measures::sekatski_size(zero, zero, 0.75);
  CHECK(same.value == 0);
  CHECK(same.metadata.at("indistinct") == 1);

  CHECK_THROWS_AS(measures::sekatski_size(zero, coh, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(measures::sekatski_size(zero, coh, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      measures::sekatski_size(states::entangled_coherent(1.0, 0.0), coh, 0.75),
      std::invalid_argument);
}
