// Rescaled-pullback eigencurrent solver: hypothesis gating, orbit-sum
// potentials, weak residuals, invariant planes, uniqueness, the transfer
// oracle and measure moments, positivity, Hölder verification, and the
// expansion diagnostic.  Numerical targets come from closed-form linear
// cases and cross-validation between independent discretizations.
#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "eclab/cohomology.hpp"
#include "eclab/currents.hpp"
#include "eclab/grid.hpp"
#include "eclab/solver.hpp"
#include "eclab/torus_map.hpp"
#include "oracles.hpp"

using namespace eclab;

namespace {

Eigen::MatrixXi mat2(int a, int b, int c, int d) {
  Eigen::MatrixXi A(2, 2);
  A << a, b, c, d;
  return A;
}

Eigen::MatrixXi mat1(int a) {
  Eigen::MatrixXi A(1, 1);
  A << a;
  return A;
}

// Arnold cat map x -> [[2,1],[1,1]] x; lambda_+ = (3+sqrt 5)/2.
TorusMap make_cat() { return TorusMap(mat2(2, 1, 1, 1)); }

// Perturbed doubling f(x) = 2x + 0.05 sin(2 pi x).
TorusMap make_pdbl() {
  std::vector<std::vector<FourierTerm>> pert(1);
  pert[0].push_back({{1, 0}, 0.0, 0.05});
  return TorusMap(mat1(2), pert);
}

// Perturbation of x -> 2x on the 2-torus, nonlinear in both components.
TorusMap make_p2i() {
  std::vector<std::vector<FourierTerm>> pert(2);
  pert[0].push_back({{1, 0}, 0.02, 0.0});
  pert[0].push_back({{0, 1}, 0.0, 0.015});
  pert[1].push_back({{1, 1}, 0.0, 0.02});
  pert[1].push_back({{1, 0}, 0.01, 0.0});
  return TorusMap(mat2(2, 0, 0, 2), pert);
}

constexpr double kLamPlus = (3.0 + 2.2360679774997896) / 2.0;   // (3+sqrt5)/2
constexpr double kLamMinus = (3.0 - 2.2360679774997896) / 2.0;  // (3-sqrt5)/2

Eigen::VectorXd cat_w_plus() {
  Eigen::VectorXd w(2);
  w << 1.0, kLamPlus - 2.0;  // (1, (sqrt5-1)/2)
  return w;
}

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd w(1);
  w << a;
  return w;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

// ---------------------------------------------------------------------------
// Hypothesis gating
// ---------------------------------------------------------------------------

TEST_CASE("gating accepts expanding eigenvalues and reports the margin") {
  const GapReport g = hypothesis_gap(make_pdbl(), 1, 2.0);
  CHECK(g.k == 1);
  CHECK(g.lambda_abs == 2.0);
  CHECK(g.growth_hat == 1.0);  // degree-0 growth rate on the torus
  CHECK(g.margin == Catch::Approx(1.0));
  CHECK(g.admissible);
  CHECK_FALSE(g.covering_path);

  SolverConfig cov;
  cov.covering_path = true;
  const GapReport gc = hypothesis_gap(make_pdbl(), 1, 2.0, cov);
  CHECK(gc.covering_path);
  CHECK(gc.growth_hat == 1.0);
  CHECK(gc.admissible);
}

TEST_CASE("gating at top degree compares against the measured degree-1 growth") {
  const TorusMap f = make_p2i();
  const GapReport ok = hypothesis_gap(f, 2, 4.0);
  // Upsilon_1 for a perturbation of 2I is slightly above 2.
  CHECK(ok.growth_hat > 1.9);
  CHECK(ok.growth_hat < 2.3);
  CHECK(ok.margin == Catch::Approx(4.0 - ok.growth_hat));
  CHECK(ok.admissible);

  const GapReport bad = hypothesis_gap(f, 2, 2.0);
  CHECK_FALSE(bad.admissible);
  CHECK(bad.margin < 0.0);

  SolverConfig cov;
  cov.covering_path = true;
  const GapReport covbad = hypothesis_gap(f, 2, 0.4, cov);
  CHECK(covbad.growth_hat > 0.4);  // nu_1 ~ 0.52 for this perturbation
  CHECK(covbad.growth_hat < 0.65);
  CHECK_FALSE(covbad.admissible);
}

TEST_CASE("inadmissible eigenpairs are rejected before any compute") {
  const TorusMap cat = make_cat();
  Eigen::VectorXd w_minus(2);
  w_minus << 1.0, kLamMinus - 2.0;
  SolverConfig cfg;
  cfg.N = 64;
  bool thrown = false;
  try {
    eigencurrent(cat, 1, w_minus, kLamMinus, cfg);
  } catch (const HypothesisError& e) {
    thrown = true;
    CHECK(e.report.margin == Catch::Approx(kLamMinus - 1.0));
    CHECK_FALSE(e.report.admissible);
    CHECK(std::string(e.what()).find("margin") != std::string::npos);
  }
  CHECK(thrown);

  // A non-eigenpair fails validation rather than the gate.
  Eigen::VectorXd not_eig(2);
  not_eig << 1.0, 1.0;
  CHECK_THROWS_AS(eigencurrent(cat, 1, not_eig, 0.5, cfg), std::invalid_argument);
  CHECK_THROWS_AS(require_gap(cat, 1, 0.9), HypothesisError);
  const GapReport passed = require_gap(cat, 1, kLamPlus);
  CHECK(passed.admissible);
}

// ---------------------------------------------------------------------------
// Harmonic sections and candidate pairings
// ---------------------------------------------------------------------------

TEST_CASE("harmonic sections are constant forms in the requested class") {
  const PeriodicGrid g{2, 32};
  Eigen::VectorXd w(2);
  w << 1.0, 0.0;
  const FormField h = harmonic_section(g, 1, w);
  CHECK(h.degree == 1);
  CHECK(h.comp[0][0] == 1.0);
  CHECK(h.comp[1][0] == 0.0);
  const Eigen::VectorXd cls = class_of_closed_form(h);
  CHECK(cls(0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(cls(1) == Catch::Approx(0.0).margin(1e-12));

  const Eigen::VectorXd wc = cat_w_plus();
  const Eigen::VectorXd cls2 = class_of_closed_form(harmonic_section(g, 1, wc));
  CHECK((cls2 - wc).lpNorm<Eigen::Infinity>() < 1e-12);

  CHECK_THROWS_AS(harmonic_section(g, 1, vec1(1.0)), std::invalid_argument);
}

TEST_CASE("candidate pairings match direct dictionary pairings of h + d tau") {
  const PeriodicGrid g{2, 64};

  SECTION("degree 1 on the 2-torus") {
    FormField tau(g, 0);
    for (std::size_t p = 0; p < g.point_count(); ++p) {
      double x[2];
      g.coord(p, x);
      tau.comp[0][p] =
          0.4 * std::sin(kTwoPi * (x[0] + 2 * x[1])) + 0.3 * std::cos(kTwoPi * 3 * x[0]);
    }
    Eigen::VectorXd w(2);
    w << 0.7, -1.3;
    const FourierDictionary D = fourier_dictionary(2, 1, 8);
    const auto fast = candidate_pairings(D, 1, w, tau);
    FormCurrent C;
    C.alpha = harmonic_section(g, 1, w) + exterior_derivative(tau);
    CHECK(max_abs_diff(fast, dictionary_pairings(D, C)) < 1e-12);

    // Empty class vector means a pure coboundary d tau.
    const auto pure = candidate_pairings(D, 1, Eigen::VectorXd(), tau);
    FormCurrent Cd;
    Cd.alpha = exterior_derivative(tau);
    CHECK(max_abs_diff(pure, dictionary_pairings(D, Cd)) < 1e-12);
  }

  SECTION("top degree on the 2-torus") {
    FormField tau(g, 1);
    for (std::size_t p = 0; p < g.point_count(); ++p) {
      double x[2];
      g.coord(p, x);
      tau.comp[0][p] = 0.2 * std::cos(kTwoPi * (x[0] - x[1]));
      tau.comp[1][p] = 0.5 * std::sin(kTwoPi * 2 * x[1]);
    }
    const FourierDictionary D0 = fourier_dictionary(2, 0, 8);
    const auto fast = candidate_pairings(D0, 2, vec1(1.0), tau);
    FormCurrent C;
    C.alpha = harmonic_section(g, 2, vec1(1.0)) + exterior_derivative(tau);
    CHECK(max_abs_diff(fast, dictionary_pairings(D0, C)) < 1e-12);
  }

  SECTION("top degree on the circle") {
    const PeriodicGrid g1{1, 128};
    FormField tau(g1, 0);
    for (int i = 0; i < g1.N; ++i)
      tau.comp[0][std::size_t(i)] = 0.3 * std::sin(kTwoPi * 4.0 * i / g1.N);
    const FourierDictionary D = fourier_dictionary(1, 0, 8);
    const auto fast = candidate_pairings(D, 1, vec1(1.0), tau);
    FormCurrent C;
    C.alpha = harmonic_section(g1, 1, vec1(1.0)) + exterior_derivative(tau);
    CHECK(max_abs_diff(fast, dictionary_pairings(D, C)) < 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Eigencurrents
// ---------------------------------------------------------------------------

TEST_CASE("pure doubling fixes Lebesgue exactly") {
  SolverConfig cfg;
  cfg.N = 256;
  const auto res = eigencurrent(TorusMap(mat1(2)), 1, vec1(1.0), 2.0, cfg);
  CHECK(res.trace.converged);
  CHECK(res.trace.iterates == 1);
  CHECK(res.trace.weak_residual[0] == 0.0);
  CHECK(res.trace.potential_delta[0] == 0.0);
  CHECK(sup_norm(res.potential) == 0.0);
  // The current is exactly dx: only the constant test function pairs, with
  // the degree-1 current sign (-1)^{k(k+1)/2} = -1.
  const FourierDictionary D = fourier_dictionary(1, 0, 8);
  const auto p = res.pairings;
  for (std::size_t i = 0; i < D.entries.size(); ++i) {
    const bool mass = (D.entries[i].m[0] == 0 && D.entries[i].trig == 0);
    CHECK(std::abs(p[i] - (mass ? -1.0 : 0.0)) < 1e-14);
  }
}

TEST_CASE("cat map eigencurrent is the constant eigencovector form") {
  SolverConfig cfg;
  cfg.N = 64;
  const auto res = eigencurrent(make_cat(), 1, cat_w_plus(), kLamPlus, cfg);
  CHECK(res.trace.converged);
  CHECK(res.trace.weak_residual.back() == 0.0);  // linear map: exactly harmonic
  CHECK(sup_norm(res.potential) == 0.0);
  const auto direct =
      dictionary_pairings(fourier_dictionary(2, 1, 8),
                          FormCurrent{harmonic_section(PeriodicGrid{2, 64}, 1, cat_w_plus())});
  CHECK(max_abs_diff(res.pairings, direct) < 1e-14);
  CHECK(res.gap.margin == Catch::Approx(kLamPlus - 1.0));
}

TEST_CASE("potential increments contract at rate growth/lambda") {
  // Start the cat map from eigenform + explicit band-limited perturbation and
  // watch the per-step decay of the potential increments.
  FormFunction tau0;
  tau0.n = 2;
  tau0.degree = 0;
  tau0.eval = [](const double* x, double* out) {
    out[0] = 0.3 * std::sin(kTwoPi * x[0]) + 0.2 * std::cos(kTwoPi * (x[0] + x[1])) +
             0.1 * std::sin(kTwoPi * (2 * x[0] - x[1]));
  };
  SolverConfig cfg;
  cfg.N = 128;
  cfg.min_iterates = cfg.max_iterates = 40;
  cfg.tol_weak = 0.0;  // run all 40 steps
  const auto res = eigencurrent(make_cat(), 1, cat_w_plus(), kLamPlus, &tau0, cfg);
  CHECK(res.trace.iterates == 40);
  CHECK(res.trace.predicted_ratio == Catch::Approx(1.0 / kLamPlus));
  CHECK(std::abs(res.trace.ratio_fit - 1.0 / kLamPlus) < 0.01);
  // Every single step realizes the exact ratio for a linear unimodular map.
  const auto& d = res.trace.potential_delta;
  for (std::size_t j = 1; j < d.size(); ++j)
    CHECK(d[j] / d[j - 1] == Catch::Approx(1.0 / kLamPlus).epsilon(1e-12));
}

TEST_CASE("perturbed doubling converges to tight weak residual") {
  SolverConfig cfg;
  cfg.N = 1024;
  cfg.tol_weak = 1e-12;
  const auto res = eigencurrent(make_pdbl(), 1, vec1(1.0), 2.0, cfg);
  CHECK(res.trace.converged);
  CHECK(res.trace.weak_residual.back() < 1e-12);
  CHECK(res.trace.iterates >= 25);
  CHECK(res.trace.iterates <= 55);
  CHECK(std::abs(res.trace.ratio_fit - 0.5) < 0.1);
  // The residual sequence decays monotonically after burn-in.
  const auto& r = res.trace.potential_delta;
  for (std::size_t j = 6; j < r.size(); ++j) CHECK(r[j] < 0.9 * r[j - 1]);
}

TEST_CASE("top-degree eigencurrent on the 2-torus converges under the gate") {
  SolverConfig cfg;
  cfg.N = 256;
  cfg.tol_weak = 1e-10;
  const auto res = eigencurrent(make_p2i(), 2, vec1(1.0), 4.0, cfg);
  CHECK(res.trace.converged);
  CHECK(res.trace.weak_residual.back() < 1e-10);
  CHECK(res.gap.growth_hat > 1.9);
  CHECK(res.trace.predicted_ratio == Catch::Approx(res.gap.growth_hat / 4.0));
  CHECK(std::abs(res.trace.ratio_fit - res.trace.predicted_ratio) < 0.05);
  // Positive initializer: the limit density stays positive.
  const auto dens = top_density(res);
  const auto pos = positivity_check(dens);
  CHECK(pos.positive);
  CHECK(pos.min_density > 0.3);
  CHECK(pos.mass == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("eigencurrent validates the degree") {
  CHECK_THROWS_AS(eigencurrent(make_cat(), 3, cat_w_plus(), 2.0), std::invalid_argument);
  CHECK_THROWS_AS(eigencurrent(make_pdbl(), 1, vec1(1.0), 0.0), std::invalid_argument);
}

TEST_CASE("pairings are stable under grid refinement") {
  SolverConfig a, b;
  a.N = 4096;
  b.N = 8192;
  a.tol_weak = b.tol_weak = 1e-12;
  const auto pa = eigencurrent(make_pdbl(), 1, vec1(1.0), 2.0, a).pairings;
  const auto pb = eigencurrent(make_pdbl(), 1, vec1(1.0), 2.0, b).pairings;
  CHECK(max_abs_diff(pa, pb) < 1e-5);
}

// ---------------------------------------------------------------------------
// Invariant planes
// ---------------------------------------------------------------------------

TEST_CASE("linear maps leave the constant plane exactly invariant") {
  SolverConfig cfg;
  cfg.N = 32;
  SECTION("dilation by 2") {
    const auto plane = invariant_plane(TorusMap(mat2(2, 0, 0, 2)), Eigen::MatrixXd::Identity(2, 2),
                                       cfg);
    CHECK(plane.g.isApprox(2.0 * Eigen::MatrixXd::Identity(2, 2)));
    CHECK(plane.trace.converged);
    CHECK(plane.commutation.lpNorm<Eigen::Infinity>() == 0.0);
    for (const auto& t : plane.potentials) CHECK(sup_norm(t) == 0.0);
  }
  SECTION("complex-pair block") {
    // x -> [[1,-1],[1,1]] x has eigenvalues 1 +- i of modulus sqrt 2 > 1.
    const auto plane = invariant_plane(TorusMap(mat2(1, -1, 1, 1)),
                                       Eigen::MatrixXd::Identity(2, 2), cfg);
    Eigen::MatrixXd expect(2, 2);
    expect << 1, 1, -1, 1;  // transpose of the matrix: action on covectors
    CHECK(plane.g.isApprox(expect));
    CHECK(plane.commutation.lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("perturbed plane satisfies the commutation identity weakly") {
  SolverConfig cfg;
  cfg.N = 256;
  cfg.tol_weak = 1e-10;
  const auto plane = invariant_plane(make_p2i(), Eigen::MatrixXd::Identity(2, 2), cfg);
  CHECK(plane.g.isApprox(2.0 * Eigen::MatrixXd::Identity(2, 2)));
  CHECK(plane.trace.converged);
  REQUIRE(plane.commutation.size() == 2);
  CHECK(plane.commutation(0) < 1e-7);
  CHECK(plane.commutation(1) < 1e-7);
}

TEST_CASE("one-column planes agree with the single eigencurrent") {
  SolverConfig cfg;
  cfg.N = 128;
  cfg.tol_weak = 1e-9;
  Eigen::MatrixXd W(2, 1);
  W << 1.0, 0.0;
  const auto plane = invariant_plane(make_p2i(), W, cfg);
  Eigen::VectorXd w(2);
  w << 1.0, 0.0;
  const auto single = eigencurrent(make_p2i(), 1, w, 2.0, cfg);
  const auto pp = candidate_pairings(fourier_dictionary(2, 1, 8), 1, w, plane.potentials[0]);
  CHECK(max_abs_diff(pp, single.pairings) < 1e-13);
  CHECK(plane.trace.iterates == single.trace.iterates);
}

TEST_CASE("planes touching the unit circle are rejected") {
  // The x1 direction of [[1,0],[0,2]] has block eigenvalue 1: no gap over
  // the degree-0 growth rate.
  Eigen::MatrixXd W(2, 1);
  W << 1.0, 0.0;
  SolverConfig cfg;
  cfg.N = 32;
  CHECK_THROWS_AS(invariant_plane(TorusMap(mat2(1, 0, 0, 2)), W, cfg), HypothesisError);
}

// ---------------------------------------------------------------------------
// Uniqueness
// ---------------------------------------------------------------------------

TEST_CASE("different admissible initializers converge to the same limit") {
  SECTION("perturbed doubling") {
    FormFunction bump;
    bump.n = 1;
    bump.degree = 0;
    bump.eval = [](const double* x, double* out) {
      out[0] = 0.4 * std::sin(kTwoPi * x[0]) - 0.25 * std::cos(3 * kTwoPi * x[0]);
    };
    SolverConfig cfg;
    cfg.N = 1024;
    cfg.max_iterates = 50;
    const auto rep = uniqueness_test(make_pdbl(), 1, vec1(1.0), 2.0, &bump, nullptr, cfg);
    CHECK(rep.distance < 1e-12);
    CHECK(rep.a.trace.iterates == rep.b.trace.iterates);
  }
  SECTION("cat map") {
    FormFunction sine;
    sine.n = 2;
    sine.degree = 0;
    sine.eval = [](const double* x, double* out) {
      out[0] = 0.5 * std::sin(kTwoPi * (x[0] + x[1]));
    };
    SolverConfig cfg;
    cfg.N = 128;
    cfg.max_iterates = 45;
    const auto rep = uniqueness_test(make_cat(), 1, cat_w_plus(), kLamPlus, &sine, nullptr, cfg);
    CHECK(rep.distance < 1e-12);
  }
  SECTION("perturbed dilation at top degree") {
    FormFunction oneform;
    oneform.n = 2;
    oneform.degree = 1;
    oneform.eval = [](const double* x, double* out) {
      out[0] = 0.3 * std::sin(kTwoPi * x[1]);
      out[1] = 0.2 * std::cos(kTwoPi * x[0]) + 0.15 * std::sin(kTwoPi * (x[0] + x[1]));
    };
    SolverConfig cfg;
    cfg.N = 128;
    cfg.max_iterates = 40;
    const auto rep = uniqueness_test(make_p2i(), 2, vec1(1.0), 4.0, &oneform, nullptr, cfg);
    CHECK(rep.distance < 1e-12);
  }
  SECTION("identical initializers give identical limits") {
    SolverConfig cfg;
    cfg.N = 256;
    cfg.max_iterates = 30;
    const auto rep = uniqueness_test(make_pdbl(), 1, vec1(1.0), 2.0, nullptr, nullptr, cfg);
    CHECK(rep.distance == 0.0);
  }
}

// ---------------------------------------------------------------------------
// Transfer oracle and measure moments
// ---------------------------------------------------------------------------

TEST_CASE("transfer oracle reproduces exact circle-map integrals") {
  const TorusMap dbl(mat1(2));
  FormFunction one;
  one.n = 1;
  one.degree = 0;
  one.eval = [](const double*, double* out) { out[0] = 1.0; };
  CHECK(transfer_oracle(dbl, one) == Catch::Approx(1.0).margin(1e-12));

  FormFunction cosx;
  cosx.n = 1;
  cosx.degree = 0;
  cosx.eval = [](const double* x, double* out) { out[0] = std::cos(kTwoPi * x[0]); };
  // Lebesgue is the invariant measure of pure doubling: the mean vanishes.
  CHECK(std::abs(transfer_oracle(dbl, cosx)) < 1e-9);
}

TEST_CASE("measure moments agree with the transfer oracle") {
  const TorusMap f = make_pdbl();
  const MeasureMoments mm = invariant_measure_moments(f);
  CHECK(mm.mu_hat[std::size_t(mm.M)] == cplx(1.0, 0.0));  // unit mass
  CHECK(mm.tail_bound < 1e-12);
  for (int m = 1; m <= mm.M; ++m)
    CHECK(mm.mu_hat[std::size_t(mm.M - m)] == std::conj(mm.mu_hat[std::size_t(mm.M + m)]));

  std::mt19937_64 rng(414243);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> ac(9, 0.0), as(9, 0.0);
    for (int m = 1; m <= 8; ++m) {
      ac[std::size_t(m)] = U(rng) / m;
      as[std::size_t(m)] = U(rng) / m;
    }
    FormFunction phi;
    phi.n = 1;
    phi.degree = 0;
    phi.eval = [ac, as](const double* x, double* out) {
      double v = 0.0;
      for (int m = 1; m <= 8; ++m)
        v += ac[std::size_t(m)] * std::cos(kTwoPi * m * x[0]) +
             as[std::size_t(m)] * std::sin(kTwoPi * m * x[0]);
      out[0] = v;
    };
    CHECK(std::abs(measure_integral(mm, phi) - transfer_oracle(f, phi)) < 1e-8);
  }
}

TEST_CASE("pure doubling moments are exactly Lebesgue") {
  const MeasureMoments mm = invariant_measure_moments(TorusMap(mat1(2)));
  for (int m = 1; m <= mm.M; ++m)
    CHECK(std::abs(mm.mu_hat[std::size_t(mm.M + m)]) < 1e-12);
}

TEST_CASE("densities of the perturbed doubling measure are positive") {
  const MeasureMoments mm = invariant_measure_moments(make_pdbl());
  const auto fej = fejer_density(mm, 2048);
  const auto shp = sharp_density(mm, 2048);
  const auto pf = positivity_check(fej);
  const auto ps = positivity_check(shp);
  CHECK(pf.positive);
  CHECK(pf.min_density > 0.5);
  CHECK(pf.mass == Catch::Approx(1.0).margin(1e-10));
  CHECK(ps.positive);
  CHECK(ps.min_density > 0.5);
}

TEST_CASE("positivity check flags sign dips and accepts positive fields") {
  std::vector<double> flat(64, 1.0);
  const auto ok = positivity_check(flat);
  CHECK(ok.positive);
  CHECK(ok.min_density == 1.0);
  CHECK(ok.mass == Catch::Approx(1.0));

  std::vector<double> dip(64, 1.0);
  dip[10] = -0.1;
  CHECK_FALSE(positivity_check(dip).positive);

  const PeriodicGrid g{2, 16};
  FormCurrent C;
  C.alpha = constant_form(g, 2, {1.0});
  CHECK(positivity_check(C).positive);
  C.alpha.comp[0][5] = -0.2;
  CHECK_FALSE(positivity_check(C).positive);
}

// ---------------------------------------------------------------------------
// Hölder verification
// ---------------------------------------------------------------------------

TEST_CASE("Lipschitz constant of band-limited maps is exact") {
  // f'(x) = 2 + 0.1 pi cos(2 pi x): maximum 2 + 0.1 pi.
  CHECK(lipschitz_constant(make_pdbl()) == Catch::Approx(2.0 + 0.05 * kTwoPi).margin(1e-6));
  // Linear maps: operator norm of A.
  CHECK(lipschitz_constant(make_cat()) ==
        Catch::Approx(std::sqrt((7.0 + 3.0 * std::sqrt(5.0)) / 2.0)).margin(1e-9));
}

TEST_CASE("extracted potential obeys the predicted Hölder exponent") {
  SolverConfig cfg;
  cfg.N = 8192;
  cfg.tol_weak = 1e-12;
  const auto res = eigencurrent(make_pdbl(), 1, vec1(1.0), 2.0, cfg);
  const auto hv = holder_verify(make_pdbl(), res, cfg);
  const double lip = 2.0 + 0.05 * kTwoPi;
  CHECK(hv.lip == Catch::Approx(lip).margin(1e-6));
  CHECK(hv.alpha_bound == Catch::Approx(std::log(2.0) / std::log(lip)).margin(1e-6));
  CHECK(hv.alpha_emp >= 0.8 * hv.alpha_bound);
  CHECK(hv.r_squared > 0.98);
  CHECK(hv.passed);
  CHECK_FALSE(hv.degenerate);

  // Recovering the potential from the current itself gives the same answer.
  const auto hv2 = holder_verify(make_pdbl(), res.current, 2.0, cfg);
  CHECK(hv2.alpha_emp == Catch::Approx(hv.alpha_emp).margin(1e-6));
}

TEST_CASE("linear maps have degenerate (trivial) potentials") {
  SolverConfig cfg;
  cfg.N = 256;
  const auto res = eigencurrent(make_cat(), 1, cat_w_plus(), kLamPlus, cfg);
  const auto hv = holder_verify(make_cat(), res, cfg);
  CHECK(hv.degenerate);
  CHECK(hv.passed);
}

// ---------------------------------------------------------------------------
// Expansion diagnostic
// ---------------------------------------------------------------------------

TEST_CASE("expansion diagnostic recovers the expansion rate") {
  Eigen::VectorXd x0(1);
  x0 << 0.3;
  const auto d = expansion_diagnostic(make_pdbl(), x0, 1e-3, 14);
  CHECK(d.growth_rate > 1.8);
  CHECK(d.growth_rate < 2.1);
  CHECK(d.saturation_step >= 5);
  CHECK(d.diameters.back() > 0.4);
  CHECK(d.diameters.back() <= 0.5);

  Eigen::VectorXd y0(2);
  y0 << 0.2, 0.6;
  const auto dc = expansion_diagnostic(make_cat(), y0, 1e-4, 12);
  CHECK(std::abs(dc.growth_rate - kLamPlus) < 0.05);
}
