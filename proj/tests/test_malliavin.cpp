#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fbmlab/malliavin.hpp"

using namespace fbmlab;

namespace {

Eigen::VectorXd x0v(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

}  // namespace

TEST_CASE("malliavin derivative closed forms", "[malliavin]") {
  // constant frame: columns are the constant V_j at every s <= t
  const auto frame = VectorFieldSystem::from_expressions(2, 2, {{"0", "0"}, {"1", "0"}, {"0", "1"}});
  const TimeGrid g = TimeGrid::regular(1.0, 32);
  const FbmPath driver = sample_fbm(HurstParam(0.7), g, 2, 2, SampleMethod::cholesky);
  const SolutionPath sol = solve_with_jacobian(frame, driver, x0v({0.0, 0.0}), SolverScheme::milstein2());
  const Eigen::MatrixXd D = malliavin_derivative(sol, frame, 10, 25);
  CHECK((D - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  // s = t: columns are V_j(X_t)
  const Eigen::MatrixXd Dt = malliavin_derivative(sol, frame, 25, 25);
  CHECK((Dt - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(malliavin_derivative(sol, frame, 26, 25), DomainError);

  // geometric 1-d: D_s X_t = sigma X_t (chain rule through J_t J_s^{-1} sigma X_s)
  const double sigma = 0.4;
  const auto geo = VectorFieldSystem::from_expressions(1, 1, {{"0"}, {"0.4*x1"}});
  const FbmPath b1 = sample_fbm(HurstParam(0.7), g, 1, 3, SampleMethod::cholesky);
  const SolutionPath gs = solve_with_jacobian(geo, b1, x0v({1.5}), SolverScheme::milstein2());
  for (std::size_t s = 4; s <= 28; s += 8) {
    const double expected = sigma * gs.X(32, 0);
    CHECK(malliavin_derivative(gs, geo, s, 32)(0, 0) == Catch::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("reduced matrix for the constant frame is R(t,t) I", "[malliavin]") {
  const auto frame = VectorFieldSystem::from_expressions(2, 2, {{"0", "0"}, {"1", "0"}, {"0", "1"}});
  // H >= 1/2 routes are exact for indicator rows at any resolution
  {
    const TimeGrid g = TimeGrid::regular(1.0, 256);
    for (double H : {0.5, 0.7}) {
      const FbmPath driver = sample_fbm(HurstParam(H), g, 2, 4, SampleMethod::cholesky);
      const SolutionPath sol =
          solve_with_jacobian(frame, driver, x0v({0.0, 0.0}), SolverScheme::euler());
      for (double t : {0.25, 1.0}) {
        const MalliavinMatrix C = reduced_malliavin_matrix(sol, frame, HurstParam(H), g.index_of(t));
        const double expected = std::pow(t, 2.0 * H);
        CHECK((C.C - expected * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
              1e-9 * expected);
        CHECK(C.lambda_min == Catch::Approx(expected).epsilon(1e-9));
      }
    }
  }
  // the K* route converges at order 2H; 1% needs ~1024 sub-cells at H = 0.3
  {
    const auto frame1 = VectorFieldSystem::from_expressions(1, 1, {{"0"}, {"1"}});
    const TimeGrid g = TimeGrid::regular(1.0, 1024);
    const FbmPath driver = sample_fbm(HurstParam(0.3), g, 1, 4, SampleMethod::circulant);
    const SolutionPath sol = solve_with_jacobian(frame1, driver, x0v({0.0}), SolverScheme::euler());
    const MalliavinMatrix C = reduced_malliavin_matrix(sol, frame1, HurstParam(0.3), 1024);
    CHECK(C.lambda_min == Catch::Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("lambda_min stays positive on elliptic samples", "[malliavin]") {
  const auto vf = VectorFieldSystem::from_expressions(1, 1, {{"0"}, {"1 + 0.5*sin(x1)"}});
  const TimeGrid g = TimeGrid::regular(1.0, 128);
  FbmSampler sampler(HurstParam(0.7), g, 1, SampleMethod::circulant);
  for (std::uint64_t p = 0; p < 100; ++p) {
    const SolutionPath sol =
        solve_with_jacobian(vf, sampler.sample(6, p), x0v({0.0}), SolverScheme::milstein2());
    const MalliavinMatrix C = reduced_malliavin_matrix(sol, vf, HurstParam(0.7), 128);
    CHECK(C.lambda_min > 0.0);
  }
}

TEST_CASE("constant frame scaling slope is exactly 2H", "[malliavin]") {
  const auto frame = VectorFieldSystem::from_expressions(1, 1, {{"0"}, {"1"}});
  ScalingFitOptions opt;
  opt.paths = 40;  // analytic case: no Monte-Carlo spread
  opt.steps = 128;
  opt.t_grid = {1.0 / 32, 1.0 / 8, 1.0 / 2, 1.0};
  const BoundFit fit = malliavin_scaling_fit(frame, HurstParam(0.7), x0v({0.0}), opt);
  REQUIRE(fit.exponents.size() == 1);
  CHECK(fit.exponents[0].fitted == Catch::Approx(1.4).epsilon(0.01));
  CHECK(fit.pass);
}

TEST_CASE("elliptic scaling slope lands within the 15% band", "[malliavin]") {
  const auto vf = VectorFieldSystem::from_expressions(1, 1, {{"0"}, {"1 + 0.5*sin(x1)"}});
  for (double H : {0.5, 0.7}) {
    ScalingFitOptions opt;
    opt.paths = 200;
    opt.steps = 128;
    opt.seed = 11;
    const BoundFit fit = malliavin_scaling_fit(vf, HurstParam(H), x0v({0.0}), opt);
    INFO("H=" << H << " slope=" << fit.exponents[0].fitted);
    CHECK(fit.pass);
  }
}

TEST_CASE("degenerate scaling fit is refused", "[malliavin]") {
  const auto vf = VectorFieldSystem::from_expressions(1, 1, {{"0"}, {"1"}});
  ScalingFitOptions opt;
  opt.t_grid = {0.5, 1.0};
  CHECK_THROWS_AS(malliavin_scaling_fit(vf, HurstParam(0.7), x0v({0.0}), opt), DomainError);
}

TEST_CASE("interpolation inequalities hold across the corpus", "[malliavin]") {
  const std::vector<double> t_grid = {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0};
  for (double H : {0.3, 0.7}) {
    const double gamma = 0.25 + (H > 0.5 ? H - 0.5 : 0.5 - H);
    const InterpolationReport rep =
        verify_interpolation(HurstParam(H), gamma, interpolation_corpus(), t_grid, 256);
    for (const auto& fr : rep.functions) {
      INFO("H=" << H << " f=" << fr.name << " c1=[" << fr.c1_min << "," << fr.c1_max << "] c2=["
                << fr.c2_min << "," << fr.c2_max << "]");
      CHECK_FALSE(fr.violation);
    }
    CHECK_FALSE(rep.any_violation);
  }
}

TEST_CASE("interpolation: f = 1 is tight with c = 1 in the smooth regime", "[malliavin]") {
  const std::vector<NamedFunction> corpus = {{"one", [](double) { return 1.0; }}};
  const InterpolationReport rep =
      verify_interpolation(HurstParam(0.7), 0.3, corpus, {0.25, 0.5, 1.0}, 256);
  CHECK(rep.functions[0].c1_min == Catch::Approx(1.0).epsilon(1e-9));
  CHECK(rep.functions[0].c1_max == Catch::Approx(1.0).epsilon(1e-9));
  CHECK(rep.functions[0].c2_min == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("interpolation: vanishing function has a vacuous lower envelope", "[malliavin]") {
  const std::vector<NamedFunction> corpus = {{"vanish", [](double t) { return t; }}};
  const InterpolationReport rep =
      verify_interpolation(HurstParam(0.7), 0.3, corpus, {0.5, 1.0}, 128);
  CHECK(rep.functions[0].vacuous_lower);
  CHECK_FALSE(rep.functions[0].violation);
}

TEST_CASE("interpolation gamma preconditions", "[malliavin]") {
  CHECK_THROWS_AS(verify_interpolation(HurstParam(0.7), 0.1, interpolation_corpus(), {0.5}, 64),
                  DomainError);
  CHECK_THROWS_AS(verify_interpolation(HurstParam(0.3), 0.1, interpolation_corpus(), {0.5}, 64),
                  DomainError);
}
