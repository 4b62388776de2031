#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "warpband/bayes_lm.hpp"
#include "warpband/optimizer.hpp"
#include "warpband/polybasis.hpp"
#include "warpband/rng.hpp"

using namespace warpband;

namespace {

// Coefficient rows for m linear outputs y_k = x_k - c_k over the coded box.
// G = sum (x_k - c_k)^2 is separable with known argmin clamp(c).
Eigen::MatrixXd linear_targets(const BasisSpec& basis,
                               const Eigen::VectorXd& c) {
  const int d = basis.dim;
  Eigen::MatrixXd betas = Eigen::MatrixXd::Zero(d, basis.size());
  for (int k = 0; k < d; ++k) {
    betas(k, 0) = -c[k];
    betas(k, 1 + k) = 1.0;  // graded-lex: terms 1..d are x1..xd
  }
  return betas;
}

FittedModel noiseless_quadratic_model(std::uint64_t seed) {
  Dataset ds;
  ds.input_specs = {{"u", 0.0, 10.0}, {"v", -5.0, 5.0}};
  ds.output_names = {"y"};
  const int n = 60;
  ds.inputs.resize(n, 2);
  ds.outputs.resize(n, 1);
  auto eng = rng::make_engine(seed, rng::Stream::kLhs);
  for (int i = 0; i < n; ++i) {
    const double u = 10.0 * rng::uniform01(eng);
    const double v = -5.0 + 10.0 * rng::uniform01(eng);
    ds.inputs(i, 0) = u;
    ds.inputs(i, 1) = v;
    // Zero exactly at (u,v) = (4, 1): positive definite paraboloid shifted
    // so the minimum of y^2 is an interior root-free minimum of value 4.
    ds.outputs(i, 0) = 2.0 + (u - 4.0) * (u - 4.0) + 2.0 * (v - 1.0) * (v - 1.0);
  }
  return fit_physical(ds, BasisSpec::full(2, 2));
}

}  // namespace

TEST_CASE("analytic gradient of the objective matches finite differences") {
  const BasisSpec basis = BasisSpec::full(3, 2);
  auto eng = rng::make_engine(3, rng::Stream::kLhs);
  Eigen::MatrixXd betas(2, basis.size());
  for (int l = 0; l < 2; ++l)
    for (int j = 0; j < basis.size(); ++j)
      betas(l, j) = 2.0 * rng::uniform01(eng) - 1.0;
  Eigen::VectorXd w(2);
  w << 0.7, 1.9;
  const Objective obj = Objective::weighted(w);

  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(3);
    for (int k = 0; k < 3; ++k) x[k] = 2.0 * rng::uniform01(eng) - 1.0;
    const Eigen::VectorXd g = eval_gradient(betas, obj, basis, x);
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const double fd = (eval_objective(betas, obj, basis, xp) -
                         eval_objective(betas, obj, basis, xm)) /
                        (2 * h);
      CHECK(std::abs(g[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("sum of squares equals unit-weight objective") {
  const BasisSpec basis = BasisSpec::full(2, 2);
  Eigen::MatrixXd betas = Eigen::MatrixXd::Random(3, basis.size());
  Eigen::VectorXd x(2);
  x << 0.3, -0.6;
  const double a = eval_objective(betas, Objective::sum_squares(3), basis, x);
  const double b = eval_objective(
      betas, Objective::weighted(Eigen::VectorXd::Ones(3)), basis, x);
  CHECK(a == doctest::Approx(b).epsilon(1e-15));
}

TEST_CASE("separable quadratic: interior target is recovered exactly") {
  const int d = 3;
  const BasisSpec basis = BasisSpec::full(d, 2);
  Eigen::VectorXd c(d);
  c << 0.35, -0.8, 0.0;
  const Eigen::MatrixXd betas = linear_targets(basis, c);
  const MinimizeResult res =
      minimize(betas, Objective::sum_squares(d), basis, Box::coded(d), {}, 5);
  CHECK(res.converged);
  CHECK((res.x - c).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(res.value < 1e-12);
}

TEST_CASE("target outside the box clamps to the face") {
  const int d = 2;
  const BasisSpec basis = BasisSpec::full(d, 2);
  Eigen::VectorXd c(d);
  c << 1.7, -0.25;  // outside in dimension 1 only
  const Eigen::MatrixXd betas = linear_targets(basis, c);
  const MinimizeResult res =
      minimize(betas, Objective::sum_squares(d), basis, Box::coded(d), {}, 5);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.x[1] == doctest::Approx(-0.25).epsilon(1e-6));
  CHECK(res.projected_grad_norm <= 1e-6);
  CHECK(res.value == doctest::Approx(0.49).epsilon(1e-6));
}

TEST_CASE("result never leaves the box") {
  const BasisSpec basis = BasisSpec::full(2, 2);
  auto eng = rng::make_engine(77, rng::Stream::kLhs);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd betas(1, basis.size());
    for (int j = 0; j < basis.size(); ++j)
      betas(0, j) = 6.0 * rng::uniform01(eng) - 3.0;
    const MinimizeResult res = minimize(betas, Objective::sum_squares(1),
                                        basis, Box::coded(2), {}, trial);
    for (int k = 0; k < 2; ++k) {
      CHECK(res.x[k] >= -1.0);
      CHECK(res.x[k] <= 1.0);
    }
  }
}

TEST_CASE("best value dominates every multi-start seed point") {
  const BasisSpec basis = BasisSpec::full(2, 2);
  Eigen::MatrixXd betas(1, basis.size());
  betas << 0.4, -1.2, 0.9, 2.0, -0.7, 1.1;
  const Objective obj = Objective::sum_squares(1);
  const Box box = Box::coded(2);
  const OptimSettings settings;
  const std::uint64_t seed = 12;
  const MinimizeResult res = minimize(betas, obj, basis, box, settings, seed);
  const auto starts = multistart_points(box, settings, seed);
  CHECK(static_cast<int>(starts.size()) == settings.starts);
  for (const auto& s : starts)
    CHECK(res.value <= eval_objective(betas, obj, basis, s) + 1e-12);
}

TEST_CASE("multistart points are deterministic and inside the box") {
  const Box box = Box::coded(3);
  const OptimSettings settings;
  const auto a = multistart_points(box, settings, 4);
  const auto b = multistart_points(box, settings, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i] - b[i]).cwiseAbs().maxCoeff() == 0.0);
    for (int k = 0; k < 3; ++k) {
      CHECK(a[i][k] >= -1.0);
      CHECK(a[i][k] <= 1.0);
    }
  }
}

TEST_CASE("optimize reports both coded and physical coordinates") {
  const FittedModel model = noiseless_quadratic_model(19);
  const OptimResult res = optimize(model, Objective::sum_squares(1));
  CHECK(res.converged);
  // Surrogate reproduces the generating surface, so y^2 is minimized at the
  // paraboloid vertex (4, 1).
  CHECK(res.x_star[0] == doctest::Approx(4.0).epsilon(1e-4));
  CHECK(res.x_star[1] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(res.objective_value == doctest::Approx(4.0).epsilon(1e-6));
  const Eigen::VectorXd coded_back = model.domain.to_coded(res.x_star);
  CHECK((coded_back - res.x_star_coded).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("decision ensemble is deterministic and thread-invariant") {
  const FittedModel model = noiseless_quadratic_model(23);
  const Objective obj = Objective::sum_squares(1);
  OptimSettings settings;
  settings.starts = 4;
  const DecisionEnsemble a = decision_ensemble(model, obj, 24, 31, settings, 1);
  const DecisionEnsemble b = decision_ensemble(model, obj, 24, 31, settings, 4);
  REQUIRE(a.decisions.rows() == 24);
  CHECK((a.decisions - b.decisions).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.objective_values - b.objective_values).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(a.converged == b.converged);
  CHECK(a.converged_count == b.converged_count);
  for (int k = 0; k < 2; ++k) {
    CHECK(a.summaries[k].median == b.summaries[k].median);
    CHECK(a.summaries[k].q25 == b.summaries[k].q25);
    CHECK(a.summaries[k].q75 == b.summaries[k].q75);
  }
}

TEST_CASE("ensemble quantiles are order statistics of the decision columns") {
  const FittedModel model = noiseless_quadratic_model(29);
  const DecisionEnsemble e =
      decision_ensemble(model, Objective::sum_squares(1), 15, 3, {}, 1);
  REQUIRE(e.converged_count > 0);
  for (int k = 0; k < 2; ++k) {
    std::vector<double> col;
    for (int i = 0; i < 15; ++i)
      if (e.converged[i]) col.push_back(e.decisions(i, k));
    CHECK(e.summaries[k].median ==
          quantile_nearest_rank(col, 0.5));
    CHECK(e.summaries[k].q25 == quantile_nearest_rank(col, 0.25));
    CHECK(e.summaries[k].q75 == quantile_nearest_rank(col, 0.75));
  }
}

TEST_CASE("nearest-rank quantile conventions") {
  std::vector<double> v = {5.0, 1.0, 3.0, 2.0, 4.0};
  CHECK(quantile_nearest_rank(v, 0.5) == 3.0);
  CHECK(quantile_nearest_rank(v, 0.0) == 1.0);
  CHECK(quantile_nearest_rank(v, 1.0) == 5.0);
  CHECK(quantile_nearest_rank(v, 0.25) == 2.0);
  CHECK(quantile_nearest_rank(v, 0.75) == 4.0);
  CHECK(quantile_nearest_rank({7.5}, 0.33) == 7.5);
  // Always an element of the sample.
  std::vector<double> w = {1.0, 2.0};
  const double q = quantile_nearest_rank(w, 0.5);
  CHECK((q == 1.0 || q == 2.0));
}
