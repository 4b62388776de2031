#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "test_util.hpp"
#include "warpband/bayes_lm.hpp"
#include "warpband/boundary.hpp"
#include "warpband/errors.hpp"

using namespace warpband;

namespace {

Grid2D analytic_grid(int g, double lo, double hi,
                     double (*f)(double, double)) {
  Grid2D grid;
  grid.axis1_coded.setLinSpaced(g, -1.0, 1.0);
  grid.axis2_coded = grid.axis1_coded;
  grid.axis1_phys.setLinSpaced(g, lo, hi);
  grid.axis2_phys = grid.axis1_phys;
  grid.values.resize(g, g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      grid.values(i, j) = f(grid.axis1_phys[i], grid.axis2_phys[j]);
  return grid;
}

FittedModel example2_model(int n, std::uint64_t seed) {
  const Dataset ds = synth_example2(n, seed);
  return fit_physical(ds, BasisSpec::full(2, 2));
}

SliceSpec small_slice(int g = 21) {
  SliceSpec s;
  s.free_i = 0;
  s.free_j = 1;
  s.g1 = g;
  s.g2 = g;
  return s;
}

// Segments of a contour as unordered endpoint pairs, for comparisons that
// must ignore traversal direction.
using Pt = std::pair<double, double>;
using Seg = std::multiset<Pt>;
using Soup = std::multiset<Seg>;

double snap(double v) { return std::round(v * 1e9) / 1e9; }

Seg make_seg(double x1, double y1, double x2, double y2) {
  Seg s;
  s.insert(Pt(snap(x1), snap(y1)));
  s.insert(Pt(snap(x2), snap(y2)));
  return s;
}

Soup segment_soup(const ContourSet& c) {
  Soup soup;
  for (const auto& pl : c.polylines) {
    const std::size_t n = pl.points.size();
    const std::size_t nseg = pl.closed ? n : n - 1;
    for (std::size_t s = 0; s < nseg; ++s) {
      const auto& a = pl.points[s];
      const auto& b = pl.points[(s + 1) % n];
      soup.insert(make_seg(a[0], a[1], b[0], b[1]));
    }
  }
  return soup;
}

}  // namespace

TEST_CASE("slice validation rejects malformed specs") {
  const ScaledDomain dom(testutil::coded_specs(3));
  SliceSpec s;
  s.free_i = 0;
  s.free_j = 1;
  s.fixed_values = {0.0};

  SliceSpec bad = s;
  bad.free_j = 0;
  CHECK_THROWS_AS(bad.validate(dom), NumericError);

  bad = s;
  bad.free_j = 3;
  CHECK_THROWS_AS(bad.validate(dom), NumericError);

  bad = s;
  bad.fixed_values = {};
  CHECK_THROWS_AS(bad.validate(dom), NumericError);

  bad = s;
  bad.g1 = 8;
  CHECK_THROWS_AS(bad.validate(dom), NumericError);

  bad = s;
  bad.fixed_values = {4.0};  // outside [-1, 1]
  CHECK_THROWS_AS(bad.validate(dom), NumericError);

  CHECK_NOTHROW(s.validate(dom));
}

TEST_CASE("coded_point pins fixed dimensions and places free ones") {
  const ScaledDomain dom(testutil::coded_specs(4));
  SliceSpec s;
  s.free_i = 1;
  s.free_j = 3;
  s.fixed_values = {0.25, -0.5};  // dims 0 and 2 in ascending order
  const Eigen::VectorXd x = s.coded_point(dom, 0.9, -0.9);
  REQUIRE(x.size() == 4);
  CHECK(x[0] == doctest::Approx(0.25));
  CHECK(x[1] == doctest::Approx(0.9));
  CHECK(x[2] == doctest::Approx(-0.5));
  CHECK(x[3] == doctest::Approx(-0.9));
}

TEST_CASE("eval_slice nodes agree with the prediction helpers") {
  const FittedModel model = example2_model(200, 5);
  const SliceSpec slice = small_slice();
  const SliceSurfaces surf = eval_slice(model, 0, slice);
  REQUIRE(surf.mean.g1() == 21);
  REQUIRE(surf.mean.g2() == 21);
  CHECK(surf.mean.axis1_coded[0] == doctest::Approx(-1.0));
  CHECK(surf.mean.axis1_coded[20] == doctest::Approx(1.0));
  CHECK(surf.mean.axis1_phys[0] == doctest::Approx(-10.0));
  CHECK(surf.mean.axis1_phys[20] == doctest::Approx(10.0));
  for (int i : {0, 7, 20}) {
    for (int j : {3, 11, 20}) {
      const Eigen::VectorXd x = slice.coded_point(
          model.domain, surf.mean.axis1_coded[i], surf.mean.axis2_coded[j]);
      CHECK(surf.mean.values(i, j) ==
            doctest::Approx(predict_mean(model, x, 0)).epsilon(1e-12));
      CHECK(surf.sd.values(i, j) ==
            doctest::Approx(predict_sd(model, x, 0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero contour of a circle is closed and accurate") {
  static auto f = [](double x, double y) { return x * x + y * y - 0.36; };
  const Grid2D grid = analytic_grid(201, -1.0, 1.0, +f);
  const ContourSet c = zero_contour(grid);
  REQUIRE(c.polylines.size() == 1);
  const Polyline& circle = c.polylines[0];
  CHECK(circle.closed);
  REQUIRE(circle.points.size() > 50);
  // A closed path must not duplicate its first point at the end.
  const auto& first = circle.points.front();
  const auto& last = circle.points.back();
  CHECK((first[0] != last[0] || first[1] != last[1]));
  for (const auto& pt : circle.points) {
    const double r = std::hypot(pt[0], pt[1]);
    CHECK(std::abs(r - 0.6) < 1e-3);
  }
}

TEST_CASE("constant-sign surfaces have no contour") {
  static auto pos = [](double x, double y) { return 1.0 + x * x + y * y; };
  const Grid2D grid = analytic_grid(32, -1.0, 1.0, +pos);
  CHECK(zero_contour(grid).polylines.empty());
}

TEST_CASE("open contours end on the grid boundary") {
  static auto line = [](double x, double y) { return x + y + 0.013; };
  const Grid2D grid = analytic_grid(41, -1.0, 1.0, +line);
  const ContourSet c = zero_contour(grid);
  REQUIRE(c.polylines.size() == 1);
  CHECK_FALSE(c.polylines[0].closed);
  const auto& pts = c.polylines[0].points;
  for (const auto& e : {pts.front(), pts.back()}) {
    const bool on_edge = std::abs(std::abs(e[0]) - 1.0) < 1e-12 ||
                         std::abs(std::abs(e[1]) - 1.0) < 1e-12;
    CHECK(on_edge);
  }
  for (const auto& pt : pts) CHECK(std::abs(pt[0] + pt[1] + 0.013) < 1e-9);
}

TEST_CASE("saddle cells split by the sign of the cell centre") {
  Grid2D grid;
  grid.axis1_coded.setLinSpaced(2, -1.0, 1.0);
  grid.axis2_coded = grid.axis1_coded;
  grid.axis1_phys.setLinSpaced(2, 0.0, 1.0);
  grid.axis2_phys = grid.axis1_phys;
  grid.values.resize(2, 2);

  SUBCASE("positive centre keeps the positive diagonal connected") {
    grid.values << 3.0, -1.0, -1.0, 3.0;  // centre mean +1
    const ContourSet c = zero_contour(grid);
    REQUIRE(c.polylines.size() == 2);
    const auto soup = segment_soup(c);
    Soup want;
    want.insert(make_seg(0.75, 0.0, 1.0, 0.25));  // cuts off corner (1, 0)
    want.insert(make_seg(0.25, 1.0, 0.0, 0.75));  // cuts off corner (0, 1)
    CHECK(soup == want);
  }

  SUBCASE("negative centre keeps the negative diagonal connected") {
    grid.values << 3.0, -3.0, -3.0, 0.5;  // centre mean -0.625
    const ContourSet c = zero_contour(grid);
    REQUIRE(c.polylines.size() == 2);
    const auto soup = segment_soup(c);
    const double t = 3.0 / 3.5;
    Soup want;
    want.insert(make_seg(0.5, 0.0, 0.0, 0.5));  // cuts off corner (0, 0)
    want.insert(make_seg(t, 1.0, 1.0, t));      // cuts off corner (1, 1)
    CHECK(soup == want);
  }
}

TEST_CASE("sign labels split the grid into three classes") {
  Grid2D grid;
  grid.axis1_coded.setLinSpaced(3, -1.0, 1.0);
  grid.axis2_coded = grid.axis1_coded;
  grid.axis1_phys = grid.axis1_coded;
  grid.axis2_phys = grid.axis2_coded;
  grid.values.resize(3, 3);
  grid.values << -2.0, -1.0, 1e-20, 0.0, 1.0, 2.0, 3.0, -1e-20, 5.0;
  const auto labels = sign_regions(grid);
  CHECK(labels[0][0] == RegionLabel::kNegative);
  CHECK(labels[0][1] == RegionLabel::kNegative);
  CHECK(labels[0][2] == RegionLabel::kNearZero);
  CHECK(labels[1][0] == RegionLabel::kNearZero);
  CHECK(labels[1][1] == RegionLabel::kPositive);
  CHECK(labels[2][1] == RegionLabel::kNearZero);
  CHECK(labels[2][2] == RegionLabel::kPositive);
}

TEST_CASE("band coverage is nondecreasing in epsilon and masks nest") {
  const FittedModel model = example2_model(250, 11);
  const SliceSpec slice = small_slice();
  const std::vector<double> eps = {1.0, 2.0, 3.0};
  const auto results = confidence_bands(model, 0, slice, 0.05, eps, 150, 21);
  REQUIRE(results.size() == 3);
  for (std::size_t e = 0; e + 1 < results.size(); ++e) {
    const auto& lo = results[e].grid;
    const auto& hi = results[e + 1].grid;
    for (int i = 0; i < lo.mean.g1(); ++i)
      for (int j = 0; j < lo.mean.g2(); ++j) {
        CHECK(lo.coverage_fraction(i, j) <= hi.coverage_fraction(i, j));
        if (lo.band_mask[i][j]) CHECK(hi.band_mask[i][j]);
      }
  }
  // Same draws across epsilons: the shared artifacts are identical.
  CHECK(results[0].mean_contour.polylines.size() ==
        results[2].mean_contour.polylines.size());
  CHECK(results[0].draw_contours.size() == results[2].draw_contours.size());
}

TEST_CASE("band run is reproducible and matches the single-band call") {
  const FittedModel model = example2_model(200, 13);
  const SliceSpec slice = small_slice();
  const auto a = confidence_bands(model, 0, slice, 0.05, {2.5}, 120, 77);
  const auto b = confidence_bands(model, 0, slice, 0.05, {2.5}, 120, 77);
  CHECK((a[0].grid.coverage_fraction - b[0].grid.coverage_fraction)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  const BandResult single = confidence_band(model, 0, slice, 0.05, 2.5, 120, 77);
  CHECK((a[0].grid.coverage_fraction - single.grid.coverage_fraction)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  BandOptions threaded;
  threaded.threads = 4;
  const auto c =
      confidence_bands(model, 0, slice, 0.05, {2.5}, 120, 77, threaded);
  CHECK((a[0].grid.coverage_fraction - c[0].grid.coverage_fraction)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("mask recomputation tracks alpha monotonically") {
  const FittedModel model = example2_model(200, 17);
  const auto results =
      confidence_bands(model, 0, small_slice(), 0.05, {2.5}, 140, 5);
  const BandGrid& grid = results[0].grid;
  const auto strict = mask_for_alpha(grid, 0.05);
  CHECK(strict == grid.band_mask);
  const auto loose = mask_for_alpha(grid, 0.4);
  int n_strict = 0, n_loose = 0;
  for (int i = 0; i < grid.mean.g1(); ++i)
    for (int j = 0; j < grid.mean.g2(); ++j) {
      if (strict[i][j]) {
        ++n_strict;
        CHECK(loose[i][j]);
      }
      if (loose[i][j]) ++n_loose;
    }
  CHECK(n_loose >= n_strict);
}

TEST_CASE("coverage_at at a grid node reproduces the grid fraction") {
  const FittedModel model = example2_model(220, 19);
  const SliceSpec slice = small_slice();
  const int R = 130;
  const std::uint64_t seed = 9;
  const auto results =
      confidence_bands(model, 0, slice, 0.05, {2.5}, R, seed);
  const BandGrid& grid = results[0].grid;
  const Eigen::MatrixXd draws = posterior_beta_matrix(model, 0, R, seed);
  REQUIRE(draws.cols() == R);
  for (int i : {2, 10, 18}) {
    for (int j : {4, 10, 16}) {
      const Eigen::VectorXd x = slice.coded_point(
          model.domain, grid.mean.axis1_coded[i], grid.mean.axis2_coded[j]);
      const double at = coverage_at(model, 0, draws, x, 2.5);
      CHECK(at == doctest::Approx(grid.coverage_fraction(i, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("unstandardized bands use response units") {
  const FittedModel model = example2_model(200, 23);
  BandOptions opts;
  opts.mode = BandMode::kUnstandardized;
  const auto wide =
      confidence_bands(model, 0, small_slice(), 0.05, {1e6}, 60, 3, opts);
  const auto narrow =
      confidence_bands(model, 0, small_slice(), 0.05, {1e-9}, 60, 3, opts);
  double wide_mean = wide[0].grid.coverage_fraction.mean();
  double narrow_mean = narrow[0].grid.coverage_fraction.mean();
  CHECK(wide_mean == doctest::Approx(1.0));
  CHECK(narrow_mean < 0.05);
}

TEST_CASE("standardized bands need a positive noise estimate") {
  FittedModel model = example2_model(150, 29);
  model.outputs[0].sigma2_hat = 0.0;
  CHECK_THROWS_AS(
      confidence_bands(model, 0, small_slice(), 0.05, {2.5}, 50, 1),
      DegeneratePosteriorError);
  BandOptions opts;
  opts.mode = BandMode::kUnstandardized;
  CHECK_NOTHROW(
      confidence_bands(model, 0, small_slice(), 0.05, {2.5}, 50, 1, opts));
}

TEST_CASE("band rejects out-of-range parameters") {
  const FittedModel model = example2_model(150, 31);
  CHECK_THROWS_AS(
      confidence_bands(model, 0, small_slice(), 0.0, {2.5}, 50, 1),
      NumericError);
  CHECK_THROWS_AS(
      confidence_bands(model, 0, small_slice(), 0.05, {-1.0}, 50, 1),
      NumericError);
  CHECK_THROWS_AS(
      confidence_bands(model, 0, small_slice(), 0.05, {2.5}, 0, 1),
      NumericError);
  CHECK_THROWS_AS(
      confidence_bands(model, 0, small_slice(), 0.05, {}, 50, 1),
      NumericError);
}

TEST_CASE("synthetic generator is deterministic per (seed, mode)") {
  const Dataset a = synth_example2(80, 41);
  const Dataset b = synth_example2(80, 41);
  CHECK((a.inputs - b.inputs).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.outputs - b.outputs).cwiseAbs().maxCoeff() == 0.0);
  const Dataset c = synth_example2(80, 42);
  CHECK((a.outputs - c.outputs).cwiseAbs().maxCoeff() > 0.0);
  const Dataset per_obs = synth_example2(80, 41, NoiseMode::kGammaPerObs);
  CHECK((a.outputs - per_obs.outputs).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("noise-free synthetic outputs sit exactly on the polynomial") {
  const Dataset ds = synth_example2(50, 43, NoiseMode::kNone);
  for (int i = 0; i < ds.n(); ++i)
    CHECK(ds.outputs(i, 0) ==
          doctest::Approx(example2_value(ds.inputs(i, 0), ds.inputs(i, 1)))
              .epsilon(1e-14));
  const Dataset one = synth_example1(20, 43, NoiseMode::kNone);
  const Eigen::VectorXd c1 = example1_coefficients();
  for (int i = 0; i < one.n(); ++i) {
    const double t = one.inputs(i, 0);
    CHECK(one.outputs(i, 0) ==
          doctest::Approx(c1[0] + c1[1] * t + c1[2] * t * t).epsilon(1e-12));
  }
}

TEST_CASE("quadratic surface truth values") {
  const Eigen::VectorXd c = example2_coefficients();
  REQUIRE(c.size() == 6);
  CHECK(example2_value(0.0, 0.0) == doctest::Approx(c[0]));
  CHECK(example2_value(1.0, 2.0) == doctest::Approx(-72.36).epsilon(1e-12));
  CHECK(example2_value(1.0, 0.0) == doctest::Approx(c[0] + c[1] + c[3]));
  const SynthTruth truth = example2_truth(7, NoiseMode::kGammaOnce);
  CHECK((truth.coefficients - c).cwiseAbs().maxCoeff() == 0.0);
  CHECK(truth.input_specs.size() == 2);
  CHECK(truth.input_specs[0].lower == -10.0);
  CHECK(truth.input_specs[1].upper == 10.0);
}

TEST_CASE("fixed-noise mode validates its variance") {
  CHECK_THROWS_AS(synth_example1(20, 1, NoiseMode::kFixed, -0.5),
                  NumericError);
  const Dataset ds = synth_example1(20, 1, NoiseMode::kFixed, 0.0025);
  CHECK(ds.n() == 20);
  CHECK(ds.output_names[0] == "deformation");
  CHECK(ds.input_specs[0].name == "temperature");
}
