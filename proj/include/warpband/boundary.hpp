#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "warpband/bayes_lm.hpp"
#include "warpband/dataset.hpp"

namespace warpband {

// A 2-D slice of the input box: two free dimensions swept over their full
// ranges, every other dimension pinned at a physical value.
struct SliceSpec {
  int free_i = 0;
  int free_j = 1;
  // Physical values for the non-free dimensions, in ascending dimension
  // order; empty when d == 2.
  std::vector<double> fixed_values;
  int g1 = 201;
  int g2 = 201;

  void validate(const ScaledDomain& domain) const;
  // Coded d-vector with the fixed dims filled in and free dims from (a, b).
  Eigen::VectorXd coded_point(const ScaledDomain& domain, double a_coded,
                              double b_coded) const;
};

// Node-centered grid over the slice plane. values(i, j) belongs to
// (axis1[i], axis2[j]); axes carry both coded and physical coordinates.
struct Grid2D {
  Eigen::VectorXd axis1_coded, axis2_coded;
  Eigen::VectorXd axis1_phys, axis2_phys;
  Eigen::MatrixXd values;  // g1 x g2

  int g1() const { return static_cast<int>(axis1_coded.size()); }
  int g2() const { return static_cast<int>(axis2_coded.size()); }
};

struct SliceSurfaces {
  Grid2D mean;
  Grid2D sd;
};

// Posterior mean surface p(x)^T beta_hat_l and prediction scale sigma_y(x)
// over the slice, nodes uniform in coded space.
SliceSurfaces eval_slice(const FittedModel& model, int l,
                         const SliceSpec& slice);

struct Polyline {
  std::vector<std::array<double, 2>> points;  // physical slice-plane coords
  bool closed = false;
};

enum class ContourSource { kMean, kDraw, kTruth };

struct ContourSet {
  std::vector<Polyline> polylines;
  double level = 0.0;
  ContourSource source = ContourSource::kMean;
  int draw_index = -1;  // set for kDraw
};

// Marching squares with linear edge interpolation; saddle cells resolved by
// the sign of the cell-center (corner mean) value. Empty when the surface
// has constant sign.
ContourSet zero_contour(const Grid2D& surface);

enum class RegionLabel : std::uint8_t { kNegative, kNearZero, kPositive };

// Per-node sign labels; near-zero when |v| <= 1e-12 * max|v| over the grid.
std::vector<std::vector<RegionLabel>> sign_regions(const Grid2D& surface);

enum class BandMode {
  kStandardized,   // |y_i(x) / sigma_y(x)| <= eps
  kUnstandardized  // |y_i(x)| < eps, response units
};

struct BandGrid {
  SliceSpec slice;
  Grid2D mean;
  Grid2D sd;
  Eigen::MatrixXd coverage_fraction;                 // g1 x g2 in [0, 1]
  std::vector<std::vector<bool>> band_mask;          // coverage >= 1 - alpha
  double alpha = 0.05;
  double epsilon = 2.5;
  int R = 0;
  std::uint64_t seed = 0;
  BandMode mode = BandMode::kStandardized;
};

struct BandResult {
  BandGrid grid;
  ContourSet mean_contour;
  std::vector<ContourSet> draw_contours;
};

struct BandOptions {
  int draw_contours = 20;  // K sample zero-level sets to extract
  BandMode mode = BandMode::kStandardized;
  int threads = 1;
  SamplerOptions sampler;
};

// Monte Carlo confidence band of the zero-level set: R posterior draws
// shared across every epsilon in the list, so coverage is pointwise
// nondecreasing in epsilon by construction. Throws
// DegeneratePosteriorError when sigma2_hat == 0 in standardized mode; warns
// on stderr when R < 100.
std::vector<BandResult> confidence_bands(const FittedModel& model, int l,
                                         const SliceSpec& slice, double alpha,
                                         const std::vector<double>& epsilons,
                                         int R, std::uint64_t seed,
                                         const BandOptions& opts = {});

BandResult confidence_band(const FittedModel& model, int l,
                           const SliceSpec& slice, double alpha,
                           double epsilon, int R, std::uint64_t seed,
                           const BandOptions& opts = {});

// Recompute the mask for a different alpha on an already-computed grid.
std::vector<std::vector<bool>> mask_for_alpha(const BandGrid& grid,
                                              double alpha);

// p x R matrix of coefficient draws for output l; column i is identical to
// the draw confidence_bands uses for index i with the same seed.
Eigen::MatrixXd posterior_beta_matrix(const FittedModel& model, int l, int R,
                                      std::uint64_t seed,
                                      const SamplerOptions& opts = {});

// Band membership at an exact point (not grid-rastered): the fraction of
// draw columns with |p(x)^T beta_i| within the tolerance at x.
double coverage_at(const FittedModel& model, int l,
                   const Eigen::MatrixXd& beta_draws,
                   const Eigen::VectorXd& x_coded, double epsilon,
                   BandMode mode = BandMode::kStandardized);

// ---- Synthetic data --------------------------------------------------

enum class NoiseMode {
  kNone,
  kGammaOnce,    // one sigma^2 ~ Gamma(shape 2, rate 1) per dataset
  kGammaPerObs,  // fresh sigma^2 per observation
  kFixed         // caller-supplied sigma^2
};

struct SynthTruth {
  Eigen::VectorXd coefficients;  // physical scale, graded-lex order
  BasisSpec basis;
  std::vector<VariableSpec> input_specs;
  NoiseMode noise = NoiseMode::kNone;
  double fixed_sigma2 = 0.0;
  std::uint64_t seed = 0;
};

// True coefficients of the 2-D synthetic quadratic on [-10,10]^2, in
// graded-lex order: (constant, x1, x2, x1^2, x1*x2, x2^2).
Eigen::VectorXd example2_coefficients();
double example2_value(double x1, double x2);

// LHS inputs plus quadratic response with the selected noise mode.
Dataset synth_example2(int n, std::uint64_t seed,
                       NoiseMode noise = NoiseMode::kGammaOnce,
                       double fixed_sigma2 = 0.0);
SynthTruth example2_truth(std::uint64_t seed, NoiseMode noise,
                          double fixed_sigma2 = 0.0);

// 1-D quadratic cure-style dataset: deformation vs temperature with the
// minimum near 134, over [120, 150].
Eigen::VectorXd example1_coefficients();
Dataset synth_example1(int n, std::uint64_t seed,
                       NoiseMode noise = NoiseMode::kFixed,
                       double fixed_sigma2 = 0.0025);
SynthTruth example1_truth(std::uint64_t seed, NoiseMode noise,
                          double fixed_sigma2 = 0.0025);

}  // namespace warpband
