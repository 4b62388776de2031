#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "warpband/bayes_lm.hpp"
#include "warpband/polybasis.hpp"

namespace warpband {

// G(y) = sum_l w_l * y_l^2. Plain sum of squares is the all-ones case.
struct Objective {
  enum class Kind { kSumSquares, kWeightedSumSquares };
  Kind kind = Kind::kSumSquares;
  Eigen::VectorXd weights;

  static Objective sum_squares(int m);
  static Objective weighted(const Eigen::VectorXd& w);
};

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box coded(int d);  // [-1, 1]^d
  int dim() const { return static_cast<int>(lower.size()); }
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
};

struct OptimSettings {
  int starts = 16;        // 2^min(d,4) corner-biased starts, rest LHS
  int max_iter = 500;
  double grad_tol = 1e-8;   // projected-gradient 2-norm
  double step_tol = 1e-12;
  int memory = 8;           // L-BFGS history length
};

// G at a coded point for a fixed coefficient set (one row per output).
double eval_objective(const Eigen::MatrixXd& betas, const Objective& obj,
                      const BasisSpec& basis, const Eigen::VectorXd& x);

// Analytic gradient: sum_l 2 w_l (p^T beta_l) (dp/dx)^T beta_l.
Eigen::VectorXd eval_gradient(const Eigen::MatrixXd& betas,
                              const Objective& obj, const BasisSpec& basis,
                              const Eigen::VectorXd& x);

struct MinimizeResult {
  Eigen::VectorXd x;  // in box coordinates
  double value = 0.0;
  double projected_grad_norm = 0.0;
  bool converged = false;
  int starts_used = 0;
};

// The multi-start points for a given (box, settings, seed); exposed so the
// dominance property (best value <= value at every start) is testable.
std::vector<Eigen::VectorXd> multistart_points(const Box& box,
                                               const OptimSettings& settings,
                                               std::uint64_t seed);

// Best of S projected L-BFGS runs; ties broken by objective value, then
// lexicographically smallest x. Never returns a point outside the box.
MinimizeResult minimize(const Eigen::MatrixXd& betas, const Objective& obj,
                        const BasisSpec& basis, const Box& box,
                        const OptimSettings& settings, std::uint64_t seed);

struct OptimResult {
  Eigen::VectorXd x_star;        // physical units
  Eigen::VectorXd x_star_coded;  // in [-1, 1]^d
  double objective_value = 0.0;
  double projected_grad_norm = 0.0;
  int starts_used = 0;
  bool converged = false;
};

// Point-estimate optimum of the fitted surrogate over the coded box.
OptimResult optimize(const FittedModel& model, const Objective& obj,
                     const OptimSettings& settings = {},
                     std::uint64_t seed = 0);

struct DimensionSummary {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

// Eq-style decision uncertainty set: one box-constrained minimization per
// posterior draw. Non-converged draws are kept and flagged; the quantile
// summaries use converged draws only (all draws if none converged).
struct DecisionEnsemble {
  Eigen::MatrixXd decisions;        // R x d, physical units
  Eigen::VectorXd objective_values; // R
  std::vector<char> converged;      // R flags
  std::vector<DimensionSummary> summaries;  // per input dimension
  int converged_count = 0;
  std::uint64_t seed = 0;
};

DecisionEnsemble decision_ensemble(const FittedModel& model,
                                   const Objective& obj, int R,
                                   std::uint64_t seed,
                                   const OptimSettings& settings = {},
                                   int threads = 1);

// Nearest-rank order statistic: the returned value is always an element of v.
double quantile_nearest_rank(std::vector<double> v, double q);

}  // namespace warpband
