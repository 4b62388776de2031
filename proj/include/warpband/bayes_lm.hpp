#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "warpband/dataset.hpp"
#include "warpband/polybasis.hpp"

namespace warpband {

// Per-output fit on the coded scale. xtx_inv_chol is the lower-triangular L
// with L*L^T = (P^T P)^{-1}; the posterior covariance is sigma2_hat * L*L^T.
struct FittedOutput {
  Eigen::VectorXd beta_hat;
  double sigma2_hat = 0.0;
  Eigen::MatrixXd xtx_inv_chol;
  int n = 0;
  int p = 0;
  double r2 = 0.0;
  double residual_ss = 0.0;
};

struct FittedModel {
  BasisSpec basis;
  ScaledDomain domain;
  std::vector<std::string> output_names;
  std::vector<FittedOutput> outputs;

  int dim() const { return basis.dim; }
  int n_outputs() const { return static_cast<int>(outputs.size()); }
};

// OLS per output via Householder QR on the coded design matrix; noise
// variance at its posterior mode residual_ss/(n-p); R^2 against the
// mean-only model. Throws UnderdeterminedError when n <= p and RankError
// (naming the dependent terms) when the smallest singular value of P is
// below 1e-10 times the largest.
FittedModel fit(const Dataset& coded_ds, const ScaledDomain& domain,
                const BasisSpec& basis);

// Convenience: codes the inputs first.
FittedModel fit_physical(const Dataset& ds, const BasisSpec& basis);

struct SamplerOptions {
  // When set, sigma^2 is drawn from its Inv-Gamma(n/2, residual_ss/2)
  // posterior per draw instead of being pinned at the modal value.
  bool hierarchical_sigma2 = false;
};

// One joint realization of the coefficients of every output. betas is
// m x p, row l drawn from MVN(beta_hat_l, sigma2_l (P^T P)^{-1}).
struct PosteriorDraw {
  Eigen::MatrixXd betas;
  int draw_index = 0;
  std::uint64_t seed = 0;
};

// Pure function of (seed, index): any subset of draws can be generated in
// any order, on any number of threads, with identical results.
PosteriorDraw draw_posterior(const FittedModel& model, std::uint64_t seed,
                             int index, const SamplerOptions& opts = {});

std::vector<PosteriorDraw> sample_posterior(const FittedModel& model, int R,
                                            std::uint64_t seed,
                                            const SamplerOptions& opts = {});

// p(x)^T beta_hat_l at a coded point. Warns on stderr outside [-1,1]^d.
double predict_mean(const FittedModel& model, const Eigen::VectorXd& x_coded,
                    int l);

// sigma_y(x) = sqrt(sigma2_hat_l * p(x)^T (P^T P)^{-1} p(x)).
double predict_sd(const FittedModel& model, const Eigen::VectorXd& x_coded,
                  int l);

void save_model(const std::string& path, const FittedModel& model);
FittedModel load_model(const std::string& path);

}  // namespace warpband
