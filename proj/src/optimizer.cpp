#include "warpband/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "warpband/designgen.hpp"
#include "warpband/errors.hpp"
#include "warpband/parallel.hpp"
#include "warpband/rng.hpp"

namespace warpband {

Objective Objective::sum_squares(int m) {
  Objective obj;
  obj.kind = Kind::kSumSquares;
  obj.weights = Eigen::VectorXd::Ones(m);
  return obj;
}

Objective Objective::weighted(const Eigen::VectorXd& w) {
  if (w.size() < 1 || (w.array() < 0.0).any() || w.maxCoeff() <= 0.0)
    throw NumericError("objective weights must be >= 0 and not all zero");
  Objective obj;
  obj.kind = Kind::kWeightedSumSquares;
  obj.weights = w;
  return obj;
}

Box Box::coded(int d) {
  Box b;
  b.lower = Eigen::VectorXd::Constant(d, -1.0);
  b.upper = Eigen::VectorXd::Constant(d, 1.0);
  return b;
}

Eigen::VectorXd Box::clamp(const Eigen::VectorXd& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

double eval_objective(const Eigen::MatrixXd& betas, const Objective& obj,
                      const BasisSpec& basis, const Eigen::VectorXd& x) {
  if (betas.cols() != basis.size() || betas.rows() != obj.weights.size())
    throw NumericError("eval_objective: shape mismatch");
  const Eigen::VectorXd px = expand(basis, x);
  const Eigen::VectorXd y = betas * px;
  return (obj.weights.array() * y.array().square()).sum();
}

Eigen::VectorXd eval_gradient(const Eigen::MatrixXd& betas,
                              const Objective& obj, const BasisSpec& basis,
                              const Eigen::VectorXd& x) {
  if (betas.cols() != basis.size() || betas.rows() != obj.weights.size())
    throw NumericError("eval_gradient: shape mismatch");
  const Eigen::VectorXd px = expand(basis, x);
  const Eigen::MatrixXd J = gradient(basis, x);  // p x d
  const Eigen::VectorXd y = betas * px;          // m
  const Eigen::MatrixXd dy = betas * J;          // m x d
  return 2.0 * dy.transpose() * (obj.weights.array() * y.array()).matrix();
}

std::vector<Eigen::VectorXd> multistart_points(const Box& box,
                                               const OptimSettings& settings,
                                               std::uint64_t seed) {
  const int d = box.dim();
  const int S = std::max(1, settings.starts);
  const int corner_bits = std::min(d, 4);
  const int n_corners = std::min(1 << corner_bits, S);
  const Eigen::VectorXd center = box.center();

  std::vector<Eigen::VectorXd> starts;
  starts.reserve(S);
  for (int c = 0; c < n_corners; ++c) {
    Eigen::VectorXd corner = center;
    for (int k = 0; k < corner_bits; ++k)
      corner[k] = (c >> k) & 1 ? box.upper[k] : box.lower[k];
    starts.push_back(center + 0.9 * (corner - center));
  }
  const int n_lhs = S - n_corners;
  if (n_lhs > 0) {
    const LhsDesign design = lhs(n_lhs, d, seed);
    for (int i = 0; i < n_lhs; ++i) {
      Eigen::VectorXd x(d);
      for (int k = 0; k < d; ++k)
        x[k] = box.lower[k] +
               design.points(i, k) * (box.upper[k] - box.lower[k]);
      starts.push_back(std::move(x));
    }
  }
  return starts;
}

namespace {

struct LbfgsMemory {
  std::deque<Eigen::VectorXd> s, y;
  std::deque<double> rho;
  int capacity = 8;

  void clear() {
    s.clear();
    y.clear();
    rho.clear();
  }

  void push(const Eigen::VectorXd& si, const Eigen::VectorXd& yi) {
    const double sy = si.dot(yi);
    if (sy <= 1e-12 * si.norm() * yi.norm()) return;
    s.push_back(si);
    y.push_back(yi);
    rho.push_back(1.0 / sy);
    if (static_cast<int>(s.size()) > capacity) {
      s.pop_front();
      y.pop_front();
      rho.pop_front();
    }
  }

  // Two-loop recursion; identity scaling gamma = s'y / y'y on the newest
  // pair.
  Eigen::VectorXd apply(const Eigen::VectorXd& g) const {
    if (s.empty()) return g;
    Eigen::VectorXd q = g;
    const int k = static_cast<int>(s.size());
    std::vector<double> a(k);
    for (int i = k - 1; i >= 0; --i) {
      a[i] = rho[i] * s[i].dot(q);
      q -= a[i] * y[i];
    }
    const double gamma = s.back().dot(y.back()) / y.back().squaredNorm();
    q *= gamma;
    for (int i = 0; i < k; ++i) {
      const double b = rho[i] * y[i].dot(q);
      q += (a[i] - b) * s[i];
    }
    return q;
  }
};

struct SingleRun {
  Eigen::VectorXd x;
  double value = 0.0;
  double projected_grad_norm = 0.0;
  bool converged = false;
};

// Projected L-BFGS over the box: descent directions from the two-loop
// recursion, steps projected back onto the box with an Armijo backtracking
// search on the projected path.
SingleRun minimize_from(const Eigen::MatrixXd& betas, const Objective& obj,
                        const BasisSpec& basis, const Box& box,
                        const OptimSettings& settings,
                        const Eigen::VectorXd& start) {
  const auto F = [&](const Eigen::VectorXd& x) {
    return eval_objective(betas, obj, basis, x);
  };
  const auto G = [&](const Eigen::VectorXd& x) {
    return eval_gradient(betas, obj, basis, x);
  };

  SingleRun run;
  Eigen::VectorXd x = box.clamp(start);
  double f = F(x);
  Eigen::VectorXd g = G(x);
  LbfgsMemory mem;
  mem.capacity = settings.memory;

  const auto projected_gradient_norm = [&](const Eigen::VectorXd& xx,
                                           const Eigen::VectorXd& gg) {
    return (xx - box.clamp(xx - gg)).norm();
  };

  for (int iter = 0; iter < settings.max_iter; ++iter) {
    const double pgn = projected_gradient_norm(x, g);
    if (pgn <= settings.grad_tol) {
      run.converged = true;
      break;
    }

    Eigen::VectorXd dir = -mem.apply(g);
    if (dir.dot(g) >= -1e-14 * dir.norm() * g.norm()) {
      mem.clear();
      dir = -g;
    }

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = box.clamp(x + alpha * dir);
      const Eigen::VectorXd step = x_new - x;
      if (step.norm() == 0.0) break;  // direction points out of the box
      f_new = F(x_new);
      if (f_new <= f + 1e-4 * g.dot(step)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (!mem.s.empty()) {
        mem.clear();
        continue;  // retry with a steepest-descent direction
      }
      break;  // no descent along -g either: numerically stationary
    }

    const Eigen::VectorXd g_new = G(x_new);
    const Eigen::VectorXd step = x_new - x;
    mem.push(step, g_new - g);
    x = x_new;
    f = f_new;
    g = g_new;
    if (step.norm() <= settings.step_tol) {
      run.converged = true;
      break;
    }
  }

  run.x = x;
  run.value = f;
  run.projected_grad_norm = projected_gradient_norm(x, g);
  if (run.projected_grad_norm <= settings.grad_tol) run.converged = true;
  return run;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) return true;
    if (a[k] > b[k]) return false;
  }
  return false;
}

}  // namespace

MinimizeResult minimize(const Eigen::MatrixXd& betas, const Objective& obj,
                        const BasisSpec& basis, const Box& box,
                        const OptimSettings& settings, std::uint64_t seed) {
  if (box.dim() != basis.dim || (box.lower.array() >= box.upper.array()).any())
    throw NumericError("minimize: degenerate or mismatched box");

  const auto starts = multistart_points(box, settings, seed);
  MinimizeResult best;
  bool have_best = false;
  for (const auto& start : starts) {
    const SingleRun run =
        minimize_from(betas, obj, basis, box, settings, start);
    const bool better =
        !have_best || run.value < best.value ||
        (run.value == best.value && lex_less(run.x, best.x));
    if (better) {
      best.x = run.x;
      best.value = run.value;
      best.projected_grad_norm = run.projected_grad_norm;
      best.converged = run.converged;
      have_best = true;
    } else if (run.converged && run.value == best.value) {
      best.converged = true;
    }
  }
  best.starts_used = static_cast<int>(starts.size());
  return best;
}

OptimResult optimize(const FittedModel& model, const Objective& obj,
                     const OptimSettings& settings, std::uint64_t seed) {
  if (obj.weights.size() != model.n_outputs())
    throw NumericError("optimize: weight count does not match outputs");
  Eigen::MatrixXd betas(model.n_outputs(), model.basis.size());
  for (int l = 0; l < model.n_outputs(); ++l)
    betas.row(l) = model.outputs[l].beta_hat.transpose();

  const Box box = Box::coded(model.dim());
  const MinimizeResult res =
      minimize(betas, obj, model.basis, box, settings,
               rng::mix(seed, static_cast<std::uint64_t>(
                                  rng::Stream::kMultiStart)));
  OptimResult out;
  out.x_star_coded = res.x;
  out.x_star = model.domain.from_coded(res.x);
  out.objective_value = res.value;
  out.projected_grad_norm = res.projected_grad_norm;
  out.starts_used = res.starts_used;
  out.converged = res.converged;
  return out;
}

double quantile_nearest_rank(std::vector<double> v, double q) {
  if (v.empty()) throw NumericError("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const int k = static_cast<int>(v.size());
  int idx = static_cast<int>(std::ceil(q * k)) - 1;
  idx = std::clamp(idx, 0, k - 1);
  return v[idx];
}

DecisionEnsemble decision_ensemble(const FittedModel& model,
                                   const Objective& obj, int R,
                                   std::uint64_t seed,
                                   const OptimSettings& settings,
                                   int threads) {
  if (R < 1) throw NumericError("decision_ensemble requires R >= 1");
  if (obj.weights.size() != model.n_outputs())
    throw NumericError("decision_ensemble: weight count mismatch");

  const int d = model.dim();
  DecisionEnsemble ens;
  ens.seed = seed;
  ens.decisions.resize(R, d);
  ens.objective_values.resize(R);
  ens.converged.assign(R, 0);

  const Box box = Box::coded(d);
  parallel_for(R, threads, [&](int i) {
    const PosteriorDraw draw = draw_posterior(model, seed, i);
    const std::uint64_t start_seed =
        rng::mix(seed, static_cast<std::uint64_t>(rng::Stream::kMultiStart),
                 static_cast<std::uint64_t>(i));
    const MinimizeResult res =
        minimize(draw.betas, obj, model.basis, box, settings, start_seed);
    ens.decisions.row(i) = model.domain.from_coded(res.x).transpose();
    ens.objective_values[i] = res.value;
    ens.converged[i] = res.converged ? 1 : 0;
  });

  for (int i = 0; i < R; ++i) ens.converged_count += ens.converged[i];

  for (int k = 0; k < d; ++k) {
    std::vector<double> column;
    column.reserve(R);
    for (int i = 0; i < R; ++i)
      if (ens.converged[i] || ens.converged_count == 0)
        column.push_back(ens.decisions(i, k));
    DimensionSummary s;
    s.median = quantile_nearest_rank(column, 0.50);
    s.q25 = quantile_nearest_rank(column, 0.25);
    s.q75 = quantile_nearest_rank(column, 0.75);
    ens.summaries.push_back(s);
  }
  return ens;
}

}  // namespace warpband
