#include "warpband/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>

#include "warpband/designgen.hpp"
#include "warpband/errors.hpp"
#include "warpband/parallel.hpp"
#include "warpband/rng.hpp"

namespace warpband {

void SliceSpec::validate(const ScaledDomain& domain) const {
  const int d = domain.dim();
  if (free_i == free_j || free_i < 0 || free_j < 0 || free_i >= d ||
      free_j >= d)
    throw NumericError("slice: free dimensions must be distinct and in range");
  if (static_cast<int>(fixed_values.size()) != d - 2)
    throw NumericError("slice: expected " + std::to_string(d - 2) +
                       " fixed values, got " +
                       std::to_string(fixed_values.size()));
  if (g1 < 16 || g2 < 16)
    throw NumericError("slice: grid resolution must be at least 16");
  int fi = 0;
  for (int k = 0; k < d; ++k) {
    if (k == free_i || k == free_j) continue;
    const auto& s = domain.spec(k);
    const double v = fixed_values[fi++];
    if (v < s.lower || v > s.upper)
      throw NumericError("slice: fixed value " + std::to_string(v) +
                         " for '" + s.name + "' outside [" +
                         std::to_string(s.lower) + ", " +
                         std::to_string(s.upper) + "]");
  }
}

Eigen::VectorXd SliceSpec::coded_point(const ScaledDomain& domain,
                                       double a_coded, double b_coded) const {
  const int d = domain.dim();
  Eigen::VectorXd x(d);
  int fi = 0;
  for (int k = 0; k < d; ++k) {
    if (k == free_i) {
      x[k] = a_coded;
    } else if (k == free_j) {
      x[k] = b_coded;
    } else {
      x[k] = domain.to_coded(fixed_values[fi++], k);
    }
  }
  return x;
}

namespace {

// Shared slice geometry: axes plus the stacked basis expansion of every
// grid node (row index i*g2 + j).
struct SliceFrame {
  Eigen::VectorXd a1c, a2c, a1p, a2p;
  Eigen::MatrixXd phi;
  int g1 = 0, g2 = 0;
};

SliceFrame build_frame(const FittedModel& model, const SliceSpec& slice) {
  slice.validate(model.domain);
  SliceFrame f;
  f.g1 = slice.g1;
  f.g2 = slice.g2;
  f.a1c.resize(f.g1);
  f.a2c.resize(f.g2);
  f.a1p.resize(f.g1);
  f.a2p.resize(f.g2);
  for (int i = 0; i < f.g1; ++i) {
    f.a1c[i] = -1.0 + 2.0 * i / (f.g1 - 1);
    f.a1p[i] = model.domain.from_coded(f.a1c[i], slice.free_i);
  }
  for (int j = 0; j < f.g2; ++j) {
    f.a2c[j] = -1.0 + 2.0 * j / (f.g2 - 1);
    f.a2p[j] = model.domain.from_coded(f.a2c[j], slice.free_j);
  }
  f.phi.resize(f.g1 * f.g2, model.basis.size());
  for (int i = 0; i < f.g1; ++i) {
    for (int j = 0; j < f.g2; ++j) {
      const Eigen::VectorXd x =
          slice.coded_point(model.domain, f.a1c[i], f.a2c[j]);
      f.phi.row(i * f.g2 + j) = expand(model.basis, x).transpose();
    }
  }
  return f;
}

Grid2D make_grid(const SliceFrame& f, const Eigen::VectorXd& flat) {
  Grid2D g;
  g.axis1_coded = f.a1c;
  g.axis2_coded = f.a2c;
  g.axis1_phys = f.a1p;
  g.axis2_phys = f.a2p;
  g.values.resize(f.g1, f.g2);
  for (int i = 0; i < f.g1; ++i)
    for (int j = 0; j < f.g2; ++j) g.values(i, j) = flat[i * f.g2 + j];
  return g;
}

}  // namespace

SliceSurfaces eval_slice(const FittedModel& model, int l,
                         const SliceSpec& slice) {
  if (l < 0 || l >= model.n_outputs())
    throw NumericError("eval_slice: bad output index");
  const SliceFrame f = build_frame(model, slice);
  const FittedOutput& out = model.outputs[l];
  const Eigen::VectorXd mean = f.phi * out.beta_hat;
  const Eigen::MatrixXd t = f.phi * out.xtx_inv_chol;
  const Eigen::VectorXd sd =
      std::sqrt(out.sigma2_hat) * t.rowwise().norm();
  SliceSurfaces s;
  s.mean = make_grid(f, mean);
  s.sd = make_grid(f, sd);
  return s;
}

// ---- Marching squares -------------------------------------------------

namespace {

// Edges keyed by (node index, orientation); both cells sharing an edge see
// the identical crossing vertex, so chains stitch exactly.
std::int64_t edge_key(int i, int j, int g2, bool vertical) {
  return (static_cast<std::int64_t>(i) * g2 + j) * 2 + (vertical ? 1 : 0);
}

struct ContourBuilder {
  const Grid2D& grid;
  std::map<std::int64_t, int> edge_vertex;
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 2>> segments;

  explicit ContourBuilder(const Grid2D& g) : grid(g) {}

  bool positive(double v) const { return v >= 0.0; }

  int crossing(int i0, int j0, int i1, int j1, bool vertical) {
    const std::int64_t key = edge_key(i0, j0, grid.g2(), vertical);
    const auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const double v0 = grid.values(i0, j0);
    const double v1 = grid.values(i1, j1);
    const double t = v0 / (v0 - v1);
    std::array<double, 2> pt;
    if (vertical) {
      pt[0] = grid.axis1_phys[i0];
      pt[1] = grid.axis2_phys[j0] +
              t * (grid.axis2_phys[j1] - grid.axis2_phys[j0]);
    } else {
      pt[0] = grid.axis1_phys[i0] +
              t * (grid.axis1_phys[i1] - grid.axis1_phys[i0]);
      pt[1] = grid.axis2_phys[j0];
    }
    const int id = static_cast<int>(vertices.size());
    vertices.push_back(pt);
    edge_vertex.emplace(key, id);
    return id;
  }

  void cell(int i, int j) {
    const double v00 = grid.values(i, j);
    const double v10 = grid.values(i + 1, j);
    const double v01 = grid.values(i, j + 1);
    const double v11 = grid.values(i + 1, j + 1);
    const bool b00 = positive(v00), b10 = positive(v10);
    const bool b01 = positive(v01), b11 = positive(v11);

    const bool s = b00 != b10;  // south edge crossed
    const bool n = b01 != b11;
    const bool w = b00 != b01;
    const bool e = b10 != b11;
    const int crossed = int(s) + int(n) + int(w) + int(e);
    if (crossed == 0) return;

    const auto S = [&] { return crossing(i, j, i + 1, j, false); };
    const auto N = [&] { return crossing(i, j + 1, i + 1, j + 1, false); };
    const auto W = [&] { return crossing(i, j, i, j + 1, true); };
    const auto E = [&] { return crossing(i + 1, j, i + 1, j + 1, true); };

    if (crossed == 2) {
      int a = -1, b = -1;
      if (s) a = S();
      if (n) (a < 0 ? a : b) = N();
      if (w) (a < 0 ? a : b) = W();
      if (e) (a < 0 ? a : b) = E();
      segments.push_back({a, b});
      return;
    }
    // Saddle: all four edges crossed; pair by the cell-center sign.
    const double center = 0.25 * (v00 + v10 + v01 + v11);
    if (positive(center) == b00) {
      segments.push_back({S(), E()});
      segments.push_back({N(), W()});
    } else {
      segments.push_back({S(), W()});
      segments.push_back({N(), E()});
    }
  }

  ContourSet extract() {
    for (int i = 0; i + 1 < grid.g1(); ++i)
      for (int j = 0; j + 1 < grid.g2(); ++j) cell(i, j);

    // Chain the segments: walk open paths from degree-1 vertices first,
    // then any remaining cycles.
    std::vector<std::vector<int>> adj(vertices.size());
    for (std::size_t sidx = 0; sidx < segments.size(); ++sidx) {
      adj[segments[sidx][0]].push_back(static_cast<int>(sidx));
      adj[segments[sidx][1]].push_back(static_cast<int>(sidx));
    }
    std::vector<bool> used(segments.size(), false);
    ContourSet out;
    out.level = 0.0;

    const auto walk = [&](int start_vertex) {
      Polyline line;
      int v = start_vertex;
      line.points.push_back(vertices[v]);
      for (;;) {
        int next_seg = -1;
        for (int sidx : adj[v])
          if (!used[sidx]) {
            next_seg = sidx;
            break;
          }
        if (next_seg < 0) break;
        used[next_seg] = true;
        v = segments[next_seg][0] == v ? segments[next_seg][1]
                                       : segments[next_seg][0];
        if (v == start_vertex) {
          line.closed = true;
          break;
        }
        line.points.push_back(vertices[v]);
      }
      return line;
    };

    for (std::size_t v = 0; v < vertices.size(); ++v)
      if (adj[v].size() == 1) {
        bool pending = false;
        for (int sidx : adj[v]) pending = pending || !used[sidx];
        if (pending) out.polylines.push_back(walk(static_cast<int>(v)));
      }
    for (std::size_t sidx = 0; sidx < segments.size(); ++sidx)
      if (!used[sidx]) out.polylines.push_back(walk(segments[sidx][0]));
    return out;
  }
};

}  // namespace

ContourSet zero_contour(const Grid2D& surface) {
  if (!surface.values.allFinite())
    throw NumericError("zero_contour: surface has non-finite values");
  ContourBuilder builder(surface);
  return builder.extract();
}

std::vector<std::vector<RegionLabel>> sign_regions(const Grid2D& surface) {
  if (!surface.values.allFinite())
    throw NumericError("sign_regions: surface has non-finite values");
  const double scale = surface.values.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * scale;
  std::vector<std::vector<RegionLabel>> labels(
      surface.g1(), std::vector<RegionLabel>(surface.g2()));
  for (int i = 0; i < surface.g1(); ++i) {
    for (int j = 0; j < surface.g2(); ++j) {
      const double v = surface.values(i, j);
      labels[i][j] = std::abs(v) <= tol  ? RegionLabel::kNearZero
                     : v > 0.0           ? RegionLabel::kPositive
                                         : RegionLabel::kNegative;
    }
  }
  return labels;
}

// ---- Confidence bands -------------------------------------------------

std::vector<std::vector<bool>> mask_for_alpha(const BandGrid& grid,
                                              double alpha) {
  std::vector<std::vector<bool>> mask(grid.coverage_fraction.rows(),
                                      std::vector<bool>(
                                          grid.coverage_fraction.cols()));
  for (int i = 0; i < grid.coverage_fraction.rows(); ++i)
    for (int j = 0; j < grid.coverage_fraction.cols(); ++j)
      mask[i][j] = grid.coverage_fraction(i, j) >= 1.0 - alpha;
  return mask;
}

std::vector<BandResult> confidence_bands(const FittedModel& model, int l,
                                         const SliceSpec& slice, double alpha,
                                         const std::vector<double>& epsilons,
                                         int R, std::uint64_t seed,
                                         const BandOptions& opts) {
  if (l < 0 || l >= model.n_outputs())
    throw NumericError("confidence_band: bad output index");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw NumericError("confidence_band: alpha must be in (0, 1)");
  if (epsilons.empty()) throw NumericError("confidence_band: no tolerances");
  for (double e : epsilons)
    if (!(e > 0.0)) throw NumericError("confidence_band: epsilon must be > 0");
  if (R < 1) throw NumericError("confidence_band: R >= 1 required");
  if (R < 100)
    std::cerr << "warning: R = " << R
              << " draws resolves coverage coarser than 1%\n";

  const FittedOutput& out = model.outputs[l];
  if (opts.mode == BandMode::kStandardized && out.sigma2_hat <= 0.0)
    throw DegeneratePosteriorError(
        "confidence band undefined: sigma2_hat = 0 gives a degenerate "
        "posterior and sigma_y(x) = 0");

  const SliceFrame frame = build_frame(model, slice);
  const int cells = frame.g1 * frame.g2;
  const int n_eps = static_cast<int>(epsilons.size());

  const Eigen::VectorXd mean_flat = frame.phi * out.beta_hat;
  const Eigen::VectorXd sd_flat =
      std::sqrt(out.sigma2_hat) *
      (frame.phi * out.xtx_inv_chol).rowwise().norm();

  // Per-point acceptance thresholds for |y_i(x)|, one column per epsilon.
  Eigen::MatrixXd thresholds(cells, n_eps);
  for (int e = 0; e < n_eps; ++e)
    thresholds.col(e) = opts.mode == BandMode::kStandardized
                            ? (epsilons[e] * sd_flat).eval()
                            : Eigen::VectorXd::Constant(cells, epsilons[e]);

  // Which draws get their zero-level set extracted.
  const int K = std::min(opts.draw_contours, R);
  std::vector<int> picks(R);
  std::iota(picks.begin(), picks.end(), 0);
  auto pick_eng = rng::make_engine(seed, rng::Stream::kContourPick);
  rng::shuffle(picks, pick_eng);
  picks.resize(K);
  std::sort(picks.begin(), picks.end());
  std::map<int, int> pick_slot;
  for (int k = 0; k < K; ++k) pick_slot[picks[k]] = k;
  Eigen::MatrixXd picked_surfaces(cells, K);

  const int threads = std::max(1, opts.threads);
  std::vector<Eigen::MatrixXi> local_counts(
      threads, Eigen::MatrixXi::Zero(cells, n_eps));
  std::mutex slot_mutex;

  // Draws are split in contiguous blocks; counts are integer sums, so the
  // totals do not depend on the split.
  parallel_for(threads, threads, [&](int t) {
    const int chunk = (R + threads - 1) / threads;
    const int begin = t * chunk;
    const int end = std::min(R, begin + chunk);
    Eigen::MatrixXi& counts = local_counts[t];
    for (int i = begin; i < end; ++i) {
      const PosteriorDraw draw = draw_posterior(model, seed, i, opts.sampler);
      const Eigen::VectorXd y = frame.phi * draw.betas.row(l).transpose();
      const auto y_abs = y.array().abs();
      for (int e = 0; e < n_eps; ++e) {
        if (opts.mode == BandMode::kUnstandardized)
          counts.col(e) +=
              (y_abs < thresholds.col(e).array()).cast<int>().matrix();
        else
          counts.col(e) +=
              (y_abs <= thresholds.col(e).array()).cast<int>().matrix();
      }
      const auto slot = pick_slot.find(i);
      if (slot != pick_slot.end()) {
        std::lock_guard<std::mutex> lock(slot_mutex);
        picked_surfaces.col(slot->second) = y;
      }
    }
  });

  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(cells, n_eps);
  for (const auto& c : local_counts) counts += c;

  const Grid2D mean_grid = make_grid(frame, mean_flat);
  const Grid2D sd_grid = make_grid(frame, sd_flat);
  ContourSet mean_contour = zero_contour(mean_grid);
  mean_contour.source = ContourSource::kMean;

  std::vector<ContourSet> draw_contours;
  for (int k = 0; k < K; ++k) {
    const Grid2D g = make_grid(frame, picked_surfaces.col(k));
    ContourSet c = zero_contour(g);
    c.source = ContourSource::kDraw;
    c.draw_index = picks[k];
    draw_contours.push_back(std::move(c));
  }

  std::vector<BandResult> results;
  for (int e = 0; e < n_eps; ++e) {
    BandResult res;
    res.grid.slice = slice;
    res.grid.mean = mean_grid;
    res.grid.sd = sd_grid;
    Eigen::MatrixXd cov(frame.g1, frame.g2);
    for (int i = 0; i < frame.g1; ++i)
      for (int j = 0; j < frame.g2; ++j)
        cov(i, j) = static_cast<double>(counts(i * frame.g2 + j, e)) / R;
    res.grid.coverage_fraction = cov;
    res.grid.alpha = alpha;
    res.grid.epsilon = epsilons[e];
    res.grid.R = R;
    res.grid.seed = seed;
    res.grid.mode = opts.mode;
    res.grid.band_mask = mask_for_alpha(res.grid, alpha);
    res.mean_contour = mean_contour;
    res.draw_contours = draw_contours;
    results.push_back(std::move(res));
  }
  return results;
}

BandResult confidence_band(const FittedModel& model, int l,
                           const SliceSpec& slice, double alpha,
                           double epsilon, int R, std::uint64_t seed,
                           const BandOptions& opts) {
  return confidence_bands(model, l, slice, alpha, {epsilon}, R, seed,
                          opts)[0];
}

Eigen::MatrixXd posterior_beta_matrix(const FittedModel& model, int l, int R,
                                      std::uint64_t seed,
                                      const SamplerOptions& opts) {
  if (l < 0 || l >= model.n_outputs())
    throw NumericError("posterior_beta_matrix: bad output index");
  Eigen::MatrixXd betas(model.basis.size(), R);
  for (int i = 0; i < R; ++i)
    betas.col(i) = draw_posterior(model, seed, i, opts).betas.row(l).transpose();
  return betas;
}

double coverage_at(const FittedModel& model, int l,
                   const Eigen::MatrixXd& beta_draws,
                   const Eigen::VectorXd& x_coded, double epsilon,
                   BandMode mode) {
  const Eigen::VectorXd px = expand(model.basis, x_coded);
  const Eigen::VectorXd y = beta_draws.transpose() * px;
  if (mode == BandMode::kStandardized) {
    const double sd = predict_sd(model, x_coded, l);
    if (sd <= 0.0)
      throw DegeneratePosteriorError("coverage_at: sigma_y(x) = 0");
    return static_cast<double>((y.array().abs() <= epsilon * sd).count()) /
           static_cast<double>(y.size());
  }
  return static_cast<double>((y.array().abs() < epsilon).count()) /
         static_cast<double>(y.size());
}

// ---- Synthetic examples ----------------------------------------------

Eigen::VectorXd example2_coefficients() {
  Eigen::VectorXd c(6);
  c << -82.17, -2.01, -1.61, 2.4, -1.2, 3.76;
  return c;
}

double example2_value(double x1, double x2) {
  return -82.17 - 2.01 * x1 - 1.61 * x2 + 2.4 * x1 * x1 + 3.76 * x2 * x2 -
         1.2 * x1 * x2;
}

Eigen::VectorXd example1_coefficients() {
  Eigen::VectorXd c(3);
  c << 161.804, -2.412, 0.009;  // minimum at 134, value 0.2
  return c;
}

namespace {

Dataset synth_poly(const std::vector<VariableSpec>& specs,
                   const std::string& output_name, const BasisSpec& basis,
                   const Eigen::VectorXd& coeffs, int n, std::uint64_t seed,
                   NoiseMode noise, double fixed_sigma2) {
  const int d = static_cast<int>(specs.size());
  const LhsDesign design = lhs(n, d, seed);
  Dataset ds;
  ds.input_specs = specs;
  ds.output_names = {output_name};
  ds.inputs = scale_to_box(design, specs);
  ds.outputs.resize(n, 1);

  auto eng = rng::make_engine(seed, rng::Stream::kSynthNoise);
  rng::NormalStream normals(eng);
  double sigma = 0.0;
  switch (noise) {
    case NoiseMode::kNone:
      break;
    case NoiseMode::kFixed:
      if (fixed_sigma2 < 0.0)
        throw NumericError("fixed noise variance must be >= 0");
      sigma = std::sqrt(fixed_sigma2);
      break;
    case NoiseMode::kGammaOnce:
      sigma = std::sqrt(rng::gamma2_rate1(eng));
      break;
    case NoiseMode::kGammaPerObs:
      break;  // drawn per row below
  }
  for (int i = 0; i < n; ++i) {
    const double mean = expand(basis, ds.inputs.row(i).transpose()).dot(coeffs);
    double s = sigma;
    if (noise == NoiseMode::kGammaPerObs)
      s = std::sqrt(rng::gamma2_rate1(eng));
    ds.outputs(i, 0) =
        noise == NoiseMode::kNone ? mean : mean + s * normals.next();
  }
  return ds;
}

std::vector<VariableSpec> example2_specs() {
  return {{"x1", -10.0, 10.0}, {"x2", -10.0, 10.0}};
}

std::vector<VariableSpec> example1_specs() {
  return {{"temperature", 120.0, 150.0}};
}

}  // namespace

Dataset synth_example2(int n, std::uint64_t seed, NoiseMode noise,
                       double fixed_sigma2) {
  if (n < 6) throw NumericError("synth_example2 requires n >= 6");
  return synth_poly(example2_specs(), "y", BasisSpec::full(2, 2),
                    example2_coefficients(), n, seed, noise, fixed_sigma2);
}

SynthTruth example2_truth(std::uint64_t seed, NoiseMode noise,
                          double fixed_sigma2) {
  SynthTruth t;
  t.coefficients = example2_coefficients();
  t.basis = BasisSpec::full(2, 2);
  t.input_specs = example2_specs();
  t.noise = noise;
  t.fixed_sigma2 = fixed_sigma2;
  t.seed = seed;
  return t;
}

Dataset synth_example1(int n, std::uint64_t seed, NoiseMode noise,
                       double fixed_sigma2) {
  if (n < 3) throw NumericError("synth_example1 requires n >= 3");
  return synth_poly(example1_specs(), "deformation", BasisSpec::full(1, 2),
                    example1_coefficients(), n, seed, noise, fixed_sigma2);
}

SynthTruth example1_truth(std::uint64_t seed, NoiseMode noise,
                          double fixed_sigma2) {
  SynthTruth t;
  t.coefficients = example1_coefficients();
  t.basis = BasisSpec::full(1, 2);
  t.input_specs = example1_specs();
  t.noise = noise;
  t.fixed_sigma2 = fixed_sigma2;
  t.seed = seed;
  return t;
}

}  // namespace warpband
