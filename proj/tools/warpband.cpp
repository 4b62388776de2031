// warpband: fit polynomial surrogates, optimize under the posterior, and
// map zero-level confidence bands from the command line.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "warpband/bayes_lm.hpp"
#include "warpband/boundary.hpp"
#include "warpband/csv.hpp"
#include "warpband/dataset.hpp"
#include "warpband/designgen.hpp"
#include "warpband/errors.hpp"
#include "warpband/optimizer.hpp"
#include "warpband/polybasis.hpp"
#include "warpband/svg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace warpband;

namespace {

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("WARPBAND_SEED")) {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(env, &pos);
      if (pos != std::string(env).size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw IoError("WARPBAND_SEED is not an unsigned integer: '" +
                    std::string(env) + "'");
    }
  }
  return 0;
}

void ensure_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory '" + out + "': " +
                        ec.message());
}

std::string path_join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
            c == '_')
               ? c
               : '_';
  return out;
}

void write_json(const std::string& path, const json& j) {
  svg::write_file(path, j.dump(2) + "\n");
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Objective make_objective(const std::vector<double>& weights, int m) {
  if (weights.empty()) return Objective::sum_squares(m);
  if (static_cast<int>(weights.size()) != m)
    throw IoError("expected " + std::to_string(m) + " weights, got " +
                  std::to_string(weights.size()));
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i) w[i] = weights[i];
  return Objective::weighted(w);
}

NoiseMode parse_noise(const std::string& s) {
  if (s == "none") return NoiseMode::kNone;
  if (s == "gamma-once") return NoiseMode::kGammaOnce;
  if (s == "gamma-per-obs") return NoiseMode::kGammaPerObs;
  if (s == "fixed") return NoiseMode::kFixed;
  throw IoError("unknown noise mode '" + s +
                "' (expected none, gamma-once, gamma-per-obs, fixed)");
}

std::string noise_name(NoiseMode m) {
  switch (m) {
    case NoiseMode::kNone: return "none";
    case NoiseMode::kGammaOnce: return "gamma-once";
    case NoiseMode::kGammaPerObs: return "gamma-per-obs";
    case NoiseMode::kFixed: return "fixed";
  }
  return "?";
}

int find_input(const FittedModel& model, const std::string& token) {
  const auto& specs = model.domain.specs();
  for (std::size_t k = 0; k < specs.size(); ++k)
    if (specs[k].name == token) return static_cast<int>(k);
  try {
    std::size_t pos = 0;
    const int idx = std::stoi(token, &pos);
    if (pos == token.size() && idx >= 1 && idx <= static_cast<int>(specs.size()))
      return idx - 1;
  } catch (const std::exception&) {
  }
  throw IoError("unknown input '" + token +
                "' (use a 1-based index or a config name)");
}

// Tokens of the form free=i,j and fixed=name:value,... in any order. When
// `defaults` is given, unfixed non-free dimensions fall back to it instead
// of being an error.
SliceSpec parse_slice(const FittedModel& model,
                      const std::vector<std::string>& tokens, int g1, int g2,
                      const std::vector<double>* defaults = nullptr) {
  const int d = model.dim();
  SliceSpec slice;
  slice.g1 = g1;
  slice.g2 = g2;
  bool have_free = false;
  std::vector<std::optional<double>> fixed(d);

  for (const std::string& tok : tokens) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw IoError("bad slice token '" + tok +
                    "' (expected free=i,j or fixed=name:value,...)");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "free") {
      const auto comma = val.find(',');
      if (comma == std::string::npos)
        throw IoError("free= needs two dimensions, e.g. free=1,2");
      slice.free_i = find_input(model, val.substr(0, comma));
      slice.free_j = find_input(model, val.substr(comma + 1));
      if (slice.free_i == slice.free_j)
        throw IoError("free= dimensions must be distinct");
      have_free = true;
    } else if (key == "fixed") {
      std::size_t start = 0;
      while (start < val.size()) {
        auto end = val.find(',', start);
        if (end == std::string::npos) end = val.size();
        const std::string pair = val.substr(start, end - start);
        const auto colon = pair.find(':');
        if (colon == std::string::npos)
          throw IoError("bad fixed= entry '" + pair +
                        "' (expected name:value)");
        const int k = find_input(model, pair.substr(0, colon));
        double v = 0;
        try {
          v = std::stod(pair.substr(colon + 1));
        } catch (const std::exception&) {
          throw IoError("bad fixed= value in '" + pair + "'");
        }
        if (fixed[k])
          throw IoError("dimension '" + model.domain.spec(k).name +
                        "' fixed twice");
        fixed[k] = v;
        start = end + 1;
      }
    } else {
      throw IoError("bad slice token '" + tok + "'");
    }
  }

  if (!have_free) {
    if (d != 2)
      throw IoError("slice needs free=i,j when the model has " +
                    std::to_string(d) + " inputs");
    slice.free_i = 0;
    slice.free_j = 1;
  }
  for (int k = 0; k < d; ++k) {
    if (k == slice.free_i || k == slice.free_j) continue;
    if (fixed[k])
      slice.fixed_values.push_back(*fixed[k]);
    else if (defaults)
      slice.fixed_values.push_back((*defaults)[k]);
    else
      throw IoError("no fixed value for input '" + model.domain.spec(k).name +
                    "'");
  }
  return slice;
}

void parse_grid(const std::string& s, int& g1, int& g2) {
  try {
    const auto x = s.find('x');
    if (x == std::string::npos) {
      g1 = g2 = std::stoi(s);
    } else {
      g1 = std::stoi(s.substr(0, x));
      g2 = std::stoi(s.substr(x + 1));
    }
  } catch (const std::exception&) {
    throw IoError("bad --grid '" + s + "' (expected N or N1xN2)");
  }
  if (g1 < 16 || g2 < 16) throw IoError("--grid must be at least 16");
}

json slice_json(const FittedModel& model, const SliceSpec& slice) {
  json fixed = json::object();
  int fi = 0;
  for (int k = 0; k < model.dim(); ++k) {
    if (k == slice.free_i || k == slice.free_j) continue;
    fixed[model.domain.spec(k).name] = slice.fixed_values[fi++];
  }
  return json{{"free", {model.domain.spec(slice.free_i).name,
                        model.domain.spec(slice.free_j).name}},
              {"free_indices", {slice.free_i + 1, slice.free_j + 1}},
              {"fixed", fixed},
              {"grid", {slice.g1, slice.g2}}};
}

json contour_json(const ContourSet& c) {
  json lines = json::array();
  for (const Polyline& pl : c.polylines) {
    json pts = json::array();
    for (const auto& p : pl.points) pts.push_back({p[0], p[1]});
    lines.push_back(json{{"closed", pl.closed}, {"points", pts}});
  }
  return json{{"level", c.level}, {"polylines", lines}};
}

// ---- fit ---------------------------------------------------------------

struct FitArgs {
  std::string data, config, out = ".";
  int degree = 2;
  bool relax_bounds = false;
};

FittedModel run_fit(const FitArgs& a, bool quiet = false) {
  DataConfig cfg = load_config(a.config);
  if (a.relax_bounds) cfg.strict = false;
  const Dataset ds = load_csv(a.data, cfg);
  auto [coded, domain] = to_coded(ds);
  const BasisSpec basis = BasisSpec::full(ds.dim(), a.degree);
  const FittedModel model = fit(coded, domain, basis);

  ensure_dir(a.out);
  save_model(path_join(a.out, "model.json"), model);

  std::vector<std::string> input_names;
  for (const auto& s : ds.input_specs) input_names.push_back(s.name);

  json outputs = json::array();
  for (int l = 0; l < model.n_outputs(); ++l) {
    const FittedOutput& o = model.outputs[l];
    const Eigen::VectorXd phys =
        to_physical_coefficients(basis, o.beta_hat, domain);
    json coded_terms = json::array();
    json phys_terms = json::array();
    for (int j = 0; j < basis.size(); ++j) {
      coded_terms.push_back(json{{"term", basis.term_name(j, input_names)},
                                 {"value", o.beta_hat[j]}});
      phys_terms.push_back(json{{"term", basis.term_name(j, input_names)},
                                {"value", phys[j]}});
    }
    outputs.push_back(json{{"name", model.output_names[l]},
                           {"r2", o.r2},
                           {"sigma2_hat", o.sigma2_hat},
                           {"residual_ss", o.residual_ss},
                           {"n", o.n},
                           {"p", o.p},
                           {"coefficients_coded", coded_terms},
                           {"coefficients_physical", phys_terms}});
    if (!quiet)
      std::cout << "fit " << model.output_names[l] << ": R2 = " << o.r2
                << ", sigma2 = " << o.sigma2_hat << "\n";
  }
  write_json(path_join(a.out, "fit_report.json"),
             json{{"data", a.data},
                  {"n", ds.n()},
                  {"degree", a.degree},
                  {"terms", basis.size()},
                  {"outputs", outputs}});
  return model;
}

// ---- optimize ----------------------------------------------------------

OptimResult run_optimize(const FittedModel& model,
                         const std::vector<double>& weights, int starts,
                         std::uint64_t seed, const std::string& out,
                         bool quiet = false) {
  const Objective obj = make_objective(weights, model.n_outputs());
  OptimSettings settings;
  settings.starts = starts;
  const OptimResult res = optimize(model, obj, settings, seed);

  ensure_dir(out);
  json x_named = json::object();
  for (int k = 0; k < model.dim(); ++k)
    x_named[model.domain.spec(k).name] = res.x_star[k];
  write_json(path_join(out, "optimize.json"),
             json{{"x_star", x_named},
                  {"x_star_array", vec_json(res.x_star)},
                  {"x_star_coded", vec_json(res.x_star_coded)},
                  {"objective_value", res.objective_value},
                  {"projected_grad_norm", res.projected_grad_norm},
                  {"starts_used", res.starts_used},
                  {"converged", res.converged},
                  {"seed", seed}});
  if (!quiet) {
    std::cout << "optimum:";
    for (int k = 0; k < model.dim(); ++k)
      std::cout << " " << model.domain.spec(k).name << " = "
                << res.x_star[k];
    std::cout << "\nobjective = " << res.objective_value
              << (res.converged ? "" : "  (not converged)") << "\n";
  }
  return res;
}

// ---- uq ----------------------------------------------------------------

DecisionEnsemble run_uq(const FittedModel& model,
                        const std::vector<double>& weights, int R,
                        std::uint64_t seed, int threads,
                        const std::string& out, bool quiet = false) {
  const Objective obj = make_objective(weights, model.n_outputs());
  const DecisionEnsemble ens =
      decision_ensemble(model, obj, R, seed, OptimSettings{}, threads);

  ensure_dir(out);
  const int d = model.dim();
  std::vector<std::string> columns = {"draw_index", "converged"};
  for (int k = 0; k < d; ++k) columns.push_back(model.domain.spec(k).name);
  columns.push_back("objective_value");
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < R; ++i) {
    std::vector<double> row = {static_cast<double>(i),
                               static_cast<double>(ens.converged[i])};
    for (int k = 0; k < d; ++k) row.push_back(ens.decisions(i, k));
    row.push_back(ens.objective_values[i]);
    rows.push_back(std::move(row));
  }
  csv::write_table(path_join(out, "ensemble.csv"), columns, rows);

  const bool use_all = ens.converged_count == 0;
  std::vector<double> obj_vals;
  for (int i = 0; i < R; ++i)
    if (ens.converged[i] || use_all)
      obj_vals.push_back(ens.objective_values[i]);

  json inputs = json::array();
  for (int k = 0; k < d; ++k) {
    const DimensionSummary& s = ens.summaries[k];
    inputs.push_back(json{{"name", model.domain.spec(k).name},
                          {"median", s.median},
                          {"q25", s.q25},
                          {"q75", s.q75}});
    svg::Histogram h;
    for (int i = 0; i < R; ++i)
      if (ens.converged[i] || use_all) h.values.push_back(ens.decisions(i, k));
    h.median = s.median;
    h.q25 = s.q25;
    h.q75 = s.q75;
    h.title = "optimal " + model.domain.spec(k).name + " over " +
              std::to_string(R) + " posterior draws";
    h.x_label = model.domain.spec(k).name;
    svg::write_histogram(
        path_join(out, "hist_" + sanitize(model.domain.spec(k).name) + ".svg"),
        h);
  }
  write_json(
      path_join(out, "uq_summary.json"),
      json{{"R", R},
           {"seed", seed},
           {"converged_count", ens.converged_count},
           {"non_converged_count", R - ens.converged_count},
           {"inputs", inputs},
           {"objective",
            json{{"median", quantile_nearest_rank(obj_vals, 0.50)},
                 {"q25", quantile_nearest_rank(obj_vals, 0.25)},
                 {"q75", quantile_nearest_rank(obj_vals, 0.75)}}}});
  if (!quiet)
    std::cout << "ensemble: " << ens.converged_count << "/" << R
              << " draws converged\n";
  return ens;
}

// ---- boundary ----------------------------------------------------------

struct TruthPoly {
  BasisSpec basis;
  Eigen::VectorXd coefficients;  // physical scale
};

TruthPoly load_truth(const std::string& path, const FittedModel& model) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open truth file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("truth file '" + path + "': " + e.what());
  }
  TruthPoly t;
  try {
    t.basis = BasisSpec::full(j.at("basis").at("dim").get<int>(),
                              j.at("basis").at("degree").get<int>());
    const auto& coeffs = j.at("coefficients");
    t.coefficients.resize(coeffs.size());
    int i = 0;
    for (const auto& c : coeffs) t.coefficients[i++] = c.at("value").get<double>();
  } catch (const json::exception& e) {
    throw IoError("truth file '" + path + "': " + e.what());
  }
  if (t.basis.dim != model.dim())
    throw IoError("truth file dimension mismatch");
  if (t.coefficients.size() != t.basis.size())
    throw IoError("truth file coefficient count mismatch");
  return t;
}

ContourSet truth_contour(const TruthPoly& truth, const FittedModel& model,
                         const SliceSpec& slice, const Grid2D& axes) {
  Grid2D g = axes;
  const int d = model.dim();
  for (int i = 0; i < g.g1(); ++i) {
    for (int j = 0; j < g.g2(); ++j) {
      Eigen::VectorXd x(d);
      int fi = 0;
      for (int k = 0; k < d; ++k) {
        if (k == slice.free_i)
          x[k] = g.axis1_phys[i];
        else if (k == slice.free_j)
          x[k] = g.axis2_phys[j];
        else
          x[k] = slice.fixed_values[fi++];
      }
      g.values(i, j) = expand(truth.basis, x).dot(truth.coefficients);
    }
  }
  ContourSet c = zero_contour(g);
  c.source = ContourSource::kTruth;
  return c;
}

// Merge same-state runs along axis 2 so the mask paints as few rects as
// possible.
void paint_mask(svg::Canvas& canvas, const BandGrid& grid,
                const std::string& fill, double opacity) {
  const Grid2D& m = grid.mean;
  const int g1 = m.g1(), g2 = m.g2();
  const auto x_edge = [&](int i, int side) {
    const double lo = m.axis1_phys[0], hi = m.axis1_phys[g1 - 1];
    const double h = (hi - lo) / (g1 - 1);
    return std::clamp(m.axis1_phys[i] + (side == 0 ? -h / 2 : h / 2), lo, hi);
  };
  const auto y_edge = [&](int j, int side) {
    const double lo = m.axis2_phys[0], hi = m.axis2_phys[g2 - 1];
    const double h = (hi - lo) / (g2 - 1);
    return std::clamp(m.axis2_phys[j] + (side == 0 ? -h / 2 : h / 2), lo, hi);
  };
  for (int i = 0; i < g1; ++i) {
    int j = 0;
    while (j < g2) {
      if (!grid.band_mask[i][j]) {
        ++j;
        continue;
      }
      int j2 = j;
      while (j2 + 1 < g2 && grid.band_mask[i][j2 + 1]) ++j2;
      canvas.rect(x_edge(i, 0), y_edge(j, 0), x_edge(i, 1), y_edge(j2, 1),
                  fill, opacity);
      j = j2 + 1;
    }
  }
}

void draw_contour_set(svg::Canvas& canvas, const ContourSet& c,
                      const std::string& stroke, double width,
                      bool dashed = false) {
  for (const Polyline& pl : c.polylines)
    canvas.polyline(pl.points, stroke, width, dashed, pl.closed);
}

struct BoundaryArgs {
  std::string out = ".";
  std::vector<std::string> slice_tokens;
  std::vector<std::string> outputs;  // names; empty = all
  std::vector<double> epsilons;
  std::vector<double> weights;
  double alpha = 0.05;
  int R = 1000;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string grid = "201";
  std::string mode = "standardized";
  int draw_contours = 20;
  std::string truth_path;
  bool objective_contour = false;
  bool hierarchical = false;
  std::vector<double> slice_defaults;  // per-dim fallback for unfixed dims
};

void run_boundary(const FittedModel& model, const BoundaryArgs& a,
                  bool quiet = false) {
  const std::uint64_t seed = resolve_seed(a.seed);
  int g1 = 201, g2 = 201;
  parse_grid(a.grid, g1, g2);
  const SliceSpec slice = parse_slice(
      model, a.slice_tokens, g1, g2,
      a.slice_defaults.empty() ? nullptr : &a.slice_defaults);
  std::vector<double> epsilons =
      a.epsilons.empty() ? std::vector<double>{2.5} : a.epsilons;

  BandOptions opts;
  opts.draw_contours = a.draw_contours;
  opts.threads = a.threads;
  opts.sampler.hierarchical_sigma2 = a.hierarchical;
  if (a.mode == "standardized")
    opts.mode = BandMode::kStandardized;
  else if (a.mode == "unstandardized")
    opts.mode = BandMode::kUnstandardized;
  else
    throw IoError("bad --mode '" + a.mode +
                  "' (standardized or unstandardized)");

  std::vector<int> which;
  if (a.outputs.empty()) {
    for (int l = 0; l < model.n_outputs(); ++l) which.push_back(l);
  } else {
    for (const std::string& name : a.outputs) {
      const auto it = std::find(model.output_names.begin(),
                                model.output_names.end(), name);
      if (it == model.output_names.end())
        throw IoError("unknown output '" + name + "'");
      which.push_back(
          static_cast<int>(it - model.output_names.begin()));
    }
  }

  ensure_dir(a.out);
  std::optional<TruthPoly> truth;
  if (!a.truth_path.empty()) truth = load_truth(a.truth_path, model);

  const std::string x_name = model.domain.spec(slice.free_i).name;
  const std::string y_name = model.domain.spec(slice.free_j).name;

  for (int l : which) {
    const std::vector<BandResult> bands = confidence_bands(
        model, l, slice, a.alpha, epsilons, a.R, seed, opts);
    std::optional<ContourSet> tc;
    if (truth)
      tc = truth_contour(*truth, model, slice, bands[0].grid.mean);

    for (const BandResult& band : bands) {
      const BandGrid& grid = band.grid;
      const std::string stem = "band_" + sanitize(model.output_names[l]) +
                               "_eps" + svg::fmt(grid.epsilon);

      std::vector<std::vector<double>> rows;
      for (int i = 0; i < grid.mean.g1(); ++i)
        for (int j = 0; j < grid.mean.g2(); ++j)
          rows.push_back({grid.mean.axis1_phys[i], grid.mean.axis2_phys[j],
                          grid.mean.values(i, j), grid.sd.values(i, j),
                          grid.coverage_fraction(i, j),
                          grid.band_mask[i][j] ? 1.0 : 0.0});
      csv::write_table(path_join(a.out, stem + ".csv"),
                       {"x1_phys", "x2_phys", "mean", "sd", "coverage",
                        "in_band"},
                       rows);

      json draws = json::array();
      for (const ContourSet& c : band.draw_contours) {
        json cj = contour_json(c);
        cj["draw_index"] = c.draw_index;
        draws.push_back(cj);
      }
      json meta{{"output", model.output_names[l]},
                {"alpha", grid.alpha},
                {"epsilon", grid.epsilon},
                {"R", grid.R},
                {"seed", grid.seed},
                {"mode", a.mode},
                {"slice", slice_json(model, slice)},
                {"mean_contour", contour_json(band.mean_contour)},
                {"draw_contours", draws}};
      if (tc) meta["truth_contour"] = contour_json(*tc);
      write_json(path_join(a.out, stem + ".json"), meta);

      svg::Canvas canvas(grid.mean.axis1_phys[0],
                         grid.mean.axis1_phys[grid.mean.g1() - 1],
                         grid.mean.axis2_phys[0],
                         grid.mean.axis2_phys[grid.mean.g2() - 1]);
      canvas.set_title(model.output_names[l] + " zero-level band, eps = " +
                       svg::fmt(grid.epsilon) + ", alpha = " +
                       svg::fmt(grid.alpha));
      canvas.set_labels(x_name, y_name);
      paint_mask(canvas, grid, "#7aa6d8", 0.45);
      for (const ContourSet& c : band.draw_contours)
        draw_contour_set(canvas, c, "#999999", 0.8);
      draw_contour_set(canvas, band.mean_contour, "#6a3d9a", 2.0);
      if (tc) draw_contour_set(canvas, *tc, "#2c8c4b", 2.0);
      std::vector<std::pair<std::string, std::string>> legend = {
          {"#7aa6d8", "band (coverage >= " + svg::fmt(1 - grid.alpha) + ")"},
          {"#6a3d9a", "mean zero contour"},
          {"#999999", std::to_string(band.draw_contours.size()) +
                          " draw contours"}};
      if (tc) legend.push_back({"#2c8c4b", "true zero contour"});
      canvas.legend(legend);
      if (band.mean_contour.polylines.empty())
        canvas.annotation("no boundary in slice");
      svg::write_file(path_join(a.out, stem + ".svg"), canvas.render());

      if (!quiet)
        std::cout << "band " << model.output_names[l] << " eps "
                  << svg::fmt(grid.epsilon) << ": "
                  << band.mean_contour.polylines.size()
                  << " mean contour component(s)\n";
    }
  }

  if (a.objective_contour) {
    const Objective obj = make_objective(a.weights, model.n_outputs());
    Grid2D g;
    for (int l : which) {
      const SliceSurfaces s = eval_slice(model, l, slice);
      if (g.values.size() == 0) {
        g = s.mean;
        g.values.setZero();
      }
      const double w = obj.weights[l];
      g.values += w * s.mean.values.array().square().matrix();
    }
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < g.g1(); ++i)
      for (int j = 0; j < g.g2(); ++j)
        rows.push_back({g.axis1_phys[i], g.axis2_phys[j], g.values(i, j)});
    csv::write_table(path_join(a.out, "objective_contour.csv"),
                     {"x1_phys", "x2_phys", "value"}, rows);

    svg::Canvas canvas(g.axis1_phys[0], g.axis1_phys[g.g1() - 1],
                       g.axis2_phys[0], g.axis2_phys[g.g2() - 1]);
    canvas.set_title("objective over slice");
    canvas.set_labels(x_name, y_name);
    const double lo = g.values.minCoeff(), hi = g.values.maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;
    const int levels = 10;
    const auto level_of = [&](double v) {
      const int q = static_cast<int>((v - lo) / span * levels);
      return std::clamp(q, 0, levels - 1);
    };
    const double h1 = (g.axis1_phys[g.g1() - 1] - g.axis1_phys[0]) / (g.g1() - 1);
    const double h2 = (g.axis2_phys[g.g2() - 1] - g.axis2_phys[0]) / (g.g2() - 1);
    for (int i = 0; i < g.g1(); ++i) {
      int j = 0;
      while (j < g.g2()) {
        const int lev = level_of(g.values(i, j));
        int j2 = j;
        while (j2 + 1 < g.g2() && level_of(g.values(i, j2 + 1)) == lev) ++j2;
        const int shade = 235 - lev * 18;
        char color[8];
        std::snprintf(color, sizeof(color), "#%02x%02x%02x", shade, shade,
                      shade);
        canvas.rect(g.axis1_phys[i] - h1 / 2, g.axis2_phys[j] - h2 / 2,
                    g.axis1_phys[i] + h1 / 2, g.axis2_phys[j2] + h2 / 2,
                    color, 1.0);
        j = j2 + 1;
      }
    }
    canvas.legend({{"#ebebeb", "low = " + svg::fmt(lo)},
                   {"#414141", "high = " + svg::fmt(hi)}});
    svg::write_file(path_join(a.out, "objective_contour.svg"),
                    canvas.render());
  }
}

// ---- synth -------------------------------------------------------------

void write_dataset_csv(const std::string& path, const Dataset& ds) {
  std::vector<std::string> columns;
  for (const auto& s : ds.input_specs) columns.push_back(s.name);
  for (const auto& name : ds.output_names) columns.push_back(name);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < ds.n(); ++i) {
    std::vector<double> row;
    for (int k = 0; k < ds.dim(); ++k) row.push_back(ds.inputs(i, k));
    for (int l = 0; l < ds.n_outputs(); ++l) row.push_back(ds.outputs(i, l));
    rows.push_back(std::move(row));
  }
  csv::write_table(path, columns, rows);
}

void write_data_config(const std::string& path, const Dataset& ds) {
  json inputs = json::array();
  for (const auto& s : ds.input_specs)
    inputs.push_back(
        json{{"name", s.name}, {"lower", s.lower}, {"upper", s.upper}});
  write_json(path, json{{"inputs", inputs},
                        {"outputs", ds.output_names},
                        {"strict", true}});
}

void run_synth(int example, int n, std::uint64_t seed, NoiseMode noise,
               double sigma2, const std::string& out) {
  Dataset ds;
  SynthTruth truth;
  if (example == 1) {
    ds = synth_example1(n, seed, noise, sigma2);
    truth = example1_truth(seed, noise, sigma2);
  } else if (example == 2) {
    ds = synth_example2(n, seed, noise, sigma2);
    truth = example2_truth(seed, noise, sigma2);
  } else {
    throw IoError("--example must be 1 or 2");
  }

  ensure_dir(out);
  write_dataset_csv(path_join(out, "dataset.csv"), ds);
  write_data_config(path_join(out, "config.json"), ds);

  std::vector<std::string> names;
  for (const auto& s : truth.input_specs) names.push_back(s.name);
  json coeffs = json::array();
  for (int j = 0; j < truth.basis.size(); ++j)
    coeffs.push_back(json{{"term", truth.basis.term_name(j, names)},
                          {"value", truth.coefficients[j]}});
  json inputs = json::array();
  for (const auto& s : truth.input_specs)
    inputs.push_back(
        json{{"name", s.name}, {"lower", s.lower}, {"upper", s.upper}});
  json t{{"example", example},
         {"n", n},
         {"seed", seed},
         {"noise", noise_name(noise)},
         {"basis", json{{"dim", truth.basis.dim},
                        {"degree", truth.basis.degree}}},
         {"inputs", inputs},
         {"output", ds.output_names[0]},
         {"coefficients", coeffs}};
  if (noise == NoiseMode::kFixed) t["fixed_sigma2"] = sigma2;
  write_json(path_join(out, "truth.json"), t);
  std::cout << "wrote " << n << " rows to " << path_join(out, "dataset.csv")
            << "\n";
}

// ---- design ------------------------------------------------------------

void run_design(int n, int d, std::uint64_t seed, const std::string& config,
                const std::string& out) {
  const LhsDesign design = lhs(n, d, seed);
  ensure_dir(out);

  std::vector<std::string> unit_cols;
  for (int k = 1; k <= d; ++k) unit_cols.push_back("u" + std::to_string(k));
  std::vector<std::vector<double>> unit_rows;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row;
    for (int k = 0; k < d; ++k) row.push_back(design.points(i, k));
    unit_rows.push_back(std::move(row));
  }
  csv::write_table(path_join(out, "design_unit.csv"), unit_cols, unit_rows);

  if (!config.empty()) {
    const DataConfig cfg = load_config(config);
    if (static_cast<int>(cfg.inputs.size()) != d)
      throw IoError("config has " + std::to_string(cfg.inputs.size()) +
                    " inputs, --d is " + std::to_string(d));
    const Eigen::MatrixXd phys = scale_to_box(design, cfg.inputs);
    std::vector<std::string> cols;
    for (const auto& s : cfg.inputs) cols.push_back(s.name);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < n; ++i) {
      std::vector<double> row;
      for (int k = 0; k < d; ++k) row.push_back(phys(i, k));
      rows.push_back(std::move(row));
    }
    csv::write_table(path_join(out, "design_phys.csv"), cols, rows);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "warpband: Bayesian polynomial surrogates, decision uncertainty, and "
      "zero-level confidence bands"};
  app.require_subcommand(1);

  // Shared option storage; each subcommand binds the flags it uses.
  FitArgs fit_args;
  BoundaryArgs boundary_args;
  std::string model_path, out_dir = ".", weights_csv;
  std::vector<double> weights;
  std::optional<std::uint64_t> seed_flag;
  int R = 1000, threads = 1, starts = 16;

  const auto add_weights = [&](CLI::App* cmd) {
    cmd->add_option("--weights", weights,
                    "objective weights, one per output (default all 1)")
        ->delimiter(',');
  };
  const auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_flag,
                    "RNG seed (falls back to WARPBAND_SEED, then 0)");
  };

  // fit
  auto* cmd_fit = app.add_subcommand(
      "fit", "fit polynomial surrogates to a CSV dataset");
  cmd_fit->add_option("--data", fit_args.data, "dataset CSV")->required();
  cmd_fit->add_option("--config", fit_args.config, "column schema JSON")
      ->required();
  cmd_fit->add_option("--degree", fit_args.degree, "polynomial total degree")
      ->check(CLI::Range(1, 4));
  cmd_fit->add_option("--out", fit_args.out, "output directory");
  cmd_fit->add_flag("--relax-bounds", fit_args.relax_bounds,
                    "warn instead of failing on out-of-range inputs");

  // optimize
  auto* cmd_opt = app.add_subcommand(
      "optimize", "minimize the composite objective on the fitted surface");
  cmd_opt->add_option("--model", model_path, "model JSON from fit")
      ->required();
  cmd_opt->add_option("--out", out_dir, "output directory");
  cmd_opt->add_option("--starts", starts, "multi-start count")
      ->check(CLI::PositiveNumber);
  add_weights(cmd_opt);
  add_seed(cmd_opt);

  // uq
  auto* cmd_uq = app.add_subcommand(
      "uq", "decision uncertainty: optimize every posterior draw");
  cmd_uq->add_option("--model", model_path, "model JSON from fit")
      ->required();
  cmd_uq->add_option("--R", R, "posterior draws")->check(CLI::PositiveNumber);
  cmd_uq->add_option("--threads", threads, "worker threads")
      ->check(CLI::PositiveNumber);
  cmd_uq->add_option("--out", out_dir, "output directory");
  add_weights(cmd_uq);
  add_seed(cmd_uq);

  // boundary
  auto* cmd_bnd = app.add_subcommand(
      "boundary", "confidence band around each zero-level set on a 2-D slice");
  cmd_bnd->add_option("--model", model_path, "model JSON from fit")
      ->required();
  cmd_bnd->add_option("--slice", boundary_args.slice_tokens,
                      "free=i,j fixed=name:value,... (default free=1,2 when "
                      "the model is 2-D)");
  cmd_bnd->add_option("--output", boundary_args.outputs,
                      "output name(s) to band (default all)");
  cmd_bnd->add_option("--eps", boundary_args.epsilons,
                      "tolerance(s), comma-separated or repeated (default 2.5)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cmd_bnd->add_option("--alpha", boundary_args.alpha, "band level (default 0.05)")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  cmd_bnd->add_option("--R", boundary_args.R, "posterior draws")
      ->check(CLI::PositiveNumber);
  cmd_bnd->add_option("--threads", boundary_args.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  cmd_bnd->add_option("--grid", boundary_args.grid,
                      "slice resolution N or N1xN2 (default 201)");
  cmd_bnd->add_option("--mode", boundary_args.mode,
                      "standardized | unstandardized");
  cmd_bnd->add_option("--draw-contours", boundary_args.draw_contours,
                      "sample zero-level sets to overlay (default 20)")
      ->check(CLI::NonNegativeNumber);
  cmd_bnd->add_option("--truth", boundary_args.truth_path,
                      "truth sidecar JSON; overlays the true zero contour");
  cmd_bnd->add_flag("--objective-contour", boundary_args.objective_contour,
                    "also write the objective surface over the slice");
  cmd_bnd->add_flag("--hierarchical", boundary_args.hierarchical,
                    "draw sigma^2 from its posterior instead of the MAP value");
  cmd_bnd->add_option("--out", boundary_args.out, "output directory");
  add_seed(cmd_bnd);
  add_weights(cmd_bnd);

  // synth
  int example = 2, synth_n = 500;
  std::string noise_str = "";
  double sigma2 = -1.0;
  auto* cmd_synth = app.add_subcommand(
      "synth", "generate a synthetic dataset with a truth sidecar");
  cmd_synth->add_option("--example", example, "1 (1-D quadratic) or 2 (2-D)")
      ->check(CLI::Range(1, 2));
  cmd_synth->add_option("--n", synth_n, "rows")->check(CLI::PositiveNumber);
  cmd_synth->add_option("--noise", noise_str,
                        "none | gamma-once | gamma-per-obs | fixed");
  cmd_synth->add_option("--sigma2", sigma2, "variance for --noise fixed")
      ->check(CLI::NonNegativeNumber);
  cmd_synth->add_option("--out", out_dir, "output directory");
  add_seed(cmd_synth);

  // design
  int des_n = 0, des_d = 0;
  std::string des_config;
  auto* cmd_des = app.add_subcommand(
      "design", "Latin hypercube design export (unit and physical scales)");
  cmd_des->add_option("--n", des_n, "points")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd_des->add_option("--d", des_d, "dimensions")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd_des->add_option("--config", des_config,
                      "column schema JSON for the physical-scale export");
  cmd_des->add_option("--out", out_dir, "output directory");
  add_seed(cmd_des);

  // pipeline
  auto* cmd_pipe = app.add_subcommand(
      "pipeline", "fit, optimize, uq, and boundary in one pass");
  cmd_pipe->add_option("--data", fit_args.data, "dataset CSV")->required();
  cmd_pipe->add_option("--config", fit_args.config, "column schema JSON")
      ->required();
  cmd_pipe->add_option("--degree", fit_args.degree, "polynomial total degree")
      ->check(CLI::Range(1, 4));
  cmd_pipe->add_flag("--relax-bounds", fit_args.relax_bounds,
                     "warn instead of failing on out-of-range inputs");
  cmd_pipe->add_option("--R", R, "posterior draws")
      ->check(CLI::PositiveNumber);
  cmd_pipe->add_option("--threads", threads, "worker threads")
      ->check(CLI::PositiveNumber);
  cmd_pipe->add_option("--eps", boundary_args.epsilons,
                       "band tolerance(s), comma-separated (default 2.5)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cmd_pipe->add_option("--alpha", boundary_args.alpha, "band level")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  cmd_pipe->add_option("--slice", boundary_args.slice_tokens,
                       "free=i,j; non-free dims default to ensemble medians");
  cmd_pipe->add_option("--grid", boundary_args.grid, "slice resolution");
  cmd_pipe->add_option("--truth", boundary_args.truth_path,
                       "truth sidecar JSON");
  cmd_pipe->add_flag("--objective-contour", boundary_args.objective_contour,
                     "also write the objective surface over the slice");
  cmd_pipe->add_option("--out", out_dir, "output directory");
  add_weights(cmd_pipe);
  add_seed(cmd_pipe);

  try {
    app.parse(argc, argv);

    if (*cmd_fit) {
      run_fit(fit_args);
    } else if (*cmd_opt) {
      const FittedModel model = load_model(model_path);
      run_optimize(model, weights, starts, resolve_seed(seed_flag), out_dir);
    } else if (*cmd_uq) {
      const FittedModel model = load_model(model_path);
      run_uq(model, weights, R, resolve_seed(seed_flag), threads, out_dir);
    } else if (*cmd_bnd) {
      boundary_args.weights = weights;
      boundary_args.seed = resolve_seed(seed_flag);
      const FittedModel model = load_model(model_path);
      run_boundary(model, boundary_args);
    } else if (*cmd_synth) {
      const NoiseMode noise =
          noise_str.empty()
              ? (example == 1 ? NoiseMode::kFixed : NoiseMode::kGammaOnce)
              : parse_noise(noise_str);
      if (noise == NoiseMode::kFixed && sigma2 < 0.0)
        sigma2 = example == 1 ? 0.0025 : 1.0;
      run_synth(example, synth_n, resolve_seed(seed_flag), noise, sigma2,
                out_dir);
    } else if (*cmd_des) {
      run_design(des_n, des_d, resolve_seed(seed_flag), des_config, out_dir);
    } else if (*cmd_pipe) {
      fit_args.out = out_dir;
      const FittedModel model = run_fit(fit_args);
      const std::uint64_t seed = resolve_seed(seed_flag);
      run_optimize(model, weights, starts, seed, out_dir);
      const DecisionEnsemble ens =
          run_uq(model, weights, R, seed, threads, out_dir);

      if (model.dim() >= 2) {
        boundary_args.out = out_dir;
        boundary_args.R = R;
        boundary_args.seed = seed;
        boundary_args.threads = threads;
        boundary_args.weights = weights;
        bool have_free = false;
        for (const auto& t : boundary_args.slice_tokens)
          have_free = have_free || t.rfind("free=", 0) == 0;
        if (!have_free && model.dim() > 2)
          boundary_args.slice_tokens.push_back("free=1,2");
        for (int k = 0; k < model.dim(); ++k)
          boundary_args.slice_defaults.push_back(ens.summaries[k].median);
        run_boundary(model, boundary_args);
      }
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
