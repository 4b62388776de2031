#include "warpband/bayes_lm.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "warpband/errors.hpp"
#include "warpband/rng.hpp"

namespace warpband {

using nlohmann::json;

namespace {

constexpr double kRankTol = 1e-10;

// Identify the dependent columns with a column-pivoted QR at the same
// tolerance used for the rank decision.
std::string offending_terms(const Eigen::MatrixXd& P, const BasisSpec& basis,
                            const std::vector<std::string>& names,
                            double smax) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(P);
  const auto& R = qr.matrixR();
  const int p = static_cast<int>(P.cols());
  int rank = 0;
  for (int j = 0; j < p; ++j)
    if (std::abs(R(j, j)) > kRankTol * smax) ++rank;
  const auto perm = qr.colsPermutation().indices();
  std::string out;
  for (int j = rank; j < p; ++j) {
    if (!out.empty()) out += ", ";
    out += basis.term_name(perm[j], names);
  }
  return out.empty() ? "(unidentified)" : out;
}

}  // namespace

FittedModel fit(const Dataset& coded_ds, const ScaledDomain& domain,
                const BasisSpec& basis) {
  if (coded_ds.dim() != basis.dim)
    throw NumericError("fit: dataset dimension does not match basis");

  const Eigen::MatrixXd P = build_design(basis, coded_ds.inputs);
  const int n = static_cast<int>(P.rows());
  const int p = static_cast<int>(P.cols());
  if (n <= p)
    throw UnderdeterminedError(
        "under-determined fit: n = " + std::to_string(n) +
        " observations for p = " + std::to_string(p) +
        " basis terms (need n > p)");

  std::vector<std::string> names;
  for (const auto& s : coded_ds.input_specs) names.push_back(s.name);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > kRankTol * smax)) {
    throw RankError("design matrix is rank deficient (smallest/largest "
                    "singular value = " +
                    std::to_string(smin / smax) +
                    "); dependent terms: " +
                    offending_terms(P, basis, names, smax));
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(P);
  const Eigen::MatrixXd Rf =
      qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      Rf.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd xtx_inv = Rinv * Rinv.transpose();
  xtx_inv = 0.5 * (xtx_inv + xtx_inv.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(xtx_inv);
  if (llt.info() != Eigen::Success)
    throw NumericError("covariance factorization failed: (P^T P)^{-1} not "
                       "numerically positive definite");
  const Eigen::MatrixXd L = llt.matrixL();

  FittedModel model;
  model.basis = basis;
  model.domain = domain;
  model.output_names = coded_ds.output_names;

  for (int l = 0; l < coded_ds.n_outputs(); ++l) {
    const Eigen::VectorXd y = coded_ds.outputs.col(l);
    FittedOutput out;
    out.beta_hat = qr.solve(y);
    const Eigen::VectorXd resid = y - P * out.beta_hat;
    out.residual_ss = resid.squaredNorm();
    out.sigma2_hat = out.residual_ss / (n - p);
    out.xtx_inv_chol = L;
    out.n = n;
    out.p = p;
    const double total_ss = (y.array() - y.mean()).square().sum();
    if (total_ss > 0.0) {
      out.r2 = 1.0 - out.residual_ss / total_ss;
    } else {
      out.r2 = out.residual_ss == 0.0
                   ? 1.0
                   : -std::numeric_limits<double>::infinity();
    }
    model.outputs.push_back(std::move(out));
  }
  return model;
}

FittedModel fit_physical(const Dataset& ds, const BasisSpec& basis) {
  auto [coded, domain] = to_coded(ds);
  return fit(coded, domain, basis);
}

PosteriorDraw draw_posterior(const FittedModel& model, std::uint64_t seed,
                             int index, const SamplerOptions& opts) {
  const int m = model.n_outputs();
  const int p = model.basis.size();
  PosteriorDraw draw;
  draw.draw_index = index;
  draw.seed = seed;
  draw.betas.resize(m, p);

  auto eng = rng::make_engine(seed, rng::Stream::kPosterior,
                              static_cast<std::uint64_t>(index));
  rng::NormalStream normals(eng);
  for (int l = 0; l < m; ++l) {
    const FittedOutput& out = model.outputs[l];
    double sigma2 = out.sigma2_hat;
    if (opts.hierarchical_sigma2 && out.residual_ss > 0.0) {
      // sigma^2 ~ Inv-Gamma(n/2, residual_ss/2): invert a Gamma draw.
      std::gamma_distribution<double> gamma(0.5 * out.n,
                                            2.0 / out.residual_ss);
      sigma2 = 1.0 / gamma(eng);
    }
    Eigen::VectorXd z(p);
    for (int j = 0; j < p; ++j) z[j] = normals.next();
    draw.betas.row(l) =
        (out.beta_hat + std::sqrt(sigma2) * (out.xtx_inv_chol * z))
            .transpose();
  }
  return draw;
}

std::vector<PosteriorDraw> sample_posterior(const FittedModel& model, int R,
                                            std::uint64_t seed,
                                            const SamplerOptions& opts) {
  if (R < 1) throw NumericError("sample_posterior requires R >= 1");
  std::vector<PosteriorDraw> draws;
  draws.reserve(R);
  for (int i = 0; i < R; ++i)
    draws.push_back(draw_posterior(model, seed, i, opts));
  return draws;
}

double predict_mean(const FittedModel& model, const Eigen::VectorXd& x_coded,
                    int l) {
  if (l < 0 || l >= model.n_outputs())
    throw NumericError("predict_mean: bad output index " + std::to_string(l));
  for (int k = 0; k < x_coded.size(); ++k) {
    if (std::abs(x_coded[k]) > 1.0 + 1e-9) {
      std::cerr << "warning: prediction outside the coded box in dimension "
                << k << " (" << x_coded[k] << ")\n";
      break;
    }
  }
  return expand(model.basis, x_coded).dot(model.outputs[l].beta_hat);
}

double predict_sd(const FittedModel& model, const Eigen::VectorXd& x_coded,
                  int l) {
  if (l < 0 || l >= model.n_outputs())
    throw NumericError("predict_sd: bad output index " + std::to_string(l));
  const FittedOutput& out = model.outputs[l];
  const Eigen::VectorXd px = expand(model.basis, x_coded);
  return std::sqrt(out.sigma2_hat) *
         (out.xtx_inv_chol.transpose() * px).norm();
}

namespace {

json matrix_lower_to_json(const Eigen::MatrixXd& L) {
  json rows = json::array();
  for (int i = 0; i < L.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j <= i; ++j) row.push_back(L(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_lower_from_json(const json& rows) {
  const int p = static_cast<int>(rows.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    if (static_cast<int>(rows[i].size()) != i + 1)
      throw IoError("model file: malformed lower-triangular factor");
    for (int j = 0; j <= i; ++j) L(i, j) = rows[i][j].get<double>();
  }
  return L;
}

}  // namespace

void save_model(const std::string& path, const FittedModel& model) {
  json j;
  j["format"] = "warpband-model";
  j["version"] = 1;
  j["basis"] = {{"degree", model.basis.degree},
                {"dim", model.basis.dim},
                {"exponents", model.basis.exponents}};
  json inputs = json::array();
  for (const auto& s : model.domain.specs())
    inputs.push_back({{"name", s.name}, {"lower", s.lower}, {"upper", s.upper}});
  j["domain"] = {{"inputs", inputs}};
  j["output_names"] = model.output_names;
  json outputs = json::array();
  for (int l = 0; l < model.n_outputs(); ++l) {
    const FittedOutput& out = model.outputs[l];
    json o;
    o["name"] = model.output_names[l];
    o["beta_hat"] = std::vector<double>(
        out.beta_hat.data(), out.beta_hat.data() + out.beta_hat.size());
    o["sigma2_hat"] = out.sigma2_hat;
    o["residual_ss"] = out.residual_ss;
    o["n"] = out.n;
    o["p"] = out.p;
    o["r2"] = out.r2;
    o["xtx_inv_chol"] = matrix_lower_to_json(out.xtx_inv_chol);
    outputs.push_back(std::move(o));
  }
  j["outputs"] = std::move(outputs);

  std::ofstream f(path);
  if (!f) throw IoError("cannot write model file: " + path);
  f << j.dump(2) << "\n";
  if (!f) throw IoError("write failed: " + path);
}

FittedModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open model file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw IoError("model parse error in " + path + ": " + e.what());
  }
  if (j.value("format", "") != "warpband-model")
    throw IoError("not a model file: " + path);

  FittedModel model;
  try {
    model.basis.degree = j["basis"]["degree"].get<int>();
    model.basis.dim = j["basis"]["dim"].get<int>();
    model.basis.exponents =
        j["basis"]["exponents"].get<std::vector<std::vector<int>>>();
    std::vector<VariableSpec> specs;
    for (const auto& item : j["domain"]["inputs"]) {
      specs.push_back({item["name"].get<std::string>(),
                       item["lower"].get<double>(),
                       item["upper"].get<double>()});
    }
    model.domain = ScaledDomain(std::move(specs));
    model.output_names = j["output_names"].get<std::vector<std::string>>();
    for (const auto& o : j["outputs"]) {
      FittedOutput out;
      const auto beta = o["beta_hat"].get<std::vector<double>>();
      out.beta_hat =
          Eigen::Map<const Eigen::VectorXd>(beta.data(), beta.size());
      out.sigma2_hat = o["sigma2_hat"].get<double>();
      out.residual_ss = o["residual_ss"].get<double>();
      out.n = o["n"].get<int>();
      out.p = o["p"].get<int>();
      out.r2 = o["r2"].get<double>();
      out.xtx_inv_chol = matrix_lower_from_json(o["xtx_inv_chol"]);
      model.outputs.push_back(std::move(out));
    }
  } catch (const json::exception& e) {
    throw IoError("model file " + path + " missing fields: " + e.what());
  }

  const int p = model.basis.size();
  for (const auto& out : model.outputs)
    if (out.p != p || out.beta_hat.size() != p ||
        out.xtx_inv_chol.rows() != p)
      throw IoError("model file " + path + ": inconsistent sizes");
  return model;
}

}  // namespace warpband
