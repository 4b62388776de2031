#include "warpband/dataset.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "warpband/csv.hpp"
#include "warpband/errors.hpp"

namespace warpband {

using nlohmann::json;

void validate_specs(const std::vector<VariableSpec>& specs) {
  std::set<std::string> names;
  for (const auto& s : specs) {
    if (s.name.empty()) throw IoError("input variable with empty name");
    if (!names.insert(s.name).second)
      throw IoError("duplicate input variable name '" + s.name + "'");
    if (!(std::isfinite(s.lower) && std::isfinite(s.upper)))
      throw IoError("non-finite bounds for variable '" + s.name + "'");
    if (!(s.lower < s.upper))
      throw IoError("variable '" + s.name + "' requires lower < upper, got [" +
                    std::to_string(s.lower) + ", " + std::to_string(s.upper) +
                    "]");
  }
}

ScaledDomain::ScaledDomain(std::vector<VariableSpec> specs)
    : specs_(std::move(specs)) {
  validate_specs(specs_);
}

double ScaledDomain::scale(int k) const {
  const auto& s = specs_.at(k);
  return 2.0 / (s.upper - s.lower);
}

double ScaledDomain::offset(int k) const {
  const auto& s = specs_.at(k);
  return -(s.upper + s.lower) / (s.upper - s.lower);
}

double ScaledDomain::to_coded(double v, int k) const {
  return scale(k) * v + offset(k);
}

double ScaledDomain::from_coded(double c, int k) const {
  const auto& s = specs_.at(k);
  return 0.5 * (s.lower + s.upper) + 0.5 * c * (s.upper - s.lower);
}

Eigen::VectorXd ScaledDomain::to_coded(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw NumericError("to_coded: dimension mismatch");
  Eigen::VectorXd out(x.size());
  for (int k = 0; k < x.size(); ++k) out[k] = to_coded(x[k], k);
  return out;
}

Eigen::VectorXd ScaledDomain::from_coded(const Eigen::VectorXd& c) const {
  if (c.size() != dim()) throw NumericError("from_coded: dimension mismatch");
  Eigen::VectorXd out(c.size());
  for (int k = 0; k < c.size(); ++k) out[k] = from_coded(c[k], k);
  return out;
}

Eigen::MatrixXd ScaledDomain::to_coded_rows(const Eigen::MatrixXd& x) const {
  if (x.cols() != dim())
    throw NumericError("to_coded_rows: dimension mismatch");
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int k = 0; k < x.cols(); ++k) out(i, k) = to_coded(x(i, k), k);
  return out;
}

DataConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("config parse error in " + path + ": " + e.what());
  }
  DataConfig cfg;
  if (!j.contains("inputs") || !j["inputs"].is_array() || j["inputs"].empty())
    throw IoError("config needs a nonempty 'inputs' array: " + path);
  if (!j.contains("outputs") || !j["outputs"].is_array() ||
      j["outputs"].empty())
    throw IoError("config needs a nonempty 'outputs' array: " + path);
  for (const auto& item : j["inputs"]) {
    VariableSpec s;
    try {
      s.name = item.at("name").get<std::string>();
      s.lower = item.at("lower").get<double>();
      s.upper = item.at("upper").get<double>();
    } catch (const json::exception& e) {
      throw IoError("config input entry needs name/lower/upper: " +
                    std::string(e.what()));
    }
    cfg.inputs.push_back(s);
  }
  for (const auto& o : j["outputs"]) cfg.outputs.push_back(o.get<std::string>());
  cfg.strict = j.value("strict", true);
  validate_specs(cfg.inputs);
  std::set<std::string> out_names;
  for (const auto& o : cfg.outputs)
    if (!out_names.insert(o).second)
      throw IoError("duplicate output name '" + o + "' in config");
  return cfg;
}

Dataset load_csv(const std::string& path, const DataConfig& config) {
  const csv::Table table = csv::read_table(path);

  auto column_index = [&](const std::string& name) {
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      if (table.columns[c] == name) return static_cast<int>(c);
    throw IoError("column '" + name + "' not found in " + path);
  };

  std::vector<int> in_cols, out_cols;
  for (const auto& s : config.inputs) in_cols.push_back(column_index(s.name));
  for (const auto& o : config.outputs) out_cols.push_back(column_index(o));

  const int n = table.n_rows();
  const int d = static_cast<int>(in_cols.size());
  const int m = static_cast<int>(out_cols.size());

  Dataset ds;
  ds.inputs.resize(n, d);
  ds.outputs.resize(n, m);
  ds.input_specs = config.inputs;
  ds.output_names = config.outputs;

  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) ds.inputs(i, k) = table.rows[i][in_cols[k]];
    for (int l = 0; l < m; ++l) ds.outputs(i, l) = table.rows[i][out_cols[l]];
  }

  if (!ds.inputs.allFinite() || !ds.outputs.allFinite())
    throw IoError("non-finite value in " + path);

  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      const auto& s = config.inputs[k];
      const double v = ds.inputs(i, k);
      if (v < s.lower || v > s.upper) {
        const std::string msg = "row " + std::to_string(i + 1) + ": input '" +
                                s.name + "' = " + std::to_string(v) +
                                " outside [" + std::to_string(s.lower) + ", " +
                                std::to_string(s.upper) + "]";
        if (config.strict) throw IoError(msg + " (strict mode)");
        std::cerr << "warning: " << msg << "\n";
      }
    }
  }
  return ds;
}

std::pair<Dataset, ScaledDomain> to_coded(const Dataset& ds) {
  ScaledDomain domain(ds.input_specs);
  Dataset coded = ds;
  coded.inputs = domain.to_coded_rows(ds.inputs);
  return {std::move(coded), std::move(domain)};
}

}  // namespace warpband
