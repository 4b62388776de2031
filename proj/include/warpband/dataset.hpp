#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace warpband {

// One input dimension: name plus the box bounds in physical units.
struct VariableSpec {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
};

// Immutable once built: n input points in d dimensions plus m output
// columns, all in physical units.
struct Dataset {
  Eigen::MatrixXd inputs;   // n x d
  Eigen::MatrixXd outputs;  // n x m
  std::vector<VariableSpec> input_specs;
  std::vector<std::string> output_names;

  int n() const { return static_cast<int>(inputs.rows()); }
  int dim() const { return static_cast<int>(inputs.cols()); }
  int n_outputs() const { return static_cast<int>(outputs.cols()); }
};

// Affine physical <-> coded map; each [lower, upper] goes to [-1, 1].
class ScaledDomain {
 public:
  ScaledDomain() = default;
  explicit ScaledDomain(std::vector<VariableSpec> specs);

  int dim() const { return static_cast<int>(specs_.size()); }
  const std::vector<VariableSpec>& specs() const { return specs_; }
  const VariableSpec& spec(int k) const { return specs_.at(k); }

  double to_coded(double v, int k) const;
  double from_coded(double c, int k) const;
  Eigen::VectorXd to_coded(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_coded(const Eigen::VectorXd& c) const;
  Eigen::MatrixXd to_coded_rows(const Eigen::MatrixXd& x) const;

  // Coded = scale*x + offset, per dimension.
  double scale(int k) const;
  double offset(int k) const;

 private:
  std::vector<VariableSpec> specs_;
};

// Sidecar schema for CSV ingestion: which columns are inputs (with bounds),
// which are outputs; everything else in the file is ignored.
struct DataConfig {
  std::vector<VariableSpec> inputs;
  std::vector<std::string> outputs;
  bool strict = true;
};

void validate_specs(const std::vector<VariableSpec>& specs);

DataConfig load_config(const std::string& path);

Dataset load_csv(const std::string& path, const DataConfig& config);

// Returns the dataset with inputs mapped into [-1, 1]^d plus the domain that
// undoes the map. Outputs are untouched.
std::pair<Dataset, ScaledDomain> to_coded(const Dataset& ds);

}  // namespace warpband
