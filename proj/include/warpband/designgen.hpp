#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "warpband/dataset.hpp"

namespace warpband {

// Plain Latin hypercube in [0,1)^d: per dimension a random permutation of
// the n strata with uniform jitter inside each stratum.
struct LhsDesign {
  Eigen::MatrixXd points;  // n x d, unit scale
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> permutations;  // one per dimension

  int n() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

LhsDesign lhs(int n, int d, std::uint64_t seed);

// Affine [0,1] -> [lower, upper] per dimension.
Eigen::MatrixXd scale_to_box(const LhsDesign& design,
                             const std::vector<VariableSpec>& specs);

}  // namespace warpband
