#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "warpband/dataset.hpp"

namespace warpband {

// Full polynomial basis of total degree <= degree in d variables, in graded
// lexicographic order: ascending total degree, and within a degree the
// exponent vectors in descending lexicographic order. For d=2, degree=2 the
// terms are 1, x1, x2, x1^2, x1*x2, x2^2. The ordering is deterministic and
// survives serialization unchanged.
struct BasisSpec {
  int degree = 0;
  int dim = 0;
  std::vector<std::vector<int>> exponents;  // exponents[j] has size dim

  static BasisSpec full(int dim, int degree);

  int size() const { return static_cast<int>(exponents.size()); }

  // Human-readable term, e.g. "x1^2*x2" or "1" for the intercept.
  std::string term_name(int j, const std::vector<std::string>& names) const;
};

// p-vector of term values at x.
Eigen::VectorXd expand(const BasisSpec& basis, const Eigen::VectorXd& x);

// n x p matrix; row i is expand(basis, X.row(i)).
Eigen::MatrixXd build_design(const BasisSpec& basis, const Eigen::MatrixXd& X);

// p x d Jacobian of the term vector: entry (j, k) = d(term j)/d(x_k).
Eigen::MatrixXd gradient(const BasisSpec& basis, const Eigen::VectorXd& x);

// Rewrites a polynomial given by coefficients on the coded-variable basis as
// coefficients on the same basis in physical variables, by expanding the
// substitution x_coded = scale*x + offset term by term.
Eigen::VectorXd to_physical_coefficients(const BasisSpec& basis,
                                         const Eigen::VectorXd& coded_beta,
                                         const ScaledDomain& domain);

}  // namespace warpband
