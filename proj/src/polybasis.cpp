#include "warpband/polybasis.hpp"

#include <functional>
#include <map>

#include "warpband/errors.hpp"

namespace warpband {

namespace {

void emit_grade(int dim, int k, int remaining, std::vector<int>& current,
                std::vector<std::vector<int>>& out) {
  if (k == dim - 1) {
    current[k] = remaining;
    out.push_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[k] = e;
    emit_grade(dim, k + 1, remaining - e, current, out);
  }
}

double int_pow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

BasisSpec BasisSpec::full(int dim, int degree) {
  if (dim < 1) throw NumericError("basis requires dim >= 1");
  if (degree < 0) throw NumericError("basis requires degree >= 0");
  BasisSpec b;
  b.dim = dim;
  b.degree = degree;
  std::vector<int> current(dim, 0);
  for (int t = 0; t <= degree; ++t)
    emit_grade(dim, 0, t, current, b.exponents);
  return b;
}

std::string BasisSpec::term_name(
    int j, const std::vector<std::string>& names) const {
  const auto& alpha = exponents.at(j);
  std::string out;
  for (int k = 0; k < dim; ++k) {
    if (alpha[k] == 0) continue;
    if (!out.empty()) out += "*";
    out += k < static_cast<int>(names.size()) ? names[k]
                                              : "x" + std::to_string(k + 1);
    if (alpha[k] > 1) out += "^" + std::to_string(alpha[k]);
  }
  return out.empty() ? "1" : out;
}

Eigen::VectorXd expand(const BasisSpec& basis, const Eigen::VectorXd& x) {
  if (x.size() != basis.dim) throw NumericError("expand: dimension mismatch");
  Eigen::VectorXd out(basis.size());
  for (int j = 0; j < basis.size(); ++j) {
    double v = 1.0;
    const auto& alpha = basis.exponents[j];
    for (int k = 0; k < basis.dim; ++k) v *= int_pow(x[k], alpha[k]);
    out[j] = v;
  }
  return out;
}

Eigen::MatrixXd build_design(const BasisSpec& basis,
                             const Eigen::MatrixXd& X) {
  Eigen::MatrixXd P(X.rows(), basis.size());
  for (int i = 0; i < X.rows(); ++i)
    P.row(i) = expand(basis, X.row(i).transpose()).transpose();
  return P;
}

Eigen::MatrixXd gradient(const BasisSpec& basis, const Eigen::VectorXd& x) {
  if (x.size() != basis.dim)
    throw NumericError("gradient: dimension mismatch");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(basis.size(), basis.dim);
  for (int j = 0; j < basis.size(); ++j) {
    const auto& alpha = basis.exponents[j];
    for (int k = 0; k < basis.dim; ++k) {
      if (alpha[k] == 0) continue;
      double v = alpha[k] * int_pow(x[k], alpha[k] - 1);
      for (int k2 = 0; k2 < basis.dim; ++k2)
        if (k2 != k) v *= int_pow(x[k2], alpha[k2]);
      J(j, k) = v;
    }
  }
  return J;
}

Eigen::VectorXd to_physical_coefficients(const BasisSpec& basis,
                                         const Eigen::VectorXd& coded_beta,
                                         const ScaledDomain& domain) {
  if (coded_beta.size() != basis.size())
    throw NumericError("to_physical_coefficients: coefficient size mismatch");
  if (domain.dim() != basis.dim)
    throw NumericError("to_physical_coefficients: dimension mismatch");

  std::map<std::vector<int>, int> index;
  for (int j = 0; j < basis.size(); ++j) index[basis.exponents[j]] = j;

  Eigen::VectorXd phys = Eigen::VectorXd::Zero(basis.size());

  // Expand each coded term prod_k (s_k x_k + c_k)^a_k by per-dimension
  // binomials and accumulate onto the physical multi-indices.
  for (int j = 0; j < basis.size(); ++j) {
    const auto& alpha = basis.exponents[j];
    std::vector<int> gamma(basis.dim, 0);
    std::function<void(int, double)> walk = [&](int k, double coeff) {
      if (k == basis.dim) {
        phys[index.at(gamma)] += coded_beta[j] * coeff;
        return;
      }
      const double s = domain.scale(k);
      const double c = domain.offset(k);
      for (int g = 0; g <= alpha[k]; ++g) {
        gamma[k] = g;
        walk(k + 1, coeff * binomial(alpha[k], g) * int_pow(s, g) *
                        int_pow(c, alpha[k] - g));
      }
      gamma[k] = 0;
    };
    walk(0, 1.0);
  }
  return phys;
}

}  // namespace warpband
