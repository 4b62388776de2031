#include "warpband/designgen.hpp"

#include <numeric>

#include "warpband/errors.hpp"
#include "warpband/rng.hpp"

namespace warpband {

LhsDesign lhs(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw NumericError("lhs requires n >= 1 and d >= 1");
  LhsDesign design;
  design.seed = seed;
  design.points.resize(n, d);
  design.permutations.resize(d);

  auto eng = rng::make_engine(seed, rng::Stream::kLhs);
  for (int k = 0; k < d; ++k) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng::shuffle(perm, eng);
    for (int i = 0; i < n; ++i) {
      const double jitter = rng::uniform01(eng);
      design.points(i, k) = (perm[i] + jitter) / n;
    }
    design.permutations[k] = std::move(perm);
  }
  return design;
}

Eigen::MatrixXd scale_to_box(const LhsDesign& design,
                             const std::vector<VariableSpec>& specs) {
  if (static_cast<int>(specs.size()) != design.dim())
    throw NumericError("scale_to_box: dimension mismatch");
  validate_specs(specs);
  Eigen::MatrixXd out(design.n(), design.dim());
  for (int k = 0; k < design.dim(); ++k) {
    const double lo = specs[k].lower;
    const double hi = specs[k].upper;
    for (int i = 0; i < design.n(); ++i)
      out(i, k) = lo + design.points(i, k) * (hi - lo);
  }
  return out;
}

}  // namespace warpband
