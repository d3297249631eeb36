#ifndef DCCI_CHECKS_HPP
#define DCCI_CHECKS_HPP

// Self-verification routines behind the `gradcheck` and `verify` commands.

#include <cstdint>
#include <string>
#include <vector>

#include "dcci/neural.hpp"

namespace dcci::checks {

struct CheckResult {
  std::string name;
  double value;      // measured error or quantity
  double tolerance;  // pass iff value <= tolerance
  bool passed;
  std::string detail;
};

struct GradientTrial {
  double feature_rel_error;  // analytic dF/dG vs central differences on the features
  double param_rel_error;    // end-to-end parameter gradients vs central differences
};

/// max|a - b| / max|b|, with b the reference.
double relative_error(const MatrixXd& analytic, const MatrixXd& reference);

/// Central differences of `f` at every entry of `m` (m is restored).
template <typename Derived, typename Fn>
MatrixXd central_difference(Eigen::PlainObjectBase<Derived>& m, Fn&& f, double h = 1e-5) {
  MatrixXd out(m.rows(), m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index r = 0; r < m.rows(); ++r) {
      const double saved = m(r, c);
      m(r, c) = saved + h;
      const double up = f();
      m(r, c) = saved - h;
      const double down = f();
      m(r, c) = saved;
      out(r, c) = (up - down) / (2.0 * h);
    }
  }
  return out;
}

/// One random (network pair, batch) instance: small tanh nets with random
/// biases, a batch of `n` rows, both gradient paths checked.
GradientTrial gradient_trial(std::uint64_t seed, Index n = 40, double h = 1e-5);

/// Runs `trials` instances and reports the two worst errors against
/// tolerances 1e-5 (feature gradient) and 1e-4 (parameter gradient).
std::vector<CheckResult> gradient_suite(Index trials, std::uint64_t seed);

/// Closed-form Gaussian identities: relevance of the exact triple, spectrum
/// and eigenvectors of N^*N, posterior moments through the inference path.
std::vector<CheckResult> gaussian_suite(double tau = 1.0, double sigma = 1.0);

/// Random finite joints: adjointness, contractivity, spectrum recovery,
/// relevance = sum eta^2, truncation distances and span-exact inference.
std::vector<CheckResult> discrete_suite(Index joints, std::uint64_t seed);

/// Tr(PQ) against Tr(K^+ A^T L^+ A) on random full-rank batches.
std::vector<CheckResult> projector_suite(Index trials, std::uint64_t seed);

}  // namespace dcci::checks

#endif  // DCCI_CHECKS_HPP
