#ifndef DCCI_GAUSSIAN_ORACLE_HPP
#define DCCI_GAUSSIAN_ORACLE_HPP

// Closed forms for x ~ N(0, tau^2), y = x + N(0, sigma^2) with monomial
// features f_n(x) = x^n, g_n(y) = y^n, n = 0, 1, 2.

#include <cmath>

#include "dcci/canonical.hpp"
#include "dcci/types.hpp"

namespace dcci {

template <typename Scalar = double>
struct GaussianPair {
  Scalar tau;
  Scalar sigma;

  GaussianPair(Scalar tau_, Scalar sigma_) : tau(tau_), sigma(sigma_) {
    detail::require(tau > Scalar(0) && std::isfinite(double(tau)), "GaussianPair: tau must be positive");
    detail::require(sigma >= Scalar(0) && std::isfinite(double(sigma)), "GaussianPair: sigma must be nonnegative");
  }

  /// tau^2 / (sigma^2 + tau^2): the squared correlation of x and y.
  Scalar gamma() const { return tau * tau / (sigma * sigma + tau * tau); }
};

/// Exact K, L, A for the features (1, x, x^2) and (1, y, y^2).
template <typename Scalar>
CovarianceTriple exact_kla(const GaussianPair<Scalar>& gp) {
  const double t2 = double(gp.tau) * double(gp.tau);
  const double s2 = double(gp.sigma) * double(gp.sigma);
  const double v = t2 + s2;
  CovarianceTriple out;
  out.K.resize(3, 3);
  out.L.resize(3, 3);
  out.A.resize(3, 3);
  out.K << 1, 0, t2,  //
      0, t2, 0,       //
      t2, 0, 3 * t2 * t2;
  out.L << 1, 0, v,  //
      0, v, 0,       //
      v, 0, 3 * v * v;
  out.A << 1, 0, t2,  //
      0, t2, 0,       //
      v, 0, t2 * (s2 + 3 * t2);
  out.n_samples = 0;
  return out;
}

/// Relevances (1, gamma, ..., gamma^{k0-1}): eigenvalues of N^*N on the
/// monomial span. These are squared singular values.
template <typename Scalar>
VectorXd exact_spectrum(const GaussianPair<Scalar>& gp, Index k0) {
  detail::require(k0 >= 1, "exact_spectrum: k0 must be at least 1");
  VectorXd out(k0);
  const double g = double(gp.gamma());
  double acc = 1.0;
  for (Index n = 0; n < k0; ++n) {
    out(n) = acc;
    acc *= g;
  }
  return out;
}

struct PosteriorMoments {
  double mean;
  double second_moment;
};

/// First two moments of p(x | y): gamma y and gamma^2 y^2 + (1 - gamma) tau^2.
template <typename Scalar>
PosteriorMoments exact_posterior_moments(const GaussianPair<Scalar>& gp, double y) {
  const double g = double(gp.gamma());
  const double t2 = double(gp.tau) * double(gp.tau);
  return {g * y, g * g * y * y + (1.0 - g) * t2};
}

}  // namespace dcci

#endif  // DCCI_GAUSSIAN_ORACLE_HPP
