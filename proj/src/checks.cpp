#include "dcci/checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "dcci/canonical.hpp"
#include "dcci/datasets.hpp"
#include "dcci/discrete.hpp"
#include "dcci/gaussian_oracle.hpp"
#include "dcci/inference.hpp"

namespace dcci::checks {

namespace {

CheckResult make(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), value, tol, std::isfinite(value) && value <= tol, std::move(detail)};
}

MatrixXd random_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = unit(rng);
  return m;
}

FeatureNetwork<double> random_net(Index in, Index out, Rng& rng) {
  std::uniform_int_distribution<Index> width(3, 6);
  std::uniform_int_distribution<int> depth(1, 2);
  std::vector<Index> hidden;
  for (int d = depth(rng); d > 0; --d) hidden.push_back(width(rng));
  auto net = FeatureNetwork<double>::random(in, hidden, out, rng);
  std::uniform_real_distribution<double> b(-0.5, 0.5);
  for (auto& l : net.layers())
    for (Index i = 0; i < l.bias.size(); ++i) l.bias(i) = b(rng);
  return net;
}

}  // namespace

double relative_error(const MatrixXd& analytic, const MatrixXd& reference) {
  detail::require(analytic.rows() == reference.rows() && analytic.cols() == reference.cols(),
                  "relative_error: shape mismatch");
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max(reference.cwiseAbs().maxCoeff(), 1e-300);
  return (analytic - reference).cwiseAbs().maxCoeff() / scale;
}

GradientTrial gradient_trial(std::uint64_t seed, Index n, double h) {
  Rng rng = make_stream(seed, 0);
  std::uniform_int_distribution<Index> dim(1, 3);
  const Index dx = dim(rng);
  const Index dy = dim(rng);
  const Index k0 = dim(rng);
  FeatureNetwork<double> nf = random_net(dx, k0, rng);
  FeatureNetwork<double> ng = random_net(dy, k0, rng);
  const MatrixXd X = random_normal(n, dx, rng);
  const MatrixXd Y = random_normal(n, dy, rng);

  MatrixXd F = forward(nf, X);
  MatrixXd G = forward(ng, Y);
  const LossGradient lg = loss_and_feature_grads(F, G, k0);

  auto feature_loss = [&] { return loss(covariances(F, G), k0); };
  const MatrixXd fd_f = central_difference(F, feature_loss, h);
  const MatrixXd fd_g = central_difference(G, feature_loss, h);
  GradientTrial out;
  out.feature_rel_error = std::max(relative_error(lg.dF, fd_f), relative_error(lg.dG, fd_g));

  const GradientSet<double> gf = backprop(nf, X, lg.dF);
  const GradientSet<double> gg = backprop(ng, Y, lg.dG);
  auto end_to_end = [&] { return loss(covariances(forward(nf, X), forward(ng, Y)), k0); };
  std::vector<double> analytic;
  std::vector<double> numeric;
  auto collect = [&](auto& param, const auto& grad) {
    const MatrixXd fd = central_difference(param, end_to_end, h);
    for (Index i = 0; i < fd.size(); ++i) {
      numeric.push_back(fd(i));
      analytic.push_back(grad(i));
    }
  };
  for (std::size_t l = 0; l < nf.layers().size(); ++l) {
    collect(nf.layers()[l].weight, gf.weight[l]);
    collect(nf.layers()[l].bias, gf.bias[l]);
  }
  for (std::size_t l = 0; l < ng.layers().size(); ++l) {
    collect(ng.layers()[l].weight, gg.weight[l]);
    collect(ng.layers()[l].bias, gg.bias[l]);
  }
  out.param_rel_error = relative_error(Eigen::Map<const MatrixXd>(analytic.data(), Index(analytic.size()), 1),
                                       Eigen::Map<const MatrixXd>(numeric.data(), Index(numeric.size()), 1));
  return out;
}

std::vector<CheckResult> gradient_suite(Index trials, std::uint64_t seed) {
  detail::require(trials >= 1, "gradient_suite: need at least one trial");
  double worst_feature = 0.0;
  double worst_param = 0.0;
  for (Index t = 0; t < trials; ++t) {
    const GradientTrial r = gradient_trial(derive_seed(seed, static_cast<std::uint64_t>(t)));
    worst_feature = std::max(worst_feature, std::isfinite(r.feature_rel_error) ? r.feature_rel_error : INFINITY);
    worst_param = std::max(worst_param, std::isfinite(r.param_rel_error) ? r.param_rel_error : INFINITY);
  }
  std::ostringstream os;
  os << trials << " random instances";
  return {make("feature_gradient_vs_central_differences", worst_feature, 1e-5, os.str()),
          make("parameter_gradient_vs_central_differences", worst_param, 1e-4, os.str())};
}

std::vector<CheckResult> gaussian_suite(double tau, double sigma) {
  const GaussianPair<double> gp(tau, sigma);
  const double g = gp.gamma();
  const double t2 = tau * tau;
  const CovarianceTriple t = exact_kla(gp);
  std::vector<CheckResult> out;

  out.push_back(make("relevance_equals_1_plus_gamma_plus_gamma2", std::abs(relevance(t) - (1.0 + g + g * g)), 1e-12));

  const MatrixXd m = t.K.inverse() * t.A.transpose() * t.L.inverse() * t.A;
  MatrixXd expected(3, 3);
  expected << 1, 0, t2 * (1 - g * g),  //
      0, g, 0,                         //
      0, 0, g * g;
  out.push_back(make("n_star_n_closed_form", (m - expected).cwiseAbs().maxCoeff(), 1e-12));

  const SpanDiagonalization d = diagonalize(t);
  out.push_back(make("spectrum_is_powers_of_gamma", (d.relevances - exact_spectrum(gp, 3)).cwiseAbs().maxCoeff(),
                     1e-12));

  double vec_err = 0.0;
  const Eigen::Vector3d e0(1, 0, 0), e1(0, 1, 0), e2(-t2, 0, 1);
  vec_err = std::max(vec_err, (m * e0 - e0).cwiseAbs().maxCoeff());
  vec_err = std::max(vec_err, (m * e1 - g * e1).cwiseAbs().maxCoeff());
  vec_err = std::max(vec_err, (m * e2 - g * g * e2).cwiseAbs().maxCoeff());
  out.push_back(make("eigenvectors_1_x_x2_minus_tau2", vec_err, 1e-12));

  // Theta(x) = x and x^2 against the monomial features (1, x, x^2).
  MatrixXd theta(2, 3);
  theta << 0, t2, 0,  //
      t2, 0, 3 * t2 * t2;
  const InferenceModel inf =
      make_inference(t, theta, Direction::YtoX, {parse_target("x0"), parse_target("x0*x0")});
  double moment_err = 0.0;
  for (double y : {-3.0, -1.5, 0.0, 0.5, 2.0, 4.0}) {
    const Posterior p = infer_features(inf, Eigen::Vector3d(1.0, y, y * y));
    const PosteriorMoments exact = exact_posterior_moments(gp, y);
    moment_err = std::max({moment_err, std::abs(p.expectations(0) - exact.mean) / (1 + std::abs(exact.mean)),
                           std::abs(p.expectations(1) - exact.second_moment) / (1 + exact.second_moment)});
  }
  out.push_back(make("inferred_posterior_moments_exact", moment_err, 1e-10));
  return out;
}

std::vector<CheckResult> discrete_suite(Index joints, std::uint64_t seed) {
  detail::require(joints >= 1, "discrete_suite: need at least one joint");
  double adjoint = 0.0, contract = 0.0, svd_rel = 0.0, rel_sum = 0.0, frob = 0.0, span = 0.0;
  for (Index j = 0; j < joints; ++j) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(j));
    Rng rng = make_stream(s, 1);
    std::uniform_int_distribution<Index> dim(2, 8);
    const Index nx = dim(rng);
    const Index ny = dim(rng);
    const JointDistribution<double> joint = gen_discrete_joint(nx, ny, s, 0.7);
    const auto& px = joint.px();
    const auto& py = joint.py();

    const VectorXd mu = random_normal(nx, 1, rng);
    const VectorXd nu = random_normal(ny, 1, rng);
    const double lhs = fisher_inner(nu, apply_channel(joint, mu, Direction::XtoY), py);
    const double rhs = fisher_inner(apply_channel(joint, nu, Direction::YtoX), mu, px);
    adjoint = std::max(adjoint, std::abs(lhs - rhs));

    VectorXd q = random_normal(nx, 1, rng).cwiseAbs();
    q /= q.sum();
    contract = std::max(contract, chi2(apply_channel(joint, q, Direction::XtoY), py) - chi2(q, px));

    const auto d = channel_svd(joint);
    for (Index i = 0; i < d.rank(); ++i) {
      const VectorXd u = px.cwiseProduct(d.left_vars.col(i));
      const VectorXd v = py.cwiseProduct(d.right_vars.col(i));
      svd_rel = std::max(svd_rel, (apply_channel(joint, u, Direction::XtoY) - d.etas(i) * v).cwiseAbs().maxCoeff());
      svd_rel = std::max(svd_rel, (apply_channel(joint, v, Direction::YtoX) - d.etas(i) * u).cwiseAbs().maxCoeff());
    }

    const CovarianceTriple t =
        exact_covariances(joint, MatrixXd::Identity(nx, nx).eval(), MatrixXd::Identity(ny, ny).eval());
    // Indicator bases have different sizes on the two sides; the trace is
    // still the sum of all squared singular values.
    rel_sum = std::max(rel_sum, std::abs(relevance(t) - d.etas.squaredNorm()));

    for (Index k0 = 1; k0 <= d.rank(); ++k0) {
      const double tail = d.etas.tail(d.rank() - k0).squaredNorm();
      frob = std::max(frob, std::abs(frobenius_distance(joint, truncated_joint(d, k0)) - tail));
    }

    // Theta(x) arbitrary: inside the span of the complete indicator basis.
    const VectorXd theta_fn = random_normal(nx, 1, rng);
    MatrixXd theta = (theta_fn.cwiseProduct(px)).transpose();  // Theta_j = E[Theta 1_{x=j}]
    const InferenceModel inf = make_inference(t, theta, Direction::YtoX, {parse_target("1")});
    for (Index y = 0; y < ny; ++y) {
      const double exact = joint.table().col(y).dot(theta_fn) / py(y);
      const Posterior p = infer_features(inf, VectorXd::Unit(ny, y));
      span = std::max(span, std::abs(p.expectations(0) - exact));
    }
  }
  return {make("adjointness", adjoint, 1e-10),
          make("contractivity_violation", std::max(contract, 0.0), 1e-12),
          make("channel_svd_relations", svd_rel, 1e-9),
          make("indicator_relevance_equals_sum_eta2", rel_sum, 1e-9),
          make("truncation_distance_equals_tail", frob, 1e-9),
          make("span_exact_inference", span, 1e-8)};
}

std::vector<CheckResult> projector_suite(Index trials, std::uint64_t seed) {
  double worst = 0.0;
  for (Index t = 0; t < trials; ++t) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(t));
    std::uniform_int_distribution<Index> kdist(1, 5);
    const Index k = kdist(rng);
    const MatrixXd F = random_normal(50, k, rng);
    const MatrixXd G = random_normal(50, k, rng) + 0.5 * F;
    worst = std::max(worst, std::abs(projector_overlap(F, G) - relevance(covariances(F, G))));
  }
  return {make("projector_overlap_equals_relevance", worst, 1e-8)};
}

}  // namespace dcci::checks
