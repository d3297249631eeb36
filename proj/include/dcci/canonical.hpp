#ifndef DCCI_CANONICAL_HPP
#define DCCI_CANONICAL_HPP

// Sample covariances of two feature families and the trace objective built
// from them. Everything here runs in double regardless of the feature scalar.

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "dcci/discrete.hpp"
#include "dcci/types.hpp"

namespace dcci {

/// How K^{-1} and L^{-1} are realized. Pseudo drops eigenvalues below
/// tol * lambda_max; ridge inverts M + eps * I.
struct InverseMode {
  enum class Kind { Pseudo, Ridge };

  Kind kind = Kind::Pseudo;
  double value = 1e-10;

  static InverseMode pseudo(double tol = 1e-10) { return {Kind::Pseudo, tol}; }
  static InverseMode ridge(double eps = 1e-6) { return {Kind::Ridge, eps}; }

  bool operator==(const InverseMode&) const = default;
};

/// K = E[f f^T], L = E[g g^T], A = E[g f^T] (rows of A index g, columns f).
struct CovarianceTriple {
  MatrixXd K;
  MatrixXd L;
  MatrixXd A;
  Index n_samples = 0;  // 0 for population (exact) moments

  Index kf() const { return K.rows(); }
  Index kg() const { return L.rows(); }
};

/// Uncentered second moments over a batch; row n of F is (f_1(x_n), ..., f_k(x_n)).
template <typename DerivedF, typename DerivedG>
CovarianceTriple covariances(const Eigen::MatrixBase<DerivedF>& F, const Eigen::MatrixBase<DerivedG>& G) {
  detail::require(F.rows() == G.rows(), "covariances: sample-count mismatch between F and G");
  detail::require(F.rows() >= 1, "covariances: empty batch");
  const MatrixXd f = F.template cast<double>();
  const MatrixXd g = G.template cast<double>();
  const double inv_n = 1.0 / static_cast<double>(f.rows());
  CovarianceTriple t;
  t.K = (f.transpose() * f) * inv_n;
  t.L = (g.transpose() * g) * inv_n;
  t.A = (g.transpose() * f) * inv_n;
  t.n_samples = f.rows();
  return t;
}

/// Population moments of feature tables f (n_x × k) and g (n_y × k) under a joint.
template <typename Scalar, typename DerivedF, typename DerivedG>
CovarianceTriple exact_covariances(const JointDistribution<Scalar>& joint, const Eigen::MatrixBase<DerivedF>& f,
                                   const Eigen::MatrixBase<DerivedG>& g) {
  detail::require(f.rows() == joint.nx() && g.rows() == joint.ny(), "exact_covariances: feature table shape");
  const MatrixXd fd = f.template cast<double>();
  const MatrixXd gd = g.template cast<double>();
  const VectorXd px = joint.px().template cast<double>();
  const VectorXd py = joint.py().template cast<double>();
  CovarianceTriple t;
  t.K = fd.transpose() * px.asDiagonal() * fd;
  t.L = gd.transpose() * py.asDiagonal() * gd;
  t.A = gd.transpose() * joint.table().template cast<double>().transpose() * fd;
  t.n_samples = 0;
  return t;
}

namespace detail {

inline void require_symmetric(const MatrixXd& m, const char* who) {
  require(m.rows() == m.cols(), std::string(who) + ": matrix must be square");
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale, std::string(who) + ": matrix must be symmetric");
}

}  // namespace detail

/// Inverse of a symmetric PSD matrix under the chosen stabilization.
template <typename Derived>
MatrixXd stable_inverse(const Eigen::MatrixBase<Derived>& m_in, const InverseMode& mode = InverseMode::pseudo()) {
  const MatrixXd m = m_in.template cast<double>();
  if (!m.allFinite()) throw NumericalError("stable_inverse: matrix has non-finite entries");
  detail::require_symmetric(m, "stable_inverse");
  const Index k = m.rows();
  if (k == 0) return m;

  if (mode.kind == InverseMode::Kind::Pseudo) {
    detail::require(mode.value >= 0.0, "stable_inverse: pseudo-inverse tolerance must be nonnegative");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (m + m.transpose()));
    const VectorXd& lambda = eig.eigenvalues();
    const double lmax = lambda.maxCoeff();
    if (!(lmax > 0.0)) return MatrixXd::Zero(k, k);
    const double cutoff = mode.value * lmax;
    VectorXd inv = VectorXd::Zero(k);
    for (Index i = 0; i < k; ++i) {
      if (lambda(i) > cutoff) inv(i) = 1.0 / lambda(i);
    }
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  }

  const MatrixXd shifted = m + mode.value * MatrixXd::Identity(k, k);
  if (mode.value > 0.0) {
    Eigen::LDLT<MatrixXd> ldlt(shifted);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) return ldlt.solve(MatrixXd::Identity(k, k));
  }
  Eigen::FullPivLU<MatrixXd> lu(shifted);
  if (!lu.isInvertible()) {
    std::ostringstream os;
    os << "stable_inverse: ridge epsilon " << mode.value << " leaves the matrix singular";
    throw ValidationError(os.str());
  }
  return lu.inverse();
}

/// Tr(K^+ A^T L^+ A): the sum of squared canonical correlations of the two spans.
inline double relevance(const CovarianceTriple& t, const InverseMode& mode = InverseMode::pseudo()) {
  detail::require(t.A.rows() == t.kg() && t.A.cols() == t.kf(), "relevance: A has the wrong shape");
  const MatrixXd kinv = stable_inverse(t.K, mode);
  const MatrixXd linv = stable_inverse(t.L, mode);
  return (kinv * t.A.transpose() * linv * t.A).trace();
}

/// k0 - relevance; zero at the optimum.
inline double loss(const CovarianceTriple& t, Index k0, const InverseMode& mode = InverseMode::pseudo()) {
  detail::require(k0 == t.kf(), "loss: k0 must equal the feature count");
  return static_cast<double>(k0) - relevance(t, mode);
}

namespace detail {

// Orthonormal basis of range(M) from a thin SVD, rank cut at tol relative to
// the largest squared singular value (the same scale as the Gram eigenvalues).
inline MatrixXd range_basis(const MatrixXd& m, double tol) {
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU);
  const VectorXd& s = svd.singularValues();
  if (s.size() == 0 || !(s(0) > 0.0)) return MatrixXd(m.rows(), 0);
  Index rank = 0;
  while (rank < s.size() && s(rank) * s(rank) > tol * s(0) * s(0)) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace detail

/// Tr(PQ) with P, Q the orthogonal projectors onto range(F) and range(G)
/// in sample space. Equals relevance(covariances(F, G)).
template <typename DerivedF, typename DerivedG>
double projector_overlap(const Eigen::MatrixBase<DerivedF>& F, const Eigen::MatrixBase<DerivedG>& G,
                         double tol = 1e-10) {
  detail::require(F.rows() == G.rows(), "projector_overlap: sample-count mismatch between F and G");
  const MatrixXd uf = detail::range_basis(F.template cast<double>(), tol);
  const MatrixXd ug = detail::range_basis(G.template cast<double>(), tol);
  return (uf.transpose() * ug).squaredNorm();
}

/// Canonical pairs within the spans of two feature families.
struct SpanDiagonalization {
  VectorXd relevances;       // eigenvalues of K^+ A^T L^+ A, descending (eta^2)
  VectorXd singular_values;  // eta
  MatrixXd x_map;            // kf × r: canonical x-variable i = f . x_map.col(i)
  MatrixXd y_map;            // kg × r: canonical y-variable i = g . y_map.col(i)
};

/// Diagonalizes N^*N = K^+ A^T L^+ A through its symmetric form
/// K^{+1/2} A^T L^+ A K^{+1/2}. Canonical variables come out orthonormal
/// under the same moments that produced the triple.
inline SpanDiagonalization diagonalize(const CovarianceTriple& t, const InverseMode& mode = InverseMode::pseudo()) {
  detail::require(t.A.rows() == t.kg() && t.A.cols() == t.kf(), "diagonalize: A has the wrong shape");
  const Index k = t.kf();

  Eigen::SelfAdjointEigenSolver<MatrixXd> keig(0.5 * (t.K + t.K.transpose()));
  const double kmax = keig.eigenvalues().maxCoeff();
  const double cutoff = (mode.kind == InverseMode::Kind::Pseudo ? mode.value : 0.0) * kmax;
  VectorXd half = VectorXd::Zero(k);
  for (Index i = 0; i < k; ++i) {
    const double lam = keig.eigenvalues()(i) + (mode.kind == InverseMode::Kind::Ridge ? mode.value : 0.0);
    if (lam > cutoff && lam > 0.0) half(i) = 1.0 / std::sqrt(lam);
  }
  const MatrixXd k_half = keig.eigenvectors() * half.asDiagonal() * keig.eigenvectors().transpose();
  const MatrixXd linv = stable_inverse(t.L, mode);
  MatrixXd s = k_half * t.A.transpose() * linv * t.A * k_half;
  s = 0.5 * (s + s.transpose());

  Eigen::SelfAdjointEigenSolver<MatrixXd> seig(s);
  SpanDiagonalization out;
  out.relevances = seig.eigenvalues().reverse();
  const MatrixXd w = seig.eigenvectors().rowwise().reverse();
  out.singular_values = out.relevances.cwiseMax(0.0).cwiseSqrt();
  out.x_map = k_half * w;
  out.y_map = MatrixXd::Zero(t.kg(), k);
  for (Index i = 0; i < k; ++i) {
    Index arg = 0;
    out.x_map.col(i).cwiseAbs().maxCoeff(&arg);
    if (out.x_map(arg, i) < 0.0) out.x_map.col(i) *= -1.0;
    if (out.singular_values(i) > 1e-12) {
      out.y_map.col(i) = linv * t.A * out.x_map.col(i) / out.singular_values(i);
    }
  }
  return out;
}

}  // namespace dcci

#endif  // DCCI_CANONICAL_HPP
