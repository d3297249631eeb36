#ifndef DCCI_DISCRETE_HPP
#define DCCI_DISCRETE_HPP

// Exact machinery on finite probability spaces. Elements of V_X / V_Y are
// plain vectors over the states of one variable; the Fisher inner product
// weights them by the inverse of a fixed reference distribution.

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "dcci/types.hpp"

namespace dcci {

/// Joint probability table p(x,y) over n_x × n_y states, with its marginals.
/// Rejects tables with a zero marginal entry: the channel operations divide
/// by the marginals.
template <typename Scalar = double>
class JointDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit JointDistribution(Matrix<Scalar> table) : table_(std::move(table)) {
    detail::require(table_.rows() >= 1 && table_.cols() >= 1, "joint table must be non-empty");
    detail::require(table_.allFinite(), "joint table has non-finite entries");
    detail::require((table_.array() >= Scalar(0)).all(), "joint table has negative entries");
    const double total = static_cast<double>(table_.sum());
    if (std::abs(total - 1.0) > std::max(kSumTolerance, 64 * double(Eigen::NumTraits<Scalar>::epsilon()))) {
      std::ostringstream os;
      os << "joint table sums to " << total << ", expected 1";
      throw ValidationError(os.str());
    }
    px_ = table_.rowwise().sum();
    py_ = table_.colwise().sum().transpose();
    detail::require((px_.array() > Scalar(0)).all(), "marginal p_x has a zero entry (full support required)");
    detail::require((py_.array() > Scalar(0)).all(), "marginal p_y has a zero entry (full support required)");
  }

  /// Divides by the total first; any nonnegative table with positive mass.
  static JointDistribution normalized(const Matrix<Scalar>& weights) {
    const Scalar total = weights.sum();
    detail::require(total > Scalar(0), "cannot normalize a table with zero mass");
    return JointDistribution(weights / total);
  }

  const Matrix<Scalar>& table() const { return table_; }
  const Vector<Scalar>& px() const { return px_; }
  const Vector<Scalar>& py() const { return py_; }
  Index nx() const { return table_.rows(); }
  Index ny() const { return table_.cols(); }

  Scalar operator()(Index x, Index y) const { return table_(x, y); }

 private:
  Matrix<Scalar> table_;
  Vector<Scalar> px_;
  Vector<Scalar> py_;
};

/// Singular triplets of the channel p(y|x) under the Fisher metrics, stored as
/// the function values a_i(x), b_i(y). Column 0 is the constant pair, eta = 1.
template <typename Scalar = double>
struct CanonicalDecomposition {
  Vector<Scalar> etas;
  Matrix<Scalar> left_vars;   // n_x × r, a_i(x)
  Matrix<Scalar> right_vars;  // n_y × r, b_i(y)
  Vector<Scalar> px;
  Vector<Scalar> py;

  Index rank() const { return etas.size(); }
};

/// <mu, mu2>_p = sum_x mu(x) mu2(x) / p(x)
template <typename DerivedA, typename DerivedB, typename DerivedP>
typename DerivedA::Scalar fisher_inner(const Eigen::MatrixBase<DerivedA>& mu,
                                       const Eigen::MatrixBase<DerivedB>& mu2,
                                       const Eigen::MatrixBase<DerivedP>& p) {
  detail::require(mu.size() == p.size() && mu2.size() == p.size(),
                  "fisher_inner: dimension mismatch");
  detail::require((p.array() > 0).all(), "fisher_inner: reference distribution has a zero entry");
  return (mu.array() * mu2.array() / p.array()).sum();
}

/// chi^2(q, p) = <q - p, q - p>_p
template <typename DerivedQ, typename DerivedP>
typename DerivedQ::Scalar chi2(const Eigen::MatrixBase<DerivedQ>& q, const Eigen::MatrixBase<DerivedP>& p) {
  detail::require(q.size() == p.size(), "chi2: dimension mismatch");
  const auto diff = (q - p).eval();
  return fisher_inner(diff, diff, p);
}

/// XtoY: nu(y) = sum_x p(y|x) mu(x).  YtoX: the transpose map with kernel p(x|y).
template <typename Scalar, typename Derived>
Vector<Scalar> apply_channel(const JointDistribution<Scalar>& joint, const Eigen::MatrixBase<Derived>& mu,
                             Direction direction) {
  if (direction == Direction::XtoY) {
    detail::require(mu.size() == joint.nx(), "apply_channel: input must live on X");
    // p(y|x) mu(x) = p(x,y) * (mu(x) / p_x(x))
    return joint.table().transpose() * (mu.array() / joint.px().array()).matrix();
  }
  detail::require(mu.size() == joint.ny(), "apply_channel: input must live on Y");
  return joint.table() * (mu.array() / joint.py().array()).matrix();
}

namespace detail {

// Orthonormal basis of the complement of a unit vector, as the trailing
// columns of a Householder reflection.
template <typename Scalar>
Matrix<Scalar> orthogonal_complement(const Vector<Scalar>& unit) {
  const Matrix<Scalar> m = unit;
  Eigen::HouseholderQR<Matrix<Scalar>> qr(m);
  const Matrix<Scalar> q = qr.householderQ();
  return q.rightCols(unit.size() - 1);
}

template <typename Scalar>
void fix_signs(Matrix<Scalar>& left, Matrix<Scalar>& right) {
  for (Index i = 0; i < left.cols(); ++i) {
    for (Index x = 0; x < left.rows(); ++x) {
      if (std::abs(left(x, i)) > Scalar(1e-9)) {
        if (left(x, i) < 0) {
          left.col(i) *= Scalar(-1);
          right.col(i) *= Scalar(-1);
        }
        break;
      }
    }
  }
}

}  // namespace detail

/// Full SVD of the channel. The whitened matrix S(y,x) = p(x,y)/sqrt(p_x p_y)
/// always has the pair (sqrt p_y, sqrt p_x) at singular value 1; it is split
/// off explicitly so column 0 is exactly the constant variable even when
/// other singular values equal 1.
template <typename Scalar>
CanonicalDecomposition<Scalar> channel_svd(const JointDistribution<Scalar>& joint) {
  const Vector<Scalar> sx = joint.px().cwiseSqrt();
  const Vector<Scalar> sy = joint.py().cwiseSqrt();
  const Matrix<Scalar> whitened =
      sy.cwiseInverse().asDiagonal() * joint.table().transpose() * sx.cwiseInverse().asDiagonal();

  const Index r = std::min(joint.nx(), joint.ny());
  CanonicalDecomposition<Scalar> out;
  out.px = joint.px();
  out.py = joint.py();
  out.etas.resize(r);
  out.left_vars.resize(joint.nx(), r);
  out.right_vars.resize(joint.ny(), r);

  out.etas(0) = Scalar(1);
  out.left_vars.col(0).setOnes();
  out.right_vars.col(0).setOnes();

  if (r > 1) {
    const Matrix<Scalar> qx = detail::orthogonal_complement(sx);
    const Matrix<Scalar> qy = detail::orthogonal_complement(sy);
    const Matrix<Scalar> reduced = qy.transpose() * whitened * qx;
    Eigen::JacobiSVD<Matrix<Scalar>> svd(reduced, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index m = r - 1;
    out.etas.tail(m) = svd.singularValues().head(m);
    out.left_vars.rightCols(m) = sx.cwiseInverse().asDiagonal() * (qx * svd.matrixV().leftCols(m));
    out.right_vars.rightCols(m) = sy.cwiseInverse().asDiagonal() * (qy * svd.matrixU().leftCols(m));
  }
  detail::fix_signs(out.left_vars, out.right_vars);
  return out;
}

/// Rank-k0 truncation q(x,y) = p_x p_y sum_{i<k0} eta_i a_i(x) b_i(y).
/// Marginals match p; entries may be negative.
template <typename Scalar>
Matrix<Scalar> truncated_joint(const CanonicalDecomposition<Scalar>& d, Index k0) {
  if (k0 < 1 || k0 > d.rank()) {
    std::ostringstream os;
    os << "truncated_joint: k0 = " << k0 << " outside [1, " << d.rank() << "]";
    throw ValidationError(os.str());
  }
  const Matrix<Scalar> core = d.left_vars.leftCols(k0) * d.etas.head(k0).asDiagonal() *
                              d.right_vars.leftCols(k0).transpose();
  return d.px.asDiagonal() * core * d.py.asDiagonal();
}

/// sum_{x,y} (q - p)^2 / (p_x p_y); the average channel distance minimized by truncation.
template <typename Scalar, typename Derived>
Scalar frobenius_distance(const JointDistribution<Scalar>& joint, const Eigen::MatrixBase<Derived>& q) {
  detail::require(q.rows() == joint.nx() && q.cols() == joint.ny(), "frobenius_distance: dimension mismatch");
  const Matrix<Scalar> weights = joint.px() * joint.py().transpose();
  return ((q - joint.table()).array().square() / weights.array()).sum();
}

}  // namespace dcci

#endif  // DCCI_DISCRETE_HPP
