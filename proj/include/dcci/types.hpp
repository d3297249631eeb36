#ifndef DCCI_TYPES_HPP
#define DCCI_TYPES_HPP

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dcci {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Index = Eigen::Index;
using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Bad input: wrong shapes, invalid parameters, malformed files.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation produced a non-finite or otherwise unusable number.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Which way a stochastic channel (or an inference) runs.
enum class Direction {
  XtoY,  // condition on x, reason about y
  YtoX,  // condition on y, reason about x
};

inline const char* to_string(Direction d) { return d == Direction::XtoY ? "x-to-y" : "y-to-x"; }

inline Direction direction_from_string(const std::string& s) {
  if (s == "x-to-y" || s == "y-from-x") return Direction::XtoY;
  if (s == "y-to-x" || s == "x-from-y") return Direction::YtoX;
  throw ValidationError("unknown direction '" + s + "'");
}

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace detail
}  // namespace dcci

#endif  // DCCI_TYPES_HPP
