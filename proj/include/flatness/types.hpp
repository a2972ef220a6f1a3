#pragma once

#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Core>

namespace flatness {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Read-only vector view whose scalar is never deduced from the argument.
template <typename Scalar>
using ConstVectorRef = std::type_identity_t<Eigen::Ref<const VectorX<Scalar>>>;

using Point = VectorXd;
using ConstPointRef = Eigen::Ref<const VectorXd>;

/// Raised when an input violates a documented precondition or file schema.
/// The CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace flatness
