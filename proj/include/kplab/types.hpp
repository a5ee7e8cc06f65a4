#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <numbers>
#include <vector>

namespace kplab {

using Index = Eigen::Index;

template <typename Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

// Points stored column-wise: nodes.col(k) is the k-th point.
template <typename Scalar> using Nodes = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
template <typename Scalar> using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar> inline constexpr Scalar pi = std::numbers::pi_v<Scalar>;
template <typename Scalar> inline constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;

} // namespace kplab
