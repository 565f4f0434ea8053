#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>

namespace drape {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

template <class Real>
using Vec3T = Eigen::Matrix<Real, 3, 1>;

template <class Real>
using MatrixX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

template <class Real>
using VectorX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <class Real>
using RowMajorMatrixX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Triangle = std::array<int, 3>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace drape
