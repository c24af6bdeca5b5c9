// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <complex>
#include <cstdint>
#include <numbers>

namespace dtloc {

template <typename Scalar> using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vec3T = Eigen::Matrix<Scalar, 3, 1>;

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;
using Complex = std::complex<double>;

/// Complex column vector, one entry per transmit antenna.
using CVector = Eigen::VectorXcd;
/// Complex matrix; rows are subbands, columns are transmit antennas.
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

} // namespace dtloc
