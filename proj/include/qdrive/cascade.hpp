#pragma once

#include <qdrive/network.hpp>

#include <Eigen/Dense>

#include <optional>

/// Two-port chain algebra kept separate from the nodal solver so each can check the other.
namespace qdrive::cascade {

inline Eigen::Matrix2cd series(cplx z) {
    Eigen::Matrix2cd m;
    m << 1.0, z, 0.0, 1.0;
    return m;
}

inline Eigen::Matrix2cd shunt(cplx y) {
    Eigen::Matrix2cd m;
    m << 1.0, 0.0, y, 1.0;
    return m;
}

/// S-matrix of a two-port from its ABCD matrix, real reference impedances z1 (input) and z2 (output).
/// `det` overrides AD - BC, which cancels badly for long chains; it is exactly 1 for reciprocal sections.
inline Eigen::Matrix2cd abcd_to_s(const Eigen::Matrix2cd& t, double z1, double z2, std::optional<cplx> det = {}) {
    const cplx A = t(0, 0), B = t(0, 1), C = t(1, 0), D = t(1, 1);
    const cplx den = A * z2 + B + C * z1 * z2 + D * z1;
    const double k = 2.0 * std::sqrt(z1 * z2);
    Eigen::Matrix2cd s;
    s(0, 0) = (A * z2 + B - C * z1 * z2 - D * z1) / den;
    s(0, 1) = k * det.value_or(A * D - B * C) / den;
    s(1, 0) = k / den;
    s(1, 1) = (-A * z2 + B - C * z1 * z2 + D * z1) / den;
    return s;
}

} // namespace qdrive::cascade
