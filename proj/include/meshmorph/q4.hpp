#pragma once

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "meshmorph/geometry.hpp"

namespace meshmorph::q4 {

/// Bilinear quad kernels shared by the continuum models.
/// Local nodes are counterclockwise from (-1,-1); local dof 2a + c.

inline constexpr double gauss_abscissa = 0.57735026918962576451;  // 1/sqrt(3)

inline constexpr std::array<std::array<double, 2>, 4> gauss_points{{
    {-gauss_abscissa, -gauss_abscissa},
    {gauss_abscissa, -gauss_abscissa},
    {gauss_abscissa, gauss_abscissa},
    {-gauss_abscissa, gauss_abscissa},
}};

inline constexpr std::array<std::array<double, 2>, 4> node_signs{{
    {-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}}};

/// dN/dxi (row 0) and dN/deta (row 1) at (xi, eta).
inline Eigen::Matrix<double, 2, 4> natural_gradients(double xi, double eta) {
    Eigen::Matrix<double, 2, 4> g;
    for (int a = 0; a < 4; ++a) {
        const double sx = node_signs[a][0];
        const double sy = node_signs[a][1];
        g(0, a) = 0.25 * sx * (1.0 + sy * eta);
        g(1, a) = 0.25 * sy * (1.0 + sx * xi);
    }
    return g;
}

/// Physical shape-function gradients at one integration point.
struct PointGradients {
    Eigen::Matrix<double, 2, 4> dn;  // row 0: dN/dX, row 1: dN/dY
    double det_j = 0.0;
};

inline PointGradients physical_gradients(const std::array<Vec2, 4>& corners, double xi, double eta) {
    const Eigen::Matrix<double, 2, 4> g = natural_gradients(xi, eta);
    Eigen::Matrix2d jac = Eigen::Matrix2d::Zero();  // jac(i, j) = dX_j / dxi_i
    for (int a = 0; a < 4; ++a) {
        jac(0, 0) += g(0, a) * corners[a].x;
        jac(0, 1) += g(0, a) * corners[a].y;
        jac(1, 0) += g(1, a) * corners[a].x;
        jac(1, 1) += g(1, a) * corners[a].y;
    }
    PointGradients out;
    out.det_j = jac.determinant();
    if (out.det_j > 0.0) out.dn = jac.inverse() * g;
    else out.dn.setZero();
    return out;
}

}  // namespace meshmorph::q4
