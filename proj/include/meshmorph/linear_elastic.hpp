#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meshmorph/error.hpp"
#include "meshmorph/mesh.hpp"
#include "meshmorph/q4.hpp"
#include "meshmorph/sparse.hpp"
#include "meshmorph/stiffening.hpp"

namespace meshmorph {

struct LinearElasticConfig {
    double elastic_modulus = 1.0;
    double poisson_ratio = 0.3;
    /// Number of re-solves on updated geometry; 1 is the classic single-step solve.
    int iterations = 1;
    std::vector<double> layer_factors;

    void validate() const {
        if (!(elastic_modulus > 0.0)) throw ConfigError("linear_elastic: modulus must be > 0");
        if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5))
            throw ConfigError("linear_elastic: poisson ratio must lie in [0, 0.5)");
        if (iterations < 1) throw ConfigError("linear_elastic: iterations must be >= 1");
        for (double f : layer_factors)
            if (!(f > 0.0)) throw ConfigError("linear_elastic: layer factors must be > 0");
    }
};

/// Plane-strain constitutive matrix in Voigt order (xx, yy, xy engineering shear).
inline Eigen::Matrix3d plane_strain_matrix(double modulus, double poisson) {
    const double c = modulus / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    Eigen::Matrix3d d;
    d << c * (1.0 - poisson), c * poisson, 0.0,
         c * poisson, c * (1.0 - poisson), 0.0,
         0.0, 0.0, c * (1.0 - 2.0 * poisson) / 2.0;
    return d;
}

/// 8x8 bilinear-quad stiffness with 2x2 Gauss quadrature, times `multiplier`.
inline Eigen::Matrix<double, 8, 8> element_stiffness_q4(const std::array<Vec2, 4>& corners,
                                                        double modulus, double poisson,
                                                        double multiplier = 1.0) {
    const Eigen::Matrix3d d = plane_strain_matrix(modulus, poisson);
    Eigen::Matrix<double, 8, 8> k = Eigen::Matrix<double, 8, 8>::Zero();
    for (const auto& gp : q4::gauss_points) {
        const auto pg = q4::physical_gradients(corners, gp[0], gp[1]);
        if (!(pg.det_j > 0.0))
            throw InadmissibleStateError("element_stiffness_q4: non-positive Jacobian", -1);
        Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
        for (int a = 0; a < 4; ++a) {
            b(0, 2 * a) = pg.dn(0, a);
            b(1, 2 * a + 1) = pg.dn(1, a);
            b(2, 2 * a) = pg.dn(1, a);
            b(2, 2 * a + 1) = pg.dn(0, a);
        }
        k.noalias() += b.transpose() * d * b * pg.det_j;
    }
    return k * multiplier;
}

inline Eigen::Matrix<double, 8, 8> element_stiffness_q4(const std::array<Vec2, 4>& corners,
                                                        const LinearElasticConfig& config,
                                                        double multiplier = 1.0) {
    return element_stiffness_q4(corners, config.elastic_modulus, config.poisson_ratio, multiplier);
}

inline std::array<int, 8> quad_dofs(const Quad& q) {
    return {2 * q[0], 2 * q[0] + 1, 2 * q[1], 2 * q[1] + 1,
            2 * q[2], 2 * q[2] + 1, 2 * q[3], 2 * q[3] + 1};
}

/// Sparsity pattern of a Q4 mesh's nodal stiffness.
inline PatternAssembler quad_pattern(const QuadMesh& mesh) {
    std::vector<std::vector<int>> dofs;
    dofs.reserve(mesh.element_count());
    for (const Quad& q : mesh.quads) {
        const auto d = quad_dofs(q);
        dofs.emplace_back(d.begin(), d.end());
    }
    return PatternAssembler(static_cast<int>(mesh.dof_count()), dofs);
}

/// Fictitious linear-elastic mesh motion: K x = 0 in the interior, x = u on the
/// interface, zero on the outer walls. With `iterations` > 1 the motion is split
/// into equal parts, each solved on the updated geometry.
inline QuadMesh deform_linear_elastic(const QuadMesh& mesh, const PrescribedMotion& motion,
                                      const LinearElasticConfig& config) {
    config.validate();
    const auto multipliers = layer_multipliers(mesh, config.layer_factors);
    const auto constraints =
        to_constraints(dirichlet_values(mesh, motion, 1.0 / config.iterations));
    const int ndof = static_cast<int>(mesh.dof_count());
    QuadMesh current = mesh;
    PatternAssembler assembler = quad_pattern(mesh);
    ConstrainedSolver solver(ndof, constraints);
    for (int it = 0; it < config.iterations; ++it) {
        assembler.clear();
        for (std::size_t e = 0; e < mesh.element_count(); ++e) {
            Eigen::Matrix<double, 8, 8> ke;
            try {
                ke = element_stiffness_q4(current.corners(e), config, multipliers[e]);
            } catch (const InadmissibleStateError&) {
                throw InadmissibleStateError("linear elastic: element " + std::to_string(e) +
                                                 " has a non-positive Jacobian at step " +
                                                 std::to_string(it),
                                             static_cast<long>(e));
            }
            assembler.add(e, ke);
        }
        Vector dx;
        try {
            dx = solver.solve(assembler.matrix(), Vector::Zero(ndof), constraints);
        } catch (const SolverError& err) {
            throw SolverError(std::string("linear elastic: ") + err.what(), it);
        }
        current = current.displaced(dx);
    }
    return current;
}

}  // namespace meshmorph
