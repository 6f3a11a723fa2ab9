#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meshmorph/error.hpp"
#include "meshmorph/linear_elastic.hpp"
#include "meshmorph/mesh.hpp"
#include "meshmorph/q4.hpp"
#include "meshmorph/sparse.hpp"
#include "meshmorph/stiffening.hpp"
#include "meshmorph/yeoh.hpp"

namespace meshmorph {

struct ForcesAndTangent {
    Vector internal_forces;
    SparseSymmetric tangent;
};

namespace detail {

/// Total Lagrangian bilinear quad: internal forces, optional tangent, energy.
template <bool WithTangent>
void yeoh_element(const std::array<Vec2, 4>& ref, const std::array<double, 8>& ue,
                  const YeohMaterial& mat, long element, Eigen::Matrix<double, 8, 1>& fe,
                  Eigen::Matrix<double, 8, 8>* ke, double* energy) {
    fe.setZero();
    if constexpr (WithTangent) ke->setZero();
    for (const auto& gp : q4::gauss_points) {
        const auto pg = q4::physical_gradients(ref, gp[0], gp[1]);
        if (!(pg.det_j > 0.0))
            throw InadmissibleStateError("yeoh: reference element " + std::to_string(element) +
                                             " has a non-positive Jacobian",
                                         element);
        Eigen::Matrix2d f = Eigen::Matrix2d::Identity();
        for (int a = 0; a < 4; ++a) {
            for (int i = 0; i < 2; ++i) {
                f(i, 0) += ue[2 * a + i] * pg.dn(0, a);
                f(i, 1) += ue[2 * a + i] * pg.dn(1, a);
            }
        }
        if (!(f.determinant() > 0.0))
            throw InadmissibleStateError("yeoh: det F <= 0 in element " + std::to_string(element),
                                         element);
        const Eigen::Matrix2d s = pk2_stress(f, mat);
        Eigen::Matrix<double, 3, 8> b;
        for (int a = 0; a < 4; ++a) {
            const double nx = pg.dn(0, a), ny = pg.dn(1, a);
            b(0, 2 * a) = f(0, 0) * nx;
            b(0, 2 * a + 1) = f(1, 0) * nx;
            b(1, 2 * a) = f(0, 1) * ny;
            b(1, 2 * a + 1) = f(1, 1) * ny;
            b(2, 2 * a) = f(0, 0) * ny + f(0, 1) * nx;
            b(2, 2 * a + 1) = f(1, 0) * ny + f(1, 1) * nx;
        }
        const Eigen::Vector3d sv(s(0, 0), s(1, 1), s(0, 1));
        fe.noalias() += b.transpose() * sv * pg.det_j;
        if (energy) *energy += yeoh_energy(f, mat) * pg.det_j;
        if constexpr (WithTangent) {
            const Eigen::Matrix3d d = material_tangent(f, mat);
            ke->noalias() += b.transpose() * d * b * pg.det_j;
            for (int a = 0; a < 4; ++a) {
                for (int c = 0; c < 4; ++c) {
                    const Eigen::Vector2d ga = pg.dn.col(a), gc = pg.dn.col(c);
                    const double geo = ga.dot(s * gc) * pg.det_j;
                    (*ke)(2 * a, 2 * c) += geo;
                    (*ke)(2 * a + 1, 2 * c + 1) += geo;
                }
            }
        }
    }
}

inline YeohMaterial scaled_a20(YeohMaterial m, double multiplier) {
    m.a20 *= multiplier;
    return m;
}

inline void check_sizes(const QuadMesh& reference, const Vector& u, std::span<const double> mult) {
    if (u.size() != static_cast<Eigen::Index>(reference.dof_count()))
        throw Error("hyperelastic: displacement vector has the wrong size");
    if (mult.size() != reference.element_count())
        throw Error("hyperelastic: one A20 multiplier per element required");
}

inline std::array<double, 8> gather(const Quad& q, const Vector& u) {
    std::array<double, 8> ue;
    for (int a = 0; a < 4; ++a) {
        ue[2 * a] = u[2 * q[a]];
        ue[2 * a + 1] = u[2 * q[a] + 1];
    }
    return ue;
}

}  // namespace detail

namespace detail {

inline void assemble_yeoh(const QuadMesh& reference, const Vector& u, std::span<const double> mult,
                          const YeohMaterial& material, Vector& forces, PatternAssembler& tangent) {
    check_sizes(reference, u, mult);
    if (tangent.element_count() != reference.element_count())
        throw Error("hyperelastic: tangent pattern does not match the mesh");
    forces = Vector::Zero(static_cast<Eigen::Index>(reference.dof_count()));
    tangent.clear();
    Eigen::Matrix<double, 8, 1> fe;
    Eigen::Matrix<double, 8, 8> ke;
    for (std::size_t e = 0; e < reference.element_count(); ++e) {
        const Quad& q = reference.quads[e];
        yeoh_element<true>(reference.corners(e), gather(q, u), scaled_a20(material, mult[e]),
                           static_cast<long>(e), fe, &ke, nullptr);
        const auto dofs = quad_dofs(q);
        for (int i = 0; i < 8; ++i) forces[dofs[i]] += fe[i];
        tangent.add(e, ke);
    }
}

}  // namespace detail

/// Internal nodal forces and their exact derivative (the tangent stiffness) at
/// nodal displacements `u`, before any boundary treatment. `a20_multipliers`
/// holds one A20 stiffening factor per element.
inline ForcesAndTangent internal_forces_and_tangent(const QuadMesh& reference, const Vector& u,
                                                    std::span<const double> a20_multipliers,
                                                    const YeohMaterial& material) {
    PatternAssembler pattern = quad_pattern(reference);
    ForcesAndTangent out;
    detail::assemble_yeoh(reference, u, a20_multipliers, material, out.internal_forces, pattern);
    out.tangent = pattern.matrix();
    return out;
}

inline Vector internal_forces(const QuadMesh& reference, const Vector& u,
                              std::span<const double> a20_multipliers,
                              const YeohMaterial& material) {
    detail::check_sizes(reference, u, a20_multipliers);
    Vector f = Vector::Zero(static_cast<Eigen::Index>(reference.dof_count()));
    Eigen::Matrix<double, 8, 1> fe;
    for (std::size_t e = 0; e < reference.element_count(); ++e) {
        const Quad& q = reference.quads[e];
        detail::yeoh_element<false>(reference.corners(e), detail::gather(q, u),
                                    detail::scaled_a20(material, a20_multipliers[e]),
                                    static_cast<long>(e), fe, nullptr, nullptr);
        const auto dofs = quad_dofs(q);
        for (int i = 0; i < 8; ++i) f[dofs[i]] += fe[i];
    }
    return f;
}

/// Total stored energy (2x2 Gauss quadrature of W over the reference mesh).
inline double strain_energy(const QuadMesh& reference, const Vector& u,
                            std::span<const double> a20_multipliers, const YeohMaterial& material) {
    detail::check_sizes(reference, u, a20_multipliers);
    double total = 0.0;
    Eigen::Matrix<double, 8, 1> fe;
    for (std::size_t e = 0; e < reference.element_count(); ++e) {
        detail::yeoh_element<false>(reference.corners(e), detail::gather(reference.quads[e], u),
                                    detail::scaled_a20(material, a20_multipliers[e]),
                                    static_cast<long>(e), fe, nullptr, &total);
    }
    return total;
}

/// Converged hyperelastic mesh state, kept for sensitivity analysis.
///
/// `prescribed` holds the final targets on every constrained dof: the interface
/// motion on the interface, zero on the walls. `residual` is the mesh residual
/// D = exF - inF at `displacement`, where free rows carry -inF (no external
/// forces) and prescribed rows carry target - x.
struct HyperelasticEquilibrium {
    QuadMesh reference;
    YeohMaterial material;
    std::vector<double> multipliers;
    std::vector<DirichletValue> prescribed;
    Vector displacement;
    Vector residual;
    double newton_tol = 1e-8;
    bool converged = false;
    int newton_iterations = 0;
    int increments = 0;
};

/// Mesh residual D(x) for the targets in `prescribed`.
inline Vector mesh_residual(const QuadMesh& reference, std::span<const double> multipliers,
                            const YeohMaterial& material,
                            std::span<const DirichletValue> prescribed, const Vector& x) {
    Vector d = -internal_forces(reference, x, multipliers, material);
    for (const auto& p : prescribed) d[p.dof] = p.value - x[p.dof];
    return d;
}

/// Tangent with the interface treatment applied: prescribed rows are replaced by
/// identity rows (K_pp = I, K_p,other = 0). Columns are left intact.
inline SparseSymmetric treated_tangent(SparseSymmetric k, std::span<const DirichletValue> prescribed) {
    std::vector<char> fixed(k.rows(), 0);
    for (const auto& p : prescribed) fixed[p.dof] = 1;
    for (int col = 0; col < k.outerSize(); ++col) {
        for (SparseSymmetric::InnerIterator it(k, col); it; ++it) {
            if (fixed[it.row()]) it.valueRef() = (it.row() == col) ? 1.0 : 0.0;
        }
    }
    for (const auto& p : prescribed) {
        if (k.coeff(p.dof, p.dof) != 1.0) k.coeffRef(p.dof, p.dof) = 1.0;
    }
    k.makeCompressed();
    return k;
}

struct HyperelasticResult {
    QuadMesh mesh;
    HyperelasticEquilibrium state;
};

namespace detail {

struct NewtonOutcome {
    int iterations = 0;
    double residual_norm = 0.0;
};

/// Assembly pattern and factorization reused across Newton iterations.
struct NewtonWorkspace {
    PatternAssembler tangent;
    ConstrainedSolver solver;

    NewtonWorkspace(const QuadMesh& reference, std::span<const DirichletValue> prescribed)
        : tangent(quad_pattern(reference)),
          solver(static_cast<int>(reference.dof_count()), to_constraints(prescribed)) {}
};

/// Newton-Raphson to equilibrium for fixed targets, starting from `x`.
/// The first solve moves prescribed dofs by their remaining increment; the
/// free block absorbs the prescribed columns so the system stays symmetric.
inline NewtonOutcome newton_solve(const QuadMesh& reference, std::span<const double> multipliers,
                                  const YeohMaterial& material,
                                  std::span<const DirichletValue> targets, Vector& x,
                                  Vector& residual, double tol, int max_iters, NewtonWorkspace& ws) {
    NewtonOutcome out;
    residual = mesh_residual(reference, multipliers, material, targets, x);
    out.residual_norm = residual.norm();
    Vector forces;
    std::vector<Constraint> increments(targets.size());
    while (!(out.residual_norm < tol)) {
        if (out.iterations >= max_iters)
            throw SolverError("newton: no convergence after " + std::to_string(max_iters) +
                                  " iterations, residual " + std::to_string(out.residual_norm),
                              -1, out.residual_norm);
        assemble_yeoh(reference, x, multipliers, material, forces, ws.tangent);
        for (std::size_t k = 0; k < targets.size(); ++k)
            increments[k] = {targets[k].dof, residual[targets[k].dof]};
        const Vector dx = ws.solver.solve(ws.tangent.matrix(), residual, increments);
        x += dx;
        for (const auto& p : targets) x[p.dof] = p.value;
        ++out.iterations;
        residual = mesh_residual(reference, multipliers, material, targets, x);
        out.residual_norm = residual.norm();
        if (!std::isfinite(out.residual_norm))
            throw SolverError("newton: residual is not finite", -1, out.residual_norm);
    }
    return out;
}

inline std::vector<DirichletValue> scaled_targets(std::span<const DirichletValue> full, double f) {
    std::vector<DirichletValue> out(full.begin(), full.end());
    for (auto& p : out) p.value *= f;
    return out;
}

}  // namespace detail

/// Incremental Newton-Raphson solve of the Yeoh mesh-motion problem. Interface
/// displacements are ramped in `n_increments` equal load factors; an increment
/// that fails is retried once as two half increments.
inline HyperelasticResult deform_hyperelastic(const QuadMesh& mesh, const PrescribedMotion& motion,
                                              const YeohConfig& config) {
    config.validate();
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        if (signed_area(mesh.corners(e)) <= 0.0)
            throw InadmissibleStateError("yeoh: reference element " + std::to_string(e) +
                                             " is inverted",
                                         static_cast<long>(e));
    }
    HyperelasticEquilibrium st;
    st.reference = mesh;
    st.material = config.material;
    st.multipliers = layer_multipliers(mesh, config.layer_factors);
    st.prescribed = dirichlet_values(mesh, motion);
    st.newton_tol = config.newton_tol;
    st.displacement = Vector::Zero(static_cast<Eigen::Index>(mesh.dof_count()));

    detail::NewtonWorkspace workspace(mesh, st.prescribed);
    const int n = config.n_increments;
    auto attempt = [&](double load) {
        const auto targets = detail::scaled_targets(st.prescribed, load);
        const auto outcome =
            detail::newton_solve(mesh, st.multipliers, st.material, targets, st.displacement,
                                 st.residual, config.newton_tol, config.max_newton_iters, workspace);
        st.newton_iterations += outcome.iterations;
        ++st.increments;
    };
    // Linear extrapolation from the last two converged increments as the Newton
    // start; a failed extrapolated start falls back to the plain one.
    Vector previous;
    for (int k = 1; k <= n; ++k) {
        const Vector saved = st.displacement;
        bool done = false;
        if (previous.size() > 0) {
            st.displacement = 2.0 * saved - previous;
            try {
                attempt(static_cast<double>(k) / n);
                done = true;
            } catch (const Error&) {
                st.displacement = saved;
            }
        }
        if (!done) {
            try {
                attempt(static_cast<double>(k) / n);
            } catch (const Error&) {
                st.displacement = saved;
                try {
                    attempt((k - 0.5) / n);
                    attempt(static_cast<double>(k) / n);
                } catch (const Error& err) {
                    const auto* se = dynamic_cast<const SolverError*>(&err);
                    throw SolverError("yeoh: increment " + std::to_string(k) + " failed: " + err.what(),
                                      k, se ? se->residual() : -1.0);
                }
            }
        }
        previous = saved;
    }
    // Final residual against the full targets (identical to the last iterate's).
    st.residual = mesh_residual(mesh, st.multipliers, st.material, st.prescribed, st.displacement);
    st.converged = st.residual.norm() < config.newton_tol;
    HyperelasticResult out{mesh.displaced(st.displacement), std::move(st)};
    return out;
}

}  // namespace meshmorph
