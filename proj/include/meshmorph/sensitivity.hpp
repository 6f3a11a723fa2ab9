#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "meshmorph/error.hpp"
#include "meshmorph/hyperelastic.hpp"
#include "meshmorph/io.hpp"
#include "meshmorph/mesh.hpp"
#include "meshmorph/sparse.hpp"

namespace meshmorph {

/// Mesh-deformation blocks of the adjoint chain at a converged state.
struct SensitivityBlocks {
    SparseSymmetric tangent;            // tK, prescribed rows replaced by identity rows
    SparseSymmetric interface_mapping;  // N, padded to ndof x ndof
    SparseSymmetric dD_dx;
    SparseSymmetric dD_du;
};

/// x = N u: a square 0/1 diagonal selector over mesh dofs that keeps the
/// interface dofs and drops everything else.
inline SparseSymmetric build_interface_mapping(const QuadMesh& mesh, std::span<const int> interface_set) {
    if (interface_set.empty()) throw MeshError("interface mapping: empty interface set");
    const int ndof = static_cast<int>(mesh.dof_count());
    std::vector<int> nodes(interface_set.begin(), interface_set.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    std::vector<Eigen::Triplet<double>> entries;
    for (int node : nodes) {
        if (node < 0 || node >= static_cast<int>(mesh.node_count()))
            throw MeshError("interface mapping: invalid node " + std::to_string(node));
        entries.emplace_back(2 * node, 2 * node, 1.0);
        entries.emplace_back(2 * node + 1, 2 * node + 1, 1.0);
    }
    SparseSymmetric n(ndof, ndof);
    n.setFromTriplets(entries.begin(), entries.end());
    return n;
}

inline SparseSymmetric build_interface_mapping(const QuadMesh& mesh) {
    return build_interface_mapping(mesh, mesh.interface_nodes);
}

namespace detail {

inline void require_converged(const HyperelasticEquilibrium& state) {
    if (!state.converged) throw SolverError("sensitivity: equilibrium state is not converged");
}

}  // namespace detail

/// Mesh residual at the converged state. Prescribed rows are exactly zero, so
/// the norm is that of the free-dof residual.
inline Vector residual_D(const HyperelasticEquilibrium& state) {
    detail::require_converged(state);
    return mesh_residual(state.reference, state.multipliers, state.material, state.prescribed,
                         state.displacement);
}

inline SparseSymmetric equilibrium_tangent(const HyperelasticEquilibrium& state) {
    detail::require_converged(state);
    auto ft = internal_forces_and_tangent(state.reference, state.displacement, state.multipliers,
                                          state.material);
    return treated_tangent(std::move(ft.tangent), state.prescribed);
}

inline SparseSymmetric dD_dx(const HyperelasticEquilibrium& state) {
    return -equilibrium_tangent(state);
}

inline SparseSymmetric dD_du(const HyperelasticEquilibrium& state, const SparseSymmetric& mapping) {
    SparseSymmetric out = dD_dx(state) * mapping;
    out.prune(0.0);
    return out;
}

/// The mesh residual does not depend on the fluid state; the block is exposed
/// as an explicit zero so a three-field assembler can wire it.
inline SparseSymmetric dD_dw(const HyperelasticEquilibrium& state, int fluid_dofs) {
    if (fluid_dofs < 0) throw Error("dD_dw: negative fluid dof count");
    return SparseSymmetric(static_cast<Eigen::Index>(state.reference.dof_count()), fluid_dofs);
}

inline SensitivityBlocks sensitivity_blocks(const HyperelasticEquilibrium& state) {
    SensitivityBlocks b;
    b.tangent = equilibrium_tangent(state);
    b.interface_mapping = build_interface_mapping(state.reference);
    b.dD_dx = -b.tangent;
    b.dD_du = b.dD_dx * b.interface_mapping;
    b.dD_du.prune(0.0);
    return b;
}

struct VerificationRow {
    std::string block;
    double h = 0.0;
    double relative_error = 0.0;
    bool pass = false;
};

struct VerificationReport {
    std::vector<VerificationRow> rows;

    /// Smallest error over the h schedule for `block`.
    const VerificationRow& best(const std::string& block) const {
        const VerificationRow* out = nullptr;
        for (const auto& r : rows)
            if (r.block == block && (!out || r.relative_error < out->relative_error)) out = &r;
        if (!out) throw Error("verification report has no rows for " + block);
        return *out;
    }

    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw Error("cannot write " + path);
        os << "block,h,relative_error,pass\n";
        for (const auto& r : rows)
            os << r.block << ',' << format_number(r.h) << ',' << format_number(r.relative_error) << ','
               << (r.pass ? "true" : "false") << '\n';
    }
};

struct VerificationOptions {
    std::vector<double> h_schedule{1e-4, 1e-5, 1e-6, 1e-7};
    double dx_threshold = 1e-6;
    double du_threshold = 1e-5;
    /// Tolerance of the equilibrium re-solves in the dD/du oracle.
    double resolve_tol = 1e-12;
    /// Columns of dD/dx checked; all columns when the mesh has at most this many dofs,
    /// otherwise an evenly spaced subset.
    int max_columns = 256;
    /// Negative control: scale the largest free-row, interface-column entry of the
    /// analytic blocks by this factor before comparison.
    double corruption = 1.0;
};

namespace detail {

inline double relative_error(const Eigen::MatrixXd& fd, const Eigen::MatrixXd& analytic) {
    const double scale = analytic.cwiseAbs().maxCoeff();
    const double diff = (fd - analytic).cwiseAbs().maxCoeff();
    return scale > 0.0 ? diff / scale : diff;
}

inline std::vector<int> sample_columns(int ndof, int max_columns, std::span<const int> must) {
    std::vector<int> cols;
    if (ndof <= max_columns) {
        for (int i = 0; i < ndof; ++i) cols.push_back(i);
        return cols;
    }
    for (int k = 0; k < max_columns; ++k) cols.push_back(static_cast<int>((long long)k * ndof / max_columns));
    cols.insert(cols.end(), must.begin(), must.end());
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    return cols;
}

}  // namespace detail

/// Central-difference checks of dD/dx and dD/du over an h schedule.
///
/// dD/dx: perturb x and re-evaluate the residual with the targets held fixed.
/// dD/du: perturb one interface displacement, re-solve to equilibrium, and
/// difference consistently: free rows of the implied block are
/// -dD/dx_ff * dx_f/du, prescribed rows are the change of (target - x) with the
/// targets held at their unperturbed values.
inline VerificationReport verify_fd(const HyperelasticEquilibrium& state,
                                    const VerificationOptions& opt = {}) {
    detail::require_converged(state);
    const auto blocks = sensitivity_blocks(state);
    const int ndof = static_cast<int>(state.reference.dof_count());

    std::vector<char> fixed(ndof, 0);
    for (const auto& p : state.prescribed) fixed[p.dof] = 1;
    std::vector<int> free_dofs, iface_dofs;
    for (int i = 0; i < ndof; ++i)
        if (!fixed[i]) free_dofs.push_back(i);
    for (int k = 0; k < blocks.interface_mapping.outerSize(); ++k)
        for (SparseSymmetric::InnerIterator it(blocks.interface_mapping, k); it; ++it)
            iface_dofs.push_back(static_cast<int>(it.row()));

    Eigen::MatrixXd dx = Eigen::MatrixXd(blocks.dD_dx);
    Eigen::MatrixXd du = Eigen::MatrixXd(blocks.dD_du);
    if (opt.corruption != 1.0) {
        int bi = -1, bj = -1;
        for (int i : free_dofs)
            for (int j : iface_dofs)
                if (bi < 0 || std::abs(dx(i, j)) > std::abs(dx(bi, bj))) bi = i, bj = j;
        if (bi >= 0) {
            dx(bi, bj) *= opt.corruption;
            du(bi, bj) *= opt.corruption;
        }
    }

    const auto columns = detail::sample_columns(ndof, opt.max_columns, iface_dofs);
    Eigen::MatrixXd dx_ref(ndof, columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) dx_ref.col(c) = dx.col(columns[c]);
    Eigen::MatrixXd du_ref(ndof, iface_dofs.size());
    for (std::size_t c = 0; c < iface_dofs.size(); ++c) du_ref.col(c) = du.col(iface_dofs[c]);

    Eigen::MatrixXd dx_ff(free_dofs.size(), free_dofs.size());
    for (std::size_t a = 0; a < free_dofs.size(); ++a)
        for (std::size_t b = 0; b < free_dofs.size(); ++b) dx_ff(a, b) = dx(free_dofs[a], free_dofs[b]);

    auto residual_at = [&](const Vector& x) {
        return mesh_residual(state.reference, state.multipliers, state.material, state.prescribed, x);
    };
    auto resolve = [&](int dof, double shift) {
        std::vector<DirichletValue> targets = state.prescribed;
        for (auto& p : targets)
            if (p.dof == dof) p.value += shift;
        Vector x = state.displacement;
        Vector r;
        detail::NewtonWorkspace ws(state.reference, targets);
        detail::newton_solve(state.reference, state.multipliers, state.material, targets, x, r,
                             opt.resolve_tol, 50, ws);
        return x;
    };

    VerificationReport report;
    const std::string suffix = opt.corruption != 1.0 ? "_corrupted" : "";
    for (double h : opt.h_schedule) {
        Eigen::MatrixXd fd(ndof, columns.size());
        for (std::size_t c = 0; c < columns.size(); ++c) {
            Vector xp = state.displacement, xm = state.displacement;
            xp[columns[c]] += h;
            xm[columns[c]] -= h;
            fd.col(c) = (residual_at(xp) - residual_at(xm)) / (2.0 * h);
        }
        const double e_dx = detail::relative_error(fd, dx_ref);
        report.rows.push_back({"dD_dx" + suffix, h, e_dx, e_dx < opt.dx_threshold});

        Eigen::MatrixXd fdu(ndof, iface_dofs.size());
        for (std::size_t c = 0; c < iface_dofs.size(); ++c) {
            const Vector xp = resolve(iface_dofs[c], h);
            const Vector xm = resolve(iface_dofs[c], -h);
            const Vector dxdu = (xp - xm) / (2.0 * h);
            Eigen::VectorXd col = (residual_at(xp) - residual_at(xm)) / (2.0 * h);
            Eigen::VectorXd dxf(free_dofs.size());
            for (std::size_t a = 0; a < free_dofs.size(); ++a) dxf[a] = dxdu[free_dofs[a]];
            const Eigen::VectorXd implied = -dx_ff * dxf;
            for (std::size_t a = 0; a < free_dofs.size(); ++a) col[free_dofs[a]] = implied[a];
            fdu.col(c) = col;
        }
        const double e_du = detail::relative_error(fdu, du_ref);
        report.rows.push_back({"dD_du" + suffix, h, e_du, e_du < opt.du_threshold});
    }
    return report;
}

}  // namespace meshmorph
