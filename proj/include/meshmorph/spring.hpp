#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "meshmorph/error.hpp"
#include "meshmorph/mesh.hpp"
#include "meshmorph/quality.hpp"
#include "meshmorph/sparse.hpp"
#include "meshmorph/stiffening.hpp"

namespace meshmorph {

enum class Diagonal { d13, d24 };

enum class DiagonalStrategy { diag13, diag24, both, selective };

inline const char* to_string(DiagonalStrategy s) {
    switch (s) {
    case DiagonalStrategy::diag13: return "diag13";
    case DiagonalStrategy::diag24: return "diag24";
    case DiagonalStrategy::both: return "both";
    case DiagonalStrategy::selective: return "selective";
    }
    return "unknown";
}

inline DiagonalStrategy parse_strategy(std::string_view name) {
    if (name == "diag13") return DiagonalStrategy::diag13;
    if (name == "diag24") return DiagonalStrategy::diag24;
    if (name == "both") return DiagonalStrategy::both;
    if (name == "selective") return DiagonalStrategy::selective;
    throw ConfigError("unknown diagonal strategy '" + std::string(name) + "'");
}

struct SpringConfig {
    int n_steps = 30;
    DiagonalStrategy strategy = DiagonalStrategy::selective;
    std::vector<double> layer_factors;
    double geometric_scale = 1.0;
    double torsional_scale = 1.0;
    /// Fraction of the motion used by the two selective-diagonal trial solves.
    double trial_fraction = 0.2;

    void validate() const {
        if (n_steps < 1) throw ConfigError("spring: n_steps must be >= 1");
        if (!(geometric_scale > 0.0)) throw ConfigError("spring: gsc must be > 0");
        if (!(torsional_scale > 0.0)) throw ConfigError("spring: tsc must be > 0");
        if (!(trial_fraction > 0.0 && trial_fraction <= 1.0))
            throw ConfigError("spring: trial_fraction must lie in (0, 1]");
        for (double f : layer_factors)
            if (!(f > 0.0)) throw ConfigError("spring: layer factors must be > 0");
    }
};

struct Triangulation {
    std::vector<Tri> tris;
    std::vector<int> parent_quad;
    DiagonalStrategy strategy = DiagonalStrategy::diag13;
    /// Chosen diagonal per quad; only filled for the selective strategy.
    std::vector<Diagonal> per_quad_choice;
};

namespace detail {

inline void split_quad(const Quad& q, Diagonal d, std::vector<Tri>& out) {
    if (d == Diagonal::d13) {
        out.push_back({q[0], q[1], q[2]});
        out.push_back({q[0], q[2], q[3]});
    } else {
        out.push_back({q[0], q[1], q[3]});
        out.push_back({q[1], q[2], q[3]});
    }
}

}  // namespace detail

/// Splits every quad into counterclockwise triangles. Local node 1 is the
/// bottom-left corner, so Diag13 joins bottom-left to top-right.
inline Triangulation triangulate(const QuadMesh& mesh, DiagonalStrategy strategy,
                                 std::span<const Diagonal> per_quad_choice = {}) {
    Triangulation t;
    t.strategy = strategy;
    if (strategy == DiagonalStrategy::selective) {
        if (per_quad_choice.size() != mesh.element_count())
            throw ConfigError("triangulate: selective strategy needs a diagonal per quad "
                              "(run select_diagonals first)");
        t.per_quad_choice.assign(per_quad_choice.begin(), per_quad_choice.end());
    }
    t.tris.reserve(4 * mesh.element_count());
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Quad& q = mesh.quads[e];
        const std::size_t before = t.tris.size();
        switch (strategy) {
        case DiagonalStrategy::diag13: detail::split_quad(q, Diagonal::d13, t.tris); break;
        case DiagonalStrategy::diag24: detail::split_quad(q, Diagonal::d24, t.tris); break;
        case DiagonalStrategy::both:
            detail::split_quad(q, Diagonal::d13, t.tris);
            detail::split_quad(q, Diagonal::d24, t.tris);
            break;
        case DiagonalStrategy::selective: detail::split_quad(q, t.per_quad_choice[e], t.tris); break;
        }
        t.parent_quad.insert(t.parent_quad.end(), t.tris.size() - before, static_cast<int>(e));
    }
    return t;
}

/// Truss stiffness of an edge spring with unit EA: (1/L) [c c, c s; ...].
inline Eigen::Matrix4d lineal_stiffness(const Vec2& a, const Vec2& b) {
    const Vec2 d = b - a;
    const double length = norm(d);
    if (!(length > 0.0)) throw DegenerateElementError("lineal spring with zero length");
    const double c = d.x / length;
    const double s = d.y / length;
    Eigen::Matrix4d k;
    k << c * c, c * s, -c * c, -c * s,
         c * s, s * s, -c * s, -s * s,
         -c * c, -c * s, c * c, c * s,
         -c * s, -s * s, c * s, s * s;
    return k / length;
}

/// Vertex torsional coefficients C_i = L_ij^2 L_ik^2 / (4 A^2) for the triangle (i, j, k).
inline Eigen::Vector3d torsional_coefficients(const Vec2& pi, const Vec2& pj, const Vec2& pk) {
    const double area = triangle_signed_area(pi, pj, pk);
    if (area == 0.0) throw DegenerateElementError("torsional spring on a zero-area triangle");
    const double a2 = 4.0 * area * area;
    const double lij = squared_norm(pj - pi);
    const double ljk = squared_norm(pk - pj);
    const double lki = squared_norm(pi - pk);
    return {lij * lki / a2, lij * ljk / a2, ljk * lki / a2};
}

/// 3x6 map from vertex displacements to linearized vertex-angle changes.
inline Eigen::Matrix<double, 3, 6> torsional_rotation_matrix(const Vec2& pi, const Vec2& pj,
                                                             const Vec2& pk) {
    // a_mn = x_mn / L_mn^2, b_mn = y_mn / L_mn^2 with x_mn = x_n - x_m.
    auto ab = [](const Vec2& from, const Vec2& to) {
        const Vec2 d = to - from;
        const double l2 = squared_norm(d);
        if (!(l2 > 0.0)) throw DegenerateElementError("torsional spring with a zero-length edge");
        return Vec2{d.x / l2, d.y / l2};
    };
    const Vec2 ij = ab(pi, pj), ik = ab(pi, pk);
    const Vec2 ji = ab(pj, pi), jk = ab(pj, pk);
    const Vec2 ki = ab(pk, pi), kj = ab(pk, pj);
    Eigen::Matrix<double, 3, 6> r;
    r << ik.y - ij.y, ij.x - ik.x, ij.y, -ij.x, -ik.y, ik.x,
         -ji.y, ji.x, ji.y - jk.y, jk.x - ji.x, jk.y, -jk.x,
         ki.y, -ki.x, -kj.y, kj.x, kj.y - ki.y, ki.x - kj.x;
    return r;
}

/// R^T C R for one triangle; `tsc` scales C.
inline Eigen::Matrix<double, 6, 6> torsional_stiffness(const Vec2& pi, const Vec2& pj,
                                                       const Vec2& pk, double tsc = 1.0) {
    const Eigen::Matrix<double, 3, 6> r = torsional_rotation_matrix(pi, pj, pk);
    const Eigen::Vector3d c = torsional_coefficients(pi, pj, pk) * tsc;
    return r.transpose() * c.asDiagonal() * r;
}

/// Lineal and torsional springs with per-spring stiffness multipliers.
struct SpringNetwork {
    struct Edge {
        std::array<int, 2> nodes;
        double multiplier;
    };
    struct Triangle {
        Tri nodes;
        double multiplier;
    };
    std::vector<Edge> edges;
    std::vector<Triangle> triangles;
};

/// Each quad contributes springs on its four sides, on its diagonal(s), and a
/// torsional block per sub-triangle, all scaled by the quad's multiplier.
inline SpringNetwork spring_network(const QuadMesh& mesh, const Triangulation& tri,
                                    std::span<const double> multipliers) {
    if (multipliers.size() != mesh.element_count())
        throw ConfigError("spring_network: one multiplier per quad required");
    SpringNetwork net;
    std::vector<std::vector<int>> tris_of_quad(mesh.element_count());
    for (std::size_t t = 0; t < tri.tris.size(); ++t) tris_of_quad[tri.parent_quad[t]].push_back(t);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Quad& q = mesh.quads[e];
        const double m = multipliers[e];
        for (int k = 0; k < 4; ++k) net.edges.push_back({{q[k], q[(k + 1) % 4]}, m});
        bool has13 = false, has24 = false;
        for (int t : tris_of_quad[e]) {
            const Tri& tr = tri.tris[t];
            net.triangles.push_back({tr, m});
            for (int a = 0; a < 3; ++a) {
                const int u = tr[a], v = tr[(a + 1) % 3];
                if ((u == q[0] && v == q[2]) || (u == q[2] && v == q[0])) has13 = true;
                if ((u == q[1] && v == q[3]) || (u == q[3] && v == q[1])) has24 = true;
            }
        }
        if (has13) net.edges.push_back({{q[0], q[2]}, m});
        if (has24) net.edges.push_back({{q[1], q[3]}, m});
    }
    return net;
}

/// Each triangle is its own element: three edge springs plus one torsional block.
inline SpringNetwork spring_network(const TriMesh& mesh) {
    SpringNetwork net;
    for (const Tri& t : mesh.tris) {
        for (int k = 0; k < 3; ++k) net.edges.push_back({{t[k], t[(k + 1) % 3]}, 1.0});
        net.triangles.push_back({t, 1.0});
    }
    return net;
}

inline std::array<int, 4> edge_dofs(const SpringNetwork::Edge& edge) {
    const int a = edge.nodes[0], b = edge.nodes[1];
    return {2 * a, 2 * a + 1, 2 * b, 2 * b + 1};
}

inline std::array<int, 6> triangle_dofs(const Tri& t) {
    return {2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1};
}

/// Pattern with the edges first, then the triangles.
inline PatternAssembler spring_pattern(int node_count, const SpringNetwork& net) {
    std::vector<std::vector<int>> dofs;
    dofs.reserve(net.edges.size() + net.triangles.size());
    for (const auto& edge : net.edges) {
        const auto d = edge_dofs(edge);
        dofs.emplace_back(d.begin(), d.end());
    }
    for (const auto& tri : net.triangles) {
        const auto d = triangle_dofs(tri.nodes);
        dofs.emplace_back(d.begin(), d.end());
    }
    return PatternAssembler(2 * node_count, dofs);
}

inline void assemble_spring_stiffness(std::span<const Vec2> nodes, const SpringNetwork& net,
                                      double tsc, PatternAssembler& assembler) {
    assembler.clear();
    std::size_t e = 0;
    for (const auto& edge : net.edges) {
        const Eigen::Matrix4d k = lineal_stiffness(nodes[edge.nodes[0]], nodes[edge.nodes[1]]) * edge.multiplier;
        assembler.add(e++, k);
    }
    for (const auto& tri : net.triangles) {
        const auto& t = tri.nodes;
        const Eigen::Matrix<double, 6, 6> k =
            torsional_stiffness(nodes[t[0]], nodes[t[1]], nodes[t[2]], tsc) * tri.multiplier;
        assembler.add(e++, k);
    }
}

inline SparseSymmetric assemble_spring_stiffness(std::span<const Vec2> nodes,
                                                 const SpringNetwork& net, double tsc) {
    PatternAssembler assembler = spring_pattern(static_cast<int>(nodes.size()), net);
    assemble_spring_stiffness(nodes, net, tsc, assembler);
    return assembler.matrix();
}

/// Incremental spring-analogy solve: the prescribed displacements are applied in
/// `n_steps` equal parts, each solved with stiffness re-evaluated on the current
/// geometry. Returns the final node positions.
inline std::vector<Vec2> solve_spring_network(std::vector<Vec2> nodes, const SpringNetwork& net,
                                              std::span<const DirichletValue> prescribed,
                                              int n_steps, double tsc) {
    if (n_steps < 1) throw ConfigError("spring: n_steps must be >= 1");
    const int ndof = static_cast<int>(2 * nodes.size());
    std::vector<Constraint> increments;
    increments.reserve(prescribed.size());
    for (const auto& p : prescribed) increments.push_back({p.dof, p.value / n_steps});
    PatternAssembler assembler = spring_pattern(static_cast<int>(nodes.size()), net);
    ConstrainedSolver solver(ndof, increments);
    for (int step = 0; step < n_steps; ++step) {
        Vector dx;
        try {
            assemble_spring_stiffness(nodes, net, tsc, assembler);
            dx = solver.solve(assembler.matrix(), Vector::Zero(ndof), increments);
        } catch (const Error& err) {
            throw SolverError("spring analogy step " + std::to_string(step) + ": " + err.what(),
                              step);
        }
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            nodes[i].x += dx[2 * i];
            nodes[i].y += dx[2 * i + 1];
        }
    }
    return nodes;
}

namespace detail {

inline std::vector<Vec2> scaled(std::span<const Vec2> nodes, double s) {
    std::vector<Vec2> out(nodes.begin(), nodes.end());
    for (auto& p : out) p *= s;
    return out;
}

inline std::vector<DirichletValue> scaled(std::vector<DirichletValue> values, double s) {
    for (auto& v : values) v.value *= s;
    return values;
}

/// Runs the network solve in GSC-scaled coordinates and maps back.
inline std::vector<Vec2> solve_scaled(std::span<const Vec2> nodes, const SpringNetwork& net,
                                      const std::vector<DirichletValue>& prescribed, int n_steps,
                                      const SpringConfig& config) {
    const double g = config.geometric_scale;
    auto out = solve_spring_network(scaled(nodes, g), net, scaled(prescribed, g), n_steps,
                                    config.torsional_scale);
    if (g != 1.0) {
        for (auto& p : out) p *= 1.0 / g;
    }
    return out;
}

}  // namespace detail

/// Selective diagonals: one trial step with each uniform diagonal, using
/// `trial_fraction` of the motion, then per quad the diagonal whose trial gave
/// the higher quad skewness. Ties go to Diag13.
inline std::vector<Diagonal> select_diagonals(const QuadMesh& mesh, const PrescribedMotion& motion,
                                              const SpringConfig& config) {
    config.validate();
    const auto multipliers = layer_multipliers(mesh, config.layer_factors);
    const auto prescribed = dirichlet_values(mesh, motion, config.trial_fraction);
    std::array<std::vector<double>, 2> skew;
    const std::array<DiagonalStrategy, 2> trials{DiagonalStrategy::diag13, DiagonalStrategy::diag24};
    for (int t = 0; t < 2; ++t) {
        const auto net = spring_network(mesh, triangulate(mesh, trials[t]), multipliers);
        QuadMesh trial = mesh;
        trial.nodes = detail::solve_scaled(mesh.nodes, net, prescribed, 1, config);
        skew[t].resize(mesh.element_count());
        for (std::size_t e = 0; e < mesh.element_count(); ++e)
            skew[t][e] = element_skewness(trial.corners(e));
    }
    std::vector<Diagonal> choice(mesh.element_count(), Diagonal::d13);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        if (skew[1][e] > skew[0][e]) choice[e] = Diagonal::d24;
    }
    return choice;
}

struct SpringResult {
    QuadMesh mesh;
    Triangulation triangulation;
};

/// Spring-analogy mesh motion (lineal + torsional springs on the triangulated quads).
inline SpringResult deform_spring_detailed(const QuadMesh& mesh, const PrescribedMotion& motion,
                                           const SpringConfig& config) {
    config.validate();
    const auto multipliers = layer_multipliers(mesh, config.layer_factors);
    Triangulation tri = config.strategy == DiagonalStrategy::selective
                            ? triangulate(mesh, config.strategy, select_diagonals(mesh, motion, config))
                            : triangulate(mesh, config.strategy);
    const auto net = spring_network(mesh, tri, multipliers);
    SpringResult result{mesh, std::move(tri)};
    result.mesh.nodes = detail::solve_scaled(mesh.nodes, net, dirichlet_values(mesh, motion),
                                             config.n_steps, config);
    return result;
}

inline QuadMesh deform_spring(const QuadMesh& mesh, const PrescribedMotion& motion,
                              const SpringConfig& config) {
    return deform_spring_detailed(mesh, motion, config).mesh;
}

/// Spring-analogy solve on a plain triangle mesh (fixed and prescribed nodes
/// taken from the mesh). Stiffening factors do not apply here.
inline TriMesh deform_spring(const TriMesh& mesh, const SpringConfig& config) {
    config.validate();
    std::map<int, Vec2> values;
    for (int n : mesh.fixed_nodes) values[n] = Vec2{};
    for (std::size_t i = 0; i < mesh.prescribed_nodes.size(); ++i)
        values[mesh.prescribed_nodes[i]] = mesh.prescribed_displacements.at(i);
    std::vector<DirichletValue> prescribed;
    for (const auto& [n, d] : values) {
        prescribed.push_back({2 * n, d.x});
        prescribed.push_back({2 * n + 1, d.y});
    }
    TriMesh out = mesh;
    out.nodes = detail::solve_scaled(mesh.nodes, spring_network(mesh), prescribed, config.n_steps,
                                     config);
    return out;
}

/// Triangles with non-positive signed area (counterclockwise reference order).
inline std::vector<int> inverted_triangles(std::span<const Vec2> nodes, std::span<const Tri> tris) {
    std::vector<int> out;
    for (std::size_t t = 0; t < tris.size(); ++t) {
        const Tri& tr = tris[t];
        if (triangle_signed_area(nodes[tr[0]], nodes[tr[1]], nodes[tr[2]]) <= 0.0)
            out.push_back(static_cast<int>(t));
    }
    return out;
}

}  // namespace meshmorph
