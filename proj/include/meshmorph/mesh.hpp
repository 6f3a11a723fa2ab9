#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "meshmorph/error.hpp"
#include "meshmorph/geometry.hpp"

namespace meshmorph {

/// Corner node ids, counterclockwise from the bottom-left corner.
using Quad = std::array<int, 4>;
using Tri = std::array<int, 3>;

/// Structured quadrilateral mesh of the fluid domain.
///
/// `boundary_sets` hold the named outer boundaries (walls, inlet, outlet) that are
/// held fixed by every deformation model. `interface_nodes` is the ordered
/// fluid-structure interface on which the structural motion is prescribed.
struct QuadMesh {
    std::vector<Vec2> nodes;
    std::vector<Quad> quads;
    std::map<std::string, std::vector<int>> boundary_sets;
    std::vector<int> interface_nodes;

    std::size_t node_count() const noexcept { return nodes.size(); }
    std::size_t element_count() const noexcept { return quads.size(); }
    std::size_t dof_count() const noexcept { return 2 * nodes.size(); }

    std::array<Vec2, 4> corners(std::size_t element) const {
        const Quad& q = quads[element];
        return {nodes[q[0]], nodes[q[1]], nodes[q[2]], nodes[q[3]]};
    }

    /// Sorted union of all named boundary sets.
    std::vector<int> boundary_nodes() const {
        std::set<int> all;
        for (const auto& [name, ids] : boundary_sets) all.insert(ids.begin(), ids.end());
        return {all.begin(), all.end()};
    }

    /// Same connectivity, nodes displaced by `displacement` (node-major, x then y).
    template <class Vector>
    QuadMesh displaced(const Vector& displacement) const {
        QuadMesh out = *this;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            out.nodes[i].x += displacement[2 * i];
            out.nodes[i].y += displacement[2 * i + 1];
        }
        return out;
    }
};

/// Triangle mesh used by the spring-analogy scaling study.
struct TriMesh {
    std::vector<Vec2> nodes;
    std::vector<Tri> tris;
    std::vector<int> fixed_nodes;
    std::vector<int> prescribed_nodes;
    std::vector<Vec2> prescribed_displacements;
};

/// Nodes lying on mesh edges that belong to exactly one quad (outer walls and
/// hole boundaries alike), sorted.
inline std::vector<int> topological_boundary_nodes(const QuadMesh& mesh) {
    std::map<std::pair<int, int>, int> edge_use;
    for (const Quad& q : mesh.quads) {
        for (int k = 0; k < 4; ++k) {
            int a = q[k], b = q[(k + 1) % 4];
            if (a > b) std::swap(a, b);
            ++edge_use[{a, b}];
        }
    }
    std::set<int> out;
    for (const auto& [edge, count] : edge_use) {
        if (count == 1) {
            out.insert(edge.first);
            out.insert(edge.second);
        }
    }
    return {out.begin(), out.end()};
}

/// Checks connectivity, interface and (when `reference` is true) positive
/// element areas with strictly convex corners. Throws MeshError.
inline void validate(const QuadMesh& mesh, bool reference = true) {
    const int n = static_cast<int>(mesh.node_count());
    for (std::size_t e = 0; e < mesh.quads.size(); ++e) {
        const Quad& q = mesh.quads[e];
        for (int k = 0; k < 4; ++k) {
            if (q[k] < 0 || q[k] >= n)
                throw MeshError("element " + std::to_string(e) + " references invalid node " +
                                std::to_string(q[k]));
            for (int l = k + 1; l < 4; ++l) {
                if (q[k] == q[l])
                    throw MeshError("element " + std::to_string(e) + " repeats node " +
                                    std::to_string(q[k]));
            }
        }
        if (!reference) continue;
        const auto c = mesh.corners(e);
        if (signed_area(c) <= 0.0)
            throw MeshError("reference element " + std::to_string(e) + " has non-positive area");
        for (int k = 0; k < 4; ++k) {
            const Vec2 next = c[(k + 1) % 4] - c[k];
            const Vec2 prev = c[(k + 3) % 4] - c[k];
            if (cross(next, prev) <= 0.0)
                throw MeshError("reference element " + std::to_string(e) +
                                " has a non-convex corner");
        }
    }
    for (const auto& [name, ids] : mesh.boundary_sets) {
        for (int id : ids) {
            if (id < 0 || id >= n)
                throw MeshError("boundary set '" + name + "' references invalid node");
        }
    }
    const auto boundary = topological_boundary_nodes(mesh);
    for (int id : mesh.interface_nodes) {
        if (!std::binary_search(boundary.begin(), boundary.end(), id))
            throw MeshError("interface node " + std::to_string(id) + " is not on a mesh boundary");
    }
}

/// Prescribed structural displacement on (a subset of) the interface.
struct PrescribedMotion {
    enum class Mode { translation, rotation, bending, from_file };

    std::vector<int> node_indices;
    std::vector<Vec2> displacements;
    Mode mode = Mode::translation;

    std::size_t size() const noexcept { return node_indices.size(); }
};

inline const char* to_string(PrescribedMotion::Mode mode) {
    switch (mode) {
    case PrescribedMotion::Mode::translation: return "translation";
    case PrescribedMotion::Mode::rotation: return "rotation";
    case PrescribedMotion::Mode::bending: return "bending";
    case PrescribedMotion::Mode::from_file: return "from_file";
    }
    return "unknown";
}

struct DirichletValue {
    int dof;
    double value;
};

/// Dirichlet data for one deformation solve: motion nodes take `scale` times
/// their prescribed displacement, every other boundary-set or interface node is
/// held at zero.
/// Interface values win where a node is both. Sorted by dof.
inline std::vector<DirichletValue> dirichlet_values(const QuadMesh& mesh,
                                                    const PrescribedMotion& motion,
                                                    double scale = 1.0) {
    if (motion.node_indices.size() != motion.displacements.size())
        throw ConfigError("prescribed motion has mismatched node and displacement counts");
    std::map<int, Vec2> values;
    for (int node : mesh.boundary_nodes()) values[node] = Vec2{};
    for (int node : mesh.interface_nodes) values[node] = Vec2{};
    for (std::size_t i = 0; i < motion.size(); ++i) {
        const int node = motion.node_indices[i];
        if (node < 0 || node >= static_cast<int>(mesh.node_count()))
            throw ConfigError("prescribed motion references invalid node " + std::to_string(node));
        values[node] = motion.displacements[i] * scale;
    }
    std::vector<DirichletValue> out;
    out.reserve(2 * values.size());
    for (const auto& [node, d] : values) {
        out.push_back({2 * node, d.x});
        out.push_back({2 * node + 1, d.y});
    }
    return out;
}

}  // namespace meshmorph
