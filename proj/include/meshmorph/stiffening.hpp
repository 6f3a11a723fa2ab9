#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "meshmorph/error.hpp"
#include "meshmorph/mesh.hpp"

namespace meshmorph {

/// Layer index per element: 1 touches the interface, 2 touches layer 1, ...
/// 0 means the element is outside the requested layers.
struct LayerAssignment {
    std::vector<int> layer_of_element;

    int max_layer() const {
        int m = 0;
        for (int l : layer_of_element) m = std::max(m, l);
        return m;
    }

    std::vector<int> elements_up_to(int layer) const {
        std::vector<int> out;
        for (std::size_t e = 0; e < layer_of_element.size(); ++e) {
            if (layer_of_element[e] >= 1 && layer_of_element[e] <= layer)
                out.push_back(static_cast<int>(e));
        }
        return out;
    }
};

/// Sorts elements into consecutive node-sharing layers around `interface_set`.
/// Layers may merge where the interface touches the outer boundary.
inline LayerAssignment identify_layers(const QuadMesh& mesh, std::span<const int> interface_set,
                                       int n_layers) {
    if (n_layers < 0) throw ConfigError("identify_layers: n_layers must be >= 0");
    if (interface_set.empty()) throw ConfigError("identify_layers: empty interface set");
    LayerAssignment out;
    out.layer_of_element.assign(mesh.element_count(), 0);
    if (n_layers == 0) return out;

    std::vector<char> front(mesh.node_count(), 0);
    for (int n : interface_set) {
        if (n < 0 || n >= static_cast<int>(mesh.node_count()))
            throw MeshError("identify_layers: interface references invalid node");
        front[n] = 1;
    }
    for (int layer = 1; layer <= n_layers; ++layer) {
        std::vector<int> members;
        for (std::size_t e = 0; e < mesh.element_count(); ++e) {
            if (out.layer_of_element[e] != 0) continue;
            for (int n : mesh.quads[e]) {
                if (front[n]) {
                    members.push_back(static_cast<int>(e));
                    break;
                }
            }
        }
        if (members.empty()) break;
        std::fill(front.begin(), front.end(), 0);
        for (int e : members) {
            out.layer_of_element[e] = layer;
            for (int n : mesh.quads[e]) front[n] = 1;
        }
    }
    return out;
}

inline LayerAssignment identify_layers(const QuadMesh& mesh, int n_layers) {
    return identify_layers(mesh, mesh.interface_nodes, n_layers);
}

/// Per-element stiffness multiplier: factors[k-1] for layer k, 1.0 when unlayered.
inline std::vector<double> apply_stiffening(const LayerAssignment& layers,
                                            std::span<const double> factors) {
    for (double f : factors) {
        if (!(f > 0.0)) throw ConfigError("stiffening factor must be > 0, got " + std::to_string(f));
    }
    if (static_cast<std::size_t>(layers.max_layer()) > factors.size())
        throw ConfigError("apply_stiffening: fewer factors than layers");
    std::vector<double> out(layers.layer_of_element.size(), 1.0);
    for (std::size_t e = 0; e < out.size(); ++e) {
        const int l = layers.layer_of_element[e];
        if (l > 0) out[e] = factors[l - 1];
    }
    return out;
}

/// identify_layers followed by apply_stiffening with one layer per factor.
inline std::vector<double> layer_multipliers(const QuadMesh& mesh, std::span<const double> factors) {
    if (factors.empty()) return std::vector<double>(mesh.element_count(), 1.0);
    return apply_stiffening(identify_layers(mesh, static_cast<int>(factors.size())), factors);
}

}  // namespace meshmorph
