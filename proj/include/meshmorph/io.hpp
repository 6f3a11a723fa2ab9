#pragma once

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "meshmorph/error.hpp"
#include "meshmorph/mesh.hpp"
#include "meshmorph/quality.hpp"

namespace meshmorph {

/// Per-element fields written as VTK CELL_DATA and metrics CSV columns.
struct ElementFields {
    std::vector<double> skewness;
    std::vector<double> area_ratio;
    std::vector<int> layer_index;  // 0 = outside every stiffened layer
};

inline ElementFields element_fields(const QualityReport& q, std::vector<int> layer_index) {
    return {q.per_element_skewness, q.per_element_area_ratio, std::move(layer_index)};
}

namespace detail {

inline void check_fields(const QuadMesh& mesh, const ElementFields& f) {
    const auto n = mesh.element_count();
    if (f.skewness.size() != n || f.area_ratio.size() != n || f.layer_index.size() != n)
        throw MeshError("element field count does not match the mesh element count");
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os << std::setprecision(17);
    return os;
}

}  // namespace detail

/// Legacy ASCII VTK unstructured grid with VTK_QUAD cells.
inline void write_vtk(const std::string& path, const QuadMesh& mesh, const ElementFields& fields,
                      const std::string& title = "meshmorph") {
    detail::check_fields(mesh, fields);
    auto os = detail::open_out(path);
    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.node_count() << " double\n";
    for (const auto& p : mesh.nodes) os << p.x << ' ' << p.y << " 0\n";
    const auto ne = mesh.element_count();
    os << "CELLS " << ne << ' ' << 5 * ne << '\n';
    for (const auto& q : mesh.quads) os << "4 " << q[0] << ' ' << q[1] << ' ' << q[2] << ' ' << q[3] << '\n';
    os << "CELL_TYPES " << ne << '\n';
    for (std::size_t e = 0; e < ne; ++e) os << "9\n";
    os << "CELL_DATA " << ne << '\n';
    os << "SCALARS skewness double 1\nLOOKUP_TABLE default\n";
    for (double v : fields.skewness) os << v << '\n';
    os << "SCALARS area_ratio double 1\nLOOKUP_TABLE default\n";
    for (double v : fields.area_ratio) os << v << '\n';
    os << "SCALARS layer_index int 1\nLOOKUP_TABLE default\n";
    for (int v : fields.layer_index) os << v << '\n';
    if (!os) throw Error("error while writing " + path);
}

/// Reads points and quad cells from a legacy ASCII VTK file; data arrays are skipped.
inline QuadMesh read_vtk(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path);
    QuadMesh mesh;
    std::string tok;
    bool have_points = false, have_cells = false;
    while (is >> tok) {
        if (tok == "POINTS") {
            std::size_t n;
            std::string type;
            if (!(is >> n >> type)) throw MeshError(path + ": malformed POINTS header");
            mesh.nodes.resize(n);
            for (auto& p : mesh.nodes) {
                double z;
                if (!(is >> p.x >> p.y >> z)) throw MeshError(path + ": truncated POINTS block");
            }
            have_points = true;
        } else if (tok == "CELLS") {
            std::size_t n, total;
            if (!(is >> n >> total)) throw MeshError(path + ": malformed CELLS header");
            mesh.quads.resize(n);
            for (auto& q : mesh.quads) {
                int count;
                if (!(is >> count) || count != 4) throw MeshError(path + ": only quad cells are supported");
                if (!(is >> q[0] >> q[1] >> q[2] >> q[3])) throw MeshError(path + ": truncated CELLS block");
            }
            have_cells = true;
        } else if (tok == "CELL_TYPES") {
            std::size_t n;
            is >> n;
            for (std::size_t i = 0; i < n; ++i) {
                int type;
                if (!(is >> type) || type != 9) throw MeshError(path + ": only VTK_QUAD cells are supported");
            }
        } else if (tok == "CELL_DATA" || tok == "POINT_DATA") {
            break;
        }
    }
    if (!have_points || !have_cells) throw MeshError(path + ": missing POINTS or CELLS");
    for (const auto& q : mesh.quads)
        for (int v : q)
            if (v < 0 || v >= static_cast<int>(mesh.node_count()))
                throw MeshError(path + ": cell references invalid point " + std::to_string(v));
    return mesh;
}

inline void write_element_csv(const std::string& path, const ElementFields& fields) {
    const auto n = fields.skewness.size();
    if (fields.area_ratio.size() != n || fields.layer_index.size() != n)
        throw MeshError("element field count mismatch");
    auto os = detail::open_out(path);
    os << "element_id,skewness,area_ratio,layer_index\n";
    for (std::size_t e = 0; e < n; ++e)
        os << e << ',' << fields.skewness[e] << ',' << fields.area_ratio[e] << ',' << fields.layer_index[e]
           << '\n';
}

/// Shortest round-trip decimal representation for CSV cells.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace meshmorph
