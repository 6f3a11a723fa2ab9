#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "meshmorph/error.hpp"
#include "meshmorph/geometry.hpp"
#include "meshmorph/mesh.hpp"

namespace meshmorph {

/// Axis-aligned rectangle.
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double width() const noexcept { return x1 - x0; }
    double height() const noexcept { return y1 - y0; }
    Vec2 center() const noexcept { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
};

enum class ProblemKind { beam, foil, patch };

inline const char* to_string(ProblemKind k) {
    switch (k) {
    case ProblemKind::beam: return "beam";
    case ProblemKind::foil: return "foil";
    case ProblemKind::patch: return "patch";
    }
    return "unknown";
}

inline ProblemKind parse_problem_kind(std::string_view s) {
    if (s == "beam") return ProblemKind::beam;
    if (s == "foil") return ProblemKind::foil;
    if (s == "patch") return ProblemKind::patch;
    throw ConfigError("unknown problem type '" + std::string(s) + "'");
}

/// Geometry of the benchmark channels. Lengths in meters; `resolution` is the
/// number of cells per meter and every length must be a whole number of cells.
struct ProblemSpec {
    double channel_length = 3.0;
    double channel_height = 1.0;
    double resolution = 20.0;

    // Cantilever standing on the bottom wall.
    double beam_center_x = 1.0;
    double beam_height = 0.6;
    double beam_thickness = 0.2;
    // Hollow in the beam base (solid side, not meshed): width centered on the
    // beam axis, spanning [hollow_bottom, hollow_top].
    double hollow_width = 0.1;
    double hollow_bottom = 0.05;
    double hollow_top = 0.35;

    // Free foil; default_spec() centers it in a 2.4 x 1.6 channel.
    double foil_center_x = 1.5;
    double foil_center_y = 0.5;
    double foil_length = 1.0;
    double foil_thickness = 0.2;

    // Unit-square patch with cells_per_side^2 cells (sensitivity checks).
    int patch_cells = 3;
};

/// A generated test problem: mesh plus the structure it surrounds.
struct Problem {
    ProblemKind kind = ProblemKind::foil;
    QuadMesh mesh;
    Rect structure;
    ProblemSpec spec;
};

namespace detail {

inline int cell_count(double length, double resolution, const char* what) {
    const double n = length * resolution;
    const double rounded = std::round(n);
    if (!(length > 0.0)) throw ConfigError(std::string(what) + " must be > 0");
    if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n) || rounded < 1.0)
        throw ConfigError(std::string(what) + " is not a whole number of cells at this resolution");
    return static_cast<int>(rounded);
}

/// Structured grid over [0, length] x [0, height] minus the cells inside `hole`.
/// The hole is given in cell indices [i0, i1) x [j0, j1). Coordinates are laid
/// out symmetrically about the channel mid-lines so mirrored nodes are exact.
inline QuadMesh grid_with_hole(double length, double height, int nx, int ny, int i0, int i1, int j0,
                               int j1) {
    const double hx = length / nx;
    const double hy = height / ny;
    auto x_of = [&](int i) { return 0.5 * length + (i - 0.5 * nx) * hx; };
    auto y_of = [&](int j) { return 0.5 * height + (j - 0.5 * ny) * hy; };
    auto in_hole = [&](int i, int j) { return i >= i0 && i < i1 && j >= j0 && j < j1; };

    std::vector<int> id((nx + 1) * (ny + 1), -1);
    auto lattice = [&](int i, int j) -> int& { return id[j * (nx + 1) + i]; };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            if (in_hole(i, j)) continue;
            lattice(i, j) = lattice(i + 1, j) = lattice(i + 1, j + 1) = lattice(i, j + 1) = 0;
        }
    }
    QuadMesh mesh;
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            if (lattice(i, j) < 0) continue;
            lattice(i, j) = static_cast<int>(mesh.nodes.size());
            mesh.nodes.push_back({x_of(i), y_of(j)});
        }
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            if (in_hole(i, j)) continue;
            mesh.quads.push_back({lattice(i, j), lattice(i + 1, j), lattice(i + 1, j + 1),
                                  lattice(i, j + 1)});
        }
    }
    auto& inlet = mesh.boundary_sets["inlet"];
    auto& outlet = mesh.boundary_sets["outlet"];
    auto& bottom = mesh.boundary_sets["bottom"];
    auto& top = mesh.boundary_sets["top"];
    for (int j = 0; j <= ny; ++j) {
        inlet.push_back(lattice(0, j));
        outlet.push_back(lattice(nx, j));
    }
    for (int i = 0; i <= nx; ++i) {
        if (lattice(i, 0) >= 0) bottom.push_back(lattice(i, 0));
        top.push_back(lattice(i, ny));
    }
    // Hole boundary, counterclockwise around the hole starting at its bottom-left
    // corner. Portions lying on the channel wall are skipped, which turns the
    // loop into an open polyline for a wall-mounted obstacle.
    std::vector<int> loop;
    auto push = [&](int i, int j) {
        const int n = lattice(i, j);
        if (n < 0) return;
        if (j == 0 && (i > i0 && i < i1)) return;
        if (loop.empty() || loop.back() != n) loop.push_back(n);
    };
    if (j0 == 0) {
        // Wall-mounted: left foot, up, across the top, down to the right foot.
        for (int j = 0; j <= j1; ++j) push(i0, j);
        for (int i = i0 + 1; i <= i1; ++i) push(i, j1);
        for (int j = j1 - 1; j >= 0; --j) push(i1, j);
    } else {
        for (int i = i0; i <= i1; ++i) push(i, j0);
        for (int j = j0 + 1; j <= j1; ++j) push(i1, j);
        for (int i = i1 - 1; i >= i0; --i) push(i, j1);
        for (int j = j1 - 1; j > j0; --j) push(i0, j);
    }
    mesh.interface_nodes = std::move(loop);
    return mesh;
}

inline Rect bounding_box(const std::vector<Vec2>& nodes, const std::vector<int>& ids) {
    Rect r{1e300, 1e300, -1e300, -1e300};
    for (int n : ids) {
        r.x0 = std::min(r.x0, nodes[n].x);
        r.x1 = std::max(r.x1, nodes[n].x);
        r.y0 = std::min(r.y0, nodes[n].y);
        r.y1 = std::max(r.y1, nodes[n].y);
    }
    return r;
}

}  // namespace detail

/// Channel with a wall-mounted cantilever perpendicular to the flow.
inline Problem build_beam_in_channel(const ProblemSpec& spec) {
    const double r = spec.resolution;
    if (!(r > 0.0)) throw ConfigError("resolution must be > 0");
    const int nx = detail::cell_count(spec.channel_length, r, "channel_length");
    const int ny = detail::cell_count(spec.channel_height, r, "channel_height");
    const int nt = detail::cell_count(spec.beam_thickness, r, "beam_thickness");
    const int nh = detail::cell_count(spec.beam_height, r, "beam_height");
    const double left = spec.beam_center_x - 0.5 * spec.beam_thickness;
    const int i0 = detail::cell_count(left, r, "beam left edge");
    if (i0 < 1 || i0 + nt > nx - 1) throw ConfigError("beam does not fit inside the channel");
    if (nh > ny - 1) throw ConfigError("beam is taller than the channel allows");
    if (!(spec.hollow_width >= 0.0 && spec.hollow_width < spec.beam_thickness &&
          spec.hollow_bottom > 0.0 && spec.hollow_top > spec.hollow_bottom &&
          spec.hollow_top < spec.beam_height))
        throw ConfigError("hollow does not fit inside the beam base");

    Problem p;
    p.kind = ProblemKind::beam;
    p.spec = spec;
    p.mesh = detail::grid_with_hole(spec.channel_length, spec.channel_height, nx, ny, i0, i0 + nt, 0,
                                    nh);
    p.structure = detail::bounding_box(p.mesh.nodes, p.mesh.interface_nodes);
    return p;
}

/// Channel with a free rectangular foil parallel to the flow.
inline Problem build_foil_in_channel(const ProblemSpec& spec) {
    const double r = spec.resolution;
    if (!(r > 0.0)) throw ConfigError("resolution must be > 0");
    const int nx = detail::cell_count(spec.channel_length, r, "channel_length");
    const int ny = detail::cell_count(spec.channel_height, r, "channel_height");
    const int nl = detail::cell_count(spec.foil_length, r, "foil_length");
    const int nt = detail::cell_count(spec.foil_thickness, r, "foil_thickness");
    const int i0 = detail::cell_count(spec.foil_center_x - 0.5 * spec.foil_length, r, "foil left edge");
    const int j0 =
        detail::cell_count(spec.foil_center_y - 0.5 * spec.foil_thickness, r, "foil bottom edge");
    if (i0 < 1 || i0 + nl > nx - 1 || j0 < 1 || j0 + nt > ny - 1)
        throw ConfigError("foil does not fit inside the channel");

    Problem p;
    p.kind = ProblemKind::foil;
    p.spec = spec;
    p.mesh = detail::grid_with_hole(spec.channel_length, spec.channel_height, nx, ny, i0, i0 + nl, j0,
                                    j0 + nt);
    p.structure = detail::bounding_box(p.mesh.nodes, p.mesh.interface_nodes);
    return p;
}

/// Unit square of `patch_cells`^2 cells. Interface: left edge (bottom to top);
/// fixed: right edge. Top and bottom are free.
inline Problem build_patch(const ProblemSpec& spec) {
    const int n = spec.patch_cells;
    if (n < 1) throw ConfigError("patch_cells must be >= 1");
    Problem p;
    p.kind = ProblemKind::patch;
    p.spec = spec;
    p.mesh = detail::grid_with_hole(1.0, 1.0, n, n, 0, 0, 0, 0);
    p.mesh.interface_nodes = p.mesh.boundary_sets["inlet"];
    const auto outlet = p.mesh.boundary_sets["outlet"];
    p.mesh.boundary_sets.clear();
    p.mesh.boundary_sets["outlet"] = outlet;
    p.structure = {0.0, 0.0, 0.0, 1.0};
    return p;
}

/// Default geometry per problem: the beam sits in a 3 x 1 channel, the foil in
/// a 2.4 x 1.6 channel with the foil at its center.
inline ProblemSpec default_spec(ProblemKind kind) {
    ProblemSpec s;
    if (kind == ProblemKind::foil) {
        s.channel_length = 2.4;
        s.channel_height = 1.6;
        s.foil_center_x = 1.2;
        s.foil_center_y = 0.8;
    }
    return s;
}

inline Problem build_problem(ProblemKind kind, const ProblemSpec& spec) {
    switch (kind) {
    case ProblemKind::beam: return build_beam_in_channel(spec);
    case ProblemKind::foil: return build_foil_in_channel(spec);
    case ProblemKind::patch: return build_patch(spec);
    }
    throw ConfigError("unknown problem kind");
}

/// Motion parameters. Angles in degrees, counterclockwise positive (a clockwise
/// rotation is a negative angle).
struct MotionSpec {
    PrescribedMotion::Mode mode = PrescribedMotion::Mode::translation;
    Vec2 translation{0.0, -0.45};
    double rotation_deg = -30.0;
    double bending_amplitude = 0.25;
    /// Beam tip deflection of the synthetic cantilever profile.
    double tip_deflection = 0.2;
    std::string path;
};

inline PrescribedMotion::Mode parse_motion_mode(std::string_view s) {
    if (s == "translation") return PrescribedMotion::Mode::translation;
    if (s == "rotation") return PrescribedMotion::Mode::rotation;
    if (s == "bending") return PrescribedMotion::Mode::bending;
    if (s == "from_file") return PrescribedMotion::Mode::from_file;
    throw ConfigError("unknown motion mode '" + std::string(s) + "'");
}

/// Reads `node_id, dx, dy` rows (optional header line, '#' comments).
inline std::map<int, Vec2> read_motion_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open motion file " + path);
    std::map<int, Vec2> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        int id;
        Vec2 d;
        if (!(ss >> id >> d.x >> d.y)) {
            if (line_no == 1) continue;  // header
            throw ConfigError("malformed motion row at " + path + ":" + std::to_string(line_no));
        }
        if (!std::isfinite(d.x) || !std::isfinite(d.y))
            throw ConfigError("non-finite displacement at " + path + ":" + std::to_string(line_no));
        if (!rows.emplace(id, d).second)
            throw ConfigError("duplicate node id in motion file: " + std::to_string(id));
    }
    return rows;
}

inline void write_motion_csv(const std::string& path, const PrescribedMotion& motion) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << "node_id,dx,dy\n" << std::setprecision(17);
    for (std::size_t i = 0; i < motion.size(); ++i)
        out << motion.node_indices[i] << ',' << motion.displacements[i].x << ','
            << motion.displacements[i].y << '\n';
    if (!out) throw ConfigError("error writing " + path);
}

/// Interface displacements for one of the prescribed modes.
///
/// translation: constant vector; rotation: rigid rotation of the interface about
/// the structure centroid; bending: parabolic deflection along the structure's
/// x axis, -amplitude at mid-span and zero at both ends, with plane sections
/// rotating through the thickness; from_file: rows read verbatim from `path`.
inline PrescribedMotion prescribe_motion(const Problem& problem, const MotionSpec& spec) {
    const QuadMesh& mesh = problem.mesh;
    PrescribedMotion m;
    m.mode = spec.mode;
    m.node_indices = mesh.interface_nodes;
    m.displacements.resize(m.node_indices.size());
    const Vec2 c = problem.structure.center();
    switch (spec.mode) {
    case PrescribedMotion::Mode::translation:
        for (auto& d : m.displacements) d = spec.translation;
        break;
    case PrescribedMotion::Mode::rotation: {
        const double angle = deg_to_rad(spec.rotation_deg);
        for (std::size_t i = 0; i < m.size(); ++i) {
            const Vec2 r = mesh.nodes[m.node_indices[i]] - c;
            m.displacements[i] = rotate(r, angle) - r;
        }
        break;
    }
    case PrescribedMotion::Mode::bending: {
        const double half = 0.5 * problem.structure.width();
        if (!(half > 0.0)) throw ConfigError("bending needs a structure with positive length");
        for (std::size_t i = 0; i < m.size(); ++i) {
            const Vec2 p = mesh.nodes[m.node_indices[i]];
            const double s = (p.x - c.x) / half;
            const double w = -spec.bending_amplitude * (1.0 - s * s);
            const double slope = 2.0 * spec.bending_amplitude * s / half;
            m.displacements[i] = {-(p.y - c.y) * slope, w};
        }
        break;
    }
    case PrescribedMotion::Mode::from_file: {
        const auto rows = read_motion_csv(spec.path);
        if (rows.size() != m.size())
            throw ConfigError("motion file has " + std::to_string(rows.size()) +
                              " rows but the interface has " + std::to_string(m.size()) + " nodes");
        for (std::size_t i = 0; i < m.size(); ++i) {
            auto it = rows.find(m.node_indices[i]);
            if (it == rows.end())
                throw ConfigError("motion file lacks interface node " +
                                  std::to_string(m.node_indices[i]));
            m.displacements[i] = it->second;
        }
        break;
    }
    }
    for (const auto& d : m.displacements) {
        if (!std::isfinite(d.x) || !std::isfinite(d.y))
            throw ConfigError("prescribed displacement is not finite");
    }
    return m;
}

/// Synthetic cantilever deflection for the beam problem: Euler-Bernoulli beam
/// under a tip load, with the reduced second moment of area over the hollow
/// base. Lateral deflection w(y) is scaled so w(top) = `tip_deflection`; points
/// off the neutral axis also move vertically by -(x - x_c) w'(y).
inline PrescribedMotion cantilever_motion(const Problem& problem, double tip_deflection) {
    if (problem.kind != ProblemKind::beam)
        throw ConfigError("cantilever_motion needs the beam problem");
    const ProblemSpec& s = problem.spec;
    const double h = problem.structure.y1;
    const double t = s.beam_thickness;
    const double full = t * t * t / 12.0;
    const double hollow = (t * t * t - std::pow(s.hollow_width, 3)) / 12.0;
    struct Piece {
        double a, b, inertia;
    };
    const Piece pieces[3] = {{0.0, s.hollow_bottom, full},
                             {s.hollow_bottom, s.hollow_top, hollow},
                             {s.hollow_top, h, full}};
    // Slope and deflection for M(y) = (h - y), exact piecewise integration.
    auto evaluate = [&](double y, double& slope, double& defl) {
        slope = 0.0;
        defl = 0.0;
        for (const Piece& p : pieces) {
            if (y <= p.a) break;
            const double e = std::min(y, p.b);
            const double ua = h - p.a, ue = h - e;
            const double ds = (ua * ua - ue * ue) / (2.0 * p.inertia);
            const double dw = slope * (e - p.a) +
                              (ua * ua * (e - p.a) + (ue * ue * ue - ua * ua * ua) / 3.0) /
                                  (2.0 * p.inertia);
            slope += ds;
            defl += dw;
        }
    };
    double tip_slope, tip_w;
    evaluate(h, tip_slope, tip_w);
    const double scale = tip_deflection / tip_w;
    const double xc = problem.structure.center().x;

    PrescribedMotion m;
    m.mode = PrescribedMotion::Mode::from_file;
    m.node_indices = problem.mesh.interface_nodes;
    for (int n : m.node_indices) {
        const Vec2 p = problem.mesh.nodes[n];
        double slope, w;
        evaluate(std::clamp(p.y, 0.0, h), slope, w);
        m.displacements.push_back({w * scale, -(p.x - xc) * slope * scale});
    }
    return m;
}

/// Equilateral triangle subdivided into 9 congruent triangles; coordinates and
/// the downward displacement of the apex are multiplied by `gsc`. The two
/// bottom corners are fixed; the apex drops by `compression` times the height.
inline TriMesh build_farhat_triangle(double gsc, double side = 1.0, double compression = 0.9) {
    if (!(gsc > 0.0)) throw ConfigError("geometric scale must be > 0");
    TriMesh t;
    const double a = side / 3.0;
    const double rise = a * std::sqrt(3.0) / 2.0;
    std::vector<std::vector<int>> id(4);
    for (int r = 0; r <= 3; ++r) {
        for (int c = 0; c <= 3 - r; ++c) {
            id[r].push_back(static_cast<int>(t.nodes.size()));
            t.nodes.push_back(Vec2{(c + 0.5 * r) * a, r * rise} * gsc);
        }
    }
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3 - r; ++c) {
            t.tris.push_back({id[r][c], id[r][c + 1], id[r + 1][c]});
            if (c + 1 < 3 - r) t.tris.push_back({id[r][c + 1], id[r + 1][c + 1], id[r + 1][c]});
        }
    }
    t.fixed_nodes = {id[0][0], id[0][3]};
    t.prescribed_nodes = {id[3][0]};
    t.prescribed_displacements = {Vec2{0.0, -compression * 3.0 * rise} * gsc};
    return t;
}

}  // namespace meshmorph
