#pragma once

#include <algorithm>
#include <array>
#include <random>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "meshmorph/meshmorph.hpp"

namespace mmtest {

using meshmorph::Vec2;

inline std::array<Vec2, 4> quad(Vec2 a, Vec2 b, Vec2 c, Vec2 d) { return {a, b, c, d}; }

/// nx x ny unit-spaced grid, counterclockwise quads, all outer nodes in a
/// "walls" set and no interface.
inline meshmorph::QuadMesh grid(int nx, int ny, double h = 1.0) {
    meshmorph::QuadMesh m;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) m.nodes.push_back({i * h, j * h});
    auto id = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) m.quads.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    auto& walls = m.boundary_sets["walls"];
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            if (i == 0 || j == 0 || i == nx || j == ny) walls.push_back(id(i, j));
    return m;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("meshmorph_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string source_path(const std::string& rel) { return std::string(MESHMORPH_SOURCE_DIR) + "/" + rel; }

}  // namespace mmtest
