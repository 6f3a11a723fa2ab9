#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meshmorph/error.hpp"
#include "meshmorph/geometry.hpp"
#include "meshmorph/mesh.hpp"

namespace meshmorph {

/// Interior angle at corner `k` of a counterclockwise quad, in degrees, in [0, 360).
/// Measured counterclockwise from the outgoing edge to the incoming edge, so a
/// reflex or folded corner reads above 180.
inline double corner_angle_deg(std::span<const Vec2, 4> corners, int k) {
    const Vec2& p = corners[k];
    const Vec2 next = corners[(k + 1) % 4] - p;
    const Vec2 prev = corners[(k + 3) % 4] - p;
    double angle = std::atan2(cross(next, prev), dot(next, prev));
    if (angle < 0.0) angle += 2.0 * pi;
    return rad_to_deg(angle);
}

/// Angular skewness of a quad: min over corners of 1 - max((t-90)/90, (90-t)/90).
/// 1 for a rectangle, <= 0 for folded or inverted elements.
inline double element_skewness(std::span<const Vec2, 4> corners) {
    double scale = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (!std::isfinite(corners[k].x) || !std::isfinite(corners[k].y))
            throw DegenerateElementError("non-finite corner coordinate");
        scale = std::max(scale, norm(corners[k] - corners[0]));
    }
    for (int k = 0; k < 4; ++k) {
        if (norm(corners[(k + 1) % 4] - corners[k]) <= 1e-14 * scale || scale == 0.0)
            throw DegenerateElementError("quad has coincident corners " + std::to_string(k) +
                                         " and " + std::to_string((k + 1) % 4));
    }
    double score = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
        const double theta = corner_angle_deg(corners, k);
        score = std::min(score, 1.0 - std::max((theta - 90.0) / 90.0, (90.0 - theta) / 90.0));
    }
    return score;
}

inline double element_skewness(const std::array<Vec2, 4>& corners) {
    return element_skewness(std::span<const Vec2, 4>(corners));
}

/// Current over reference signed area.
inline double element_area_ratio(std::span<const Vec2, 4> current,
                                 std::span<const Vec2, 4> reference) {
    const double a0 = signed_area(reference);
    if (!(a0 > 0.0)) throw MeshError("reference element has non-positive area");
    return signed_area(current) / a0;
}

inline double element_area_ratio(const std::array<Vec2, 4>& current,
                                 const std::array<Vec2, 4>& reference) {
    return element_area_ratio(std::span<const Vec2, 4>(current),
                              std::span<const Vec2, 4>(reference));
}

struct QualityReport {
    std::vector<double> per_element_skewness;
    std::vector<double> per_element_area_ratio;
    double min_skewness = std::numeric_limits<double>::infinity();
    double min_area_ratio = std::numeric_limits<double>::infinity();
    double max_area_ratio = -std::numeric_limits<double>::infinity();
    /// Elements with skewness <= 0 or non-positive signed area, ascending.
    std::vector<int> inverted_elements;
};

/// Per-element metrics for every element; min/max and the inverted list are
/// aggregated over `region` (all elements when empty).
inline QualityReport quality_report(const QuadMesh& deformed, const QuadMesh& reference,
                                    std::optional<std::span<const int>> region = std::nullopt) {
    if (deformed.quads != reference.quads || deformed.node_count() != reference.node_count())
        throw MeshError("quality_report: connectivity of deformed and reference meshes differs");
    const std::size_t ne = deformed.element_count();
    QualityReport report;
    report.per_element_skewness.resize(ne);
    report.per_element_area_ratio.resize(ne);
    std::vector<double> current_area(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        const auto cur = deformed.corners(e);
        report.per_element_skewness[e] = element_skewness(cur);
        report.per_element_area_ratio[e] = element_area_ratio(cur, reference.corners(e));
        current_area[e] = signed_area(cur);
    }
    auto visit = [&](int e) {
        if (e < 0 || static_cast<std::size_t>(e) >= ne)
            throw MeshError("quality_report: region references invalid element");
        report.min_skewness = std::min(report.min_skewness, report.per_element_skewness[e]);
        report.min_area_ratio = std::min(report.min_area_ratio, report.per_element_area_ratio[e]);
        report.max_area_ratio = std::max(report.max_area_ratio, report.per_element_area_ratio[e]);
        if (report.per_element_skewness[e] <= 0.0 || current_area[e] <= 0.0)
            report.inverted_elements.push_back(e);
    };
    if (region && !region->empty()) {
        std::vector<int> sorted(region->begin(), region->end());
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        for (int e : sorted) visit(e);
    } else {
        for (std::size_t e = 0; e < ne; ++e) visit(static_cast<int>(e));
    }
    return report;
}

}  // namespace meshmorph
