#pragma once

#include <array>
#include <cmath>
#include <span>

namespace meshmorph {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) noexcept { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) noexcept { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) noexcept { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) noexcept { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) noexcept { return a -= b; }
    friend constexpr Vec2 operator*(Vec2 a, double s) noexcept { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return a *= s; }
    friend constexpr Vec2 operator-(const Vec2& a) noexcept { return {-a.x, -a.y}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) noexcept { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) noexcept { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) noexcept { return std::hypot(a.x, a.y); }
constexpr double squared_norm(const Vec2& a) noexcept { return dot(a, a); }

constexpr double pi = 3.141592653589793238462643383279502884;
constexpr double deg_to_rad(double deg) noexcept { return deg * pi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / pi; }

/// Counterclockwise rotation by `angle` radians.
inline Vec2 rotate(const Vec2& v, double angle) noexcept {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Shoelace area; positive for counterclockwise vertex order.
inline double signed_area(std::span<const Vec2> polygon) noexcept {
    double twice = 0.0;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
        twice += cross(polygon[i], polygon[(i + 1) % n]);
    }
    return 0.5 * twice;
}

inline double triangle_signed_area(const Vec2& a, const Vec2& b, const Vec2& c) noexcept {
    return 0.5 * cross(b - a, c - a);
}

}  // namespace meshmorph
