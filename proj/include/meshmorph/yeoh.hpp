#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meshmorph/error.hpp"

namespace meshmorph {

/// Nearly incompressible Yeoh law
///   W = A10 (J1-3) + A20 (J1-3)^2 + A30 (J1-3)^3 + kappa (J3-1)^2
/// with reduced invariants J1 = I1 J^(-2/3), J3 = J. Two-dimensional states are
/// embedded as plane strain (F33 = 1).
struct YeohMaterial {
    double a10 = 1.0;
    double a20 = 1.0e3;
    double a30 = 0.0;
    double kappa = 1.0;

    void validate() const {
        if (!(a10 > 0.0)) throw ConfigError("yeoh: a10 must be > 0");
        if (!(a20 >= 0.0) || !(a30 >= 0.0)) throw ConfigError("yeoh: a20 and a30 must be >= 0");
        if (!(kappa > 0.0)) throw ConfigError("yeoh: kappa must be > 0");
    }
};

struct YeohConfig {
    YeohMaterial material;
    /// Layer factors multiply A20 only.
    std::vector<double> layer_factors;
    int n_increments = 10;
    double newton_tol = 1e-8;
    int max_newton_iters = 25;

    void validate() const {
        material.validate();
        if (n_increments < 1) throw ConfigError("yeoh: increments must be >= 1");
        if (!(newton_tol > 0.0)) throw ConfigError("yeoh: newton_tol must be > 0");
        if (max_newton_iters < 1) throw ConfigError("yeoh: max_iters must be >= 1");
        for (double f : layer_factors)
            if (!(f > 0.0)) throw ConfigError("yeoh: layer factors must be > 0");
    }
};

/// Gauss-point kinematics and stress for one deformation gradient.
struct KinematicState {
    Eigen::Matrix2d F;
    Eigen::Matrix2d C;
    double i1 = 3.0;  // tr C including C33 = 1
    double j1 = 3.0;
    double j3 = 1.0;
    Eigen::Matrix2d E;  // Green-Lagrange strain
    Eigen::Matrix2d S;  // second Piola-Kirchhoff stress
};

namespace detail {

struct YeohTerms {
    double j, i1, j1, g;  // g = J^(-2/3)
    Eigen::Matrix2d c, cinv;
};

inline YeohTerms yeoh_terms(const Eigen::Matrix2d& f) {
    YeohTerms t;
    t.j = f.determinant();
    if (!(t.j > 0.0)) throw InadmissibleStateError("yeoh: det F must be > 0", -1);
    t.c = f.transpose() * f;
    t.cinv = t.c.inverse();
    t.i1 = t.c.trace() + 1.0;
    t.g = std::pow(t.j, -2.0 / 3.0);
    t.j1 = t.i1 * t.g;
    return t;
}

}  // namespace detail

inline double yeoh_energy(const Eigen::Matrix2d& f, const YeohMaterial& m) {
    const auto t = detail::yeoh_terms(f);
    const double d = t.j1 - 3.0;
    const double v = t.j - 1.0;
    return m.a10 * d + m.a20 * d * d + m.a30 * d * d * d + m.kappa * v * v;
}

/// S = 2 dW/dC (in-plane components).
inline Eigen::Matrix2d pk2_stress(const Eigen::Matrix2d& f, const YeohMaterial& m) {
    const auto t = detail::yeoh_terms(f);
    const double d = t.j1 - 3.0;
    const double w1 = m.a10 + 2.0 * m.a20 * d + 3.0 * m.a30 * d * d;
    const Eigen::Matrix2d dj1 = t.g * (Eigen::Matrix2d::Identity() - (t.i1 / 3.0) * t.cinv);
    return 2.0 * w1 * dj1 + 2.0 * m.kappa * (t.j * t.j - t.j) * t.cinv;
}

/// Material tangent dS/dE in Voigt form, rows/cols (11, 22, 12), for use with
/// engineering shear strain 2 E12.
inline Eigen::Matrix3d material_tangent(const Eigen::Matrix2d& f, const YeohMaterial& m) {
    const auto t = detail::yeoh_terms(f);
    const double d = t.j1 - 3.0;
    const double w1 = m.a10 + 2.0 * m.a20 * d + 3.0 * m.a30 * d * d;
    const double w2 = 2.0 * m.a20 + 6.0 * m.a30 * d;
    const Eigen::Matrix2d& ci = t.cinv;
    const Eigen::Matrix2d p = t.g * (Eigen::Matrix2d::Identity() - (t.i1 / 3.0) * ci);
    const double vol_a = 2.0 * m.kappa * (2.0 * t.j - 1.0) * t.j;
    const double vol_b = 2.0 * m.kappa * (t.j * t.j - t.j);
    auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    auto tensor = [&](int i, int j, int k, int l) {
        const double sym = ci(i, k) * ci(j, l) + ci(i, l) * ci(j, k);
        const double dp = t.g * (-(delta(i, j) * ci(k, l) + ci(i, j) * delta(k, l)) / 3.0 +
                                 t.i1 / 9.0 * ci(i, j) * ci(k, l) + t.i1 / 6.0 * sym);
        return 4.0 * w2 * p(i, j) * p(k, l) + 4.0 * w1 * dp + vol_a * ci(i, j) * ci(k, l) -
               vol_b * sym;
    };
    static constexpr int vi[3] = {0, 1, 0};
    static constexpr int vj[3] = {0, 1, 1};
    Eigen::Matrix3d out;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) out(a, b) = tensor(vi[a], vj[a], vi[b], vj[b]);
    return out;
}

inline KinematicState kinematics(const Eigen::Matrix2d& f, const YeohMaterial& m) {
    const auto t = detail::yeoh_terms(f);
    KinematicState k;
    k.F = f;
    k.C = t.c;
    k.i1 = t.i1;
    k.j1 = t.j1;
    k.j3 = t.j;
    k.E = 0.5 * (t.c - Eigen::Matrix2d::Identity());
    k.S = pk2_stress(f, m);
    return k;
}

}  // namespace meshmorph
