#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "vlp/errors.hpp"
#include "vlp/rng.hpp"

namespace vlp {

struct Circle2D {
    Eigen::Vector2d center{0.0, 0.0};
    double radius = 0.0;
};

struct CircleFit {
    Circle2D circle;
    double rms_residual = 0.0;  // RMS of (|p_i - c| - r), input units
};

// Algebraic least-squares circle (Kasa): minimizes sum((|p-c|^2 - r^2)^2),
// one 3x3 linear solve. Exact on points lying exactly on a circle. Inputs are
// centered on their centroid first so the conditioning test is scale-free.
inline CircleFit fit_circle(std::span<const Eigen::Vector2d> points,
                            double condition_threshold = 1e12) {
    if (points.size() < 3) throw InvalidInput("fit_circle: need at least 3 points");

    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());

    // Normal equations for x^2 + y^2 + D x + E y + F = 0 in centered coords.
    Eigen::Matrix3d n = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (const auto& p : points) {
        const Eigen::Vector2d q = p - centroid;
        const Eigen::Vector3d row(q.x(), q.y(), 1.0);
        n += row * row.transpose();
        rhs -= row * q.squaredNorm();
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(n);
    const double lo = std::abs(eig.eigenvalues().minCoeff());
    const double hi = std::abs(eig.eigenvalues().maxCoeff());
    if (!(lo > 0.0) || hi / lo > condition_threshold)
        throw DegenerateGeometry("fit_circle: collinear or coincident points");

    const Eigen::Vector3d def = n.ldlt().solve(rhs);
    const Eigen::Vector2d center_local(-def.x() / 2.0, -def.y() / 2.0);
    const double r2 = center_local.squaredNorm() - def.z();
    if (!(r2 >= 0.0)) throw DegenerateGeometry("fit_circle: negative squared radius");

    CircleFit fit;
    fit.circle.center = center_local + centroid;
    fit.circle.radius = std::sqrt(r2);
    double ss = 0.0;
    for (const auto& p : points) {
        const double d = (p - fit.circle.center).norm() - fit.circle.radius;
        ss += d * d;
    }
    fit.rms_residual = std::sqrt(ss / static_cast<double>(points.size()));
    return fit;
}

namespace detail {

// Containment with a small relative slack so boundary points survive rounding.
inline bool circle_contains(const Circle2D& c, const Eigen::Vector2d& p) {
    const double r2 = c.radius * c.radius;
    return (p - c.center).squaredNorm() <= r2 + 1e-12 * (1.0 + r2);
}

inline Circle2D circle_from_two(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return {(a + b) / 2.0, (a - b).norm() / 2.0};
}

inline std::optional<Circle2D> circumcircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                            const Eigen::Vector2d& c) {
    const Eigen::Vector2d ab = b - a, ac = c - a;
    const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
    const double scale = ab.squaredNorm() + ac.squaredNorm();
    if (std::abs(d) < 1e-14 * (1.0 + scale)) return std::nullopt;  // collinear
    const double ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
    const Eigen::Vector2d rel((ac.y() * ab2 - ab.y() * ac2) / d,
                              (ab.x() * ac2 - ac.x() * ab2) / d);
    return Circle2D{a + rel, rel.norm()};
}

// Circle with all three points on the boundary. The incremental construction
// requires the circumcircle here (the first two points are boundary
// constraints from the outer loops); collinear triples fall back to the
// widest diameter circle.
inline Circle2D circle_from_three(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                  const Eigen::Vector2d& c) {
    if (auto cc = circumcircle(a, b, c)) return *cc;
    const Eigen::Vector2d* pts[3] = {&a, &b, &c};
    Circle2D widest{{0, 0}, -1.0};
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const Circle2D cand = circle_from_two(*pts[i], *pts[j]);
            if (cand.radius > widest.radius) widest = cand;
        }
    }
    return widest;
}

}  // namespace detail

// Smallest circle containing all points (Welzl's randomized incremental
// construction, expected linear time). The internal shuffle is seeded from the
// input so results are deterministic.
inline Circle2D min_enclosing_circle(std::span<const Eigen::Vector2d> points) {
    if (points.empty()) throw EmptyInput("min_enclosing_circle: no points");
    for (const auto& p : points)
        if (!p.allFinite()) throw InvalidInput("min_enclosing_circle: non-finite point");

    std::vector<Eigen::Vector2d> pts(points.begin(), points.end());
    Rng rng(derive_seed(0x6D43C9F1u, pts.size(), "mec-shuffle"));
    for (std::size_t i = pts.size() - 1; i > 0; --i)
        std::swap(pts[i], pts[rng.below(i + 1)]);

    Circle2D c{pts[0], 0.0};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (detail::circle_contains(c, pts[i])) continue;
        c = Circle2D{pts[i], 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (detail::circle_contains(c, pts[j])) continue;
            c = detail::circle_from_two(pts[i], pts[j]);
            for (std::size_t k = 0; k < j; ++k) {
                if (detail::circle_contains(c, pts[k])) continue;
                c = detail::circle_from_three(pts[i], pts[j], pts[k]);
            }
        }
    }
    return c;
}

}  // namespace vlp
