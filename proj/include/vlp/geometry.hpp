#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <span>

#include "vlp/errors.hpp"

namespace vlp {

// Units are millimeters and radians throughout the library; the CLI converts
// to cm/degrees only when printing human-facing summaries.

struct PixelPoint {
    double u = 0.0;
    double v = 0.0;
};

struct ImagePoint {
    double x = 0.0;
    double y = 0.0;

    Eigen::Vector2d vec() const { return {x, y}; }
};

struct WorldPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Eigen::Vector3d vec() const { return {x, y, z}; }
    Eigen::Vector2d plan() const { return {x, y}; }
};

struct CameraPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Eigen::Vector3d vec() const { return {x, y, z}; }
};

struct CameraIntrinsics {
    double focal_length_mm = 3.0;
    double pixel_pitch_u_mm = 0.003;  // mm per pixel along u
    double pixel_pitch_v_mm = 0.003;  // mm per pixel along v
    PixelPoint principal_point{400.0, 300.0};
    int resolution_u = 800;
    int resolution_v = 600;

    void validate() const {
        if (!(focal_length_mm > 0.0) || !std::isfinite(focal_length_mm))
            throw InvalidInput("focal_length_mm must be > 0");
        if (!(pixel_pitch_u_mm > 0.0) || !(pixel_pitch_v_mm > 0.0))
            throw InvalidInput("pixel pitch must be > 0");
        if (resolution_u <= 0 || resolution_v <= 0)
            throw InvalidInput("sensor resolution must be positive");
        if (principal_point.u < 0.0 || principal_point.u > resolution_u ||
            principal_point.v < 0.0 || principal_point.v > resolution_v)
            throw InvalidInput("principal point outside the sensor rectangle");
    }

    bool in_sensor(const PixelPoint& p) const {
        return p.u >= 0.0 && p.u <= resolution_u && p.v >= 0.0 && p.v <= resolution_v;
    }
};

// Normalizes an angle to (-pi, pi].
inline double normalize_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

struct RotationMatrix {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

struct Pose {
    WorldPoint position;
    double yaw_gamma = 0.0;  // rotation about the vertical axis, (-pi, pi]
};

inline constexpr double kMinProjectionHeightMm = 1e-6;
inline constexpr double kMinImageDistanceMm = 1e-9;

// Pixel -> image-plane mm about a given center. The center is the nominal
// principal point (u0, v0) when uncalibrated and the fitted rotation center
// (u1, v1) after rotation calibration; both cases are the same formula.
inline ImagePoint pixel_to_image(const PixelPoint& p, const CameraIntrinsics& intr,
                                 const PixelPoint& center) {
    if (!std::isfinite(p.u) || !std::isfinite(p.v) || !std::isfinite(center.u) ||
        !std::isfinite(center.v))
        throw InvalidInput("pixel_to_image: non-finite input");
    return {(p.u - center.u) * intr.pixel_pitch_u_mm, (p.v - center.v) * intr.pixel_pitch_v_mm};
}

inline PixelPoint image_to_pixel(const ImagePoint& p, const CameraIntrinsics& intr,
                                 const PixelPoint& center) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(center.u) ||
        !std::isfinite(center.v))
        throw InvalidInput("image_to_pixel: non-finite input");
    return {center.u + p.x / intr.pixel_pitch_u_mm, center.v + p.y / intr.pixel_pitch_v_mm};
}

// Full three-angle rotation Rx(alpha) * Ry(beta) * Rz(gamma). At
// alpha = beta = 0 this reduces to the plain yaw matrix
// [[a, -b, 0], [b, a, 0], [0, 0, 1]] with a = cos(gamma), b = sin(gamma).
inline RotationMatrix rotation_matrix(double alpha, double beta, double gamma) {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma))
        throw InvalidInput("rotation_matrix: non-finite angle");
    Eigen::Matrix3d rx, ry, rz;
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double cg = std::cos(gamma), sg = std::sin(gamma);
    rx << 1, 0, 0,
          0, ca, sa,
          0, -sa, ca;
    ry << cb, 0, -sb,
          0, 1, 0,
          sb, 0, cb;
    rz << cg, -sg, 0,
          sg, cg, 0,
          0, 0, 1;
    return {rx * ry * rz, alpha, beta, gamma};
}

// P_c = R(gamma) * (P - O_s) with the receiver assumed level (alpha = beta = 0).
inline CameraPoint world_to_camera(const WorldPoint& p, const Pose& pose) {
    if (!std::isfinite(pose.yaw_gamma))
        throw InvalidInput("world_to_camera: non-finite yaw");
    const Eigen::Matrix3d r = rotation_matrix(0.0, 0.0, pose.yaw_gamma).m;
    const Eigen::Vector3d v = r * (p.vec() - pose.position.vec());
    return {v.x(), v.y(), v.z()};
}

// The 2x2 block of the projection model: [[a, b], [-b, a]] with a = cos(gamma),
// b = sin(gamma). Orthonormal, so its inverse is its transpose.
inline Eigen::Matrix2d projection_rotation(double gamma) {
    const double a = std::cos(gamma), b = std::sin(gamma);
    Eigen::Matrix2d m;
    m << a, b,
         -b, a;
    return m;
}

// Forward projection of a world point to a sub-pixel coordinate:
// (x, y) = (-f/H) * [[a, b], [-b, a]] * (X - X_s, Y - Y_s), then image mm ->
// pixels about `true_center`. The true center models the fabrication offset
// between the physical rotation center and the nominal principal point; pass
// the principal point for an ideal camera. This is the simulator's
// ground-truth model.
inline PixelPoint project(const WorldPoint& p, const Pose& pose, const CameraIntrinsics& intr,
                          const PixelPoint& true_center,
                          double min_height_mm = kMinProjectionHeightMm) {
    const double h = p.z - pose.position.z;
    if (!(h > min_height_mm))
        throw DegenerateGeometry("project: LED not above the receiver (H <= minimum)");
    const Eigen::Vector2d plan_offset = p.plan() - pose.position.plan();
    const Eigen::Vector2d img =
        (-intr.focal_length_mm / h) * (projection_rotation(pose.yaw_gamma) * plan_offset);
    return image_to_pixel({img.x(), img.y()}, intr, true_center);
}

// H = f * D12 / d12: vertical lens-to-LED-plane distance from one LED pair.
// D12 is the plan distance between the two LEDs in the world, d12 the distance
// between their image points in mm (pixel pitch already applied).
inline double estimate_height(const WorldPoint& w1, const WorldPoint& w2, const ImagePoint& i1,
                              const ImagePoint& i2, const CameraIntrinsics& intr,
                              double min_image_distance_mm = kMinImageDistanceMm) {
    const double d12 = (i1.vec() - i2.vec()).norm();
    if (d12 < min_image_distance_mm)
        throw DegenerateGeometry("estimate_height: image points coincide");
    const double plan_dist = (w1.plan() - w2.plan()).norm();
    if (plan_dist < min_image_distance_mm)
        throw DegenerateGeometry("estimate_height: world points coincide in plan");
    return intr.focal_length_mm * plan_dist / d12;
}

// Z_s = Z_i - H.
inline double receiver_z(double led_z, double h) {
    if (!(h > 0.0)) throw InvalidInput("receiver_z: H must be > 0");
    return led_z - h;
}

// Multi-LED variant: the model assumes a common ceiling height, so the
// visible LEDs' z-values must agree within tolerance; uses their mean.
inline double receiver_z(std::span<const double> led_z, double h, double tolerance_mm) {
    if (led_z.empty()) throw EmptyInput("receiver_z: no LED heights");
    if (!(h > 0.0)) throw InvalidInput("receiver_z: H must be > 0");
    double lo = led_z[0], hi = led_z[0], sum = 0.0;
    for (double z : led_z) {
        lo = std::min(lo, z);
        hi = std::max(hi, z);
        sum += z;
    }
    if (hi - lo > tolerance_mm)
        throw InconsistentAnchors("receiver_z: LED heights spread " + std::to_string(hi - lo) +
                                  " mm exceeds tolerance");
    return sum / static_cast<double>(led_z.size()) - h;
}

}  // namespace vlp
