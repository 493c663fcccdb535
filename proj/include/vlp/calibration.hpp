#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlp/circle.hpp"
#include "vlp/errors.hpp"
#include "vlp/geometry.hpp"

namespace vlp {

enum class DispersionMode { world_plane, pixel_literal };

inline const char* to_string(DispersionMode m) {
    return m == DispersionMode::world_plane ? "world_plane" : "pixel_literal";
}

inline DispersionMode dispersion_mode_from_string(const std::string& s) {
    if (s == "world_plane") return DispersionMode::world_plane;
    if (s == "pixel_literal") return DispersionMode::pixel_literal;
    throw ParseError("unknown dispersion_mode '" + s + "'");
}

// One yaw step of the rotation-calibration sweep: where the tracked LED
// landed on the sensor at that heading.
struct RotationSweepSample {
    int yaw_index = 0;
    PixelPoint centroid;
};

struct CalibrationProvenance {
    int rotation_samples = 0;
    double rotation_rms_residual_px = 0.0;
    double rotation_sweep_span_deg = 0.0;
    bool insufficient_sweep = false;  // angular coverage below 180 degrees
    int dispersion_samples = 0;
};

// Calibration products applied by the solver. The rotation center replaces
// the nominal principal point in the pixel-to-image conversion once fitted;
// the dispersion offset cancels the systematic shift measured at a reference
// point, either by world-plane subtraction (default) or by the literal
// pixel-center shift u1 = u0 + dx/di, v1 = v0 + dy/dj.
struct CalibrationState {
    std::optional<PixelPoint> rotation_center;  // empty: use nominal (u0, v0)
    Eigen::Vector2d dispersion_offset_mm{0.0, 0.0};
    double dispersion_radius_mm = 0.0;
    DispersionMode dispersion_mode = DispersionMode::world_plane;
    CalibrationProvenance provenance;

    PixelPoint effective_rotation_center(const CameraIntrinsics& intr) const {
        return rotation_center.value_or(intr.principal_point);
    }

    // The center the solver converts pixels about. In pixel_literal mode the
    // dispersion offset moves the center; in world_plane mode it does not.
    PixelPoint solve_center(const CameraIntrinsics& intr) const {
        PixelPoint c = effective_rotation_center(intr);
        if (dispersion_mode == DispersionMode::pixel_literal) {
            c.u += dispersion_offset_mm.x() / intr.pixel_pitch_u_mm;
            c.v += dispersion_offset_mm.y() / intr.pixel_pitch_v_mm;
        }
        return c;
    }
};

namespace detail {

// Angular coverage of the sweep as seen from the fitted center: 360 degrees
// minus the largest gap between consecutive sample angles.
inline double sweep_span_deg(std::span<const RotationSweepSample> samples,
                             const Eigen::Vector2d& center) {
    std::vector<double> angles;
    angles.reserve(samples.size());
    for (const auto& s : samples)
        angles.push_back(std::atan2(s.centroid.v - center.y(), s.centroid.u - center.x()));
    std::sort(angles.begin(), angles.end());
    double max_gap = 2.0 * std::numbers::pi - (angles.back() - angles.front());
    for (std::size_t i = 1; i < angles.size(); ++i)
        max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
    return (2.0 * std::numbers::pi - max_gap) * 180.0 / std::numbers::pi;
}

}  // namespace detail

// Fits the true rotation center (u1, v1) from a yaw sweep: the tracked LED's
// pixel trajectory is a circle about the physical rotation center, so its
// fitted center replaces the nominal principal point. Coverage below 180
// degrees is flagged (not rejected): a short arc conditions the fit poorly.
inline CalibrationState calibrate_rotation_center(std::span<const RotationSweepSample> samples,
                                                  CalibrationState state = {}) {
    if (samples.size() < 3)
        throw InvalidInput("calibrate_rotation_center: need at least 3 sweep samples");
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(samples.size());
    for (const auto& s : samples) pts.emplace_back(s.centroid.u, s.centroid.v);

    const CircleFit fit = fit_circle(pts);
    state.rotation_center = PixelPoint{fit.circle.center.x(), fit.circle.center.y()};
    state.provenance.rotation_samples = static_cast<int>(samples.size());
    state.provenance.rotation_rms_residual_px = fit.rms_residual;
    state.provenance.rotation_sweep_span_deg = detail::sweep_span_deg(samples, fit.circle.center);
    state.provenance.insufficient_sweep = state.provenance.rotation_sweep_span_deg < 180.0;
    return state;
}

// Dispersion circle calibration: repeated positioning at a known reference
// point. The systematic shift is the mean deviation (the dispersion-circle
// center); the radius of the smallest circle enclosing the centered results
// is the random spread.
inline CalibrationState calibrate_dispersion(std::span<const Eigen::Vector2d> plan_samples_mm,
                                             const Eigen::Vector2d& reference_mm,
                                             CalibrationState state = {}) {
    if (plan_samples_mm.empty()) throw EmptyInput("calibrate_dispersion: no samples");
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& s : plan_samples_mm) mean += s;
    mean /= static_cast<double>(plan_samples_mm.size());

    std::vector<Eigen::Vector2d> centered;
    centered.reserve(plan_samples_mm.size());
    for (const auto& s : plan_samples_mm) centered.push_back(s - mean);

    state.dispersion_offset_mm = mean - reference_mm;
    state.dispersion_radius_mm = min_enclosing_circle(centered).radius;
    state.provenance.dispersion_samples = static_cast<int>(plan_samples_mm.size());
    return state;
}

inline nlohmann::json calibration_to_json(const CalibrationState& s) {
    nlohmann::json j;
    if (s.rotation_center) {
        j["rotation_center_u"] = s.rotation_center->u;
        j["rotation_center_v"] = s.rotation_center->v;
    } else {
        j["rotation_center_u"] = nullptr;
        j["rotation_center_v"] = nullptr;
    }
    j["dispersion_dx_mm"] = s.dispersion_offset_mm.x();
    j["dispersion_dy_mm"] = s.dispersion_offset_mm.y();
    j["dispersion_radius_mm"] = s.dispersion_radius_mm;
    j["dispersion_mode"] = to_string(s.dispersion_mode);
    j["rotation_sample_count"] = s.provenance.rotation_samples;
    j["rotation_fit_residual_px"] = s.provenance.rotation_rms_residual_px;
    j["rotation_sweep_span_deg"] = s.provenance.rotation_sweep_span_deg;
    j["rotation_sweep_insufficient"] = s.provenance.insufficient_sweep;
    j["dispersion_sample_count"] = s.provenance.dispersion_samples;
    return j;
}

inline CalibrationState calibration_from_json(const nlohmann::json& j) {
    auto require = [&](const char* field) -> const nlohmann::json& {
        auto it = j.find(field);
        if (it == j.end())
            throw ParseError(std::string("calibration file missing field '") + field + "'");
        return *it;
    };
    CalibrationState s;
    const auto& u = require("rotation_center_u");
    const auto& v = require("rotation_center_v");
    if (u.is_null() != v.is_null())
        throw ParseError("rotation_center_u/_v must both be set or both null");
    if (!u.is_null()) s.rotation_center = PixelPoint{u.get<double>(), v.get<double>()};
    s.dispersion_offset_mm.x() = require("dispersion_dx_mm").get<double>();
    s.dispersion_offset_mm.y() = require("dispersion_dy_mm").get<double>();
    s.dispersion_radius_mm = require("dispersion_radius_mm").get<double>();
    s.dispersion_mode = dispersion_mode_from_string(require("dispersion_mode").get<std::string>());
    s.provenance.rotation_samples = require("rotation_sample_count").get<int>();
    s.provenance.rotation_rms_residual_px = require("rotation_fit_residual_px").get<double>();
    s.provenance.rotation_sweep_span_deg = require("rotation_sweep_span_deg").get<double>();
    s.provenance.insufficient_sweep = require("rotation_sweep_insufficient").get<bool>();
    s.provenance.dispersion_samples = require("dispersion_sample_count").get<int>();
    return s;
}

inline void save_calibration(const CalibrationState& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open calibration file for writing: " + path.string());
    out << calibration_to_json(s).dump(2) << "\n";
    if (!out) throw IoError("failed writing calibration file: " + path.string());
}

inline CalibrationState load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open calibration file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("calibration file " + path.string() + ": " + e.what());
    }
    try {
        return calibration_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("calibration file " + path.string() + ": " + e.what());
    }
}

}  // namespace vlp
