#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vlp/calibration.hpp"
#include "vlp/errors.hpp"
#include "vlp/geometry.hpp"

namespace vlp {

// UID -> surveyed world coordinate mapping of the ceiling luminaires.
struct AnchorTable {
    std::map<std::string, WorldPoint> entries;
    double ceiling_z_tolerance_mm = 1.0;

    void validate() const {
        if (entries.size() < 2) throw TooFewAnchors("anchor table needs at least 2 entries");
        for (auto a = entries.begin(); a != entries.end(); ++a) {
            for (auto b = std::next(a); b != entries.end(); ++b) {
                if ((a->second.plan() - b->second.plan()).norm() < kMinImageDistanceMm)
                    throw DegenerateGeometry("anchors '" + a->first + "' and '" + b->first +
                                             "' coincide in plan");
            }
        }
    }

    const WorldPoint& at(const std::string& uid) const {
        auto it = entries.find(uid);
        if (it == entries.end()) throw UnknownUid("uid '" + uid + "' not in anchor table");
        return it->second;
    }
};

struct Detection {
    std::string uid;
    PixelPoint centroid;
};

// One observation: the decoded LED detections of a single camera frame.
struct Frame {
    std::vector<Detection> detections;
    double timestamp = 0.0;
};

struct YawSolution {
    double a = 1.0;  // cos(gamma) after normalization
    double b = 0.0;  // sin(gamma)
    double gamma = 0.0;
    double residual = 0.0;
};

struct PoseEstimate {
    WorldPoint position;
    double yaw = 0.0;
    double height_H = 0.0;
    int n_leds_used = 0;
    double plan_residual_mm = 0.0;
};

// --- anchor table file: text table, header `uid,x_mm,y_mm,z_mm` ---

inline AnchorTable load_anchor_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open anchor file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "uid,x_mm,y_mm,z_mm")
        throw ParseError(path.string() + ":1: expected header 'uid,x_mm,y_mm,z_mm'");

    AnchorTable table;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string uid, xs, ys, zs, extra;
        if (!std::getline(row, uid, ',') || !std::getline(row, xs, ',') ||
            !std::getline(row, ys, ',') || !std::getline(row, zs, ','))
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 4 fields 'uid,x_mm,y_mm,z_mm'");
        if (std::getline(row, extra, ','))
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": too many fields");
        WorldPoint p;
        try {
            std::size_t pos = 0;
            p.x = std::stod(xs, &pos);
            if (pos != xs.size()) throw std::invalid_argument(xs);
            p.y = std::stod(ys, &pos);
            if (pos != ys.size()) throw std::invalid_argument(ys);
            p.z = std::stod(zs, &pos);
            if (pos != zs.size()) throw std::invalid_argument(zs);
        } catch (const std::exception&) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": malformed number in row '" + line + "'");
        }
        if (uid.empty())
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty uid");
        if (!table.entries.emplace(uid, p).second)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": duplicate uid '" +
                             uid + "'");
    }
    return table;
}

inline void save_anchor_table(const AnchorTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open anchor file for writing: " + path.string());
    out << "uid,x_mm,y_mm,z_mm\n";
    char buf[128];
    for (const auto& [uid, p] : table.entries) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", p.x, p.y, p.z);
        out << uid << ',' << buf << '\n';
    }
}

// --- frame file: rows `uid,u,v`, optional matching header ---

inline Frame load_frame_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open frame file: " + path.string());
    Frame frame;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line == "uid,u,v") continue;
        std::stringstream row(line);
        std::string uid, us, vs, extra;
        if (!std::getline(row, uid, ',') || !std::getline(row, us, ',') ||
            !std::getline(row, vs, ','))
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 3 fields 'uid,u,v'");
        if (std::getline(row, extra, ','))
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": too many fields");
        Detection d;
        d.uid = uid;
        try {
            std::size_t pos = 0;
            d.centroid.u = std::stod(us, &pos);
            if (pos != us.size()) throw std::invalid_argument(us);
            d.centroid.v = std::stod(vs, &pos);
            if (pos != vs.size()) throw std::invalid_argument(vs);
        } catch (const std::exception&) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": malformed number in row '" + line + "'");
        }
        frame.detections.push_back(std::move(d));
    }
    return frame;
}

inline void save_frame_csv(const Frame& frame, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open frame file for writing: " + path.string());
    out << "uid,u,v\n";
    char buf[96];
    for (const auto& d : frame.detections) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", d.centroid.u, d.centroid.v);
        out << d.uid << ',' << buf << '\n';
    }
}

// --- yaw recovery ---

// Two-LED yaw: solve image_delta = scale * [[a, b], [-b, a]] * world_delta
// for (a, b). The 2x2 system is orthogonal up to scale, so the solution is
// closed-form; (a, b) is renormalized to the unit circle afterwards and the
// pre-normalization deviation |a^2 + b^2 - 1| is reported as the residual.
inline YawSolution solve_yaw_two_led(const Eigen::Vector2d& world_delta,
                                     const Eigen::Vector2d& image_delta, double scale) {
    if (!(std::abs(scale) > 0.0) || !std::isfinite(scale))
        throw InvalidInput("solve_yaw_two_led: scale must be nonzero and finite");
    const double w2 = world_delta.squaredNorm();
    if (w2 < kMinImageDistanceMm * kMinImageDistanceMm)
        throw DegenerateGeometry("solve_yaw_two_led: world delta vanishes");
    const Eigen::Vector2d rhs = image_delta / scale;
    const double a = (world_delta.x() * rhs.x() + world_delta.y() * rhs.y()) / w2;
    const double b = (world_delta.y() * rhs.x() - world_delta.x() * rhs.y()) / w2;
    const double norm = std::hypot(a, b);
    if (!(norm > 0.0))
        throw DegenerateGeometry("solve_yaw_two_led: image delta vanishes");
    YawSolution sol;
    sol.residual = std::abs(a * a + b * b - 1.0);
    sol.a = a / norm;
    sol.b = b / norm;
    sol.gamma = std::atan2(sol.b, sol.a);
    return sol;
}

// N-LED yaw: the image/world delta relation of every LED pair is stacked into
// an overdetermined linear system in (a, b) and solved by least squares.
// The stacked normal matrix is isotropic (sum of |world_delta|^2 times the
// identity), so the solve is closed-form. Residual is the RMS of the stacked
// system residual in world millimeters, evaluated after normalization.
inline YawSolution solve_yaw_n_led(
    std::span<const std::pair<WorldPoint, ImagePoint>> correspondences, double scale) {
    if (correspondences.size() < 3)
        throw InvalidInput("solve_yaw_n_led: need at least 3 correspondences");
    if (!(std::abs(scale) > 0.0) || !std::isfinite(scale))
        throw InvalidInput("solve_yaw_n_led: scale must be nonzero and finite");

    double s = 0.0, na = 0.0, nb = 0.0;
    std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> deltas;
    for (std::size_t i = 0; i < correspondences.size(); ++i) {
        for (std::size_t j = i + 1; j < correspondences.size(); ++j) {
            const Eigen::Vector2d wd =
                correspondences[i].first.plan() - correspondences[j].first.plan();
            const Eigen::Vector2d id =
                (correspondences[i].second.vec() - correspondences[j].second.vec()) / scale;
            s += wd.squaredNorm();
            na += wd.x() * id.x() + wd.y() * id.y();
            nb += wd.y() * id.x() - wd.x() * id.y();
            deltas.emplace_back(wd, id);
        }
    }
    if (s < kMinImageDistanceMm * kMinImageDistanceMm)
        throw DegenerateGeometry("solve_yaw_n_led: all anchor plan deltas vanish");

    const double a = na / s;
    const double b = nb / s;
    const double norm = std::hypot(a, b);
    if (!(norm > 0.0)) throw DegenerateGeometry("solve_yaw_n_led: degenerate image geometry");

    YawSolution sol;
    sol.a = a / norm;
    sol.b = b / norm;
    sol.gamma = std::atan2(sol.b, sol.a);
    double ss = 0.0;
    for (const auto& [wd, id] : deltas) {
        const double rx = sol.a * wd.x() + sol.b * wd.y() - id.x();
        const double ry = -sol.b * wd.x() + sol.a * wd.y() - id.y();
        ss += rx * rx + ry * ry;
    }
    sol.residual = std::sqrt(ss / static_cast<double>(2 * deltas.size()));
    return sol;
}

struct PlanSolution {
    Eigen::Vector2d position{0.0, 0.0};
    double residual_mm = 0.0;  // RMS spread of the per-LED answers
};

// Inverts the projection per LED: (X_s, Y_s)_i = (X_i, Y_i) +
// (H/f) * [[a, -b], [b, a]] * (x_i, y_i), then averages. The 2x2 block is the
// exact inverse of the projection rotation.
inline PlanSolution solve_plan_position(
    std::span<const std::pair<WorldPoint, ImagePoint>> correspondences, const YawSolution& yaw,
    double h, const CameraIntrinsics& intr) {
    if (correspondences.empty()) throw EmptyInput("solve_plan_position: no correspondences");
    if (!(h > 0.0)) throw InvalidInput("solve_plan_position: H must be > 0");

    Eigen::Matrix2d inv;
    inv << yaw.a, -yaw.b,
           yaw.b, yaw.a;
    const double k = h / intr.focal_length_mm;

    std::vector<Eigen::Vector2d> per_led;
    per_led.reserve(correspondences.size());
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& [w, img] : correspondences) {
        const Eigen::Vector2d p = w.plan() + k * (inv * img.vec());
        per_led.push_back(p);
        mean += p;
    }
    mean /= static_cast<double>(per_led.size());

    double ss = 0.0;
    for (const auto& p : per_led) ss += (p - mean).squaredNorm();

    PlanSolution sol;
    sol.position = mean;
    sol.residual_mm = std::sqrt(ss / static_cast<double>(per_led.size()));
    return sol;
}

// Full pipeline for one frame: pixel-to-image about the calibrated rotation
// center, height from all LED pairs, Z from the ceiling height, yaw from the
// two-LED vector relation or the N-LED least-squares system, plan position by
// inversion, then the dispersion correction.
inline PoseEstimate solve_pose(const Frame& frame, const AnchorTable& anchors,
                               const CameraIntrinsics& intr, const CalibrationState& calib = {}) {
    intr.validate();
    anchors.validate();

    {
        const PixelPoint rc = calib.effective_rotation_center(intr);
        if (!intr.in_sensor(rc))
            throw InvalidInput("rotation center outside the sensor rectangle");
    }

    std::vector<std::pair<std::string, PixelPoint>> resolved;
    resolved.reserve(frame.detections.size());
    for (const auto& d : frame.detections) {
        for (const auto& seen : resolved)
            if (seen.first == d.uid)
                throw InvalidInput("duplicate uid '" + d.uid + "' in frame");
        anchors.at(d.uid);  // throws UnknownUid
        resolved.emplace_back(d.uid, d.centroid);
    }
    if (resolved.size() < 2)
        throw TooFewAnchors("solve_pose: need at least 2 resolvable detections, got " +
                            std::to_string(resolved.size()));

    const PixelPoint center = calib.solve_center(intr);
    std::vector<std::pair<WorldPoint, ImagePoint>> corr;
    std::vector<double> led_z;
    corr.reserve(resolved.size());
    led_z.reserve(resolved.size());
    for (const auto& [uid, px] : resolved) {
        const WorldPoint& w = anchors.at(uid);
        corr.emplace_back(w, pixel_to_image(px, intr, center));
        led_z.push_back(w.z);
    }

    // H: mean of the pairwise height estimates.
    double h_sum = 0.0;
    int n_pairs = 0;
    for (std::size_t i = 0; i < corr.size(); ++i) {
        for (std::size_t j = i + 1; j < corr.size(); ++j) {
            h_sum += estimate_height(corr[i].first, corr[j].first, corr[i].second, corr[j].second,
                                     intr);
            ++n_pairs;
        }
    }
    const double h = h_sum / n_pairs;
    const double z_s = receiver_z(led_z, h, anchors.ceiling_z_tolerance_mm);
    const double scale = -intr.focal_length_mm / h;

    YawSolution yaw;
    if (corr.size() == 2) {
        yaw = solve_yaw_two_led(corr[0].first.plan() - corr[1].first.plan(),
                                corr[0].second.vec() - corr[1].second.vec(), scale);
    } else {
        yaw = solve_yaw_n_led(corr, scale);
    }

    PlanSolution plan = solve_plan_position(corr, yaw, h, intr);
    if (calib.dispersion_mode == DispersionMode::world_plane)
        plan.position -= calib.dispersion_offset_mm;

    PoseEstimate est;
    est.position = {plan.position.x(), plan.position.y(), z_s};
    est.yaw = yaw.gamma;
    est.height_H = h;
    est.n_leds_used = static_cast<int>(corr.size());
    est.plan_residual_mm = plan.residual_mm;
    if (!std::isfinite(est.position.x) || !std::isfinite(est.position.y) ||
        !std::isfinite(est.position.z) || !std::isfinite(est.yaw))
        throw DegenerateGeometry("solve_pose: non-finite result");
    return est;
}

}  // namespace vlp
