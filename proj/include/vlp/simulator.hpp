#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "vlp/calibration.hpp"
#include "vlp/errors.hpp"
#include "vlp/geometry.hpp"
#include "vlp/rng.hpp"
#include "vlp/solver.hpp"

namespace vlp {

struct Scene {
    AnchorTable anchors;
    CameraIntrinsics intrinsics;
    double room_l_mm = 2000.0;
    double room_w_mm = 1100.0;
    double room_h_mm = 1600.0;

    void validate() const {
        intrinsics.validate();
        anchors.validate();
        if (!(room_l_mm > 0.0 && room_w_mm > 0.0 && room_h_mm > 0.0))
            throw ConfigError("room dimensions must be positive");
        for (const auto& [uid, p] : anchors.entries) {
            if (p.x < 0.0 || p.x > room_l_mm || p.y < 0.0 || p.y > room_w_mm || p.z <= 0.0 ||
                p.z > room_h_mm)
                throw ConfigError("anchor '" + uid + "' outside the room bounds");
        }
    }

    bool in_room_plan(double x, double y) const {
        return x >= 0.0 && x <= room_l_mm && y >= 0.0 && y <= room_w_mm;
    }
};

// The injectable error sources: LED installation error (per-axis offset of the
// true LED positions, drawn once per run), detection measurement noise,
// the coordinate-conversion shift (a constant plan displacement applied before
// projection), and the fabrication offset of the true rotation center from
// the nominal principal point.
struct ErrorModel {
    std::optional<PixelPoint> true_rotation_center;  // empty: nominal (u0, v0)
    double anchor_position_noise_mm = 0.0;
    double pixel_noise_sigma_px = 0.0;
    Eigen::Vector2d constant_plan_shift_mm{0.0, 0.0};
    bool quantize_pixels = false;
    std::uint64_t seed = 0;

    void validate() const {
        if (anchor_position_noise_mm < 0.0 || pixel_noise_sigma_px < 0.0)
            throw ConfigError("noise sigmas must be >= 0");
    }
};

struct TrialRecord {
    Pose true_pose;
    Frame frame;
    std::optional<PoseEstimate> estimate;
    std::string status = "ok";  // or the error code name
    std::uint64_t trial_seed = 0;
};

namespace detail {

// Installation error is fixed for a whole run: the offset of anchor `uid`
// depends only on the master seed, never on the trial.
inline WorldPoint perturbed_anchor(const WorldPoint& nominal, const std::string& uid,
                                   const ErrorModel& err) {
    if (err.anchor_position_noise_mm <= 0.0) return nominal;
    Rng rng(derive_seed(err.seed, fnv1a64(uid), "install"));
    WorldPoint p = nominal;
    p.x += rng.gaussian(0.0, err.anchor_position_noise_mm);
    p.y += rng.gaussian(0.0, err.anchor_position_noise_mm);
    p.z += rng.gaussian(0.0, err.anchor_position_noise_mm);
    return p;
}

}  // namespace detail

// Forward-simulates one camera frame at the given true pose. Per-detection
// randomness is keyed on (seed, trial_seed, uid) so frames are reproducible
// independent of iteration order and thread count.
inline Frame generate_frame(const Scene& scene, const Pose& true_pose, const ErrorModel& err,
                            std::uint64_t trial_seed, double timestamp = 0.0) {
    if (!scene.in_room_plan(true_pose.position.x, true_pose.position.y) ||
        true_pose.position.z < 0.0 || true_pose.position.z >= scene.room_h_mm)
        throw InvalidInput("generate_frame: pose outside the room");

    const PixelPoint true_center =
        err.true_rotation_center.value_or(scene.intrinsics.principal_point);

    Frame frame;
    frame.timestamp = timestamp;
    for (const auto& [uid, nominal] : scene.anchors.entries) {
        WorldPoint p = detail::perturbed_anchor(nominal, uid, err);
        p.x += err.constant_plan_shift_mm.x();
        p.y += err.constant_plan_shift_mm.y();

        PixelPoint px = project(p, true_pose, scene.intrinsics, true_center);
        if (err.pixel_noise_sigma_px > 0.0) {
            Rng rng(derive_seed(derive_seed(err.seed, trial_seed), fnv1a64(uid), "pixel"));
            px.u += rng.gaussian(0.0, err.pixel_noise_sigma_px);
            px.v += rng.gaussian(0.0, err.pixel_noise_sigma_px);
        }
        if (err.quantize_pixels) {
            px.u = std::round(px.u);
            px.v = std::round(px.v);
        }
        if (!scene.intrinsics.in_sensor(px)) continue;
        frame.detections.push_back({uid, px});
    }
    if (frame.detections.size() < 2)
        throw NoVisibleAnchors("generate_frame: only " +
                               std::to_string(frame.detections.size()) +
                               " anchors project in-frame");
    return frame;
}

enum class YawMode { uniform_random, fixed };

struct StaticGridSpec {
    Eigen::Vector2d rect_min{100.0, 100.0};
    Eigen::Vector2d rect_max{700.0, 700.0};
    int rows = 6;
    int cols = 6;
    int reps = 12;
    std::vector<double> heights_mm{300.0};
    YawMode yaw_mode = YawMode::uniform_random;
    double fixed_yaw_rad = 0.0;
};

struct DynamicSpec {
    Eigen::Vector2d start_mm{650.0, 550.0};
    Eigen::Vector2d end_mm{1350.0, 550.0};
    double speed_mm_s = 40.0;
    double frame_rate_hz = 10.0;
    double height_mm = 300.0;
    YawMode yaw_mode = YawMode::fixed;
    double fixed_yaw_rad = 0.0;
};

struct RotationSweepSpec {
    Eigen::Vector2d position_mm{400.0, 400.0};
    double height_mm = 300.0;
    std::vector<double> yaw_angles_rad;  // empty: jittered sweep from the fields below
    int default_count = 12;
    double default_jitter_deg = 5.0;
    std::string tracked_uid;  // empty: picked automatically
};

struct DispersionSpec {
    Eigen::Vector2d reference_mm{400.0, 400.0};
    double height_mm = 300.0;
    int samples = 100;
    YawMode yaw_mode = YawMode::uniform_random;
    double fixed_yaw_rad = 0.0;
};

// Range checks shared by the run functions and up-front config validation.
inline void validate_experiment(const Scene& scene, const StaticGridSpec& grid) {
    if (grid.rows < 1 || grid.cols < 1 || grid.reps < 1 || grid.heights_mm.empty())
        throw ConfigError("static grid: rows/cols/reps/heights must be nonempty and positive");
    if (!scene.in_room_plan(grid.rect_min.x(), grid.rect_min.y()) ||
        !scene.in_room_plan(grid.rect_max.x(), grid.rect_max.y()))
        throw ConfigError("static grid: plan rectangle outside the room");
    for (double h : grid.heights_mm)
        if (h < 0.0 || h >= scene.room_h_mm)
            throw ConfigError("static grid: camera height outside [0, room height)");
}

inline void validate_experiment(const Scene& scene, const DynamicSpec& dyn) {
    if (!(dyn.speed_mm_s > 0.0)) throw ConfigError("dynamic: speed must be > 0");
    if (!(dyn.frame_rate_hz > 0.0)) throw ConfigError("dynamic: frame rate must be > 0");
    if (dyn.height_mm < 0.0 || dyn.height_mm >= scene.room_h_mm)
        throw ConfigError("dynamic: camera height outside [0, room height)");
    if (!scene.in_room_plan(dyn.start_mm.x(), dyn.start_mm.y()) ||
        !scene.in_room_plan(dyn.end_mm.x(), dyn.end_mm.y()))
        throw ConfigError("dynamic: trajectory outside the room");
    if ((dyn.end_mm - dyn.start_mm).norm() < kMinImageDistanceMm)
        throw ConfigError("dynamic: start equals end");
}

inline void validate_experiment(const Scene& scene, const RotationSweepSpec& spec) {
    if (spec.yaw_angles_rad.empty() && spec.default_count < 3)
        throw ConfigError("rotation sweep: need at least 3 angles");
    if (!spec.yaw_angles_rad.empty() && spec.yaw_angles_rad.size() < 3)
        throw ConfigError("rotation sweep: need at least 3 angles");
    if (spec.default_jitter_deg < 0.0) throw ConfigError("rotation sweep: jitter must be >= 0");
    if (spec.height_mm < 0.0 || spec.height_mm >= scene.room_h_mm)
        throw ConfigError("rotation sweep: camera height outside [0, room height)");
    if (!scene.in_room_plan(spec.position_mm.x(), spec.position_mm.y()))
        throw ConfigError("rotation sweep: position outside the room");
    if (!spec.tracked_uid.empty()) scene.anchors.at(spec.tracked_uid);
}

inline void validate_experiment(const Scene& scene, const DispersionSpec& spec) {
    if (spec.samples < 1) throw ConfigError("dispersion: sample count must be >= 1");
    if (spec.height_mm < 0.0 || spec.height_mm >= scene.room_h_mm)
        throw ConfigError("dispersion: camera height outside [0, room height)");
    if (!scene.in_room_plan(spec.reference_mm.x(), spec.reference_mm.y()))
        throw ConfigError("dispersion: reference point outside the room");
}

namespace detail {

// Runs trials[0..n) with `fn(i)` on up to `threads` workers. Each trial is
// written to its own slot, so scheduling cannot affect the result.
inline void parallel_for_trials(std::size_t n, int threads,
                                const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

inline TrialRecord run_trial(const Scene& scene, const ErrorModel& err, const Pose& pose,
                             const CalibrationState& calib, std::uint64_t trial_seed,
                             double timestamp) {
    TrialRecord rec;
    rec.true_pose = pose;
    rec.trial_seed = trial_seed;
    try {
        rec.frame = generate_frame(scene, pose, err, trial_seed, timestamp);
        rec.estimate = solve_pose(rec.frame, scene.anchors, scene.intrinsics, calib);
    } catch (const Error& e) {
        rec.status = to_string(e.code());
    }
    return rec;
}

inline double trial_yaw(YawMode mode, double fixed, std::uint64_t trial_seed) {
    if (mode == YawMode::fixed) return fixed;
    Rng rng(derive_seed(trial_seed, 0, "yaw"));
    return rng.uniform(-std::numbers::pi, std::numbers::pi);
}

}  // namespace detail

// Static-grid experiment: rows x cols plan positions, `reps` repetitions per
// spot per height. Trial order (and the per-trial seeds) are fixed by index,
// so the output is identical for any thread count.
inline std::vector<TrialRecord> run_static_grid(const Scene& scene, const ErrorModel& err,
                                                const StaticGridSpec& grid,
                                                const CalibrationState& calib = {},
                                                int threads = 1) {
    scene.validate();
    err.validate();
    validate_experiment(scene, grid);

    auto grid_coord = [](double lo, double hi, int idx, int n) {
        return n == 1 ? (lo + hi) / 2.0
                      : lo + (hi - lo) * static_cast<double>(idx) / static_cast<double>(n - 1);
    };

    const std::size_t total = static_cast<std::size_t>(grid.rows) * grid.cols * grid.reps *
                              grid.heights_mm.size();
    std::vector<TrialRecord> records(total);
    detail::parallel_for_trials(total, threads, [&](std::size_t idx) {
        std::size_t rest = idx;
        const int rep = static_cast<int>(rest % grid.reps);
        rest /= grid.reps;
        const int col = static_cast<int>(rest % grid.cols);
        rest /= grid.cols;
        const int row = static_cast<int>(rest % grid.rows);
        rest /= grid.rows;
        const std::size_t height_idx = rest;
        (void)rep;

        Pose pose;
        pose.position.x = grid_coord(grid.rect_min.x(), grid.rect_max.x(), col, grid.cols);
        pose.position.y = grid_coord(grid.rect_min.y(), grid.rect_max.y(), row, grid.rows);
        pose.position.z = grid.heights_mm[height_idx];
        const std::uint64_t trial_seed = derive_seed(err.seed, idx, "static");
        pose.yaw_gamma = detail::trial_yaw(grid.yaw_mode, grid.fixed_yaw_rad, trial_seed);
        records[idx] = detail::run_trial(scene, err, pose, calib, trial_seed,
                                         static_cast<double>(idx));
    });
    return records;
}

// Dynamic experiment: the receiver moves along a straight command trajectory
// at constant speed; frames are sampled at the camera frame rate.
inline std::vector<TrialRecord> run_dynamic(const Scene& scene, const ErrorModel& err,
                                            const DynamicSpec& dyn,
                                            const CalibrationState& calib = {}, int threads = 1) {
    scene.validate();
    err.validate();
    validate_experiment(scene, dyn);
    const double length = (dyn.end_mm - dyn.start_mm).norm();

    const double duration_s = length / dyn.speed_mm_s;
    const std::size_t n_frames =
        static_cast<std::size_t>(std::floor(duration_s * dyn.frame_rate_hz + 1e-9)) + 1;
    const Eigen::Vector2d dir = (dyn.end_mm - dyn.start_mm) / length;

    std::vector<TrialRecord> records(n_frames);
    detail::parallel_for_trials(n_frames, threads, [&](std::size_t idx) {
        const double t = static_cast<double>(idx) / dyn.frame_rate_hz;
        const Eigen::Vector2d plan = dyn.start_mm + dir * std::min(dyn.speed_mm_s * t, length);
        Pose pose;
        pose.position = {plan.x(), plan.y(), dyn.height_mm};
        const std::uint64_t trial_seed = derive_seed(err.seed, idx, "dynamic");
        pose.yaw_gamma = detail::trial_yaw(dyn.yaw_mode, dyn.fixed_yaw_rad, trial_seed);
        records[idx] = detail::run_trial(scene, err, pose, calib, trial_seed, t);
    });
    return records;
}

// Default sweep protocol: 12 headings spread over the full circle, roughly
// every 30 degrees but jittered, mirroring how the sweep is done by hand.
inline std::vector<double> default_sweep_angles(std::uint64_t seed, int count = 12,
                                                double jitter_deg = 5.0) {
    if (count < 3) throw ConfigError("rotation sweep: need at least 3 angles");
    Rng rng(derive_seed(seed, 0, "sweep-angles"));
    std::vector<double> angles(count);
    for (int k = 0; k < count; ++k) {
        const double lattice = 2.0 * std::numbers::pi * k / count;
        const double jitter = rng.uniform(-jitter_deg, jitter_deg) * std::numbers::pi / 180.0;
        angles[k] = normalize_angle(lattice + jitter);
    }
    return angles;
}

// Picks the sweep's tracked anchor: the farthest one that stays in-frame at
// every sweep heading (larger trajectory radius conditions the circle fit
// better). Visibility is probed on the noise-free model with a small margin.
inline std::string pick_tracked_anchor(const Scene& scene, const Pose& base_pose,
                                       std::span<const double> yaw_angles,
                                       const PixelPoint& true_center, double margin_px = 10.0) {
    std::string best;
    double best_dist = -1.0;
    for (const auto& [uid, p] : scene.anchors.entries) {
        bool visible = true;
        for (double yaw : yaw_angles) {
            Pose pose = base_pose;
            pose.yaw_gamma = yaw;
            try {
                const PixelPoint px = project(p, pose, scene.intrinsics, true_center);
                if (px.u < margin_px || px.u > scene.intrinsics.resolution_u - margin_px ||
                    px.v < margin_px || px.v > scene.intrinsics.resolution_v - margin_px) {
                    visible = false;
                    break;
                }
            } catch (const Error&) {
                visible = false;
                break;
            }
        }
        if (!visible) continue;
        const double d = (p.plan() - base_pose.position.plan()).norm();
        if (d > best_dist) {
            best_dist = d;
            best = uid;
        }
    }
    if (best.empty())
        throw NoVisibleAnchors("rotation sweep: no anchor stays in-frame over the sweep");
    return best;
}

// Rotation-calibration sweep: the receiver sits still and yaws through the
// given headings; the tracked anchor's detection at each heading is one
// sample for the circle fit.
inline std::vector<RotationSweepSample> run_rotation_sweep(const Scene& scene,
                                                           const ErrorModel& err,
                                                           const RotationSweepSpec& spec) {
    scene.validate();
    err.validate();
    validate_experiment(scene, spec);
    std::vector<double> angles = spec.yaw_angles_rad;
    if (angles.empty())
        angles = default_sweep_angles(err.seed, spec.default_count, spec.default_jitter_deg);

    Pose base;
    base.position = {spec.position_mm.x(), spec.position_mm.y(), spec.height_mm};
    const PixelPoint true_center =
        err.true_rotation_center.value_or(scene.intrinsics.principal_point);
    const std::string tracked = spec.tracked_uid.empty()
                                    ? pick_tracked_anchor(scene, base, angles, true_center)
                                    : spec.tracked_uid;
    scene.anchors.at(tracked);

    std::vector<RotationSweepSample> samples;
    samples.reserve(angles.size());
    for (std::size_t k = 0; k < angles.size(); ++k) {
        Pose pose = base;
        pose.yaw_gamma = angles[k];
        const Frame frame = generate_frame(scene, pose, err, derive_seed(err.seed, k, "sweep"),
                                           static_cast<double>(k));
        const Detection* hit = nullptr;
        for (const auto& d : frame.detections)
            if (d.uid == tracked) hit = &d;
        if (!hit)
            throw NoVisibleAnchors("rotation sweep: tracked anchor '" + tracked +
                                   "' not visible at yaw index " + std::to_string(k));
        samples.push_back({static_cast<int>(k), hit->centroid});
    }
    return samples;
}

// Collects raw plan estimates with the receiver at a known reference point,
// the input of dispersion calibration.
inline std::vector<Eigen::Vector2d> collect_dispersion_samples(const Scene& scene,
                                                               const ErrorModel& err,
                                                               const DispersionSpec& spec,
                                                               const CalibrationState& calib = {},
                                                               int threads = 1) {
    scene.validate();
    err.validate();
    validate_experiment(scene, spec);

    std::vector<Eigen::Vector2d> samples(spec.samples);
    std::vector<std::string> failures(spec.samples);
    detail::parallel_for_trials(spec.samples, threads, [&](std::size_t idx) {
        Pose pose;
        pose.position = {spec.reference_mm.x(), spec.reference_mm.y(), spec.height_mm};
        const std::uint64_t trial_seed = derive_seed(err.seed, idx, "dispersion");
        pose.yaw_gamma = detail::trial_yaw(spec.yaw_mode, spec.fixed_yaw_rad, trial_seed);
        const TrialRecord rec = detail::run_trial(scene, err, pose, calib, trial_seed,
                                                  static_cast<double>(idx));
        if (!rec.estimate) {
            failures[idx] = rec.status;
            return;
        }
        samples[idx] = rec.estimate->position.plan();
    });
    for (std::size_t i = 0; i < failures.size(); ++i)
        if (!failures[i].empty())
            throw DegenerateGeometry("dispersion sample " + std::to_string(i) + " failed: " +
                                     failures[i]);
    return samples;
}

}  // namespace vlp
