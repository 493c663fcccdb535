#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlp/errors.hpp"
#include "vlp/rng.hpp"
#include "vlp/simulator.hpp"

namespace vlp {

enum class ExperimentType { static_grid, dynamic, rotation_sweep, dispersion };

inline const char* to_string(ExperimentType t) {
    switch (t) {
        case ExperimentType::static_grid:    return "static_grid";
        case ExperimentType::dynamic:        return "dynamic";
        case ExperimentType::rotation_sweep: return "rotation_sweep";
        case ExperimentType::dispersion:     return "dispersion";
    }
    return "?";
}

// A fully validated scenario: scene, error model, and one experiment block.
struct RunConfig {
    std::uint64_t seed = 0;
    Scene scene;
    ErrorModel error;
    ExperimentType experiment = ExperimentType::static_grid;
    StaticGridSpec static_grid;
    DynamicSpec dynamic;
    RotationSweepSpec sweep;
    DispersionSpec dispersion;
    nlohmann::json raw;  // the parsed config, for hashing and provenance
};

namespace detail {

inline const char* json_type_name(const nlohmann::json& j) {
    if (j.is_number()) return "number";
    return j.type_name();
}

// Strict object reader: every key must be known and well-typed, so config
// typos fail loudly with the offending field path.
class JsonReader {
  public:
    JsonReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const nlohmann::json& require(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) throw ConfigError(path_ + "." + key + " is required");
        return *it;
    }

    template <class T>
    T get(const std::string& key) {
        return convert<T>(require(key), path_ + "." + key);
    }

    template <class T>
    T get_or(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        return convert<T>(j_[key], path_ + "." + key);
    }

    Eigen::Vector2d get_vec2(const std::string& key) {
        const nlohmann::json& v = require(key);
        if (!v.is_array() || v.size() != 2)
            throw ConfigError(path_ + "." + key + " must be a 2-element array");
        return {convert<double>(v[0], path_ + "." + key + "[0]"),
                convert<double>(v[1], path_ + "." + key + "[1]")};
    }

    Eigen::Vector2d get_vec2_or(const std::string& key, Eigen::Vector2d fallback) {
        if (!has(key)) return fallback;
        return get_vec2(key);
    }

    JsonReader object(const std::string& key) { return {require(key), path_ + "." + key}; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.contains(it.key()))
                throw ConfigError(path_ + "." + it.key() + " is not a recognized field");
    }

    const nlohmann::json& json() const { return j_; }
    const std::string& path() const { return path_; }

    template <class T>
    static T convert(const nlohmann::json& v, const std::string& path) {
        try {
            if constexpr (std::is_arithmetic_v<T> && !std::is_same_v<T, bool>) {
                if (!v.is_number()) throw ConfigError(path + " must be a number");
            }
            return v.get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(path + " has the wrong type (" + json_type_name(v) + ")");
        }
    }

  private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

// yaw: the string "random" or a fixed heading in degrees.
inline void parse_yaw(JsonReader& r, YawMode& mode, double& fixed_rad) {
    if (!r.has("yaw")) return;
    const nlohmann::json& v = r.json().at("yaw");
    if (v.is_string()) {
        if (v.get<std::string>() != "random")
            throw ConfigError(r.path() + ".yaw must be \"random\" or a number (degrees)");
        mode = YawMode::uniform_random;
    } else if (v.is_number()) {
        mode = YawMode::fixed;
        fixed_rad = normalize_angle(deg_to_rad(v.get<double>()));
    } else {
        throw ConfigError(r.path() + ".yaw must be \"random\" or a number (degrees)");
    }
}

}  // namespace detail

inline CameraIntrinsics parse_intrinsics(const nlohmann::json& j, const std::string& path) {
    detail::JsonReader r(j, path);
    CameraIntrinsics intr;
    intr.focal_length_mm = r.get_or("focal_length_mm", 3.0);
    intr.pixel_pitch_u_mm = r.get_or("pixel_pitch_u_mm", 0.003);
    intr.pixel_pitch_v_mm = r.get_or("pixel_pitch_v_mm", 0.003);
    intr.resolution_u = r.get_or("resolution_u", 800);
    intr.resolution_v = r.get_or("resolution_v", 600);
    intr.principal_point.u = r.get_or("principal_point_u", intr.resolution_u / 2.0);
    intr.principal_point.v = r.get_or("principal_point_v", intr.resolution_v / 2.0);
    r.finish();
    try {
        intr.validate();
    } catch (const Error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return intr;
}

// `base_dir` anchors relative file references (the anchors CSV path).
inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    detail::JsonReader top(j, "config");
    RunConfig cfg;
    cfg.raw = j;
    cfg.seed = top.get_or<std::uint64_t>("seed", 0);

    {
        detail::JsonReader scene = top.object("scene");
        {
            detail::JsonReader room = scene.object("room_mm");
            cfg.scene.room_l_mm = room.get<double>("l");
            cfg.scene.room_w_mm = room.get<double>("w");
            cfg.scene.room_h_mm = room.get<double>("h");
            room.finish();
        }
        if (scene.has("intrinsics"))
            cfg.scene.intrinsics =
                parse_intrinsics(scene.json().at("intrinsics"), "config.scene.intrinsics");
        cfg.scene.anchors.ceiling_z_tolerance_mm = scene.get_or("ceiling_z_tolerance_mm", 1.0);

        const nlohmann::json& anchors = scene.require("anchors");
        if (anchors.is_string()) {
            const std::filesystem::path p = anchors.get<std::string>();
            const std::filesystem::path full = p.is_absolute() ? p : base_dir / p;
            if (!std::filesystem::exists(full))
                throw ConfigError("config.scene.anchors: file does not exist: " + full.string());
            const double tol = cfg.scene.anchors.ceiling_z_tolerance_mm;
            cfg.scene.anchors = load_anchor_table(full);
            cfg.scene.anchors.ceiling_z_tolerance_mm = tol;
        } else if (anchors.is_array()) {
            for (std::size_t i = 0; i < anchors.size(); ++i) {
                detail::JsonReader a(anchors[i],
                                     "config.scene.anchors[" + std::to_string(i) + "]");
                const std::string uid = a.get<std::string>("uid");
                WorldPoint p{a.get<double>("x_mm"), a.get<double>("y_mm"), a.get<double>("z_mm")};
                a.finish();
                if (!cfg.scene.anchors.entries.emplace(uid, p).second)
                    throw ConfigError("config.scene.anchors: duplicate uid '" + uid + "'");
            }
        } else {
            throw ConfigError("config.scene.anchors must be a file path or an inline array");
        }
        scene.finish();
    }

    if (top.has("error")) {
        detail::JsonReader err(j.at("error"), "config.error");
        if (err.has("true_rotation_center") && !j["error"]["true_rotation_center"].is_null()) {
            detail::JsonReader c(j["error"]["true_rotation_center"],
                                 "config.error.true_rotation_center");
            cfg.error.true_rotation_center = PixelPoint{c.get<double>("u"), c.get<double>("v")};
            c.finish();
        }
        cfg.error.anchor_position_noise_mm = err.get_or("anchor_position_noise_mm", 0.0);
        cfg.error.pixel_noise_sigma_px = err.get_or("pixel_noise_sigma_px", 0.0);
        cfg.error.constant_plan_shift_mm =
            err.get_vec2_or("constant_plan_shift_mm", Eigen::Vector2d::Zero());
        cfg.error.quantize_pixels = err.get_or("quantize_pixels", false);
        err.finish();
    }
    cfg.error.seed = cfg.seed;

    {
        detail::JsonReader exp = top.object("experiment");
        const std::string type = exp.get<std::string>("type");
        if (type == "static_grid") {
            cfg.experiment = ExperimentType::static_grid;
            auto& g = cfg.static_grid;
            if (exp.has("plan_rect_mm")) {
                const nlohmann::json& rect = exp.json().at("plan_rect_mm");
                if (!rect.is_array() || rect.size() != 2 || !rect[0].is_array() ||
                    rect[0].size() != 2 || !rect[1].is_array() || rect[1].size() != 2)
                    throw ConfigError("config.experiment.plan_rect_mm must be [[x0,y0],[x1,y1]]");
                g.rect_min = {detail::JsonReader::convert<double>(
                                  rect[0][0], "config.experiment.plan_rect_mm[0][0]"),
                              detail::JsonReader::convert<double>(
                                  rect[0][1], "config.experiment.plan_rect_mm[0][1]")};
                g.rect_max = {detail::JsonReader::convert<double>(
                                  rect[1][0], "config.experiment.plan_rect_mm[1][0]"),
                              detail::JsonReader::convert<double>(
                                  rect[1][1], "config.experiment.plan_rect_mm[1][1]")};
            }
            g.rows = exp.get_or("rows", 6);
            g.cols = exp.get_or("cols", 6);
            g.reps = exp.get_or("reps", 12);
            if (exp.has("heights_mm"))
                g.heights_mm =
                    detail::JsonReader::convert<std::vector<double>>(
                        exp.json().at("heights_mm"), "config.experiment.heights_mm");
            detail::parse_yaw(exp, g.yaw_mode, g.fixed_yaw_rad);
        } else if (type == "dynamic") {
            cfg.experiment = ExperimentType::dynamic;
            auto& d = cfg.dynamic;
            d.start_mm = exp.get_vec2("start_mm");
            d.end_mm = exp.get_vec2("end_mm");
            d.speed_mm_s = exp.get_or("speed_mm_s", 40.0);
            d.frame_rate_hz = exp.get_or("frame_rate_hz", 10.0);
            d.height_mm = exp.get_or("height_mm", 300.0);
            detail::parse_yaw(exp, d.yaw_mode, d.fixed_yaw_rad);
        } else if (type == "rotation_sweep") {
            cfg.experiment = ExperimentType::rotation_sweep;
            auto& s = cfg.sweep;
            s.position_mm = exp.get_vec2("position_mm");
            s.height_mm = exp.get_or("height_mm", 300.0);
            s.default_count = exp.get_or("count", 12);
            s.default_jitter_deg = exp.get_or("jitter_deg", 5.0);
            s.tracked_uid = exp.get_or<std::string>("tracked_uid", "");
            if (exp.has("angles_deg")) {
                const auto degs = detail::JsonReader::convert<std::vector<double>>(
                    exp.json().at("angles_deg"), "config.experiment.angles_deg");
                for (double d : degs)
                    s.yaw_angles_rad.push_back(normalize_angle(detail::deg_to_rad(d)));
            }
        } else if (type == "dispersion") {
            cfg.experiment = ExperimentType::dispersion;
            auto& d = cfg.dispersion;
            d.reference_mm = exp.get_vec2("reference_mm");
            d.height_mm = exp.get_or("height_mm", 300.0);
            d.samples = exp.get_or("samples", 100);
            detail::parse_yaw(exp, d.yaw_mode, d.fixed_yaw_rad);
        } else {
            throw ConfigError("config.experiment.type must be one of static_grid, dynamic, "
                              "rotation_sweep, dispersion");
        }
        exp.finish();
    }
    top.finish();

    // Full validation now, before any side effect.
    cfg.scene.validate();
    cfg.error.validate();
    switch (cfg.experiment) {
        case ExperimentType::static_grid: validate_experiment(cfg.scene, cfg.static_grid); break;
        case ExperimentType::dynamic: validate_experiment(cfg.scene, cfg.dynamic); break;
        case ExperimentType::rotation_sweep: validate_experiment(cfg.scene, cfg.sweep); break;
        case ExperimentType::dispersion: validate_experiment(cfg.scene, cfg.dispersion); break;
    }
    return cfg;
}

inline RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config file " + path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

// 64-bit FNV-1a over the canonical (key-sorted) JSON dump; identifies the
// exact scenario in reports.
inline std::string config_hash(const nlohmann::json& j) {
    const std::uint64_t h = fnv1a64(j.dump());
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// --- bundled presets (Table-1 room, f = 3 mm, 800x600 sensor) ---

namespace presets {

// The combined error model used by the tuned presets: a +4/-2 px fabrication
// offset of the rotation center, a (13, -10) mm coordinate-conversion shift,
// 0.3 px detection noise, 1 mm installation error.
inline constexpr const char* kStatic3Led = R"json({
  "seed": 1,
  "scene": {
    "room_mm": {"l": 2000.0, "w": 1100.0, "h": 1600.0},
    "ceiling_z_tolerance_mm": 1.0,
    "intrinsics": {
      "focal_length_mm": 3.0,
      "pixel_pitch_u_mm": 0.006,
      "pixel_pitch_v_mm": 0.006,
      "principal_point_u": 400.0,
      "principal_point_v": 300.0,
      "resolution_u": 800,
      "resolution_v": 600
    },
    "anchors": [
      {"uid": "L1", "x_mm": 300.0, "y_mm": 400.0, "z_mm": 1600.0},
      {"uid": "L2", "x_mm": 500.0, "y_mm": 400.0, "z_mm": 1600.0},
      {"uid": "L3", "x_mm": 400.0, "y_mm": 300.0, "z_mm": 1600.0}
    ]
  },
  "error": {
    "true_rotation_center": {"u": 404.0, "v": 298.0},
    "anchor_position_noise_mm": 1.0,
    "pixel_noise_sigma_px": 0.3,
    "constant_plan_shift_mm": [13.0, -10.0],
    "quantize_pixels": false
  },
  "experiment": {
    "type": "static_grid",
    "plan_rect_mm": [[100.0, 100.0], [700.0, 700.0]],
    "rows": 6, "cols": 6, "reps": 12,
    "heights_mm": [300.0],
    "yaw": "random"
  }
})json";

inline constexpr const char* kStatic2Led = R"json({
  "seed": 1,
  "scene": {
    "room_mm": {"l": 2000.0, "w": 1100.0, "h": 1600.0},
    "ceiling_z_tolerance_mm": 1.0,
    "intrinsics": {
      "focal_length_mm": 3.0,
      "pixel_pitch_u_mm": 0.006,
      "pixel_pitch_v_mm": 0.006,
      "principal_point_u": 400.0,
      "principal_point_v": 300.0,
      "resolution_u": 800,
      "resolution_v": 600
    },
    "anchors": [
      {"uid": "L1", "x_mm": 300.0, "y_mm": 400.0, "z_mm": 1600.0},
      {"uid": "L2", "x_mm": 500.0, "y_mm": 400.0, "z_mm": 1600.0}
    ]
  },
  "error": {
    "true_rotation_center": {"u": 404.0, "v": 298.0},
    "anchor_position_noise_mm": 1.0,
    "pixel_noise_sigma_px": 0.3,
    "constant_plan_shift_mm": [13.0, -10.0],
    "quantize_pixels": false
  },
  "experiment": {
    "type": "static_grid",
    "plan_rect_mm": [[100.0, 100.0], [700.0, 700.0]],
    "rows": 6, "cols": 6, "reps": 12,
    "heights_mm": [300.0],
    "yaw": "random"
  }
})json";

inline constexpr const char* kDynamic2Led = R"json({
  "seed": 1,
  "scene": {
    "room_mm": {"l": 2000.0, "w": 1100.0, "h": 1600.0},
    "ceiling_z_tolerance_mm": 1.0,
    "intrinsics": {
      "focal_length_mm": 3.0,
      "pixel_pitch_u_mm": 0.006,
      "pixel_pitch_v_mm": 0.006,
      "principal_point_u": 400.0,
      "principal_point_v": 300.0,
      "resolution_u": 800,
      "resolution_v": 600
    },
    "anchors": [
      {"uid": "D1", "x_mm": 900.0, "y_mm": 550.0, "z_mm": 1600.0},
      {"uid": "D2", "x_mm": 1100.0, "y_mm": 550.0, "z_mm": 1600.0}
    ]
  },
  "error": {
    "true_rotation_center": {"u": 404.0, "v": 298.0},
    "anchor_position_noise_mm": 1.0,
    "pixel_noise_sigma_px": 0.3,
    "constant_plan_shift_mm": [13.0, -10.0],
    "quantize_pixels": false
  },
  "experiment": {
    "type": "dynamic",
    "start_mm": [650.0, 550.0],
    "end_mm": [1350.0, 550.0],
    "speed_mm_s": 40.0,
    "frame_rate_hz": 10.0,
    "height_mm": 300.0,
    "yaw": 0.0
  }
})json";

inline constexpr const char* kRotationSweep = R"json({
  "seed": 1,
  "scene": {
    "room_mm": {"l": 2000.0, "w": 1100.0, "h": 1600.0},
    "ceiling_z_tolerance_mm": 1.0,
    "intrinsics": {
      "focal_length_mm": 3.0,
      "pixel_pitch_u_mm": 0.006,
      "pixel_pitch_v_mm": 0.006,
      "principal_point_u": 400.0,
      "principal_point_v": 300.0,
      "resolution_u": 800,
      "resolution_v": 600
    },
    "anchors": [
      {"uid": "L1", "x_mm": 300.0, "y_mm": 400.0, "z_mm": 1600.0},
      {"uid": "L2", "x_mm": 500.0, "y_mm": 400.0, "z_mm": 1600.0},
      {"uid": "L3", "x_mm": 400.0, "y_mm": 300.0, "z_mm": 1600.0}
    ]
  },
  "error": {
    "true_rotation_center": {"u": 404.0, "v": 298.0},
    "anchor_position_noise_mm": 1.0,
    "pixel_noise_sigma_px": 0.3,
    "constant_plan_shift_mm": [13.0, -10.0],
    "quantize_pixels": false
  },
  "experiment": {
    "type": "rotation_sweep",
    "position_mm": [300.0, 550.0],
    "height_mm": 300.0,
    "count": 12,
    "jitter_deg": 5.0
  }
})json";

inline constexpr const char* kDispersion = R"json({
  "seed": 1,
  "scene": {
    "room_mm": {"l": 2000.0, "w": 1100.0, "h": 1600.0},
    "ceiling_z_tolerance_mm": 1.0,
    "intrinsics": {
      "focal_length_mm": 3.0,
      "pixel_pitch_u_mm": 0.006,
      "pixel_pitch_v_mm": 0.006,
      "principal_point_u": 400.0,
      "principal_point_v": 300.0,
      "resolution_u": 800,
      "resolution_v": 600
    },
    "anchors": [
      {"uid": "L1", "x_mm": 300.0, "y_mm": 400.0, "z_mm": 1600.0},
      {"uid": "L2", "x_mm": 500.0, "y_mm": 400.0, "z_mm": 1600.0},
      {"uid": "L3", "x_mm": 400.0, "y_mm": 300.0, "z_mm": 1600.0}
    ]
  },
  "error": {
    "true_rotation_center": {"u": 404.0, "v": 298.0},
    "anchor_position_noise_mm": 1.0,
    "pixel_noise_sigma_px": 0.3,
    "constant_plan_shift_mm": [13.0, -10.0],
    "quantize_pixels": false
  },
  "experiment": {
    "type": "dispersion",
    "reference_mm": [400.0, 400.0],
    "height_mm": 300.0,
    "samples": 100,
    "yaw": "random"
  }
})json";

inline constexpr const char* kSmoke = R"json({
  "seed": 1,
  "scene": {
    "room_mm": {"l": 2000.0, "w": 1100.0, "h": 1600.0},
    "anchors": [
      {"uid": "L1", "x_mm": 300.0, "y_mm": 400.0, "z_mm": 1600.0},
      {"uid": "L2", "x_mm": 500.0, "y_mm": 400.0, "z_mm": 1600.0}
    ],
    "intrinsics": {
      "pixel_pitch_u_mm": 0.006,
      "pixel_pitch_v_mm": 0.006
    }
  },
  "experiment": {
    "type": "static_grid",
    "plan_rect_mm": [[200.0, 300.0], [600.0, 500.0]],
    "rows": 3, "cols": 3, "reps": 2,
    "heights_mm": [300.0],
    "yaw": 15.0
  }
})json";

}  // namespace presets

inline const std::map<std::string, const char*>& preset_table() {
    static const std::map<std::string, const char*> table = {
        {"static-3led", presets::kStatic3Led},   {"static-2led", presets::kStatic2Led},
        {"dynamic-2led", presets::kDynamic2Led}, {"rotation-sweep", presets::kRotationSweep},
        {"dispersion", presets::kDispersion},    {"smoke", presets::kSmoke},
    };
    return table;
}

inline std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, _] : preset_table()) names.push_back(name);
    return names;
}

inline RunConfig load_preset(const std::string& name) {
    auto it = preset_table().find(name);
    if (it == preset_table().end()) {
        std::string msg = "unknown preset '" + name + "'; available:";
        for (const auto& n : preset_names()) msg += " " + n;
        throw ConfigError(msg);
    }
    return parse_config(nlohmann::json::parse(it->second), std::filesystem::current_path());
}

}  // namespace vlp
