// vlp — visible-light-positioning toolkit CLI.
//
// Subcommands:
//   simulate             run a static-grid or dynamic scenario, emit a report
//   calibrate-rotation   run the yaw-sweep and fit the rotation center
//   calibrate-dispersion collect reference-point samples, fit the shift
//   solve                solve one recorded frame file
//   presets              list or dump the bundled scenario presets
//
// Exit codes: 0 success, 2 validation error (config/arguments), 3 runtime
// error. Errors are printed to stderr as one JSON object.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "vlp/vlp.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    std::string calibration_path;
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

void add_scenario_flags(CLI::App* cmd, CommonArgs& args, bool needs_out) {
    cmd->add_option("--config", args.config_path, "Scenario config file (JSON)");
    cmd->add_option("--preset", args.preset, "Bundled preset name (see `vlp presets`)");
    auto* out = cmd->add_option("--out", args.out_dir, "Output directory");
    if (needs_out) out->required();
    cmd->add_option("--calibration", args.calibration_path, "Calibration state file");
    cmd->add_option("--seed", args.seed, "Override the config seed");
    cmd->add_option("--threads", args.threads, "Max worker threads for trials")
        ->check(CLI::PositiveNumber);
}

vlp::RunConfig load_scenario(const CommonArgs& args) {
    if (args.config_path.empty() == args.preset.empty())
        throw vlp::ConfigError("exactly one of --config or --preset is required");
    vlp::RunConfig cfg = args.config_path.empty() ? vlp::load_preset(args.preset)
                                                  : vlp::load_config_file(args.config_path);
    if (args.seed) {
        cfg.seed = *args.seed;
        cfg.error.seed = *args.seed;
        cfg.raw["seed"] = *args.seed;
    }
    return cfg;
}

vlp::CalibrationState load_calibration_or_default(const std::string& path) {
    if (path.empty() || !fs::exists(path)) return {};
    return vlp::load_calibration(path);
}

double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

void print_summary_cm(const vlp::ErrorSummary& s, const std::string& label) {
    std::printf("%s: n=%zu (%zu failed)\n", label.c_str(), s.n, s.n_failed);
    std::printf("  mean %.3f cm   rms %.3f cm   p50 %.3f cm   p90 %.3f cm   max %.3f cm\n",
                s.mean_mm / 10.0, s.rms_mm / 10.0, s.p50_mm / 10.0, s.p90_mm / 10.0,
                s.max_mm / 10.0);
}

int cmd_simulate(const CommonArgs& args, bool dump_frames) {
    vlp::RunConfig cfg = load_scenario(args);
    if (cfg.experiment != vlp::ExperimentType::static_grid &&
        cfg.experiment != vlp::ExperimentType::dynamic)
        throw vlp::ConfigError("simulate needs a static_grid or dynamic experiment block");
    const vlp::CalibrationState calib = load_calibration_or_default(args.calibration_path);

    std::vector<vlp::TrialRecord> records;
    vlp::ErrorSummary summary;
    nlohmann::json extra;
    extra["experiment"] = vlp::to_string(cfg.experiment);
    if (cfg.experiment == vlp::ExperimentType::static_grid) {
        records = vlp::run_static_grid(cfg.scene, cfg.error, cfg.static_grid, calib,
                                       args.threads);
        summary = vlp::error_stats(records, /*plan_only=*/true);
        extra["error_metric"] = "plan_euclidean_vs_true";
    } else {
        records = vlp::run_dynamic(cfg.scene, cfg.error, cfg.dynamic, calib, args.threads);
        summary = vlp::dynamic_errors(records, cfg.dynamic.start_mm, cfg.dynamic.end_mm);
        extra["error_metric"] = "distance_to_command_line";
        extra["command_start_mm"] = {cfg.dynamic.start_mm.x(), cfg.dynamic.start_mm.y()};
        extra["command_end_mm"] = {cfg.dynamic.end_mm.x(), cfg.dynamic.end_mm.y()};

        std::vector<Eigen::Vector2d> est;
        for (const auto& r : records)
            if (r.estimate) est.push_back(r.estimate->position.plan());
        if (est.size() >= 2) {
            const vlp::FittedLine line = vlp::fit_line(est);
            const Eigen::Vector2d cmd_dir =
                (cfg.dynamic.end_mm - cfg.dynamic.start_mm).normalized();
            const double cosang = std::abs(cmd_dir.dot(line.direction));
            extra["fitted_line"] = {
                {"point_mm", {line.point.x(), line.point.y()}},
                {"direction", {line.direction.x(), line.direction.y()}},
                {"rms_residual_mm", line.rms_residual_mm},
                {"angle_to_command_deg", rad_to_deg(std::acos(std::min(cosang, 1.0)))},
            };
            // Diagnostic only; errors are measured against the command line.
            extra["estimate_endpoints_mm"] = {{est.front().x(), est.front().y()},
                                              {est.back().x(), est.back().y()}};
        }
    }

    vlp::ReportInfo info;
    info.out_dir = args.out_dir;
    info.seed = cfg.seed;
    info.config_hash = vlp::config_hash(cfg.raw);
    info.extra = extra;
    vlp::emit_report(summary, records, info);

    if (dump_frames) {
        const fs::path dir = fs::path(args.out_dir) / "frames";
        fs::create_directories(dir);
        char name[32];
        for (std::size_t i = 0; i < records.size(); ++i) {
            std::snprintf(name, sizeof name, "frame_%06zu.csv", i);
            vlp::save_frame_csv(records[i].frame, dir / name);
        }
    }

    print_summary_cm(summary, cfg.experiment == vlp::ExperimentType::static_grid
                                  ? "static grid"
                                  : "dynamic run");
    std::printf("report written to %s\n", args.out_dir.c_str());
    return 0;
}

int cmd_calibrate_rotation(const CommonArgs& args) {
    vlp::RunConfig cfg = load_scenario(args);
    if (cfg.experiment != vlp::ExperimentType::rotation_sweep)
        throw vlp::ConfigError("calibrate-rotation needs a rotation_sweep experiment block");
    if (args.calibration_path.empty())
        throw vlp::ConfigError("--calibration <output file> is required");

    const auto samples = vlp::run_rotation_sweep(cfg.scene, cfg.error, cfg.sweep);
    vlp::CalibrationState state = load_calibration_or_default(args.calibration_path);
    state = vlp::calibrate_rotation_center(samples, state);
    vlp::save_calibration(state, args.calibration_path);

    std::printf("rotation center: (%.6f, %.6f) px, fit residual %.6f px, sweep span %.1f deg\n",
                state.rotation_center->u, state.rotation_center->v,
                state.provenance.rotation_rms_residual_px,
                state.provenance.rotation_sweep_span_deg);
    if (state.provenance.insufficient_sweep)
        std::fprintf(stderr,
                     "warning: sweep covers %.1f deg (< 180); the fit may be ill-conditioned\n",
                     state.provenance.rotation_sweep_span_deg);
    std::printf("calibration written to %s\n", args.calibration_path.c_str());
    return 0;
}

int cmd_calibrate_dispersion(const CommonArgs& args) {
    vlp::RunConfig cfg = load_scenario(args);
    if (cfg.experiment != vlp::ExperimentType::dispersion)
        throw vlp::ConfigError("calibrate-dispersion needs a dispersion experiment block");
    if (args.calibration_path.empty())
        throw vlp::ConfigError("--calibration <output file> is required");

    vlp::CalibrationState state = load_calibration_or_default(args.calibration_path);
    const auto samples = vlp::collect_dispersion_samples(cfg.scene, cfg.error, cfg.dispersion,
                                                         state, args.threads);
    state = vlp::calibrate_dispersion(samples, cfg.dispersion.reference_mm, state);
    vlp::save_calibration(state, args.calibration_path);

    std::printf("dispersion offset: (%.6f, %.6f) mm, radius %.6f mm, %d samples\n",
                state.dispersion_offset_mm.x(), state.dispersion_offset_mm.y(),
                state.dispersion_radius_mm, state.provenance.dispersion_samples);
    std::printf("calibration written to %s\n", args.calibration_path.c_str());
    return 0;
}

int cmd_solve(const CommonArgs& args, const std::string& frame_path,
              const std::string& anchors_path) {
    vlp::RunConfig cfg = load_scenario(args);
    const vlp::AnchorTable anchors = vlp::load_anchor_table(anchors_path);
    const vlp::Frame frame = vlp::load_frame_csv(frame_path);
    const vlp::CalibrationState calib = load_calibration_or_default(args.calibration_path);

    const vlp::PoseEstimate est = vlp::solve_pose(frame, anchors, cfg.scene.intrinsics, calib);
    nlohmann::json j;
    j["x_mm"] = est.position.x;
    j["y_mm"] = est.position.y;
    j["z_mm"] = est.position.z;
    j["yaw_rad"] = est.yaw;
    j["yaw_deg"] = rad_to_deg(est.yaw);
    j["height_H_mm"] = est.height_H;
    j["n_leds_used"] = est.n_leds_used;
    j["plan_residual_mm"] = est.plan_residual_mm;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_presets(const std::string& dump_dir) {
    if (dump_dir.empty()) {
        for (const auto& name : vlp::preset_names()) std::printf("%s\n", name.c_str());
        return 0;
    }
    fs::create_directories(dump_dir);
    for (const auto& name : vlp::preset_names()) {
        const fs::path p = fs::path(dump_dir) / (name + ".json");
        std::ofstream out(p);
        out << nlohmann::json::parse(vlp::preset_table().at(name)).dump(2) << "\n";
        std::printf("wrote %s\n", p.string().c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"visible light positioning toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    bool dump_frames = false;
    std::string frame_path, anchors_path, dump_dir;

    auto* simulate = app.add_subcommand("simulate", "run a scenario and emit a report");
    add_scenario_flags(simulate, args, /*needs_out=*/true);
    simulate->add_flag("--dump-frames", dump_frames, "Also write every frame as uid,u,v CSV");

    auto* cal_rot = app.add_subcommand("calibrate-rotation", "fit the rotation center (u1, v1)");
    add_scenario_flags(cal_rot, args, /*needs_out=*/false);

    auto* cal_disp =
        app.add_subcommand("calibrate-dispersion", "fit the dispersion-circle shift");
    add_scenario_flags(cal_disp, args, /*needs_out=*/false);

    auto* solve = app.add_subcommand("solve", "solve one recorded frame");
    add_scenario_flags(solve, args, /*needs_out=*/false);
    solve->add_option("--frame", frame_path, "Frame file (uid,u,v rows)")->required();
    solve->add_option("--anchors", anchors_path, "Anchor table (uid,x_mm,y_mm,z_mm)")->required();

    auto* presets = app.add_subcommand("presets", "list bundled presets");
    presets->add_option("--dump", dump_dir, "Write the preset configs into a directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(args, dump_frames);
        if (cal_rot->parsed()) return cmd_calibrate_rotation(args);
        if (cal_disp->parsed()) return cmd_calibrate_dispersion(args);
        if (solve->parsed()) return cmd_solve(args, frame_path, anchors_path);
        if (presets->parsed()) return cmd_presets(dump_dir);
    } catch (const vlp::Error& e) {
        nlohmann::json j;
        j["error"] = vlp::to_string(e.code());
        j["message"] = e.what();
        std::cerr << j.dump() << "\n";
        return e.is_validation() ? kExitValidation : kExitRuntime;
    } catch (const std::exception& e) {
        nlohmann::json j;
        j["error"] = "InternalError";
        j["message"] = e.what();
        std::cerr << j.dump() << "\n";
        return kExitRuntime;
    }
    return 0;
}
