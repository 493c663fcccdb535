#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vlp/errors.hpp"
#include "vlp/simulator.hpp"

namespace vlp {

struct ErrorSummary {
    std::size_t n = 0;         // successful trials
    std::size_t n_failed = 0;  // recorded failures
    double mean_mm = 0.0;
    double rms_mm = 0.0;
    double max_mm = 0.0;
    double p50_mm = 0.0;  // nearest-rank percentiles
    double p90_mm = 0.0;
    std::vector<std::pair<double, double>> cdf;  // (error_mm, cumulative fraction)

    // Per-record error aligned with the input records; empty entry = failed
    // trial. Lets reports carry exactly the values the summary was built from.
    std::vector<std::optional<double>> per_record_mm;
};

// Summarizes a set of per-record errors; `values` entries that are empty count
// as failures. Percentiles use the nearest-rank convention so every reported
// percentile is a realized sample.
inline ErrorSummary summarize_errors(std::vector<std::optional<double>> values) {
    ErrorSummary s;
    std::vector<double> ok;
    ok.reserve(values.size());
    for (const auto& v : values) {
        if (v)
            ok.push_back(*v);
        else
            ++s.n_failed;
    }
    if (ok.empty()) throw EmptyInput("error summary: no successful records");

    s.per_record_mm = std::move(values);
    s.n = ok.size();
    std::sort(ok.begin(), ok.end());
    double sum = 0.0, sum2 = 0.0;
    for (double e : ok) {
        sum += e;
        sum2 += e * e;
    }
    s.mean_mm = sum / static_cast<double>(s.n);
    s.rms_mm = std::sqrt(sum2 / static_cast<double>(s.n));
    s.max_mm = ok.back();
    auto nearest_rank = [&](double q) {
        const std::size_t rank = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(s.n)));
        return ok[std::max<std::size_t>(rank, 1) - 1];
    };
    s.p50_mm = nearest_rank(0.50);
    s.p90_mm = nearest_rank(0.90);
    s.cdf.reserve(s.n);
    for (std::size_t i = 0; i < s.n; ++i)
        s.cdf.emplace_back(ok[i], static_cast<double>(i + 1) / static_cast<double>(s.n));
    return s;
}

// Euclidean positioning error of each trial against its true pose, plan-only
// (2-D) or full 3-D.
inline ErrorSummary error_stats(std::span<const TrialRecord> records, bool plan_only) {
    if (records.empty()) throw EmptyInput("error_stats: no records");
    std::vector<std::optional<double>> values(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.estimate) continue;
        if (plan_only) {
            values[i] = (r.estimate->position.plan() - r.true_pose.position.plan()).norm();
        } else {
            values[i] = (r.estimate->position.vec() - r.true_pose.position.vec()).norm();
        }
    }
    return summarize_errors(std::move(values));
}

struct FittedLine {
    Eigen::Vector2d point{0.0, 0.0};      // centroid of the fit
    Eigen::Vector2d direction{1.0, 0.0};  // unit vector
    double rms_residual_mm = 0.0;         // RMS perpendicular distance
};

// Total-least-squares line: principal direction of the centered point set.
// Handles vertical trajectories, which an y-on-x regression would not.
inline FittedLine fit_line(std::span<const Eigen::Vector2d> points) {
    if (points.size() < 2) throw InvalidInput("fit_line: need at least 2 points");
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());

    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : points) {
        const Eigen::Vector2d q = p - centroid;
        cov += q * q.transpose();
    }
    if (cov.trace() < 1e-18) throw DegenerateGeometry("fit_line: all points coincide");

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    FittedLine line;
    line.point = centroid;
    line.direction = eig.eigenvectors().col(1);  // largest eigenvalue
    // Canonical orientation so the fit is reproducible.
    if (line.direction.x() < 0.0 ||
        (line.direction.x() == 0.0 && line.direction.y() < 0.0))
        line.direction = -line.direction;
    const double perp_ss = std::max(eig.eigenvalues()(0), 0.0);
    line.rms_residual_mm = std::sqrt(perp_ss / static_cast<double>(points.size()));
    return line;
}

// Distance from a point to the segment [a, b], clamped at the segment ends.
inline double distance_to_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                                  const Eigen::Vector2d& b) {
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 <= 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

// Dynamic positioning error: perpendicular distance of each estimate to the
// command trajectory (the reference the run was driven with).
inline ErrorSummary dynamic_errors(std::span<const TrialRecord> records,
                                   const Eigen::Vector2d& command_start,
                                   const Eigen::Vector2d& command_end) {
    if (records.empty()) throw EmptyInput("dynamic_errors: no records");
    if ((command_end - command_start).norm() < kMinImageDistanceMm)
        throw DegenerateGeometry("dynamic_errors: degenerate command line");
    std::vector<std::optional<double>> values(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.estimate) continue;
        values[i] = distance_to_segment(r.estimate->position.plan(), command_start, command_end);
    }
    return summarize_errors(std::move(values));
}

struct ReportInfo {
    std::filesystem::path out_dir;
    std::uint64_t seed = 0;
    std::string config_hash;
    nlohmann::json extra;  // experiment-specific fields merged into the summary
};

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// Writes the full report set: raw trials CSV, CDF CSV, and a JSON summary.
// Machine units throughout (mm, radians); values are printed with enough
// digits to round-trip exactly.
inline void emit_report(const ErrorSummary& summary, std::span<const TrialRecord> records,
                        const ReportInfo& info) {
    if (records.empty()) throw EmptyInput("emit_report: no records");
    if (summary.per_record_mm.size() != records.size())
        throw InvalidInput("emit_report: summary does not match the record list");

    std::filesystem::create_directories(info.out_dir);

    {
        std::ofstream out(info.out_dir / "trials.csv");
        if (!out) throw IoError("cannot write " + (info.out_dir / "trials.csv").string());
        out << "trial,true_x,true_y,true_z,true_yaw,est_x,est_y,est_z,est_yaw,err_mm,status\n";
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            out << i << ',' << detail::fmt_g17(r.true_pose.position.x) << ','
                << detail::fmt_g17(r.true_pose.position.y) << ','
                << detail::fmt_g17(r.true_pose.position.z) << ','
                << detail::fmt_g17(r.true_pose.yaw_gamma) << ',';
            if (r.estimate) {
                out << detail::fmt_g17(r.estimate->position.x) << ','
                    << detail::fmt_g17(r.estimate->position.y) << ','
                    << detail::fmt_g17(r.estimate->position.z) << ','
                    << detail::fmt_g17(r.estimate->yaw) << ','
                    << detail::fmt_g17(summary.per_record_mm[i].value()) << ',';
            } else {
                out << ",,,,,";
            }
            out << r.status << '\n';
        }
    }
    {
        std::ofstream out(info.out_dir / "cdf.csv");
        if (!out) throw IoError("cannot write " + (info.out_dir / "cdf.csv").string());
        out << "error_mm,fraction\n";
        for (const auto& [e, f] : summary.cdf)
            out << detail::fmt_g17(e) << ',' << detail::fmt_g17(f) << '\n';
    }
    {
        nlohmann::json j;
        j["n"] = summary.n;
        j["n_failed"] = summary.n_failed;
        j["mean_mm"] = summary.mean_mm;
        j["rms_mm"] = summary.rms_mm;
        j["max_mm"] = summary.max_mm;
        j["p50_mm"] = summary.p50_mm;
        j["p90_mm"] = summary.p90_mm;
        j["seed"] = info.seed;
        j["config_hash"] = info.config_hash;
        for (auto it = info.extra.begin(); it != info.extra.end(); ++it) j[it.key()] = it.value();
        std::ofstream out(info.out_dir / "summary.json");
        if (!out) throw IoError("cannot write " + (info.out_dir / "summary.json").string());
        out << j.dump(2) << "\n";
    }
}

}  // namespace vlp
