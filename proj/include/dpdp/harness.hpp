#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpdp/env.hpp"
#include "dpdp/policy.hpp"
#include "dpdp/st_demand.hpp"

namespace dpdp {

struct Stat {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;

    double half_range() const { return (max - min) / 2.0; }
};

struct MetricSummary {
    std::size_t runs = 0;
    Stat nuv, ttl, tc;
};

// Throws std::invalid_argument on an empty list.
MetricSummary aggregate_metrics(std::span<const EpisodeReport> reports);

struct ResultRow {
    std::string instance;
    std::string policy;
    int repetition = 0;
    int nuv = 0;
    double ttl = 0.0;
    double tc = 0.0;
};

// instance,policy,repetition,nuv,ttl,tc with rows sorted by
// (policy, instance, repetition).
std::string results_csv(std::vector<ResultRow> rows);

// One row per policy, sorted by policy name:
// policy,runs,nuv_mean,nuv_min,nuv_max,ttl_mean,tc_mean,tc_min,tc_max,tc_half_range
std::string compare_csv(std::span<const ResultRow> rows);

// episode,nuv,ttl,tc; the header is written when the file is new.
void append_metrics_row(const std::filesystem::path& path, int episode, const EpisodeReport& report);

// Default output root: $DPDP_OUT, else "runs".
std::filesystem::path output_root();

// Writes config.json into dir (creating it).
void write_config_snapshot(const std::filesystem::path& dir, const nlohmann::json& config);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Factories as rows, intervals as columns, white to dark red.
std::string heatmap_svg(const StdMatrix& m, const std::string& title);

struct Series {
    std::string name;
    std::vector<double> x, y;
};

std::string curves_svg(std::span<const Series> series, const std::string& title, const std::string& x_label,
                       const std::string& y_label);

// Reads the given column of a learning-curve CSV as a series over `episode`.
// Empty cells are skipped.
Series read_curve(const std::filesystem::path& csv, const std::string& column);

// Trailing moving average with the given window.
std::vector<double> moving_average(std::span<const double> values, int window);

}  // namespace dpdp
