#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eventline/dataset.hpp"
#include "eventline/metrics.hpp"
#include "eventline/strategy.hpp"

namespace eventline {

// Sweep definition. Strategy grid = strategies x polarities x k_grid x
// omega_grid; one no-preprocessing row per polarity is always added.
struct Plan {
    int schema_version = 1;
    std::string data_dir;
    std::vector<std::string> strategies = {"ws", "ce", "cr", "cq-ad", "cq-id"};
    std::vector<std::string> polarities = {"merged", "split"};
    std::vector<int> k_grid = {1, 5, 10, 15, 20, 25, 30};
    std::vector<double> omega_grid = {1.0, 2.5, 5.0, 7.5, 10.0};
    std::vector<uint64_t> seeds = {1, 2, 3};
    uint32_t epochs = 10;
    std::optional<uint32_t> batch_size;  // dataset default when unset
    std::optional<double> threshold;     // dataset default when unset
    std::string out_dir;
    uint32_t workers = 1;
    bool cache = true;

    void validate() const;
};

Plan parse_plan(const std::string& json_text);
std::string plan_to_json(const Plan& p);

uint64_t plan_row_count(const Plan& p);

struct ReportRow {
    std::string dataset;
    std::string strategy; // "none" for the no-preprocessing rows
    std::string polarity;
    int k = 0;            // 0 on baseline rows
    double omega = 0;     // 0 on baseline rows
    std::vector<uint64_t> seeds;
    double accuracy = 0;
    double se_p = 0, se_c = 0, se = 0, wta = 0, e_pre = 0, e_raw = 0;
    double efficiency = 0;
    bool efficiency_defined = false;
    bool admissible = false;
    uint64_t neurons = 0, synapses = 0, max_fan_in = 0;
    double mean_fan_in = 0;
    std::string config_hash;
    std::string manifest_hash;
    std::string error; // non-empty marks a failed grid point

    bool is_baseline() const { return strategy == "none"; }
};

struct Report {
    int schema_version = 1;
    std::string dataset;
    std::string manifest_hash;
    double baseline_accuracy = 0; // max over the no-preprocessing rows
    std::vector<ReportRow> rows;

    bool has_errors() const;
};

// Runs the full grid. Failed grid points land in their row's error field and
// do not abort the sweep. With plan.cache, preprocessed samples and energy
// totals are reused from out_dir/cache across runs.
Report sweep(const Plan& plan, const LoadedData& data);

struct SelectedPoint {
    std::string strategy, polarity;
    size_t row = 0;
};

struct Selection {
    std::vector<SelectedPoint> best_accuracy;   // per (strategy, polarity)
    std::vector<SelectedPoint> best_efficiency; // admissible rows only
    std::vector<std::string> diagnostics;       // groups with nothing admissible
};

Selection select(const Report& report);

// "csv", "json" or "plotdata" (a directory of long-form tables).
void emit(const Report& report, const std::string& format, const std::string& path);

std::string report_to_csv(const Report& report);
std::string report_to_json(const Report& report);
Report report_from_json(const std::string& json_text);

// Single grid point (used by the CLI preprocess/train path and by sweep).
struct GridPointResult {
    ReportRow row;
    EnergyAccount account;
    std::vector<uint32_t> pixel_fan_out;
};

GridPointResult run_grid_point(const StrategyConfig& config, const LoadedData& data,
                               const Plan& plan, double baseline_accuracy_hint = -1.0);

// ---- preprocessing shared by sweep caching and `eventline preprocess` -------

struct PreprocessedData {
    std::vector<EventSample> train, test;
    EnergyAccount account; // accumulated over the test split
};

// Identity of one preprocessing configuration against one dataset; names the
// cache directory and guards stale entries.
std::string preprocess_key(const StrategyConfig& config, const LoadedData& data);

PreprocessedData preprocess_dataset(const PreprocessNetwork& net, const LoadedData& data);

// Writes a loadable preprocessed data directory plus an energy sidecar.
void save_preprocessed(const std::string& dir, const std::string& key,
                       const StrategyConfig& config, const PreprocessNetwork& net,
                       const LoadedData& data, const PreprocessedData& pp);

// False when absent, torn or written for a different key/dataset.
bool load_preprocessed(const std::string& dir, const std::string& key, const LoadedData& data,
                       PreprocessedData& out);

// Bin width fed to the classifier, for raw and preprocessed streams alike.
constexpr int64_t kClassifierBinUs = 1000;

} // namespace eventline
