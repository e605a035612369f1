#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eventline/event.hpp"
#include "eventline/geometry.hpp"

namespace eventline {

// Fixed per-dataset parameters (sensor, splits, temporal crop, classifier
// batch size and firing threshold).
struct DatasetSpec {
    std::string name;
    SensorGeometry geometry;
    uint32_t n_labels = 0;
    uint32_t train_count = 0;
    uint32_t test_count = 0;
    int64_t keep_us = 0;
    int64_t denoise_window_us = 10000;
    uint32_t batch_size = 0;
    double classifier_threshold = 0.0;
};

// Known names: pokerdvs, nmnist, dvsgesture, plus the synthetic stand-ins
// synth-poker (pokerdvs parameters) and synth-nmnist (nmnist parameters).
const DatasetSpec& dataset_spec(const std::string& name);
bool has_dataset_spec(const std::string& name);

// ATIS .bin recording (5-byte records: x, y, polarity bit + 23-bit
// microsecond timestamp, big-endian within the timestamp field).
EventSample read_atis_bin(const std::string& path, SensorGeometry geometry);

// validate + denoise + crop to the canonical duration
EventSample canonicalize(const EventSample& raw, int64_t denoise_window_us, int64_t keep_us);

// ---- synthetic fixtures ----------------------------------------------------

struct LineTruth {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    Side entry_side = Side::Top, exit_side = Side::Bottom;
    int entry_pos = 0, exit_pos = 0;
};

// Events along the segment between two border pixels, uniform in time,
// single-axis jitter of at most one pixel. events_per_sec fixes the count.
EventSample synth_moving_line(const SensorGeometry& g, Side entry_side, int entry_pos,
                              Side exit_side, int exit_pos, int64_t duration_us,
                              double events_per_sec, uint64_t seed, LineTruth* truth = nullptr);

// Two trivially separable classes: event clusters in the left or right half.
std::vector<EventSample> synth_two_class(const SensorGeometry& g, size_t n, uint64_t seed);

// 4-class line-glyph fixture on the pokerdvs geometry (35x35, 10 ms).
std::vector<EventSample> synth_pip_dataset(size_t n, uint64_t seed);

// 10-class stroke fixture on the nmnist geometry (34x34, 10 ms); each class
// is a chord at one of ten orientations around the sensor centre.
std::vector<EventSample> synth_digit_dataset(size_t n, uint64_t seed);

// ---- canonical data directories ---------------------------------------------

struct DataDirSample {
    std::string path;
    std::string split; // "train" | "test"
    int label = -1;
    uint64_t n_events = 0;
    int64_t duration_us = 0;
    std::string digest; // hash of the serialized event file, folded into the manifest hash
};

struct DataDirInfo {
    int schema_version = 1;
    std::string name;          // dataset name (spec lookup key when known)
    std::string kind = "raw";  // "raw" | "preprocessed"
    SensorGeometry geometry;
    uint32_t n_labels = 0;
    uint32_t channels = 1;     // event polarity channels carried by the files
    int64_t keep_us = 0;
    int64_t denoise_window_us = 0;
    std::string provenance;
    std::string preproc_json;  // serialized sidecar for preprocessed dirs ("" otherwise)
    std::vector<DataDirSample> samples;
};

void save_data_dir(const std::string& dir, DataDirInfo info,
                   const std::vector<EventSample>& train, const std::vector<EventSample>& test);

struct LoadedData {
    DataDirInfo info;
    std::vector<EventSample> train, test;
    std::string manifest_hash;
};

LoadedData load_data_dir(const std::string& dir);

} // namespace eventline
