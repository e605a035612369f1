#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eventline/event.hpp"
#include "eventline/geometry.hpp"
#include "eventline/lif.hpp"
#include "eventline/line_detect.hpp"

namespace eventline {

// Tiling strategies for the line-detection layer.
//   ws    whole sensor, one full-size region
//   ce    central quarter
//   cr    cross: four quarter tiles shifted onto the sensor midlines,
//         overlapping over the centre; corner blocks stay uncovered
//   cq-ad four corner quarters, all four detectors each
//   cq-id four corner quarters, the two inner detectors each
enum class StrategyKind : uint8_t {
    WholeSensor = 0,
    CentralQuarter = 1,
    Cross = 2,
    CornerQuartersAll = 3,
    CornerQuartersInner = 4,
};

const char* strategy_token(StrategyKind k);
StrategyKind parse_strategy_kind(const std::string& token);

struct StrategyConfig {
    std::vector<StrategyKind> parts; // one entry = plain strategy, several = cumulative
    PolarityMode polarity = PolarityMode::Merged;
    int k = 1;
    double omega = 5.0;

    std::string name() const; // "ce", "ce+cr", ...
    void validate() const;    // distinct parts, 1..3 of them, k/omega sane
};

// "ce", "cq-ad+cr", ... -> parts list
std::vector<StrategyKind> parse_strategy_list(const std::string& s);

struct BankDetector {
    Side side = Side::Top;
    uint32_t unit_offset = 0; // within one polarity channel
    DiagonalPattern pattern;  // k clamped to the region side
    SynapseTable wta;         // local unit ids
};

struct Bank {
    StrategyKind part = StrategyKind::WholeSensor;
    std::string name;
    Region region;
    uint32_t input_offset = 0; // within one polarity channel
    std::vector<BankDetector> detectors;
};

// A built preprocessing layer: banks + the spiking network realising them.
// Input units are (channel, bank, region pixel); output units are
// (channel, bank, detector, border unit). Channel 1 exists in split mode.
struct PreprocessNetwork {
    SensorGeometry sensor;
    StrategyConfig config;
    std::vector<Bank> banks;
    uint32_t inputs_per_channel = 0;
    uint32_t units_per_channel = 0; // n_P
    uint32_t channels = 1;
    std::vector<std::string> warnings;
    std::vector<uint32_t> pixel_fan_out; // per sensor pixel, one channel
    Network network;                     // LIF realisation (all channels)

    uint32_t n_units() const { return units_per_channel * channels; }
    uint64_t pattern_synapses() const;
    uint64_t wta_synapses() const;

    // Banks covering a pixel, as (bank index, region-local pixel index).
    // Partition strategies route each pixel to exactly one tile (seam
    // coordinates of odd sensors clamp to the lower-index tile); the cross
    // duplicates pixels into every covering tile.
    std::vector<std::pair<uint32_t, uint32_t>> route(uint16_t x, uint16_t y) const;
};

// Builds banks and the spiking network for a strategy over a square sensor.
// k larger than a region side is clamped per bank (recorded in warnings).
PreprocessNetwork build_network(const SensorGeometry& sensor, const StrategyConfig& config,
                                const LifParams& params = LifParams{});

// Concatenates the parts of the given networks into one cumulative strategy.
// All inputs must share sensor, polarity, k and omega; parts must stay
// pairwise distinct.
PreprocessNetwork cumulate(std::span<const PreprocessNetwork> nets);

struct PreprocessResult {
    EventSample output;                // geometry (n_P, 1), p = channel
    uint64_t se_p = 0;                 // synaptic events through the patterns
    uint64_t wta_events = 0;           // synaptic events through lateral inhibition
    uint64_t routed_input_spikes = 0;
    uint64_t out_events = 0;
    std::vector<uint64_t> pixel_counts; // raw event count per (channel, pixel)
    RunResult run;
};

// Extra simulated tail after the last input so late line responses are kept.
constexpr int64_t kPreprocessTailUs = 2000;

PreprocessResult preprocess(const EventSample& sample, const PreprocessNetwork& net);

// Per-detector spike records of one run (for decoding), channel 0.
std::vector<DetectorRecord> detector_records(const PreprocessNetwork& net, const RunResult& run,
                                             uint32_t channel = 0);

} // namespace eventline
