#pragma once

#include <cstdint>
#include <vector>

#include "eventline/geometry.hpp"
#include "eventline/strategy.hpp"

namespace eventline {

// Integer synaptic-event totals accumulated over an evaluation split.
struct EnergyAccount {
    uint64_t n_samples = 0;
    uint64_t se_p_total = 0;        // deliveries through the diagonal patterns
    uint64_t wta_total = 0;         // deliveries through lateral inhibition
    uint64_t preproc_out_total = 0; // events leaving the preprocessing layer
    uint64_t raw_in_total = 0;      // events entering the layer (raw events)
    std::vector<uint64_t> pixel_counts; // raw events per (channel, pixel)

    void add(const PreprocessResult& r, uint64_t raw_events);
};

// Per-sample means. For a preprocessed pipeline SE = SE_P + E_pre * n_labels;
// without preprocessing SE = E_raw * n_labels.
struct EnergyReport {
    double se_p = 0;
    double se_c = 0;
    double se = 0;
    double wta = 0;
    double e_pre = 0;
    double e_raw = 0;
    bool preprocessed = true;
};

// Cross-checks the measured pattern deliveries against
// sum over (channel, pixel) of events * fan-out; any mismatch throws.
EnergyReport count_se(const EnergyAccount& acc, const std::vector<uint32_t>& pixel_fan_out,
                      uint32_t n_labels);

// SE of the no-preprocessing pipeline over the same split.
EnergyReport count_se_baseline(uint64_t raw_in_total, uint64_t n_samples, uint32_t n_labels);

struct Efficiency {
    double accuracy = 0;
    double se = 0;
    double value = 0;   // accuracy per synaptic event
    bool defined = false; // false when se == 0
};

Efficiency efficiency(double accuracy, double se);

// Accuracy floor for trading accuracy against energy: two thirds of the
// no-preprocessing accuracy.
double admissibility_threshold(double baseline_accuracy);
bool admissible(double accuracy, double baseline_accuracy);

// Structural counts; input encoding units are not neurons and the
// (input -> line layer) pattern connections and classifier inputs are the
// synapses. Fan-in statistics run over line-layer and classifier units.
struct ArchitectureCensus {
    uint64_t preproc_neurons = 0;
    uint64_t classifier_neurons = 0;
    uint64_t pattern_synapses = 0;
    uint64_t wta_synapses = 0;
    uint64_t classifier_synapses = 0;
    uint64_t max_fan_in = 0;
    double mean_fan_in = 0;
    uint64_t unique_parameters = 0; // trainable parameter count (classifier side)

    uint64_t neurons() const { return preproc_neurons + classifier_neurons; }
    uint64_t synapses() const { return pattern_synapses + wta_synapses + classifier_synapses; }
};

ArchitectureCensus census(const PreprocessNetwork& net, uint32_t n_labels);
ArchitectureCensus census_no_preprocessing(const SensorGeometry& sensor, PolarityMode polarity,
                                           uint32_t n_labels);

// Units per polarity channel a strategy produces on an l x l sensor, without
// building the network (quarter tiles use side floor(l/2)).
uint64_t strategy_unit_count(StrategyKind kind, uint16_t sensor_side);

} // namespace eventline
