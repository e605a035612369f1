#include "eventline/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace eventline {

void EnergyAccount::add(const PreprocessResult& r, uint64_t raw_events) {
    n_samples += 1;
    se_p_total += r.se_p;
    wta_total += r.wta_events;
    preproc_out_total += r.out_events;
    raw_in_total += raw_events;
    if (pixel_counts.empty()) pixel_counts.assign(r.pixel_counts.size(), 0);
    if (pixel_counts.size() != r.pixel_counts.size()) {
        throw std::invalid_argument("pixel count shape changed between samples");
    }
    for (size_t i = 0; i < pixel_counts.size(); ++i) pixel_counts[i] += r.pixel_counts[i];
}

EnergyReport count_se(const EnergyAccount& acc, const std::vector<uint32_t>& pixel_fan_out,
                      uint32_t n_labels) {
    if (acc.n_samples == 0) throw std::invalid_argument("energy account is empty");
    // formula check: deliveries == sum over channel-pixels of events * fan-out
    uint64_t expected = 0;
    if (!acc.pixel_counts.empty()) {
        if (acc.pixel_counts.size() % pixel_fan_out.size() != 0) {
            throw std::invalid_argument("pixel fan-out table does not tile the channel counts");
        }
        for (size_t i = 0; i < acc.pixel_counts.size(); ++i) {
            expected += acc.pixel_counts[i] * pixel_fan_out[i % pixel_fan_out.size()];
        }
    }
    if (expected != acc.se_p_total) {
        throw std::runtime_error("synaptic event accounting mismatch: measured " +
                                 std::to_string(acc.se_p_total) + ", recomputed " +
                                 std::to_string(expected));
    }
    EnergyReport r;
    const double n = double(acc.n_samples);
    r.se_p = double(acc.se_p_total) / n;
    r.wta = double(acc.wta_total) / n;
    r.e_pre = double(acc.preproc_out_total) / n;
    r.e_raw = double(acc.raw_in_total) / n;
    r.se_c = r.e_pre * double(n_labels);
    r.se = r.se_p + r.se_c;
    r.preprocessed = true;
    return r;
}

EnergyReport count_se_baseline(uint64_t raw_in_total, uint64_t n_samples, uint32_t n_labels) {
    if (n_samples == 0) throw std::invalid_argument("empty evaluation split");
    EnergyReport r;
    r.e_raw = double(raw_in_total) / double(n_samples);
    r.se_c = r.e_raw * double(n_labels);
    r.se = r.se_c;
    r.preprocessed = false;
    return r;
}

Efficiency efficiency(double accuracy, double se) {
    Efficiency e;
    e.accuracy = accuracy;
    e.se = se;
    if (se > 0) {
        e.value = accuracy / se;
        e.defined = true;
    }
    return e;
}

double admissibility_threshold(double baseline_accuracy) { return 2.0 / 3.0 * baseline_accuracy; }

bool admissible(double accuracy, double baseline_accuracy) {
    return accuracy >= admissibility_threshold(baseline_accuracy);
}

ArchitectureCensus census(const PreprocessNetwork& net, uint32_t n_labels) {
    ArchitectureCensus c;
    c.preproc_neurons = net.n_units();
    c.classifier_neurons = n_labels;
    c.pattern_synapses = net.pattern_synapses();
    c.wta_synapses = net.wta_synapses();
    c.classifier_synapses = uint64_t(net.n_units()) * n_labels;
    c.unique_parameters = c.classifier_synapses + n_labels; // weights + biases

    uint64_t fan_sum = 0;
    for (uint32_t ch = 0; ch < net.channels; ++ch) {
        for (const auto& bank : net.banks) {
            for (const auto& det : bank.detectors) {
                const uint64_t wta_in = bank.region.side - 1;
                for (uint32_t fi : det.pattern.fan_in) {
                    const uint64_t f = fi + wta_in;
                    c.max_fan_in = std::max(c.max_fan_in, f);
                    fan_sum += f;
                }
            }
        }
    }
    const uint64_t cls_fan = net.n_units();
    c.max_fan_in = std::max(c.max_fan_in, cls_fan);
    fan_sum += cls_fan * n_labels;
    c.mean_fan_in = double(fan_sum) / double(c.neurons());
    return c;
}

ArchitectureCensus census_no_preprocessing(const SensorGeometry& sensor, PolarityMode polarity,
                                           uint32_t n_labels) {
    ArchitectureCensus c;
    const uint64_t channels = polarity == PolarityMode::Split ? 2 : 1;
    const uint64_t d = uint64_t(sensor.pixel_count()) * channels;
    c.classifier_neurons = n_labels;
    c.classifier_synapses = d * n_labels;
    c.unique_parameters = c.classifier_synapses + n_labels;
    c.max_fan_in = d;
    c.mean_fan_in = double(d);
    return c;
}

uint64_t strategy_unit_count(StrategyKind kind, uint16_t sensor_side) {
    const uint64_t l = sensor_side;
    const uint64_t h = l / 2;
    switch (kind) {
        case StrategyKind::WholeSensor: return 4 * l;
        case StrategyKind::CentralQuarter: return 4 * h;
        case StrategyKind::Cross: return 16 * h;
        case StrategyKind::CornerQuartersAll: return 16 * h;
        default: return 8 * h; // inner detectors only
    }
}

} // namespace eventline
