#pragma once

#include <cstdint>
#include <vector>

#include "eventline/classifier.hpp"
#include "eventline/geometry.hpp"
#include "eventline/metrics.hpp"

namespace eventline {

// Conventional first layers sized against a line-detection layer of n_ref
// units, for energy comparisons:
//   Conv     single 2D convolution (stride 1, no padding, no bias), kernel
//            side round(l + 1 - sqrt(n_ref)) so the hidden map is close to
//            n_ref units
//   FcHidden fully connected hidden layer of exactly n_ref units
// Both feed a fully connected spiking output layer (the only biased layer).
enum class BaselineKind : uint8_t { Conv = 0, FcHidden = 1 };

const char* baseline_token(BaselineKind k);

struct BaselineConfig {
    BaselineKind kind = BaselineKind::Conv;
    uint32_t n_hidden_ref = 0;
    double threshold = 5.0;
    double beta = 0.9;
    double lr = 0.03;
    uint32_t epochs = 10;
    uint32_t batch_size = 8;
    double surrogate_alpha = 2.0;
    double rate_correct = 1.0;
    double rate_incorrect = 0.1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

uint32_t conv_kernel_side(uint32_t sensor_side, uint32_t n_hidden_ref);

struct BaselineState {
    BaselineConfig cfg;
    uint32_t side = 0, channels = 1, n_labels = 0;
    uint32_t kernel = 0;      // conv only
    uint32_t hidden_side = 0; // conv only
    uint32_t n_hidden = 0;
    std::vector<double> w1; // conv: [channels][kernel][kernel]; fc: [n_hidden][channels*side^2]
    std::vector<double> b1; // fc only
    std::vector<double> w2; // [n_labels][n_hidden]
    std::vector<double> b2;
    std::vector<double> mw1, vw1, mb1, vb1, mw2, vw2, mb2, vb2;
    uint64_t adam_t = 0;

    uint32_t input_dim() const { return channels * side * side; }
};

BaselineState init_baseline(const SensorGeometry& sensor, uint32_t channels,
                            const BaselineConfig& cfg, uint32_t n_labels, uint64_t seed);

// Zeroes first-layer weights with |w| < threshold; returns how many were cut.
uint64_t prune_first_layer(BaselineState& st, double threshold);

struct BaselineTrace {
    uint32_t T = 0;
    std::vector<double> u1, s1; // [T][n_hidden]
    std::vector<double> u2, s2; // [T][n_labels]
    std::vector<double> counts; // [n_labels]
    uint64_t hidden_spikes = 0;
};

BaselineTrace baseline_forward(const BaselineState& st, const double* x, uint32_t T);

// Trains on binned raw samples. Deterministic per seed.
BaselineState train_baseline(const TrainData& data, const SensorGeometry& sensor,
                             uint32_t channels, const BaselineConfig& cfg, uint32_t n_labels,
                             uint64_t seed, std::vector<EpochStats>* stats = nullptr);

struct BaselineEval {
    double accuracy = 0;
    uint64_t correct = 0, total = 0;
    double se1 = 0, se2 = 0, se = 0; // mean synaptic events per sample
};

// Accuracy plus measured synaptic events (layer 1: input events * fan-out
// through surviving weights; layer 2: hidden spikes * n_labels).
BaselineEval evaluate_baseline(const BaselineState& st, const TrainData& data);

ArchitectureCensus baseline_census(const BaselineState& st);

} // namespace eventline
