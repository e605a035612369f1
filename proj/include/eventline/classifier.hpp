#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eventline/event.hpp"

namespace eventline {

// Single fully-connected layer into n_labels leaky integrate-and-fire units
// with reset by subtraction:
//   U[t] = beta * U[t-1] + W x[t] + b - theta * S[t-1],   S[t] = [U[t] >= theta]
// trained with backprop through time, an arctangent surrogate around the
// threshold and a spike-count MSE loss.
struct ClassifierConfig {
    uint32_t input_dim = 0;
    uint32_t n_labels = 0;
    double threshold = 5.0;
    double beta = 0.9;
    double lr = 0.03;
    uint32_t epochs = 10;
    uint32_t batch_size = 8;
    double surrogate_alpha = 2.0;
    double rate_correct = 1.0;   // target spikes per step for the true label
    double rate_incorrect = 0.1; // for every other label
    bool binarize_input = false;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct ClassifierState {
    ClassifierConfig cfg;
    std::vector<double> w; // [n_labels][input_dim]
    std::vector<double> b; // [n_labels]
    // Adam moments
    std::vector<double> mw, vw, mb, vb;
    uint64_t adam_t = 0;
};

// Weights uniform in (-1/sqrt(d), 1/sqrt(d)), biases zero.
ClassifierState init_classifier(const ClassifierConfig& cfg, uint64_t seed);

// Hard: Heaviside spikes. Soft: the spike is the smoothed step
// 1/2 + atan(pi/2 * alpha * u) / pi whose exact derivative equals the
// surrogate, so finite differences can check the backward pass end to end.
enum class SpikeMode : uint8_t { Hard, Soft };

struct ForwardTrace {
    uint32_t T = 0, n = 0;
    std::vector<double> u;      // [T][n] membrane at threshold time
    std::vector<double> s;      // [T][n]
    std::vector<double> counts; // [n]
};

// x points at T contiguous steps of input_dim values.
ForwardTrace classifier_forward(const ClassifierState& st, const double* x, uint32_t T,
                                SpikeMode mode = SpikeMode::Hard);

// mean over labels of (count_j - target_j)^2, target = T * rate
double spike_count_loss(const ForwardTrace& tr, int label, const ClassifierConfig& cfg);

// argmax of spike counts, ties to the lower label
int classifier_predict(const ForwardTrace& tr);

struct ClassifierGradients {
    std::vector<double> w, b;
    void init(const ClassifierConfig& cfg);
    void clear();
};

// Accumulates BPTT gradients for one sample into `acc`.
void classifier_backward(const ClassifierState& st, const ForwardTrace& tr, const double* x,
                         int label, ClassifierGradients& acc, SpikeMode mode = SpikeMode::Hard);

// One Adam step with gradients scaled by `scale` (1 / batch size).
void classifier_adam_step(ClassifierState& st, const ClassifierGradients& g, double scale);

// ---- training over binned samples -------------------------------------------

struct TrainData {
    uint32_t T = 0;
    uint32_t dim = 0;
    std::vector<std::vector<double>> x; // per sample: T * dim values
    std::vector<int> labels;

    size_t size() const { return x.size(); }
};

// Bins every sample at bin_width_us and flattens. All samples must share the
// geometry and duration; label required.
TrainData make_train_data(const std::vector<EventSample>& samples, int64_t bin_width_us,
                          PolarityMode mode, bool binarize = false);

struct EpochStats {
    double mean_loss = 0;
};

// Shuffled minibatch training; identical seeds give identical weights.
ClassifierState train_classifier(const TrainData& data, const ClassifierConfig& cfg,
                                 uint64_t seed, std::vector<EpochStats>* stats = nullptr);

struct EvalResult {
    double accuracy = 0;
    uint64_t correct = 0, total = 0;
    std::vector<int> predictions;
};

EvalResult evaluate_classifier(const ClassifierState& st, const TrainData& data);

// Versioned binary checkpoint; exact round-trip of config, weights and
// optimizer state.
void save_checkpoint(const ClassifierState& st, const std::string& path);
ClassifierState load_checkpoint(const std::string& path);

} // namespace eventline
