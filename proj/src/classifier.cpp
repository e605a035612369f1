#include "eventline/classifier.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "eventline/binio.hpp"
#include "eventline/kernels.hpp"
#include "eventline/rng.hpp"

namespace eventline {

void ClassifierConfig::validate() const {
    if (input_dim == 0 || n_labels == 0) throw std::invalid_argument("empty classifier shape");
    if (!(threshold > 0)) throw std::invalid_argument("threshold must be positive");
    if (!(beta >= 0 && beta < 1)) throw std::invalid_argument("beta must lie in [0, 1)");
    if (!(lr > 0)) throw std::invalid_argument("learning rate must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
}

ClassifierState init_classifier(const ClassifierConfig& cfg, uint64_t seed) {
    cfg.validate();
    ClassifierState st;
    st.cfg = cfg;
    const size_t nw = size_t(cfg.n_labels) * cfg.input_dim;
    st.w.resize(nw);
    st.b.assign(cfg.n_labels, 0.0);
    const double bound = 1.0 / std::sqrt(double(cfg.input_dim));
    Rng rng(seed);
    for (auto& w : st.w) w = rng.range(-bound, bound);
    st.mw.assign(nw, 0.0);
    st.vw.assign(nw, 0.0);
    st.mb.assign(cfg.n_labels, 0.0);
    st.vb.assign(cfg.n_labels, 0.0);
    return st;
}

namespace {

// surrogate: d spike / d membrane at u = U - theta
double surrogate(double u, double alpha) {
    const double z = std::numbers::pi / 2.0 * alpha * u;
    return alpha / (2.0 * (1.0 + z * z));
}

double soft_spike(double u, double alpha) {
    return 0.5 + std::atan(std::numbers::pi / 2.0 * alpha * u) / std::numbers::pi;
}

} // namespace

ForwardTrace classifier_forward(const ClassifierState& st, const double* x, uint32_t T,
                                SpikeMode mode) {
    const ClassifierConfig& cfg = st.cfg;
    const uint32_t n = cfg.n_labels, d = cfg.input_dim;
    ForwardTrace tr;
    tr.T = T;
    tr.n = n;
    tr.u.assign(size_t(T) * n, 0.0);
    tr.s.assign(size_t(T) * n, 0.0);
    tr.counts.assign(n, 0.0);

    const auto& k = kernels::active();
    std::vector<double> current(n);
    for (uint32_t t = 0; t < T; ++t) {
        k.matvec(current.data(), st.w.data(), x + size_t(t) * d, n, d);
        double* u_t = tr.u.data() + size_t(t) * n;
        double* s_t = tr.s.data() + size_t(t) * n;
        const double* u_prev = t > 0 ? tr.u.data() + size_t(t - 1) * n : nullptr;
        const double* s_prev = t > 0 ? tr.s.data() + size_t(t - 1) * n : nullptr;
        for (uint32_t j = 0; j < n; ++j) {
            double u = current[j] + st.b[j];
            if (t > 0) u += cfg.beta * u_prev[j] - cfg.threshold * s_prev[j];
            u_t[j] = u;
            if (mode == SpikeMode::Hard) {
                s_t[j] = u >= cfg.threshold ? 1.0 : 0.0;
            } else {
                s_t[j] = soft_spike(u - cfg.threshold, cfg.surrogate_alpha);
            }
            tr.counts[j] += s_t[j];
        }
    }
    return tr;
}

double spike_count_loss(const ForwardTrace& tr, int label, const ClassifierConfig& cfg) {
    if (label < 0 || uint32_t(label) >= tr.n) throw std::invalid_argument("label out of range");
    double loss = 0.0;
    for (uint32_t j = 0; j < tr.n; ++j) {
        const double target =
            double(tr.T) * (int(j) == label ? cfg.rate_correct : cfg.rate_incorrect);
        const double diff = tr.counts[j] - target;
        loss += diff * diff;
    }
    return loss / double(tr.n);
}

int classifier_predict(const ForwardTrace& tr) {
    uint32_t best = 0;
    for (uint32_t j = 1; j < tr.n; ++j) {
        if (tr.counts[j] > tr.counts[best]) best = j;
    }
    return int(best);
}

void ClassifierGradients::init(const ClassifierConfig& cfg) {
    w.assign(size_t(cfg.n_labels) * cfg.input_dim, 0.0);
    b.assign(cfg.n_labels, 0.0);
}

void ClassifierGradients::clear() {
    std::fill(w.begin(), w.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
}

void classifier_backward(const ClassifierState& st, const ForwardTrace& tr, const double* x,
                         int label, ClassifierGradients& acc, SpikeMode mode) {
    const ClassifierConfig& cfg = st.cfg;
    const uint32_t n = cfg.n_labels, d = cfg.input_dim, T = tr.T;
    if (acc.w.size() != size_t(n) * d) throw std::invalid_argument("gradient buffer shape");

    // dL/dS contribution that every step shares (spike-count loss)
    std::vector<double> g_count(n);
    for (uint32_t j = 0; j < n; ++j) {
        const double target =
            double(T) * (int(j) == label ? cfg.rate_correct : cfg.rate_incorrect);
        g_count[j] = 2.0 / double(n) * (tr.counts[j] - target);
    }

    const auto& k = kernels::active();
    std::vector<double> du_next(n, 0.0), du(n);
    for (int64_t t = T - 1; t >= 0; --t) {
        const double* u_t = tr.u.data() + size_t(t) * n;
        for (uint32_t j = 0; j < n; ++j) {
            // S[t] feeds the loss directly and subtracts from U[t+1]
            const double ds = g_count[j] - cfg.threshold * du_next[j];
            const double sg = surrogate(u_t[j] - cfg.threshold, cfg.surrogate_alpha);
            du[j] = ds * sg + cfg.beta * du_next[j];
        }
        k.outer_acc(acc.w.data(), du.data(), x + size_t(t) * d, n, d);
        for (uint32_t j = 0; j < n; ++j) acc.b[j] += du[j];
        std::swap(du, du_next);
    }
    (void)mode; // identical backward graph in both modes by construction
}

void classifier_adam_step(ClassifierState& st, const ClassifierGradients& g, double scale) {
    const ClassifierConfig& cfg = st.cfg;
    st.adam_t += 1;
    const double b1t = 1.0 - std::pow(cfg.adam_beta1, double(st.adam_t));
    const double b2t = 1.0 - std::pow(cfg.adam_beta2, double(st.adam_t));
    const kernels::AdamConsts ac{cfg.lr,       cfg.adam_beta1, cfg.adam_beta2,
                                 cfg.adam_eps, 1.0 / b1t,      1.0 / b2t};
    const auto& k = kernels::active();

    std::vector<double> gw(g.w.size()), gb(g.b.size());
    for (size_t i = 0; i < g.w.size(); ++i) gw[i] = g.w[i] * scale;
    for (size_t i = 0; i < g.b.size(); ++i) gb[i] = g.b[i] * scale;
    k.adam_step(st.w.data(), st.mw.data(), st.vw.data(), gw.data(), gw.size(), ac);
    k.adam_step(st.b.data(), st.mb.data(), st.vb.data(), gb.data(), gb.size(), ac);
}

TrainData make_train_data(const std::vector<EventSample>& samples, int64_t bin_width_us,
                          PolarityMode mode, bool binarize) {
    TrainData data;
    for (size_t i = 0; i < samples.size(); ++i) {
        const EventSample& s = samples[i];
        if (!s.label.has_value()) {
            throw std::invalid_argument("sample " + std::to_string(i) + " has no label");
        }
        SpikeTensor t = bin_to_frames(s, bin_width_us, mode);
        if (binarize) {
            for (auto& v : t.data) v = v > 0 ? 1.0 : 0.0;
        }
        if (i == 0) {
            data.T = uint32_t(t.t_bins);
            data.dim = uint32_t(t.step_dim());
        } else if (data.T != t.t_bins || data.dim != t.step_dim()) {
            throw std::invalid_argument("sample " + std::to_string(i) +
                                        " shape differs from the first sample");
        }
        data.x.push_back(std::move(t.data));
        data.labels.push_back(*s.label);
    }
    return data;
}

ClassifierState train_classifier(const TrainData& data, const ClassifierConfig& cfg,
                                 uint64_t seed, std::vector<EpochStats>* stats) {
    if (data.size() == 0) throw std::invalid_argument("empty training set");
    if (data.dim != cfg.input_dim) throw std::invalid_argument("input_dim mismatch");
    ClassifierState st = init_classifier(cfg, seed);
    Rng shuffle_rng(seed ^ 0x5b21db5297fbd61bull);

    std::vector<size_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    ClassifierGradients grads;
    grads.init(cfg);
    for (uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t stop = std::min(order.size(), start + cfg.batch_size);
            grads.clear();
            for (size_t i = start; i < stop; ++i) {
                const double* x = data.x[order[i]].data();
                const int label = data.labels[order[i]];
                const ForwardTrace tr = classifier_forward(st, x, data.T);
                epoch_loss += spike_count_loss(tr, label, cfg);
                classifier_backward(st, tr, x, label, grads);
            }
            classifier_adam_step(st, grads, 1.0 / double(stop - start));
        }
        if (stats) stats->push_back(EpochStats{epoch_loss / double(data.size())});
    }
    return st;
}

EvalResult evaluate_classifier(const ClassifierState& st, const TrainData& data) {
    if (data.dim != st.cfg.input_dim) throw std::invalid_argument("input_dim mismatch");
    EvalResult r;
    r.total = data.size();
    for (size_t i = 0; i < data.size(); ++i) {
        const ForwardTrace tr = classifier_forward(st, data.x[i].data(), data.T);
        const int pred = classifier_predict(tr);
        r.predictions.push_back(pred);
        if (pred == data.labels[i]) r.correct++;
    }
    r.accuracy = r.total == 0 ? 0.0 : double(r.correct) / double(r.total);
    return r;
}

namespace {
constexpr char kCheckpointMagic[4] = {'E', 'L', 'C', '1'};
}

void save_checkpoint(const ClassifierState& st, const std::string& path) {
    std::string b;
    b.append(kCheckpointMagic, 4);
    binio::put_u32(b, 1); // version
    const ClassifierConfig& c = st.cfg;
    binio::put_u32(b, c.input_dim);
    binio::put_u32(b, c.n_labels);
    binio::put_f64(b, c.threshold);
    binio::put_f64(b, c.beta);
    binio::put_f64(b, c.lr);
    binio::put_u32(b, c.epochs);
    binio::put_u32(b, c.batch_size);
    binio::put_f64(b, c.surrogate_alpha);
    binio::put_f64(b, c.rate_correct);
    binio::put_f64(b, c.rate_incorrect);
    binio::put_u32(b, c.binarize_input ? 1 : 0);
    binio::put_f64(b, c.adam_beta1);
    binio::put_f64(b, c.adam_beta2);
    binio::put_f64(b, c.adam_eps);
    binio::put_u64(b, st.adam_t);
    auto dump = [&](const std::vector<double>& v) {
        binio::put_u64(b, v.size());
        for (double x : v) binio::put_f64(b, x);
    };
    dump(st.w);
    dump(st.b);
    dump(st.mw);
    dump(st.vw);
    dump(st.mb);
    dump(st.vb);
    binio::write_file(path, b);
}

ClassifierState load_checkpoint(const std::string& path) {
    const std::string bytes = binio::read_file(path);
    binio::Reader r(bytes, path);
    r.need(4);
    if (bytes.compare(0, 4, kCheckpointMagic, 4) != 0) {
        throw std::runtime_error(path + ": not a checkpoint file");
    }
    r.skip(4);
    const uint32_t version = r.u32();
    if (version != 1) {
        throw std::runtime_error(path + ": unsupported checkpoint version " +
                                 std::to_string(version));
    }
    ClassifierState st;
    ClassifierConfig& c = st.cfg;
    c.input_dim = r.u32();
    c.n_labels = r.u32();
    c.threshold = r.f64();
    c.beta = r.f64();
    c.lr = r.f64();
    c.epochs = r.u32();
    c.batch_size = r.u32();
    c.surrogate_alpha = r.f64();
    c.rate_correct = r.f64();
    c.rate_incorrect = r.f64();
    c.binarize_input = r.u32() != 0;
    c.adam_beta1 = r.f64();
    c.adam_beta2 = r.f64();
    c.adam_eps = r.f64();
    st.adam_t = r.u64();
    auto load = [&](std::vector<double>& v) {
        const uint64_t n = r.u64();
        v.resize(n);
        for (auto& x : v) x = r.f64();
    };
    load(st.w);
    load(st.b);
    load(st.mw);
    load(st.vw);
    load(st.mb);
    load(st.vb);
    if (!r.done()) throw std::runtime_error(path + ": trailing bytes");
    if (st.w.size() != size_t(c.input_dim) * c.n_labels || st.b.size() != c.n_labels) {
        throw std::runtime_error(path + ": checkpoint shape mismatch");
    }
    return st;
}

} // namespace eventline
