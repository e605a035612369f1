#include "eventline/baselines.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "eventline/kernels.hpp"
#include "eventline/rng.hpp"

namespace eventline {

const char* baseline_token(BaselineKind k) {
    return k == BaselineKind::Conv ? "conv" : "fc-hidden";
}

uint32_t conv_kernel_side(uint32_t sensor_side, uint32_t n_hidden_ref) {
    const double k = std::round(double(sensor_side) + 1.0 - std::sqrt(double(n_hidden_ref)));
    if (!(k >= 1.0) || k > double(sensor_side)) {
        throw std::invalid_argument("no valid convolution kernel for side " +
                                    std::to_string(sensor_side) + " and reference " +
                                    std::to_string(n_hidden_ref) + " hidden units");
    }
    return uint32_t(k);
}

BaselineState init_baseline(const SensorGeometry& sensor, uint32_t channels,
                            const BaselineConfig& cfg, uint32_t n_labels, uint64_t seed) {
    if (!sensor.is_square()) throw std::invalid_argument("baselines expect a square sensor");
    if (cfg.n_hidden_ref == 0) throw std::invalid_argument("n_hidden_ref must be set");
    BaselineState st;
    st.cfg = cfg;
    st.side = sensor.width;
    st.channels = channels;
    st.n_labels = n_labels;
    Rng rng(seed);
    auto fill = [&](std::vector<double>& v, size_t n, double bound) {
        v.resize(n);
        for (auto& w : v) w = rng.range(-bound, bound);
    };
    if (cfg.kind == BaselineKind::Conv) {
        st.kernel = conv_kernel_side(st.side, cfg.n_hidden_ref);
        st.hidden_side = st.side - st.kernel + 1;
        st.n_hidden = st.hidden_side * st.hidden_side;
        fill(st.w1, size_t(channels) * st.kernel * st.kernel,
             1.0 / std::sqrt(double(channels) * st.kernel * st.kernel));
        // bias lives solely in the output layer
    } else {
        st.n_hidden = cfg.n_hidden_ref;
        fill(st.w1, size_t(st.n_hidden) * st.input_dim(),
             1.0 / std::sqrt(double(st.input_dim())));
        st.b1.assign(st.n_hidden, 0.0);
    }
    fill(st.w2, size_t(n_labels) * st.n_hidden, 1.0 / std::sqrt(double(st.n_hidden)));
    st.b2.assign(n_labels, 0.0);
    auto zeros_like = [](const std::vector<double>& v) { return std::vector<double>(v.size(), 0.0); };
    st.mw1 = zeros_like(st.w1);
    st.vw1 = zeros_like(st.w1);
    st.mb1 = zeros_like(st.b1);
    st.vb1 = zeros_like(st.b1);
    st.mw2 = zeros_like(st.w2);
    st.vw2 = zeros_like(st.w2);
    st.mb2 = zeros_like(st.b2);
    st.vb2 = zeros_like(st.b2);
    return st;
}

uint64_t prune_first_layer(BaselineState& st, double threshold) {
    uint64_t cut = 0;
    for (auto& w : st.w1) {
        if (w != 0.0 && std::fabs(w) < threshold) {
            w = 0.0;
            cut++;
        }
    }
    return cut;
}

namespace {

double surrogate(double u, double alpha) {
    const double z = std::numbers::pi / 2.0 * alpha * u;
    return alpha / (2.0 * (1.0 + z * z));
}

// I1 = conv(x) over all channels, valid placements only
void conv_forward(const BaselineState& st, const double* x, double* out) {
    const uint32_t hs = st.hidden_side, kk = st.kernel, side = st.side;
    for (uint32_t hy = 0; hy < hs; ++hy) {
        for (uint32_t hx = 0; hx < hs; ++hx) {
            double acc = 0.0;
            for (uint32_t c = 0; c < st.channels; ++c) {
                const double* xc = x + size_t(c) * side * side;
                const double* wc = st.w1.data() + size_t(c) * kk * kk;
                for (uint32_t ky = 0; ky < kk; ++ky) {
                    const double* row = xc + size_t(hy + ky) * side + hx;
                    const double* wrow = wc + size_t(ky) * kk;
                    for (uint32_t kx = 0; kx < kk; ++kx) acc += row[kx] * wrow[kx];
                }
            }
            out[size_t(hy) * hs + hx] = acc;
        }
    }
}

// gw1 += dU1 (*) x ; the gradient of the shared kernel
void conv_backward_weights(const BaselineState& st, const double* x, const double* du1,
                           double* gw1) {
    const uint32_t hs = st.hidden_side, kk = st.kernel, side = st.side;
    for (uint32_t c = 0; c < st.channels; ++c) {
        const double* xc = x + size_t(c) * side * side;
        double* gc = gw1 + size_t(c) * kk * kk;
        for (uint32_t ky = 0; ky < kk; ++ky) {
            for (uint32_t kx = 0; kx < kk; ++kx) {
                double acc = 0.0;
                for (uint32_t hy = 0; hy < hs; ++hy) {
                    const double* xrow = xc + size_t(hy + ky) * side + kx;
                    const double* du_row = du1 + size_t(hy) * hs;
                    for (uint32_t hx = 0; hx < hs; ++hx) acc += du_row[hx] * xrow[hx];
                }
                gc[size_t(ky) * kk + kx] += acc;
            }
        }
    }
}

struct Grads {
    std::vector<double> w1, b1, w2, b2;
};

} // namespace

BaselineTrace baseline_forward(const BaselineState& st, const double* x, uint32_t T) {
    const BaselineConfig& cfg = st.cfg;
    const uint32_t nh = st.n_hidden, nl = st.n_labels, d = st.input_dim();
    BaselineTrace tr;
    tr.T = T;
    tr.u1.assign(size_t(T) * nh, 0.0);
    tr.s1.assign(size_t(T) * nh, 0.0);
    tr.u2.assign(size_t(T) * nl, 0.0);
    tr.s2.assign(size_t(T) * nl, 0.0);
    tr.counts.assign(nl, 0.0);

    const auto& k = kernels::active();
    std::vector<double> i1(nh), i2(nl);
    for (uint32_t t = 0; t < T; ++t) {
        const double* xt = x + size_t(t) * d;
        if (cfg.kind == BaselineKind::Conv) {
            conv_forward(st, xt, i1.data());
        } else {
            k.matvec(i1.data(), st.w1.data(), xt, nh, d);
            for (uint32_t j = 0; j < nh; ++j) i1[j] += st.b1[j];
        }
        double* u1 = tr.u1.data() + size_t(t) * nh;
        double* s1 = tr.s1.data() + size_t(t) * nh;
        const double* u1p = t > 0 ? tr.u1.data() + size_t(t - 1) * nh : nullptr;
        const double* s1p = t > 0 ? tr.s1.data() + size_t(t - 1) * nh : nullptr;
        for (uint32_t j = 0; j < nh; ++j) {
            double u = i1[j];
            if (t > 0) u += cfg.beta * u1p[j] - cfg.threshold * s1p[j];
            u1[j] = u;
            s1[j] = u >= cfg.threshold ? 1.0 : 0.0;
            tr.hidden_spikes += s1[j] > 0;
        }
        k.matvec(i2.data(), st.w2.data(), s1, nl, nh);
        double* u2 = tr.u2.data() + size_t(t) * nl;
        double* s2 = tr.s2.data() + size_t(t) * nl;
        const double* u2p = t > 0 ? tr.u2.data() + size_t(t - 1) * nl : nullptr;
        const double* s2p = t > 0 ? tr.s2.data() + size_t(t - 1) * nl : nullptr;
        for (uint32_t j = 0; j < nl; ++j) {
            double u = i2[j] + st.b2[j];
            if (t > 0) u += cfg.beta * u2p[j] - cfg.threshold * s2p[j];
            u2[j] = u;
            s2[j] = u >= cfg.threshold ? 1.0 : 0.0;
            tr.counts[j] += s2[j];
        }
    }
    return tr;
}

namespace {

void baseline_backward(const BaselineState& st, const BaselineTrace& tr, const double* x,
                       int label, Grads& g) {
    const BaselineConfig& cfg = st.cfg;
    const uint32_t nh = st.n_hidden, nl = st.n_labels, d = st.input_dim(), T = tr.T;
    std::vector<double> g_count(nl);
    for (uint32_t j = 0; j < nl; ++j) {
        const double target =
            double(T) * (int(j) == label ? cfg.rate_correct : cfg.rate_incorrect);
        g_count[j] = 2.0 / double(nl) * (tr.counts[j] - target);
    }
    const auto& k = kernels::active();
    std::vector<double> du2(nl), du2_next(nl, 0.0);
    std::vector<double> du1(nh), du1_next(nh, 0.0), ds1(nh);
    for (int64_t t = T - 1; t >= 0; --t) {
        const double* u2 = tr.u2.data() + size_t(t) * nl;
        for (uint32_t j = 0; j < nl; ++j) {
            const double ds = g_count[j] - cfg.threshold * du2_next[j];
            du2[j] = ds * surrogate(u2[j] - cfg.threshold, cfg.surrogate_alpha) +
                     cfg.beta * du2_next[j];
        }
        const double* s1 = tr.s1.data() + size_t(t) * nh;
        k.outer_acc(g.w2.data(), du2.data(), s1, nl, nh);
        for (uint32_t j = 0; j < nl; ++j) g.b2[j] += du2[j];

        // hidden spikes feed the output current and subtract from U1[t+1]
        std::fill(ds1.begin(), ds1.end(), 0.0);
        k.matvec_t_acc(ds1.data(), st.w2.data(), du2.data(), nl, nh);
        const double* u1 = tr.u1.data() + size_t(t) * nh;
        for (uint32_t j = 0; j < nh; ++j) {
            const double ds = ds1[j] - cfg.threshold * du1_next[j];
            du1[j] = ds * surrogate(u1[j] - cfg.threshold, cfg.surrogate_alpha) +
                     cfg.beta * du1_next[j];
        }
        const double* xt = x + size_t(t) * d;
        if (cfg.kind == BaselineKind::Conv) {
            conv_backward_weights(st, xt, du1.data(), g.w1.data());
        } else {
            k.outer_acc(g.w1.data(), du1.data(), xt, nh, d);
            for (uint32_t j = 0; j < nh; ++j) g.b1[j] += du1[j];
        }
        std::swap(du2, du2_next);
        std::swap(du1, du1_next);
    }
}

void baseline_adam(BaselineState& st, const Grads& g, double scale) {
    st.adam_t += 1;
    const BaselineConfig& cfg = st.cfg;
    const double b1t = 1.0 - std::pow(cfg.adam_beta1, double(st.adam_t));
    const double b2t = 1.0 - std::pow(cfg.adam_beta2, double(st.adam_t));
    const kernels::AdamConsts ac{cfg.lr,       cfg.adam_beta1, cfg.adam_beta2,
                                 cfg.adam_eps, 1.0 / b1t,      1.0 / b2t};
    const auto& k = kernels::active();
    auto step = [&](std::vector<double>& w, std::vector<double>& m, std::vector<double>& v,
                    const std::vector<double>& grad) {
        if (w.empty()) return;
        std::vector<double> gs(grad.size());
        for (size_t i = 0; i < grad.size(); ++i) gs[i] = grad[i] * scale;
        k.adam_step(w.data(), m.data(), v.data(), gs.data(), gs.size(), ac);
    };
    step(st.w1, st.mw1, st.vw1, g.w1);
    step(st.b1, st.mb1, st.vb1, g.b1);
    step(st.w2, st.mw2, st.vw2, g.w2);
    step(st.b2, st.mb2, st.vb2, g.b2);
}

} // namespace

BaselineState train_baseline(const TrainData& data, const SensorGeometry& sensor,
                             uint32_t channels, const BaselineConfig& cfg, uint32_t n_labels,
                             uint64_t seed, std::vector<EpochStats>* stats) {
    if (data.size() == 0) throw std::invalid_argument("empty training set");
    BaselineState st = init_baseline(sensor, channels, cfg, n_labels, seed);
    if (st.input_dim() != data.dim) throw std::invalid_argument("input_dim mismatch");
    Rng shuffle_rng(seed ^ 0x5b21db5297fbd61bull);
    std::vector<size_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    Grads g;
    g.w1.assign(st.w1.size(), 0.0);
    g.b1.assign(st.b1.size(), 0.0);
    g.w2.assign(st.w2.size(), 0.0);
    g.b2.assign(st.b2.size(), 0.0);
    for (uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::fill(g.w1.begin(), g.w1.end(), 0.0);
            std::fill(g.b1.begin(), g.b1.end(), 0.0);
            std::fill(g.w2.begin(), g.w2.end(), 0.0);
            std::fill(g.b2.begin(), g.b2.end(), 0.0);
            for (size_t i = start; i < stop; ++i) {
                const double* x = data.x[order[i]].data();
                const int label = data.labels[order[i]];
                const BaselineTrace tr = baseline_forward(st, x, data.T);
                for (uint32_t j = 0; j < st.n_labels; ++j) {
                    const double target = double(data.T) * (int(j) == label ? cfg.rate_correct
                                                                            : cfg.rate_incorrect);
                    const double diff = tr.counts[j] - target;
                    epoch_loss += diff * diff / double(st.n_labels);
                }
                baseline_backward(st, tr, x, label, g);
            }
            baseline_adam(st, g, 1.0 / double(stop - start));
        }
        if (stats) stats->push_back(EpochStats{epoch_loss / double(data.size())});
    }
    return st;
}

namespace {

// events at one input pixel reach this many hidden units through weights
// that survived pruning
std::vector<uint64_t> first_layer_fan_out(const BaselineState& st) {
    const uint32_t side = st.side, d = st.input_dim();
    std::vector<uint64_t> fan(d, 0);
    if (st.cfg.kind == BaselineKind::FcHidden) {
        for (uint32_t j = 0; j < st.n_hidden; ++j) {
            const double* row = st.w1.data() + size_t(j) * d;
            for (uint32_t i = 0; i < d; ++i) fan[i] += row[i] != 0.0;
        }
        return fan;
    }
    const uint32_t kk = st.kernel, hs = st.hidden_side;
    for (uint32_t c = 0; c < st.channels; ++c) {
        const double* wc = st.w1.data() + size_t(c) * kk * kk;
        for (uint32_t py = 0; py < side; ++py) {
            for (uint32_t px = 0; px < side; ++px) {
                uint64_t n = 0;
                const uint32_t hy0 = py >= kk - 1 ? py - (kk - 1) : 0;
                const uint32_t hx0 = px >= kk - 1 ? px - (kk - 1) : 0;
                for (uint32_t hy = hy0; hy <= py && hy < hs; ++hy) {
                    for (uint32_t hx = hx0; hx <= px && hx < hs; ++hx) {
                        n += wc[size_t(py - hy) * kk + (px - hx)] != 0.0;
                    }
                }
                fan[size_t(c) * side * side + size_t(py) * side + px] = n;
            }
        }
    }
    return fan;
}

} // namespace

BaselineEval evaluate_baseline(const BaselineState& st, const TrainData& data) {
    BaselineEval r;
    r.total = data.size();
    const auto fan = first_layer_fan_out(st);
    double se1_total = 0.0;
    uint64_t hidden_total = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        const BaselineTrace tr = baseline_forward(st, data.x[i].data(), data.T);
        uint32_t best = 0;
        for (uint32_t j = 1; j < st.n_labels; ++j) {
            if (tr.counts[j] > tr.counts[best]) best = j;
        }
        if (int(best) == data.labels[i]) r.correct++;
        hidden_total += tr.hidden_spikes;
        const std::vector<double>& x = data.x[i];
        const uint32_t d = st.input_dim();
        for (uint32_t t = 0; t < data.T; ++t) {
            const double* xt = x.data() + size_t(t) * d;
            for (uint32_t p = 0; p < d; ++p) {
                if (xt[p] != 0.0) se1_total += xt[p] * double(fan[p]);
            }
        }
    }
    r.accuracy = r.total ? double(r.correct) / double(r.total) : 0.0;
    const double n = double(std::max<uint64_t>(1, r.total));
    r.se1 = se1_total / n;
    r.se2 = double(hidden_total) * double(st.n_labels) / n;
    r.se = r.se1 + r.se2;
    return r;
}

ArchitectureCensus baseline_census(const BaselineState& st) {
    ArchitectureCensus c;
    c.preproc_neurons = st.n_hidden; // the conventional first layer stands in
    c.classifier_neurons = st.n_labels;
    uint64_t nnz_w1 = 0;
    for (double w : st.w1) nnz_w1 += w != 0.0;
    if (st.cfg.kind == BaselineKind::Conv) {
        // shared kernel: every hidden unit carries one synapse per surviving
        // kernel weight
        c.pattern_synapses = nnz_w1 * st.n_hidden;
        c.unique_parameters = nnz_w1;
        c.max_fan_in = nnz_w1;
        c.mean_fan_in = double(nnz_w1);
    } else {
        c.pattern_synapses = nnz_w1;
        c.unique_parameters = nnz_w1 + st.b1.size();
        uint64_t fan_sum = 0;
        const uint32_t d = st.input_dim();
        for (uint32_t j = 0; j < st.n_hidden; ++j) {
            uint64_t f = 0;
            const double* row = st.w1.data() + size_t(j) * d;
            for (uint32_t i = 0; i < d; ++i) f += row[i] != 0.0;
            c.max_fan_in = std::max(c.max_fan_in, f);
            fan_sum += f;
        }
        c.mean_fan_in = double(fan_sum) / double(st.n_hidden);
    }
    c.classifier_synapses = uint64_t(st.n_labels) * st.n_hidden;
    c.unique_parameters += c.classifier_synapses + st.b2.size();
    c.max_fan_in = std::max<uint64_t>(c.max_fan_in, st.n_hidden);
    // recompute the mean over both layers
    const double fan_total = c.mean_fan_in * double(st.n_hidden) +
                             double(st.n_hidden) * double(st.n_labels);
    c.mean_fan_in = fan_total / double(c.neurons());
    return c;
}

} // namespace eventline
