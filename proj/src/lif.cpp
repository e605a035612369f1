#include "eventline/lif.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace eventline {

void LifParams::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + " must be positive and finite");
        }
    };
    positive(tau_m_ms, "tau_m");
    positive(tau_syn_ms, "tau_syn");
    positive(c_m_nf, "c_m");
    positive(dt_ms, "dt");
    if (tau_refrac_ms < 0.0) throw std::invalid_argument("tau_refrac must be >= 0");
    if (!(threshold_mv > v_reset_mv)) {
        throw std::invalid_argument("threshold must sit above the reset potential");
    }
}

uint64_t SynapseTable::fan_out_of(uint32_t src) const {
    uint64_t n = 0;
    for (const auto& s : entries) n += (s.src == src);
    return n;
}

Network::Network(uint32_t n_inputs, LifParams params) : n_inputs_(n_inputs), params_(params) {
    params_.validate();
}

uint32_t Network::add_population(const std::string& name, uint32_t size) {
    if (size == 0) throw std::invalid_argument("population '" + name + "' is empty");
    const uint32_t offset = n_neurons_;
    populations_.push_back(Population{name, offset, size});
    n_neurons_ += size;
    return offset;
}

void Network::validate_table(const SynapseTable& t, uint32_t src_domain,
                             uint32_t dst_domain) const {
    const int64_t min_delay_steps = 1;
    for (size_t i = 0; i < t.entries.size(); ++i) {
        const Synapse& s = t.entries[i];
        if (s.src >= src_domain || s.dst >= dst_domain) {
            throw std::invalid_argument("table '" + t.name + "' entry " + std::to_string(i) +
                                        " has dangling endpoint (src=" + std::to_string(s.src) +
                                        ", dst=" + std::to_string(s.dst) + ")");
        }
        if (!(s.weight > 0.0) || !std::isfinite(s.weight)) {
            throw std::invalid_argument("table '" + t.name + "' entry " + std::to_string(i) +
                                        " has non-positive weight");
        }
        const int64_t steps = int64_t(s.delay_ms / params_.dt_ms + 0.5);
        if (steps < min_delay_steps) {
            throw std::invalid_argument("table '" + t.name + "' entry " + std::to_string(i) +
                                        " delay below one timestep");
        }
    }
}

Network::TableIndex Network::build_index(const SynapseTable& t, uint32_t src_domain) {
    TableIndex idx;
    idx.offsets.assign(src_domain + 1, 0);
    for (const auto& s : t.entries) idx.offsets[s.src + 1]++;
    for (uint32_t i = 0; i < src_domain; ++i) idx.offsets[i + 1] += idx.offsets[i];
    idx.order.resize(t.entries.size());
    std::vector<uint32_t> cursor(idx.offsets.begin(), idx.offsets.end() - 1);
    for (uint32_t i = 0; i < t.entries.size(); ++i) {
        idx.order[cursor[t.entries[i].src]++] = i; // stable: keeps insertion order per src
    }
    return idx;
}

void Network::add_input_table(SynapseTable table) {
    validate_table(table, n_inputs_, n_neurons_);
    input_index_.push_back(build_index(table, n_inputs_));
    input_tables_.push_back(std::move(table));
}

void Network::add_internal_table(SynapseTable table) {
    validate_table(table, n_neurons_, n_neurons_);
    internal_index_.push_back(build_index(table, n_neurons_));
    internal_tables_.push_back(std::move(table));
}

uint64_t Network::input_fan_out(size_t table, uint32_t src) const {
    const auto& ix = input_index_[table];
    return ix.offsets[src + 1] - ix.offsets[src];
}

uint64_t Network::internal_fan_out(size_t table, uint32_t src) const {
    const auto& ix = internal_index_[table];
    return ix.offsets[src + 1] - ix.offsets[src];
}

std::vector<uint64_t> RunResult::spikes_per_unit(uint32_t n_units) const {
    std::vector<uint64_t> counts(n_units, 0);
    for (const auto& s : spikes) counts[s.unit]++;
    return counts;
}

namespace {

int64_t delay_steps(double delay_ms, double dt_ms) { return int64_t(delay_ms / dt_ms + 0.5); }

} // namespace

Simulator::Simulator(const Network& net, std::vector<InputSpike> inputs)
    : net_(net), inputs_(std::move(inputs)) {
    const LifParams& p = net.params();
    consts_ = kernels::LifStepConsts{1.0 / p.tau_m_ms, 1.0 / p.c_m_nf,
                                     p.v_rest_mv / p.tau_m_ms, p.e_exc_mv,
                                     p.e_inh_mv, p.dt_ms};
    syn_decay_ = std::exp(-p.dt_ms / p.tau_syn_ms);
    refrac_steps_ = int(p.tau_refrac_ms / p.dt_ms + 0.5);

    const uint32_t n = net.n_neurons();
    v_.assign(n, p.v_rest_mv);
    ge_.assign(n, 0.0);
    gi_.assign(n, 0.0);
    refrac_.assign(n, 0);

    int64_t max_delay = 1;
    auto scan = [&](const std::vector<SynapseTable>& tables) {
        for (const auto& t : tables) {
            for (const auto& s : t.entries) {
                max_delay = std::max(max_delay, delay_steps(s.delay_ms, p.dt_ms));
            }
        }
    };
    scan(net.input_tables());
    scan(net.internal_tables());
    ring_size_ = size_t(max_delay) + 1;
    ring_.assign(ring_size_, {});

    input_events_.assign(net.input_tables().size(), 0);
    internal_events_.assign(net.internal_tables().size(), 0);

    for (size_t i = 1; i < inputs_.size(); ++i) {
        if (inputs_[i].t_us < inputs_[i - 1].t_us) {
            throw std::invalid_argument("input spikes must be sorted by time");
        }
    }
    for (const auto& s : inputs_) {
        if (s.unit >= net.n_inputs()) throw std::invalid_argument("input spike unit out of range");
        if (s.t_us < 0) throw std::invalid_argument("input spike before t=0");
    }
}

void Simulator::schedule_from_input(uint32_t unit) {
    const auto& tables = net_.input_tables();
    for (size_t t = 0; t < tables.size(); ++t) {
        const auto& ix = net_.input_index(t);
        const uint32_t lo = ix.offsets[unit], hi = ix.offsets[unit + 1];
        input_events_[t] += hi - lo;
        for (uint32_t e = lo; e < hi; ++e) {
            const Synapse& s = tables[t].entries[ix.order[e]];
            const size_t slot =
                size_t((step_ + delay_steps(s.delay_ms, net_.params().dt_ms)) % int64_t(ring_size_));
            ring_[slot].push_back(Delivery{s.dst, uint8_t(s.sign == SynapseSign::Inhibitory),
                                           s.weight});
        }
    }
}

void Simulator::schedule_from_neuron(uint32_t unit) {
    const auto& tables = net_.internal_tables();
    for (size_t t = 0; t < tables.size(); ++t) {
        const auto& ix = net_.internal_index(t);
        const uint32_t lo = ix.offsets[unit], hi = ix.offsets[unit + 1];
        internal_events_[t] += hi - lo;
        for (uint32_t e = lo; e < hi; ++e) {
            const Synapse& s = tables[t].entries[ix.order[e]];
            const size_t slot =
                size_t((step_ + delay_steps(s.delay_ms, net_.params().dt_ms)) % int64_t(ring_size_));
            ring_[slot].push_back(Delivery{s.dst, uint8_t(s.sign == SynapseSign::Inhibitory),
                                           s.weight});
        }
    }
}

void Simulator::step() {
    const LifParams& p = net_.params();
    const uint32_t n = net_.n_neurons();

    // 1. apply deliveries scheduled for this step, in schedule order
    auto& slot = ring_[size_t(step_ % int64_t(ring_size_))];
    for (const Delivery& d : slot) {
        (d.inhibitory ? gi_ : ge_)[d.dst] += d.weight;
    }
    slot.clear();

    // 2. conductance decay
    const auto& k = kernels::active();
    k.scale_inplace(ge_.data(), n, syn_decay_);
    k.scale_inplace(gi_.data(), n, syn_decay_);

    // 3. voltage update for every unit
    k.lif_voltage_step(v_.data(), ge_.data(), gi_.data(), n, consts_);

    // 4. refractory clamp and threshold, ascending unit id
    emitted_.clear();
    for (uint32_t i = 0; i < n; ++i) {
        if (refrac_[i] > 0) {
            v_[i] = p.v_reset_mv;
            refrac_[i]--;
            continue;
        }
        if (!std::isfinite(v_[i])) {
            throw std::runtime_error("non-finite membrane potential at unit " + std::to_string(i) +
                                     ", step " + std::to_string(step_));
        }
        if (v_[i] >= p.threshold_mv) {
            v_[i] = p.v_reset_mv;
            refrac_[i] = refrac_steps_;
            emitted_.push_back(i);
            record_.push_back(SpikeEvent{i, step_});
        }
    }

    // 5. propagate: external input spikes first (stream order), then the
    // neurons that fired this step in ascending id
    const int64_t dt_us = p.dt_us();
    while (next_input_ < inputs_.size() && inputs_[next_input_].t_us / dt_us == step_) {
        schedule_from_input(inputs_[next_input_].unit);
        next_input_++;
    }
    for (uint32_t u : emitted_) schedule_from_neuron(u);

    step_++;
}

RunResult run(const Network& net, std::vector<InputSpike> inputs, int64_t t_end_us) {
    const int64_t dt_us = net.params().dt_us();
    const int64_t steps = (t_end_us + dt_us - 1) / dt_us;
    Simulator sim(net, std::move(inputs));
    for (int64_t s = 0; s < steps; ++s) sim.step();
    RunResult r;
    r.spikes = sim.spikes();
    r.input_table_events = sim.input_table_events();
    r.internal_table_events = sim.internal_table_events();
    r.steps = steps;
    return r;
}

void dump_spikes_csv(const Network& net, const RunResult& r, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << "population,unit,local_unit,step,t_us\n";
    const int64_t dt_us = net.params().dt_us();
    const auto& pops = net.populations();
    for (const auto& s : r.spikes) {
        const Population* pop = nullptr;
        for (const auto& p : pops) {
            if (s.unit >= p.offset && s.unit < p.offset + p.size) {
                pop = &p;
                break;
            }
        }
        f << (pop ? pop->name : "?") << ',' << s.unit << ','
          << (pop ? s.unit - pop->offset : s.unit) << ',' << s.step << ',' << s.step * dt_us
          << '\n';
    }
}

} // namespace eventline
