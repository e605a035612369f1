#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eventline/kernels.hpp"

namespace eventline {

// Conductance-based leaky integrate-and-fire parameters. Times in ms,
// voltages in mV, conductances in uS, capacitance in nF.
struct LifParams {
    double v_rest_mv = -60.0;
    double v_reset_mv = -60.0;
    double threshold_mv = -30.0;
    double tau_refrac_ms = 0.1;
    double tau_m_ms = 2.5;
    double tau_syn_ms = 5.0;
    double c_m_nf = 1.0;
    double e_exc_mv = 0.0;
    double e_inh_mv = -70.0;
    double dt_ms = 0.1;

    int64_t dt_us() const { return int64_t(dt_ms * 1000.0 + 0.5); }
    void validate() const; // throws on nonsensical values
};

enum class SynapseSign : uint8_t { Excitatory = 0, Inhibitory = 1 };

struct Synapse {
    uint32_t src = 0;
    uint32_t dst = 0;
    double weight = 0.0;   // conductance increment, uS; must be > 0
    double delay_ms = 1.0; // must be >= dt
    SynapseSign sign = SynapseSign::Excitatory;
};

// Group of synapses sharing a source domain (external inputs or neurons).
// Entries keep insertion order per source; delivery order follows it.
struct SynapseTable {
    std::string name;
    std::vector<Synapse> entries;

    uint64_t fan_out_of(uint32_t src) const; // requires built index
};

struct Population {
    std::string name;
    uint32_t offset = 0;
    uint32_t size = 0;
};

// Static network description: n external input units, populations of LIF
// neurons (flat id space), input->neuron tables and neuron->neuron tables.
class Network {
public:
    Network() : Network(0, LifParams{}) {}
    Network(uint32_t n_inputs, LifParams params);

    uint32_t add_population(const std::string& name, uint32_t size); // returns offset
    // Tables are validated on addition: endpoints must exist, weights must be
    // positive and finite, delays at least one timestep.
    void add_input_table(SynapseTable table);
    void add_internal_table(SynapseTable table);

    uint32_t n_inputs() const { return n_inputs_; }
    uint32_t n_neurons() const { return n_neurons_; }
    const LifParams& params() const { return params_; }
    const std::vector<Population>& populations() const { return populations_; }
    const std::vector<SynapseTable>& input_tables() const { return input_tables_; }
    const std::vector<SynapseTable>& internal_tables() const { return internal_tables_; }

    // CSR-style index built per table at add time
    struct TableIndex {
        std::vector<uint32_t> offsets; // size = domain + 1
        std::vector<uint32_t> order;   // entry indices grouped by src, insertion order kept
    };
    const TableIndex& input_index(size_t t) const { return input_index_[t]; }
    const TableIndex& internal_index(size_t t) const { return internal_index_[t]; }

    uint64_t input_fan_out(size_t table, uint32_t src) const;
    uint64_t internal_fan_out(size_t table, uint32_t src) const;

private:
    void validate_table(const SynapseTable& t, uint32_t src_domain, uint32_t dst_domain) const;
    static TableIndex build_index(const SynapseTable& t, uint32_t src_domain);

    uint32_t n_inputs_;
    uint32_t n_neurons_ = 0;
    LifParams params_;
    std::vector<Population> populations_;
    std::vector<SynapseTable> input_tables_, internal_tables_;
    std::vector<TableIndex> input_index_, internal_index_;
};

struct InputSpike {
    uint32_t unit = 0;
    int64_t t_us = 0;
};

struct SpikeEvent {
    uint32_t unit = 0;
    int64_t step = 0;

    bool operator==(const SpikeEvent&) const = default;
};

struct RunResult {
    std::vector<SpikeEvent> spikes;            // time order, unit ascending within a step
    std::vector<uint64_t> input_table_events;  // synaptic events per input table
    std::vector<uint64_t> internal_table_events;
    int64_t steps = 0;

    uint64_t total_spikes() const { return spikes.size(); }
    std::vector<uint64_t> spikes_per_unit(uint32_t n_units) const;
};

// Steppable simulator; exposes state so tests can watch single neurons.
// Input spikes must be sorted by time (ties keep list order).
class Simulator {
public:
    Simulator(const Network& net, std::vector<InputSpike> inputs);

    void step();
    int64_t current_step() const { return step_; }

    double voltage(uint32_t unit) const { return v_[unit]; }
    double g_exc(uint32_t unit) const { return ge_[unit]; }
    double g_inh(uint32_t unit) const { return gi_[unit]; }
    bool in_refractory(uint32_t unit) const { return refrac_[unit] > 0; }
    const std::vector<uint32_t>& last_emitted() const { return emitted_; }

    const std::vector<uint64_t>& input_table_events() const { return input_events_; }
    const std::vector<uint64_t>& internal_table_events() const { return internal_events_; }
    const std::vector<SpikeEvent>& spikes() const { return record_; }

private:
    struct Delivery {
        uint32_t dst;
        uint8_t inhibitory;
        double weight;
    };
    void schedule_from_input(uint32_t unit);
    void schedule_from_neuron(uint32_t unit);

    const Network& net_;
    kernels::LifStepConsts consts_;
    double syn_decay_;
    int refrac_steps_;
    std::vector<InputSpike> inputs_;
    size_t next_input_ = 0;
    std::vector<double> v_, ge_, gi_;
    std::vector<int32_t> refrac_;
    std::vector<std::vector<Delivery>> ring_;
    size_t ring_size_;
    int64_t step_ = 0;
    std::vector<uint32_t> emitted_;
    std::vector<uint64_t> input_events_, internal_events_;
    std::vector<SpikeEvent> record_;
};

// Runs the network for ceil(t_end_us / dt_us) steps and collects the record.
RunResult run(const Network& net, std::vector<InputSpike> inputs, int64_t t_end_us);

// Writes the spike record as CSV (population, unit, local_unit, step, t_us).
void dump_spikes_csv(const Network& net, const RunResult& r, const std::string& path);

} // namespace eventline
