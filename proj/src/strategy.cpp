#include "eventline/strategy.hpp"

#include <algorithm>
#include <stdexcept>

namespace eventline {

const char* strategy_token(StrategyKind k) {
    switch (k) {
        case StrategyKind::WholeSensor: return "ws";
        case StrategyKind::CentralQuarter: return "ce";
        case StrategyKind::Cross: return "cr";
        case StrategyKind::CornerQuartersAll: return "cq-ad";
        default: return "cq-id";
    }
}

StrategyKind parse_strategy_kind(const std::string& token) {
    if (token == "ws") return StrategyKind::WholeSensor;
    if (token == "ce") return StrategyKind::CentralQuarter;
    if (token == "cr") return StrategyKind::Cross;
    if (token == "cq-ad") return StrategyKind::CornerQuartersAll;
    if (token == "cq-id") return StrategyKind::CornerQuartersInner;
    throw std::invalid_argument("unknown strategy '" + token +
                                "' (expected ws, ce, cr, cq-ad or cq-id)");
}

std::vector<StrategyKind> parse_strategy_list(const std::string& s) {
    std::vector<StrategyKind> parts;
    size_t pos = 0;
    while (pos <= s.size()) {
        const size_t plus = s.find('+', pos);
        const std::string tok = s.substr(pos, plus == std::string::npos ? plus : plus - pos);
        parts.push_back(parse_strategy_kind(tok));
        if (plus == std::string::npos) break;
        pos = plus + 1;
    }
    return parts;
}

std::string StrategyConfig::name() const {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += '+';
        out += strategy_token(parts[i]);
    }
    return out;
}

void StrategyConfig::validate() const {
    if (parts.empty() || parts.size() > 3) {
        throw std::invalid_argument("a strategy combines 1 to 3 parts");
    }
    for (size_t i = 0; i < parts.size(); ++i) {
        for (size_t j = i + 1; j < parts.size(); ++j) {
            if (parts[i] == parts[j]) {
                throw std::invalid_argument("duplicate strategy part '" +
                                            std::string(strategy_token(parts[i])) + "'");
            }
        }
    }
    if (k < 1) throw std::invalid_argument("sampling step k must be >= 1");
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
}

namespace {

struct BankPlan {
    StrategyKind part;
    std::string name;
    Region region;
    std::vector<Side> sides;
};

constexpr Side kAllSides[4] = {Side::Top, Side::Bottom, Side::Left, Side::Right};

std::vector<BankPlan> plan_part(StrategyKind part, uint16_t l) {
    const uint16_t h = l / 2;
    const uint16_t q = l / 4;
    std::vector<BankPlan> plans;
    auto all = std::vector<Side>(kAllSides, kAllSides + 4);
    switch (part) {
        case StrategyKind::WholeSensor:
            plans.push_back({part, "ws", Region{0, 0, l}, all});
            break;
        case StrategyKind::CentralQuarter:
            plans.push_back({part, "ce", Region{uint16_t((l - h) / 2), uint16_t((l - h) / 2), h},
                             all});
            break;
        case StrategyKind::Cross:
            plans.push_back({part, "cr/top", Region{q, 0, h}, all});
            plans.push_back({part, "cr/right", Region{uint16_t(l - h), q, h}, all});
            plans.push_back({part, "cr/bottom", Region{q, uint16_t(l - h), h}, all});
            plans.push_back({part, "cr/left", Region{0, q, h}, all});
            break;
        case StrategyKind::CornerQuartersAll:
            plans.push_back({part, "cq-ad/tl", Region{0, 0, h}, all});
            plans.push_back({part, "cq-ad/tr", Region{uint16_t(l - h), 0, h}, all});
            plans.push_back({part, "cq-ad/bl", Region{0, uint16_t(l - h), h}, all});
            plans.push_back({part, "cq-ad/br", Region{uint16_t(l - h), uint16_t(l - h), h}, all});
            break;
        case StrategyKind::CornerQuartersInner:
            // inner borders: the two detector sides facing the sensor centre
            plans.push_back({part, "cq-id/tl", Region{0, 0, h},
                             {Side::Bottom, Side::Right}});
            plans.push_back({part, "cq-id/tr", Region{uint16_t(l - h), 0, h},
                             {Side::Bottom, Side::Left}});
            plans.push_back({part, "cq-id/bl", Region{0, uint16_t(l - h), h},
                             {Side::Top, Side::Right}});
            plans.push_back({part, "cq-id/br", Region{uint16_t(l - h), uint16_t(l - h), h},
                             {Side::Top, Side::Left}});
            break;
    }
    return plans;
}

} // namespace

uint64_t PreprocessNetwork::pattern_synapses() const {
    uint64_t n = 0;
    for (const auto& t : network.input_tables()) n += t.entries.size();
    return n;
}

uint64_t PreprocessNetwork::wta_synapses() const {
    uint64_t n = 0;
    for (const auto& t : network.internal_tables()) n += t.entries.size();
    return n;
}

std::vector<std::pair<uint32_t, uint32_t>> PreprocessNetwork::route(uint16_t x, uint16_t y) const {
    std::vector<std::pair<uint32_t, uint32_t>> hits;
    const uint16_t l = sensor.width;
    const uint16_t h = l / 2;
    // Banks are laid out per part in plan order; partition parts own four
    // consecutive banks in tl,tr,bl,br order.
    size_t b = 0;
    for (StrategyKind part : config.parts) {
        switch (part) {
            case StrategyKind::WholeSensor:
                hits.emplace_back(uint32_t(b), banks[b].region.local_index(x, y));
                b += 1;
                break;
            case StrategyKind::CentralQuarter: {
                const Region& r = banks[b].region;
                if (r.contains(x, y)) hits.emplace_back(uint32_t(b), r.local_index(x, y));
                b += 1;
                break;
            }
            case StrategyKind::Cross: {
                for (size_t i = 0; i < 4; ++i) {
                    const Region& r = banks[b + i].region;
                    if (r.contains(x, y)) hits.emplace_back(uint32_t(b + i), r.local_index(x, y));
                }
                b += 4;
                break;
            }
            case StrategyKind::CornerQuartersAll:
            case StrategyKind::CornerQuartersInner: {
                // exact partition; the seam coordinate of odd sensors joins
                // the lower-index tile with its local coordinate clamped
                uint16_t tix, lx, tiy, ly;
                if (x < h) { tix = 0; lx = x; }
                else if (x >= l - h) { tix = 1; lx = uint16_t(x - (l - h)); }
                else { tix = 0; lx = uint16_t(h - 1); }
                if (y < h) { tiy = 0; ly = y; }
                else if (y >= l - h) { tiy = 1; ly = uint16_t(y - (l - h)); }
                else { tiy = 0; ly = uint16_t(h - 1); }
                const size_t tile = size_t(tiy) * 2 + tix;
                hits.emplace_back(uint32_t(b + tile), uint32_t(ly) * h + lx);
                b += 4;
                break;
            }
        }
    }
    return hits;
}

PreprocessNetwork build_network(const SensorGeometry& sensor, const StrategyConfig& config,
                                const LifParams& params) {
    config.validate();
    if (!sensor.is_square()) {
        throw std::invalid_argument("tiling strategies need a square sensor, got " +
                                    std::to_string(sensor.width) + "x" +
                                    std::to_string(sensor.height));
    }
    PreprocessNetwork net;
    net.sensor = sensor;
    net.config = config;
    net.channels = config.polarity == PolarityMode::Split ? 2 : 1;
    if (sensor.width % 2 != 0) {
        net.warnings.push_back("odd sensor side " + std::to_string(sensor.width) +
                               ": quarter tiles use side " + std::to_string(sensor.width / 2) +
                               ", seam pixels clamp to the lower-index tile");
    }

    // plan banks
    uint32_t input_offset = 0, unit_offset = 0;
    for (StrategyKind part : config.parts) {
        for (auto& plan : plan_part(part, sensor.width)) {
            Bank bank;
            bank.part = plan.part;
            bank.name = plan.name;
            bank.region = plan.region;
            bank.input_offset = input_offset;
            const int k_eff = std::min<int>(config.k, plan.region.side);
            if (k_eff != config.k) {
                net.warnings.push_back("bank " + plan.name + ": k=" + std::to_string(config.k) +
                                       " clamped to region side " +
                                       std::to_string(plan.region.side));
            }
            for (Side side : plan.sides) {
                BankDetector det;
                det.side = side;
                det.unit_offset = unit_offset;
                det.pattern = build_pattern(plan.region, side, k_eff, config.omega);
                det.wta = build_wta(plan.region.side);
                unit_offset += plan.region.side;
                bank.detectors.push_back(std::move(det));
            }
            input_offset += plan.region.pixel_count();
            net.banks.push_back(std::move(bank));
        }
    }
    net.inputs_per_channel = input_offset;
    net.units_per_channel = unit_offset;

    // realise as a spiking network, channel-major
    Network lif(net.channels * net.inputs_per_channel, params);
    for (uint32_t ch = 0; ch < net.channels; ++ch) {
        const std::string prefix = net.channels > 1 ? ("p" + std::to_string(ch) + "/") : "";
        for (const auto& bank : net.banks) {
            for (const auto& det : bank.detectors) {
                const uint32_t offset = lif.add_population(
                    prefix + bank.name + "/" + side_name(det.side), bank.region.side);
                if (offset != ch * net.units_per_channel + det.unit_offset) {
                    throw std::logic_error("population layout out of sync");
                }
            }
        }
    }
    for (uint32_t ch = 0; ch < net.channels; ++ch) {
        const uint32_t in_base = ch * net.inputs_per_channel;
        const uint32_t unit_base = ch * net.units_per_channel;
        for (const auto& bank : net.banks) {
            for (const auto& det : bank.detectors) {
                SynapseTable pattern;
                pattern.name = bank.name + "/" + side_name(det.side) + "/pattern";
                pattern.entries.reserve(det.pattern.table.entries.size());
                for (const auto& s : det.pattern.table.entries) {
                    pattern.entries.push_back(Synapse{in_base + bank.input_offset + s.src,
                                                      unit_base + det.unit_offset + s.dst,
                                                      s.weight, s.delay_ms, s.sign});
                }
                lif.add_input_table(std::move(pattern));

                SynapseTable wta;
                wta.name = bank.name + "/" + side_name(det.side) + "/wta";
                wta.entries.reserve(det.wta.entries.size());
                for (const auto& s : det.wta.entries) {
                    wta.entries.push_back(Synapse{unit_base + det.unit_offset + s.src,
                                                  unit_base + det.unit_offset + s.dst, s.weight,
                                                  s.delay_ms, s.sign});
                }
                lif.add_internal_table(std::move(wta));
            }
        }
    }
    net.network = std::move(lif);

    // fan-out of each sensor pixel through the pattern tables (one channel)
    std::vector<std::vector<uint32_t>> bank_fan(net.banks.size());
    for (size_t b = 0; b < net.banks.size(); ++b) {
        bank_fan[b].assign(net.banks[b].region.pixel_count(), 0);
        for (const auto& det : net.banks[b].detectors) {
            for (const auto& s : det.pattern.table.entries) bank_fan[b][s.src]++;
        }
    }
    net.pixel_fan_out.assign(sensor.pixel_count(), 0);
    for (uint16_t y = 0; y < sensor.height; ++y) {
        for (uint16_t x = 0; x < sensor.width; ++x) {
            uint32_t fan = 0;
            for (const auto& [bank_idx, local] : net.route(x, y)) fan += bank_fan[bank_idx][local];
            net.pixel_fan_out[size_t(y) * sensor.width + x] = fan;
        }
    }
    return net;
}

PreprocessNetwork cumulate(std::span<const PreprocessNetwork> nets) {
    if (nets.empty()) throw std::invalid_argument("nothing to cumulate");
    StrategyConfig combined = nets.front().config;
    for (size_t i = 1; i < nets.size(); ++i) {
        const auto& c = nets[i].config;
        if (nets[i].sensor != nets.front().sensor) {
            throw std::invalid_argument("cumulate: sensor geometries differ");
        }
        if (c.polarity != combined.polarity) {
            throw std::invalid_argument("cumulate: polarity modes differ");
        }
        if (c.k != combined.k || c.omega != combined.omega) {
            throw std::invalid_argument("cumulate: k/omega differ");
        }
        combined.parts.insert(combined.parts.end(), c.parts.begin(), c.parts.end());
    }
    combined.validate(); // catches duplicates and too many parts
    return build_network(nets.front().sensor, combined, nets.front().network.params());
}

PreprocessResult preprocess(const EventSample& sample, const PreprocessNetwork& net) {
    if (!(sample.geometry == net.sensor)) {
        throw std::invalid_argument("sample geometry does not match the network's sensor");
    }
    PreprocessResult res;
    res.pixel_counts.assign(size_t(net.channels) * net.sensor.pixel_count(), 0);

    std::vector<InputSpike> inputs;
    inputs.reserve(sample.events.size());
    for (const Event& e : sample.events) {
        const uint32_t ch = net.channels == 2 ? e.p : 0;
        res.pixel_counts[size_t(ch) * net.sensor.pixel_count() +
                         size_t(e.y) * net.sensor.width + e.x]++;
        for (const auto& [bank_idx, local] : net.route(e.x, e.y)) {
            inputs.push_back(InputSpike{ch * net.inputs_per_channel +
                                            net.banks[bank_idx].input_offset + local,
                                        e.t});
        }
    }
    res.routed_input_spikes = inputs.size();

    const int64_t t_end = sample.duration_us + kPreprocessTailUs;
    res.run = run(net.network, std::move(inputs), t_end);
    for (uint64_t n : res.run.input_table_events) res.se_p += n;
    for (uint64_t n : res.run.internal_table_events) res.wta_events += n;

    const int64_t dt_us = net.network.params().dt_us();
    res.output.geometry = SensorGeometry{uint16_t(net.units_per_channel), 1};
    res.output.label = sample.label;
    res.output.duration_us = t_end;
    res.output.events.reserve(res.run.spikes.size());
    for (const auto& s : res.run.spikes) {
        const uint32_t ch = s.unit / net.units_per_channel;
        const uint32_t unit = s.unit % net.units_per_channel;
        res.output.events.push_back(Event{uint16_t(unit), 0, s.step * dt_us, uint8_t(ch)});
    }
    res.out_events = res.output.events.size();
    return res;
}

std::vector<DetectorRecord> detector_records(const PreprocessNetwork& net, const RunResult& run,
                                             uint32_t channel) {
    std::vector<DetectorRecord> records;
    for (const auto& bank : net.banks) {
        for (const auto& det : bank.detectors) {
            DetectorRecord rec;
            rec.side = det.side;
            rec.region = bank.region;
            records.push_back(std::move(rec));
        }
    }
    // map channel-local unit -> (record, local idx)
    std::vector<std::pair<uint32_t, uint32_t>> where(net.units_per_channel);
    {
        size_t r = 0;
        for (const auto& bank : net.banks) {
            for (const auto& det : bank.detectors) {
                for (uint32_t i = 0; i < bank.region.side; ++i) {
                    where[det.unit_offset + i] = {uint32_t(r), i};
                }
                ++r;
            }
        }
    }
    const uint32_t base = channel * net.units_per_channel;
    for (const auto& s : run.spikes) {
        if (s.unit < base || s.unit >= base + net.units_per_channel) continue;
        const auto [r, idx] = where[s.unit - base];
        records[r].spikes.push_back(SpikeEvent{idx, s.step});
    }
    return records;
}

} // namespace eventline
