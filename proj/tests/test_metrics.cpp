#include <vector>

#include "doctest.h"
#include "eventline/dataset.hpp"
#include "eventline/metrics.hpp"

using namespace eventline;

namespace {

PreprocessNetwork net_for(StrategyKind kind, uint16_t side, PolarityMode pol, int k) {
    StrategyConfig c;
    c.parts = {kind};
    c.polarity = pol;
    c.k = k;
    return build_network(SensorGeometry{side, side}, c);
}

EventSample noise(const SensorGeometry& g, size_t n, uint64_t seed) {
    Rng rng(seed);
    EventSample s;
    s.geometry = g;
    s.duration_us = 10000;
    for (size_t i = 0; i < n; ++i) {
        s.events.push_back(Event{uint16_t(rng.uniform_int(g.width)),
                                 uint16_t(rng.uniform_int(g.height)),
                                 rng.range_i64(0, s.duration_us), uint8_t(rng.coin())});
    }
    std::sort(s.events.begin(), s.events.end(),
              [](const Event& a, const Event& b) { return a.t < b.t; });
    return s;
}

} // namespace

TEST_CASE("synaptic event accounting agrees with the per-pixel fan-out recount") {
    const SensorGeometry g{16, 16};
    for (const PolarityMode pol : {PolarityMode::Merged, PolarityMode::Split}) {
        CAPTURE(int(pol));
        const auto net = net_for(StrategyKind::WholeSensor, 16, pol, 3);
        EnergyAccount acc;
        uint64_t raw = 0;
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            const EventSample s = noise(g, 400, seed);
            const auto res = preprocess(s, net);
            acc.add(res, s.events.size());
            raw += s.events.size();
        }
        const EnergyReport r = count_se(acc, net.pixel_fan_out, 4);

        CHECK(acc.n_samples == 5);
        CHECK(r.e_raw == doctest::Approx(double(raw) / 5.0));
        CHECK(r.se_p == doctest::Approx(double(acc.se_p_total) / 5.0));
        CHECK(r.se_c == doctest::Approx(r.e_pre * 4.0));
        CHECK(r.se == doctest::Approx(r.se_p + r.se_c));
        CHECK(r.preprocessed);

        // the recount is exact, so any tampering with the measured total throws
        EnergyAccount bad = acc;
        bad.se_p_total += 1;
        CHECK_THROWS_AS(count_se(bad, net.pixel_fan_out, 4), std::runtime_error);
    }
}

TEST_CASE("energy account rejects shape changes and empty use") {
    const auto net16 = net_for(StrategyKind::WholeSensor, 16, PolarityMode::Merged, 1);
    const auto net8 = net_for(StrategyKind::WholeSensor, 8, PolarityMode::Merged, 1);
    EnergyAccount acc;
    const EventSample a = noise(SensorGeometry{16, 16}, 50, 3);
    acc.add(preprocess(a, net16), a.events.size());
    const EventSample b = noise(SensorGeometry{8, 8}, 50, 4);
    CHECK_THROWS_AS(acc.add(preprocess(b, net8), b.events.size()), std::invalid_argument);

    EnergyAccount empty;
    CHECK_THROWS_AS(count_se(empty, net16.pixel_fan_out, 2), std::invalid_argument);
}

TEST_CASE("baseline pipeline energy is raw events into every label unit") {
    const EnergyReport r = count_se_baseline(1200, 4, 10);
    CHECK(r.e_raw == doctest::Approx(300.0));
    CHECK(r.se_c == doctest::Approx(3000.0));
    CHECK(r.se == doctest::Approx(3000.0));
    CHECK(!r.preprocessed);
    CHECK(r.se_p == 0.0);
    CHECK_THROWS_AS(count_se_baseline(0, 0, 10), std::invalid_argument);
}

TEST_CASE("efficiency is accuracy per synaptic event") {
    const Efficiency e = efficiency(0.9, 1800.0);
    CHECK(e.defined);
    CHECK(e.value == doctest::Approx(0.0005));
    CHECK(e.accuracy == 0.9);
    CHECK(e.se == 1800.0);

    const Efficiency zero = efficiency(0.9, 0.0);
    CHECK(!zero.defined);
    CHECK(zero.value == 0.0);
}

TEST_CASE("admissibility gate is two thirds of baseline accuracy") {
    CHECK(admissibility_threshold(0.9) == doctest::Approx(0.6));
    CHECK(admissible(0.6, 0.9));
    CHECK(admissible(0.61, 0.9));
    CHECK(!admissible(0.59, 0.9));

    // the gate is scale-invariant: rescaling both accuracies together does
    // not change the verdict
    for (const double s : {0.5, 2.0}) {
        CHECK(admissible(0.61 * s, 0.9 * s));
        CHECK(!admissible(0.59 * s, 0.9 * s));
    }
}

TEST_CASE("architecture census of a built network") {
    const auto net = net_for(StrategyKind::WholeSensor, 34, PolarityMode::Merged, 1);
    const ArchitectureCensus c = census(net, 4);

    CHECK(c.preproc_neurons == 136); // 4 detectors x 34 units
    CHECK(c.classifier_neurons == 4);
    CHECK(c.neurons() == 140);
    CHECK(c.pattern_synapses == net.pattern_synapses());
    CHECK(c.wta_synapses == net.wta_synapses());
    CHECK(c.wta_synapses == 4ull * 34 * 33);
    CHECK(c.classifier_synapses == 136ull * 4);
    CHECK(c.unique_parameters == 136ull * 4 + 4);
    CHECK(c.synapses() == c.pattern_synapses + c.wta_synapses + c.classifier_synapses);

    // every line unit's fan-in counts its pattern synapses plus the 33
    // inhibitory edges from its detector peers; the max over the network
    // must exceed the classifier fan-in (136) on this dense configuration
    uint64_t max_fan = 0, fan_sum = 0;
    for (const auto& bank : net.banks) {
        for (const auto& det : bank.detectors) {
            for (uint32_t fi : det.pattern.fan_in) {
                max_fan = std::max<uint64_t>(max_fan, fi + 33);
                fan_sum += fi + 33;
            }
        }
    }
    max_fan = std::max<uint64_t>(max_fan, 136);
    fan_sum += 136ull * 4;
    CHECK(c.max_fan_in == max_fan);
    CHECK(c.mean_fan_in == doctest::Approx(double(fan_sum) / 140.0));
}

TEST_CASE("split polarity doubles the census") {
    const auto merged = net_for(StrategyKind::CentralQuarter, 34, PolarityMode::Merged, 5);
    const auto split = net_for(StrategyKind::CentralQuarter, 34, PolarityMode::Split, 5);
    const ArchitectureCensus cm = census(merged, 10);
    const ArchitectureCensus cs = census(split, 10);
    CHECK(cs.preproc_neurons == 2 * cm.preproc_neurons);
    CHECK(cs.pattern_synapses == 2 * cm.pattern_synapses);
    CHECK(cs.wta_synapses == 2 * cm.wta_synapses);
    CHECK(cs.classifier_synapses == 2 * cm.classifier_synapses);
    CHECK(cs.max_fan_in >= cm.max_fan_in);
}

TEST_CASE("census of the no-preprocessing pipeline") {
    const SensorGeometry g{34, 34};
    const ArchitectureCensus m = census_no_preprocessing(g, PolarityMode::Merged, 10);
    CHECK(m.preproc_neurons == 0);
    CHECK(m.classifier_neurons == 10);
    CHECK(m.classifier_synapses == 1156ull * 10);
    CHECK(m.unique_parameters == 1156ull * 10 + 10);
    CHECK(m.max_fan_in == 1156);
    CHECK(m.mean_fan_in == doctest::Approx(1156.0));

    const ArchitectureCensus s = census_no_preprocessing(g, PolarityMode::Split, 10);
    CHECK(s.classifier_synapses == 2312ull * 10);
    CHECK(s.max_fan_in == 2312);
}

TEST_CASE("strategy unit counts without building the network") {
    // even side: the quarter tiles cover the sensor exactly
    CHECK(strategy_unit_count(StrategyKind::WholeSensor, 34) == 136);
    CHECK(strategy_unit_count(StrategyKind::CentralQuarter, 34) == 68);
    CHECK(strategy_unit_count(StrategyKind::Cross, 34) == 272);
    CHECK(strategy_unit_count(StrategyKind::CornerQuartersAll, 34) == 272);
    CHECK(strategy_unit_count(StrategyKind::CornerQuartersInner, 34) == 136);

    // spot-check the formulas against built networks
    for (const StrategyKind kind :
         {StrategyKind::WholeSensor, StrategyKind::CentralQuarter, StrategyKind::Cross,
          StrategyKind::CornerQuartersAll, StrategyKind::CornerQuartersInner}) {
        CAPTURE(int(kind));
        const auto net = net_for(kind, 16, PolarityMode::Merged, 1);
        CHECK(strategy_unit_count(kind, 16) == net.units_per_channel);
    }
}
