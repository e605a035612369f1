#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "eventline/dataset.hpp"
#include "eventline/strategy.hpp"

using namespace eventline;

namespace {

StrategyConfig cfg(const std::string& parts, PolarityMode pol = PolarityMode::Merged, int k = 1,
                   double omega = 5.0) {
    StrategyConfig c;
    c.parts = parse_strategy_list(parts);
    c.polarity = pol;
    c.k = k;
    c.omega = omega;
    return c;
}

EventSample flipped(EventSample s) {
    for (Event& e : s.events) e.p = uint8_t(1 - e.p);
    return s;
}

// (unit, channel, time) multiset of an output stream, order-insensitive
std::multiset<std::tuple<uint16_t, uint8_t, int64_t>> out_set(const EventSample& s) {
    std::multiset<std::tuple<uint16_t, uint8_t, int64_t>> m;
    for (const Event& e : s.events) m.insert({e.x, e.p, e.t});
    return m;
}

} // namespace

TEST_CASE("strategy tokens parse and print both ways") {
    for (StrategyKind k : {StrategyKind::WholeSensor, StrategyKind::CentralQuarter,
                           StrategyKind::Cross, StrategyKind::CornerQuartersAll,
                           StrategyKind::CornerQuartersInner}) {
        CHECK(parse_strategy_kind(strategy_token(k)) == k);
    }
    CHECK(parse_strategy_list("ce") == std::vector<StrategyKind>{StrategyKind::CentralQuarter});
    CHECK(parse_strategy_list("cq-ad+cr") ==
          std::vector<StrategyKind>{StrategyKind::CornerQuartersAll, StrategyKind::Cross});
    CHECK(cfg("ce+cr+ws").name() == "ce+cr+ws");
    CHECK_THROWS_AS(parse_strategy_kind("zz"), std::invalid_argument);
    CHECK_THROWS_AS(parse_strategy_list("ce+"), std::invalid_argument);
    CHECK_THROWS_AS(parse_strategy_list(""), std::invalid_argument);

    CHECK_NOTHROW(cfg("ce+cr").validate());
    CHECK_THROWS_AS(cfg("ce+ce").validate(), std::invalid_argument);
    CHECK_THROWS_AS(StrategyConfig{}.validate(), std::invalid_argument); // no parts
    CHECK_THROWS_AS(cfg("ws+ce+cr", PolarityMode::Merged, 0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(cfg("ws", PolarityMode::Merged, 1, 0.0).validate(), std::invalid_argument);
    StrategyConfig four = cfg("ws+ce+cr");
    four.parts.push_back(StrategyKind::CornerQuartersAll);
    CHECK_THROWS_AS(four.validate(), std::invalid_argument);
}

TEST_CASE("unit census follows the per-strategy formulas") {
    // per polarity channel: ws 4l, ce 4*(l/2), cr and cq-ad 16*(l/2),
    // cq-id 8*(l/2); quarter tiles of odd sensors use side floor(l/2)
    auto census = [](int l, const std::string& parts) {
        return build_network(SensorGeometry{uint16_t(l), uint16_t(l)}, cfg(parts, PolarityMode::Merged, 1))
            .units_per_channel;
    };
    for (int l : {8, 34, 128}) {
        const uint32_t ul = uint32_t(l);
        CHECK(census(l, "ws") == 4 * ul);
        CHECK(census(l, "ce") == 2 * ul);
        CHECK(census(l, "cr") == 8 * ul);
        CHECK(census(l, "cq-ad") == 8 * ul);
        CHECK(census(l, "cq-id") == 4 * ul);
    }
    // odd side: quarters shrink to 17
    CHECK(census(35, "ws") == 140);
    CHECK(census(35, "ce") == 68);
    CHECK(census(35, "cr") == 272);
    CHECK(census(35, "cq-ad") == 272);
    CHECK(census(35, "cq-id") == 136);

    // cumulative census adds, split doubles the unit total but not n_P
    CHECK(census(128, "ce+cr") == 1280);
    CHECK(census(128, "cq-ad+cr+ce") == 18 * 128);
    const auto split = build_network({128, 128}, cfg("cr", PolarityMode::Split, 16));
    CHECK(split.units_per_channel == 1024);
    CHECK(split.channels == 2);
    CHECK(split.n_units() == 2048);

    const auto odd = build_network({35, 35}, cfg("ce"));
    REQUIRE_FALSE(odd.warnings.empty());
    CHECK(build_network({34, 34}, cfg("ws")).warnings.empty());
    CHECK_THROWS_AS(build_network({32, 24}, cfg("ws")), std::invalid_argument);
}

TEST_CASE("region layout per strategy") {
    SUBCASE("central quarter sits centered") {
        const auto net = build_network({34, 34}, cfg("ce"));
        REQUIRE(net.banks.size() == 1);
        CHECK(net.banks[0].region == Region{8, 8, 17});
        CHECK(net.banks[0].detectors.size() == 4);
    }
    SUBCASE("corner quarters tile the sensor") {
        const auto net = build_network({34, 34}, cfg("cq-ad"));
        REQUIRE(net.banks.size() == 4);
        CHECK(net.banks[0].region == Region{0, 0, 17});
        CHECK(net.banks[1].region == Region{17, 0, 17});
        CHECK(net.banks[2].region == Region{0, 17, 17});
        CHECK(net.banks[3].region == Region{17, 17, 17});
        for (const auto& b : net.banks) CHECK(b.detectors.size() == 4);
    }
    SUBCASE("inner-detector quarters keep the two centre-facing sides") {
        const auto net = build_network({34, 34}, cfg("cq-id"));
        REQUIRE(net.banks.size() == 4);
        auto sides = [&](size_t b) {
            std::set<Side> s;
            for (const auto& d : net.banks[b].detectors) s.insert(d.side);
            return s;
        };
        CHECK(sides(0) == std::set<Side>{Side::Bottom, Side::Right}); // top-left tile
        CHECK(sides(1) == std::set<Side>{Side::Bottom, Side::Left});  // top-right
        CHECK(sides(2) == std::set<Side>{Side::Top, Side::Right});    // bottom-left
        CHECK(sides(3) == std::set<Side>{Side::Top, Side::Left});     // bottom-right
    }
    SUBCASE("cross tiles centre on the four half-axes") {
        const auto net = build_network({128, 128}, cfg("cr", PolarityMode::Merged, 16));
        REQUIRE(net.banks.size() == 4);
        CHECK(net.banks[0].region == Region{32, 0, 64});   // top
        CHECK(net.banks[1].region == Region{64, 32, 64});  // right
        CHECK(net.banks[2].region == Region{32, 64, 64});  // bottom
        CHECK(net.banks[3].region == Region{0, 32, 64});   // left
    }
}

TEST_CASE("event routing matches region membership") {
    SUBCASE("partition strategies hit exactly one tile") {
        for (int l : {34, 35}) {
            for (const char* parts : {"cq-ad", "cq-id"}) {
                const auto net = build_network({uint16_t(l), uint16_t(l)}, cfg(parts));
                const int h = l / 2;
                for (int y = 0; y < l; ++y) {
                    for (int x = 0; x < l; ++x) {
                        const auto hits = net.route(uint16_t(x), uint16_t(y));
                        CAPTURE(l); CAPTURE(parts); CAPTURE(x); CAPTURE(y);
                        REQUIRE(hits.size() == 1);
                        const auto& [b, local] = hits[0];
                        const Region& r = net.banks[b].region;
                        if (r.contains(uint16_t(x), uint16_t(y))) {
                            CHECK(local == r.local_index(uint16_t(x), uint16_t(y)));
                        } else {
                            // seam pixel of an odd sensor, clamped per axis
                            // into the lower-index tile's outermost row/column
                            CHECK(l % 2 == 1);
                            CHECK((x == h || y == h));
                            const int lx = x == h ? h - 1 : x - r.x0;
                            const int ly = y == h ? h - 1 : y - r.y0;
                            CHECK(b == (y >= h + 1 ? 2u : 0u) + (x >= h + 1 ? 1u : 0u));
                            CHECK(local == uint32_t(ly) * h + uint32_t(lx));
                        }
                    }
                }
            }
        }
    }
    SUBCASE("the cross duplicates overlap pixels and drops the corners") {
        const auto net = build_network({128, 128}, cfg("cr", PolarityMode::Merged, 16));
        uint32_t dropped = 0, duplicated = 0;
        for (int y = 0; y < 128; ++y) {
            for (int x = 0; x < 128; ++x) {
                std::vector<std::pair<uint32_t, uint32_t>> expected;
                for (uint32_t b = 0; b < 4; ++b) {
                    const Region& r = net.banks[b].region;
                    if (r.contains(uint16_t(x), uint16_t(y))) {
                        expected.emplace_back(b, r.local_index(uint16_t(x), uint16_t(y)));
                    }
                }
                REQUIRE(net.route(uint16_t(x), uint16_t(y)) == expected);
                if (expected.empty()) ++dropped;
                if (expected.size() > 1) ++duplicated;
                // corners are exactly the four 32x32 blocks
                const bool corner = (x < 32 || x >= 96) && (y < 32 || y >= 96);
                CHECK(expected.empty() == corner);
            }
        }
        CHECK(dropped == 4 * 32 * 32);
        CHECK(duplicated > 0);
    }
    SUBCASE("whole sensor and central quarter") {
        const auto ws = build_network({34, 34}, cfg("ws"));
        CHECK(ws.route(0, 0) == std::vector<std::pair<uint32_t, uint32_t>>{{0, 0}});
        CHECK(ws.route(33, 33) == std::vector<std::pair<uint32_t, uint32_t>>{{0, 33 * 34 + 33}});
        const auto ce = build_network({34, 34}, cfg("ce"));
        CHECK(ce.route(0, 0).empty());
        CHECK(ce.route(8, 8) == std::vector<std::pair<uint32_t, uint32_t>>{{0, 0}});
        CHECK(ce.route(24, 24) == std::vector<std::pair<uint32_t, uint32_t>>{{0, 16 * 17 + 16}});
        CHECK(ce.route(25, 8).empty());
    }
    SUBCASE("cumulative routing concatenates the parts") {
        const auto net = build_network({34, 34}, cfg("ce+cq-ad"));
        const auto hits = net.route(9, 9);
        REQUIRE(hits.size() == 2);
        CHECK(hits[0].first == 0);  // ce bank
        CHECK(hits[1].first == 1);  // top-left corner tile
        CHECK(net.route(0, 0).size() == 1); // outside ce
    }
}

TEST_CASE("pattern and wta synapse counts tie out against the banks") {
    for (const char* parts : {"ws", "ce", "cr", "cq-id"}) {
        for (PolarityMode pol : {PolarityMode::Merged, PolarityMode::Split}) {
            const auto net = build_network({34, 34}, cfg(parts, pol, 5));
            uint64_t pattern = 0, wta = 0, units = 0;
            for (const auto& b : net.banks) {
                for (const auto& d : b.detectors) {
                    pattern += d.pattern.total_synapses();
                    wta += uint64_t(b.region.side) * (b.region.side - 1);
                    units += b.region.side;
                }
            }
            CAPTURE(parts); CAPTURE(int(pol));
            CHECK(net.pattern_synapses() == pattern * net.channels);
            CHECK(net.wta_synapses() == wta * net.channels);
            CHECK(net.units_per_channel == units);

            // per-pixel fan-out sums back to one channel's pattern synapses
            // (each bank-local pixel is owned by exactly one sensor pixel on
            // an even sensor)
            uint64_t fan = 0;
            for (uint32_t f : net.pixel_fan_out) fan += f;
            CHECK(fan == pattern);
        }
    }
}

TEST_CASE("preprocess on an empty sample produces nothing") {
    const auto net = build_network({34, 34}, cfg("ce"));
    EventSample empty;
    empty.geometry = {34, 34};
    empty.duration_us = 5000;
    const auto res = preprocess(empty, net);
    CHECK(res.output.events.empty());
    CHECK(res.se_p == 0);
    CHECK(res.wta_events == 0);
    CHECK(res.out_events == 0);
    CHECK(res.routed_input_spikes == 0);
    CHECK(res.output.duration_us == 5000 + kPreprocessTailUs);
    CHECK(res.output.geometry == SensorGeometry{68, 1});

    EventSample wrong;
    wrong.geometry = {35, 35};
    CHECK_THROWS_AS(preprocess(wrong, net), std::invalid_argument);
}

TEST_CASE("a line inside one corner tile only drives that tile's detectors") {
    const SensorGeometry g{34, 34};
    // diagonal chord inside the top-left 17x17 tile
    EventSample s = synth_moving_line(g, Side::Top, 3, Side::Left, 13, 10000, 150000, 21);
    for (const Event& e : s.events) {
        REQUIRE(e.x < 17);
        REQUIRE(e.y < 17);
    }
    const auto net = build_network(g, cfg("cq-ad", PolarityMode::Merged, 1, 5.0));
    const auto res = preprocess(s, net);
    REQUIRE_FALSE(res.output.events.empty());
    const uint32_t tl_units = 4 * 17; // four detectors of the first bank
    for (const Event& e : res.output.events) {
        CHECK(e.x < tl_units);
    }
    CHECK(res.se_p > 0);
}

TEST_CASE("merged mode is blind to polarity, split mode mirrors it") {
    const SensorGeometry g{34, 34};
    EventSample s = synth_moving_line(g, Side::Top, 5, Side::Bottom, 28, 10000, 120000, 33);

    SUBCASE("merged") {
        const auto net = build_network(g, cfg("ws", PolarityMode::Merged, 5));
        const auto a = preprocess(s, net);
        const auto b = preprocess(flipped(s), net);
        CHECK(a.output.events == b.output.events);
        CHECK(a.se_p == b.se_p);
        CHECK(a.wta_events == b.wta_events);
        CHECK(a.pixel_counts == b.pixel_counts);
    }
    SUBCASE("split swaps the output channels") {
        const auto net = build_network(g, cfg("ws", PolarityMode::Split, 5));
        const auto a = preprocess(s, net);
        const auto b = preprocess(flipped(s), net);
        REQUIRE_FALSE(a.output.events.empty());
        auto swapped = b.output;
        for (Event& e : swapped.events) e.p = uint8_t(1 - e.p);
        CHECK(out_set(a.output) == out_set(swapped));
        CHECK(a.se_p == b.se_p);
    }
}

TEST_CASE("cumulate concatenates banks and passes events through unchanged") {
    const SensorGeometry g{34, 34};
    const auto ce = build_network(g, cfg("ce", PolarityMode::Merged, 5));
    const auto cq = build_network(g, cfg("cq-id", PolarityMode::Merged, 5));
    const PreprocessNetwork nets[] = {ce, cq};
    const auto both = cumulate(nets);

    CHECK(both.config.name() == "ce+cq-id");
    CHECK(both.units_per_channel == ce.units_per_channel + cq.units_per_channel);
    CHECK(both.pattern_synapses() == ce.pattern_synapses() + cq.pattern_synapses());
    CHECK(both.wta_synapses() == ce.wta_synapses() + cq.wta_synapses());
    REQUIRE(both.banks.size() == ce.banks.size() + cq.banks.size());
    for (size_t i = 0; i < ce.banks.size(); ++i) CHECK(both.banks[i].region == ce.banks[i].region);

    // a direct build of the combined strategy is identical
    const auto direct = build_network(g, cfg("ce+cq-id", PolarityMode::Merged, 5));
    CHECK(direct.units_per_channel == both.units_per_channel);
    CHECK(direct.pattern_synapses() == both.pattern_synapses());

    // constituent banks behave as they do alone: the ce slice of the output
    // equals the standalone ce output, and the cq slice the standalone cq
    // output shifted by ce's unit count
    EventSample s = synth_moving_line(g, Side::Top, 12, Side::Bottom, 22, 10000, 120000, 5);
    const auto res_both = preprocess(s, both);
    const auto res_ce = preprocess(s, ce);
    const auto res_cq = preprocess(s, cq);
    std::vector<Event> ce_slice, cq_slice;
    for (const Event& e : res_both.output.events) {
        if (e.x < ce.units_per_channel) {
            ce_slice.push_back(e);
        } else {
            cq_slice.push_back(Event{uint16_t(e.x - ce.units_per_channel), e.y, e.t, e.p});
        }
    }
    CHECK(ce_slice == res_ce.output.events);
    CHECK(cq_slice == res_cq.output.events);
    CHECK(res_both.se_p == res_ce.se_p + res_cq.se_p);
    CHECK(res_both.wta_events == res_ce.wta_events + res_cq.wta_events);

    // cumulating a single network reproduces it
    const PreprocessNetwork one[] = {ce};
    const auto same = cumulate(one);
    CHECK(same.config.name() == "ce");
    CHECK(same.units_per_channel == ce.units_per_channel);
    CHECK(preprocess(s, same).output.events == res_ce.output.events);
}

TEST_CASE("cumulate rejects mismatched inputs") {
    const SensorGeometry g{34, 34};
    const auto base = build_network(g, cfg("ce", PolarityMode::Merged, 5));
    auto reject = [&](const PreprocessNetwork& other) {
        const PreprocessNetwork nets[] = {base, other};
        CHECK_THROWS_AS(cumulate(nets), std::invalid_argument);
    };
    reject(build_network({128, 128}, cfg("cr", PolarityMode::Merged, 5)));
    reject(build_network(g, cfg("cr", PolarityMode::Split, 5)));
    reject(build_network(g, cfg("cr", PolarityMode::Merged, 10)));
    reject(build_network(g, cfg("cr", PolarityMode::Merged, 5, 7.0)));
    reject(build_network(g, cfg("ce", PolarityMode::Merged, 5))); // duplicate part
    CHECK_THROWS_AS(cumulate({}), std::invalid_argument);
}

TEST_CASE("decoding the preprocessed stream recovers a border-to-border line") {
    const SensorGeometry g{34, 34};
    // k = 5 keeps each unit's receptive field a sparse ray fan. At k = 1 the
    // fans of adjacent units overlap almost completely near the mid-line, so
    // the count ranking across detectors degrades for shallow chords; the
    // sparse setting is the regime where endpoint decoding is reliable.
    const auto net = build_network(g, cfg("ws", PolarityMode::Merged, 5, 5.0));

    struct Case {
        Side entry, exit;
        int entry_pos, exit_pos;
    };
    for (const Case& c : {Case{Side::Left, Side::Right, 20, 20},
                          Case{Side::Top, Side::Bottom, 16, 16},
                          Case{Side::Left, Side::Right, 16, 17}}) {
        LineTruth truth;
        EventSample s = synth_moving_line(g, c.entry, c.entry_pos, c.exit, c.exit_pos, 200000,
                                          50000, 77, &truth);
        const auto res = preprocess(s, net);
        const auto records = detector_records(net, res.run);

        uint64_t recorded = 0;
        for (const auto& r : records) recorded += r.spikes.size();
        CHECK(recorded == res.output.events.size());

        const auto seg = decode_lines(records, 0, res.output.duration_us, 2,
                                      net.network.params().dt_us());
        REQUIRE(seg.has_value());
        auto near = [](const EndpointHit& hit, double x, double y) {
            return std::abs(hit.x - x) <= 2.0 && std::abs(hit.y - y) <= 2.0;
        };
        const bool fwd = near(seg->a, truth.x0, truth.y0) && near(seg->b, truth.x1, truth.y1);
        const bool rev = near(seg->a, truth.x1, truth.y1) && near(seg->b, truth.x0, truth.y0);
        CAPTURE(int(c.entry)); CAPTURE(seg->a.x); CAPTURE(seg->a.y);
        CAPTURE(seg->b.x); CAPTURE(seg->b.y);
        CHECK((fwd || rev));
    }
}
