#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eventline/geometry.hpp"
#include "eventline/lif.hpp"

namespace eventline {

// Anchor positions along a detector's mid-line for sampling step k:
// every k-th position from 0, plus the far end L-1. 1 <= k <= L required.
// Anchor sets are nested across the usual k grid, which makes per-unit
// fan-in monotone non-increasing in k.
std::vector<int> anchor_positions(int side_len, int k);

// Pixels covered by the 8-connected raster of the segment between the
// centers of two region-local pixels. At exact half-integer crossings both
// candidate pixels are included, which keeps the set invariant under
// reflections and endpoint swap.
std::vector<std::pair<int, int>> raster_line(int x0, int y0, int x1, int y1);

// Region-local pixels feeding one detector unit: union of the rasters of the
// rays from the unit's border pixel to every anchor on the mid-line of the
// detector's half. Sorted by (y, x).
std::vector<std::pair<int, int>> ray_union(int side_len, Side side, int unit_idx, int k);

// Synaptic pattern of one border detector over a square region. The table is
// region-local: sources are row-major pixel indices in [0, L^2), destinations
// are unit indices in [0, L). Each connected pixel gets weight
// omega / (union size), so every unit's incoming weight sums to omega.
struct DiagonalPattern {
    uint16_t side_len = 0;
    Side side = Side::Top;
    int k = 1;
    double omega = 0.0;
    SynapseTable table;
    std::vector<uint32_t> fan_in; // per unit

    uint64_t total_synapses() const { return table.entries.size(); }
};

DiagonalPattern build_pattern(const Region& region, Side side, int k, double omega);

// All-to-all lateral inhibition over n units (no self connections),
// n*(n-1) entries, sources major order.
SynapseTable build_wta(uint32_t n_units, double weight = 1.0, double delay_ms = 1.0);

// Spike record of one detector, unit ids local to the detector.
struct DetectorRecord {
    Side side = Side::Top;
    Region region;
    std::vector<SpikeEvent> spikes;
};

struct EndpointHit {
    Side side = Side::Top;
    uint32_t idx = 0;      // winning unit
    uint64_t count = 0;    // its spike count inside the window
    double x = 0, y = 0;   // border pixel in sensor coordinates
};

struct DecodedSegment {
    EndpointHit a, b; // a holds the higher count
};

// Picks the per-detector winner (argmax spike count in [t0_us, t1_us), ties
// to the lower unit index), drops winners below min_spikes, and returns the
// segment spanned by the two strongest detectors. nullopt when fewer than
// two detectors pass.
std::optional<DecodedSegment> decode_lines(const std::vector<DetectorRecord>& records,
                                           int64_t t0_us, int64_t t1_us, uint64_t min_spikes,
                                           int64_t dt_us);

// Border pixel of a detector unit, in sensor coordinates.
std::pair<double, double> border_pixel(const Region& region, Side side, uint32_t idx);

// CSV dump of a pattern: unit,pixel_x,pixel_y,weight (region-local pixels).
void dump_pattern_csv(const DiagonalPattern& pattern, const std::string& path);

} // namespace eventline
