#include "eventline/line_detect.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace eventline {

std::vector<int> anchor_positions(int side_len, int k) {
    if (side_len < 2) throw std::invalid_argument("detector needs at least 2 units");
    if (k < 1 || k > side_len) {
        throw std::invalid_argument("sampling step k=" + std::to_string(k) +
                                    " outside [1, " + std::to_string(side_len) + "]");
    }
    std::vector<int> anchors;
    for (int a = 0; a < side_len; a += k) anchors.push_back(a);
    if (anchors.back() != side_len - 1) anchors.push_back(side_len - 1);
    return anchors;
}

namespace {

int64_t floor_div(int64_t a, int64_t b) { // b > 0
    int64_t q = a / b;
    if (a % b != 0 && a < 0) --q;
    return q;
}

int64_t ceil_div(int64_t a, int64_t b) { // b > 0
    int64_t q = a / b;
    if (a % b != 0 && a > 0) ++q;
    return q;
}

} // namespace

std::vector<std::pair<int, int>> raster_line(int x0, int y0, int x1, int y1) {
    std::vector<std::pair<int, int>> out;
    const int dx = x1 - x0, dy = y1 - y0;
    const int adx = std::abs(dx), ady = std::abs(dy);
    if (adx == 0 && ady == 0) {
        out.emplace_back(x0, y0);
        return out;
    }
    const bool x_major = adx >= ady;
    const int steps = x_major ? adx : ady;
    const int major0 = x_major ? x0 : y0;
    const int minor0 = x_major ? y0 : x0;
    const int dmaj = x_major ? dx : dy;
    const int dmin = x_major ? dy : dx;
    const int sgn = dmaj > 0 ? 1 : -1;
    for (int i = 0; i <= steps; ++i) {
        const int maj = major0 + i * sgn;
        // exact minor coordinate: minor0 + dmin * i / steps, as a rational
        // e / steps (the parameter along the line is i / steps regardless of
        // the major direction)
        const int64_t e = int64_t(minor0) * steps + int64_t(dmin) * i;
        const int64_t den = steps;
        const int64_t lo = ceil_div(2 * e - den, 2 * den);  // ceil(v - 1/2)
        const int64_t hi = floor_div(2 * e + den, 2 * den); // floor(v + 1/2)
        for (int64_t m = lo; m <= hi; ++m) { // one pixel, or two at an exact tie
            if (x_major) out.emplace_back(maj, int(m));
            else out.emplace_back(int(m), maj);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.second != b.second ? a.second < b.second : a.first < b.first; });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::pair<int, int>> ray_union(int side_len, Side side, int unit_idx, int k) {
    const int l = side_len;
    if (unit_idx < 0 || unit_idx >= l) throw std::invalid_argument("unit index outside detector");
    const int h = (l + 1) / 2; // half depth; odd L shares the middle row/col
    const auto anchors = anchor_positions(l, k);

    int bx, by;        // border pixel
    int mid;           // mid-line row (top/bottom) or column (left/right)
    switch (side) {
        case Side::Top:    bx = unit_idx; by = 0;     mid = h - 1; break;
        case Side::Bottom: bx = unit_idx; by = l - 1; mid = l - h; break;
        case Side::Left:   bx = 0;        by = unit_idx; mid = h - 1; break;
        default:           bx = l - 1;    by = unit_idx; mid = l - h; break;
    }

    std::vector<std::pair<int, int>> pixels;
    for (int a : anchors) {
        const int ax = (side == Side::Top || side == Side::Bottom) ? a : mid;
        const int ay = (side == Side::Top || side == Side::Bottom) ? mid : a;
        auto ray = raster_line(bx, by, ax, ay);
        pixels.insert(pixels.end(), ray.begin(), ray.end());
    }
    std::sort(pixels.begin(), pixels.end(),
              [](const auto& a, const auto& b) { return a.second != b.second ? a.second < b.second : a.first < b.first; });
    pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
    return pixels;
}

DiagonalPattern build_pattern(const Region& region, Side side, int k, double omega) {
    if (!(omega > 0.0)) throw std::invalid_argument("pattern strength omega must be positive");
    const int l = region.side;
    DiagonalPattern p;
    p.side_len = region.side;
    p.side = side;
    p.k = k;
    p.omega = omega;
    p.table.name = std::string(side_name(side)) + "/pattern";
    p.fan_in.resize(size_t(l), 0);
    for (int idx = 0; idx < l; ++idx) {
        const auto pixels = ray_union(l, side, idx, k); // validates k
        const double w = omega / double(pixels.size());
        for (const auto& [px, py] : pixels) {
            p.table.entries.push_back(Synapse{uint32_t(py) * uint32_t(l) + uint32_t(px),
                                              uint32_t(idx), w, 1.0,
                                              SynapseSign::Excitatory});
        }
        p.fan_in[size_t(idx)] = uint32_t(pixels.size());
    }
    return p;
}

SynapseTable build_wta(uint32_t n_units, double weight, double delay_ms) {
    SynapseTable t;
    t.name = "wta";
    if (n_units < 2) return t; // nothing to inhibit
    t.entries.reserve(size_t(n_units) * (n_units - 1));
    for (uint32_t s = 0; s < n_units; ++s) {
        for (uint32_t d = 0; d < n_units; ++d) {
            if (s == d) continue;
            t.entries.push_back(Synapse{s, d, weight, delay_ms, SynapseSign::Inhibitory});
        }
    }
    return t;
}

std::pair<double, double> border_pixel(const Region& region, Side side, uint32_t idx) {
    const double x0 = region.x0, y0 = region.y0, last = region.side - 1;
    switch (side) {
        case Side::Top: return {x0 + idx, y0};
        case Side::Bottom: return {x0 + idx, y0 + last};
        case Side::Left: return {x0, y0 + idx};
        default: return {x0 + last, y0 + idx};
    }
}

std::optional<DecodedSegment> decode_lines(const std::vector<DetectorRecord>& records,
                                           int64_t t0_us, int64_t t1_us, uint64_t min_spikes,
                                           int64_t dt_us) {
    std::vector<EndpointHit> winners;
    for (const auto& rec : records) {
        std::vector<uint64_t> counts(rec.region.side, 0);
        for (const auto& s : rec.spikes) {
            const int64_t t = s.step * dt_us;
            if (t >= t0_us && t < t1_us && s.unit < counts.size()) counts[s.unit]++;
        }
        uint32_t best = 0;
        for (uint32_t i = 1; i < counts.size(); ++i) {
            if (counts[i] > counts[best]) best = i; // tie keeps the lower index
        }
        if (counts.empty() || counts[best] < min_spikes || counts[best] == 0) continue;
        const auto [px, py] = border_pixel(rec.region, rec.side, best);
        winners.push_back(EndpointHit{rec.side, best, counts[best], px, py});
    }
    if (winners.size() < 2) return std::nullopt;
    std::stable_sort(winners.begin(), winners.end(),
                     [](const EndpointHit& a, const EndpointHit& b) { return a.count > b.count; });
    return DecodedSegment{winners[0], winners[1]};
}

void dump_pattern_csv(const DiagonalPattern& pattern, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << "unit,pixel_x,pixel_y,weight\n";
    char buf[64];
    for (const auto& s : pattern.table.entries) {
        const uint32_t px = s.src % pattern.side_len;
        const uint32_t py = s.src / pattern.side_len;
        snprintf(buf, sizeof buf, "%.10g", s.weight);
        f << s.dst << ',' << px << ',' << py << ',' << buf << '\n';
    }
}

} // namespace eventline
