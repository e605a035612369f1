#include "eventline/event.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "eventline/binio.hpp"

namespace eventline {

PolarityMode parse_polarity_mode(const std::string& s) {
    if (s == "merged") return PolarityMode::Merged;
    if (s == "split") return PolarityMode::Split;
    throw std::invalid_argument("unknown polarity '" + s + "' (expected merged or split)");
}

void EventSample::validate() const {
    int64_t prev_t = 0;
    for (size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (!geometry.contains(e.x, e.y)) {
            throw std::runtime_error("event " + std::to_string(i) + " at (" +
                                     std::to_string(e.x) + "," + std::to_string(e.y) +
                                     ") outside sensor " + std::to_string(geometry.width) + "x" +
                                     std::to_string(geometry.height));
        }
        if (e.p > 1) {
            throw std::runtime_error("event " + std::to_string(i) + " has polarity " +
                                     std::to_string(int(e.p)) + ", expected 0 or 1");
        }
        if (e.t < 0) {
            throw std::runtime_error("event " + std::to_string(i) + " has negative timestamp");
        }
        if (i > 0 && e.t < prev_t) {
            throw std::runtime_error("event " + std::to_string(i) +
                                     " breaks timestamp ordering (" + std::to_string(e.t) +
                                     " after " + std::to_string(prev_t) + ")");
        }
        prev_t = e.t;
    }
    if (!events.empty() && events.back().t >= duration_us) {
        throw std::runtime_error("last event at t=" + std::to_string(events.back().t) +
                                 " not covered by duration " + std::to_string(duration_us));
    }
}

double SpikeTensor::sum() const {
    double s = 0.0;
    for (double v : data) s += v;
    return s;
}

EventSample denoise(const EventSample& in, int64_t window_us) {
    if (window_us < 0) throw std::invalid_argument("denoise window must be >= 0");
    EventSample out;
    out.geometry = in.geometry;
    out.label = in.label;
    out.duration_us = in.duration_us;
    if (in.events.empty()) return out;

    const int w = in.geometry.width;
    const int h = in.geometry.height;
    constexpr int64_t kNever = std::numeric_limits<int64_t>::min();
    std::vector<int64_t> last(size_t(w) * size_t(h), kNever);

    out.events.reserve(in.events.size());
    for (const Event& e : in.events) {
        bool keep = false;
        for (int dy = -1; dy <= 1 && !keep; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int nx = int(e.x) + dx;
                const int ny = int(e.y) + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const int64_t t = last[size_t(ny) * size_t(w) + size_t(nx)];
                if (t != kNever && e.t - t <= window_us) {
                    keep = true;
                    break;
                }
            }
        }
        if (keep) out.events.push_back(e);
        // dropped events still count as neighbourhood activity
        last[size_t(e.y) * size_t(w) + size_t(e.x)] = e.t;
    }
    return out;
}

SpikeTensor bin_to_frames(const EventSample& in, int64_t bin_width_us, PolarityMode mode) {
    if (bin_width_us <= 0) throw std::invalid_argument("bin width must be positive");
    SpikeTensor out;
    out.bin_width_us = bin_width_us;
    out.channels = (mode == PolarityMode::Merged) ? 1 : 2;
    out.units = in.geometry.pixel_count();
    out.t_bins = size_t((in.duration_us + bin_width_us - 1) / bin_width_us);
    out.data.assign(out.t_bins * out.channels * out.units, 0.0);
    for (size_t i = 0; i < in.events.size(); ++i) {
        const Event& e = in.events[i];
        const size_t bin = size_t(e.t / bin_width_us);
        if (bin >= out.t_bins) {
            throw std::runtime_error("event " + std::to_string(i) +
                                     " beyond sample duration; validate() first");
        }
        const size_t c = (mode == PolarityMode::Merged) ? 0 : size_t(e.p);
        out.at(bin, c, size_t(e.y) * in.geometry.width + e.x) += 1.0;
    }
    return out;
}

EventSample shorten(const EventSample& in, int64_t keep_us) {
    if (keep_us <= 0) throw std::invalid_argument("keep duration must be positive");
    EventSample out;
    out.geometry = in.geometry;
    out.label = in.label;
    out.duration_us = keep_us;
    if (in.events.empty()) return out;
    const int64_t t0 = in.events.front().t;
    for (const Event& e : in.events) {
        const int64_t t = e.t - t0;
        if (t >= keep_us) break; // events are time-sorted
        out.events.push_back(Event{e.x, e.y, t, e.p});
    }
    return out;
}

namespace {

using binio::get_u16;
using binio::get_u32;
using binio::get_u64;
using binio::put_u16;
using binio::put_u32;
using binio::put_u64;

constexpr size_t kHeaderBytes = 16;
constexpr size_t kRecordBytes = 13;

} // namespace

std::string serialize_events(const EventSample& sample) {
    if (sample.events.size() > std::numeric_limits<uint32_t>::max()) {
        throw std::runtime_error("too many events for the on-disk format");
    }
    std::string buf;
    buf.reserve(kHeaderBytes + kRecordBytes * sample.events.size());
    buf += "EVT1";
    put_u16(buf, sample.geometry.width);
    put_u16(buf, sample.geometry.height);
    put_u32(buf, uint32_t(sample.events.size()));
    put_u32(buf, 0); // reserved
    for (const Event& e : sample.events) {
        put_u16(buf, e.x);
        put_u16(buf, e.y);
        buf.push_back(char(e.p));
        put_u64(buf, uint64_t(e.t));
    }
    return buf;
}

void write_events(const EventSample& sample, const std::string& path) {
    const std::string buf = serialize_events(sample);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(buf.data(), std::streamsize(buf.size()));
    if (!f) throw std::runtime_error("short write to " + path);
}

EventSample parse_events(const std::string& buf, const std::string& origin, int64_t duration_us) {
    if (buf.size() < kHeaderBytes || buf.compare(0, 4, "EVT1") != 0) {
        throw std::runtime_error(origin + ": not an event file (bad header)");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    EventSample out;
    out.geometry.width = get_u16(p + 4);
    out.geometry.height = get_u16(p + 6);
    const uint32_t count = get_u32(p + 8);
    if (buf.size() != kHeaderBytes + size_t(count) * kRecordBytes) {
        throw std::runtime_error(origin + ": size mismatch (header claims " + std::to_string(count) +
                                 " records, file has " +
                                 std::to_string((buf.size() - kHeaderBytes) / kRecordBytes) + ")");
    }
    out.events.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        const unsigned char* r = p + kHeaderBytes + size_t(i) * kRecordBytes;
        Event& e = out.events[i];
        e.x = get_u16(r);
        e.y = get_u16(r + 2);
        e.p = r[4];
        const uint64_t t = get_u64(r + 5);
        if (t > uint64_t(std::numeric_limits<int64_t>::max())) {
            throw std::runtime_error(origin + ": record " + std::to_string(i) +
                                     " timestamp out of range");
        }
        e.t = int64_t(t);
    }
    out.duration_us =
        duration_us >= 0 ? duration_us : (out.events.empty() ? 0 : out.events.back().t + 1);
    out.validate();
    return out;
}

EventSample read_events(const std::string& path, int64_t duration_us) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_events(buf, path, duration_us);
}

} // namespace eventline
