#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eventline/geometry.hpp"

namespace eventline {

// Single address-event: pixel coordinates, microsecond timestamp, polarity
// (1 = ON / luminance increase, 0 = OFF / decrease).
struct Event {
    uint16_t x = 0;
    uint16_t y = 0;
    int64_t t = 0; // microseconds, relative to sample start
    uint8_t p = 1;

    bool operator==(const Event&) const = default;
};

enum class PolarityMode : uint8_t { Merged = 0, Split = 1 };

inline const char* polarity_name(PolarityMode m) {
    return m == PolarityMode::Merged ? "merged" : "split";
}

PolarityMode parse_polarity_mode(const std::string& s);

// One recording: time-sorted events plus the sensor geometry and nominal
// duration. `duration_us` may exceed the last event's timestamp (fixed-length
// samples) but never undercuts it.
struct EventSample {
    std::vector<Event> events;
    SensorGeometry geometry;
    std::optional<int> label;
    int64_t duration_us = 0;

    // Throws std::runtime_error naming the first offending event on violation
    // of the ordering / bounds invariants.
    void validate() const;
};

// Dense spike-count frames [t_bins x channels x units], row-major.
// Counts are stored as doubles (exact for realistic magnitudes) so the
// classifier can consume slices directly.
struct SpikeTensor {
    size_t t_bins = 0;
    size_t channels = 0;
    size_t units = 0;
    int64_t bin_width_us = 0;
    std::vector<double> data;

    double& at(size_t t, size_t c, size_t n) { return data[(t * channels + c) * units + n]; }
    double at(size_t t, size_t c, size_t n) const { return data[(t * channels + c) * units + n]; }
    size_t step_dim() const { return channels * units; }
    const double* step(size_t t) const { return data.data() + t * step_dim(); }
    double sum() const;
};

// Drops events with no other event in their 8-neighbourhood within the
// preceding `window_us`. Neighbour means one of the 8 surrounding pixels;
// activity at the event's own pixel does not count. Dropped events still act
// as neighbours for later events.
EventSample denoise(const EventSample& in, int64_t window_us);

// Accumulates events into fixed-width time bins. t_bins = ceil(duration/bin).
// Merged mode folds both polarities into channel 0; split mode keeps
// channel = polarity. Unit index is y*width + x.
SpikeTensor bin_to_frames(const EventSample& in, int64_t bin_width_us, PolarityMode mode);

// Rebases time to the first event and keeps only events with new t < keep_us.
// The result's duration is exactly keep_us.
EventSample shorten(const EventSample& in, int64_t keep_us);

// Canonical on-disk format: 16-byte header (magic "EVT1", u16 width,
// u16 height, u32 record count, 4 reserved zero bytes) followed by
// little-endian records of (u16 x, u16 y, u8 p, u64 t_us).
std::string serialize_events(const EventSample& sample);
void write_events(const EventSample& sample, const std::string& path);

// Parses the canonical byte layout. `origin` names the source in errors.
// The format does not store the nominal duration; pass `duration_us` when the
// caller knows it (manifest), otherwise the duration is last event time + 1
// (0 when empty).
EventSample parse_events(const std::string& bytes, const std::string& origin,
                         int64_t duration_us = -1);
EventSample read_events(const std::string& path, int64_t duration_us = -1);

} // namespace eventline
