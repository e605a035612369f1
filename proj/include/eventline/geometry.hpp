#pragma once

#include <cstdint>

namespace eventline {

struct SensorGeometry {
    uint16_t width = 0;
    uint16_t height = 0;

    bool is_square() const { return width == height && width >= 2; }
    uint32_t pixel_count() const { return uint32_t(width) * uint32_t(height); }
    bool contains(uint16_t x, uint16_t y) const { return x < width && y < height; }
    bool operator==(const SensorGeometry&) const = default;
};

// Square sub-rectangle of a sensor, in sensor coordinates.
struct Region {
    uint16_t x0 = 0;
    uint16_t y0 = 0;
    uint16_t side = 0;

    bool contains(uint16_t x, uint16_t y) const {
        return x >= x0 && y >= y0 && x < uint32_t(x0) + side && y < uint32_t(y0) + side;
    }
    uint32_t pixel_count() const { return uint32_t(side) * uint32_t(side); }
    // row-major index of a contained pixel, in region-local coordinates
    uint32_t local_index(uint16_t x, uint16_t y) const {
        return uint32_t(y - y0) * side + uint32_t(x - x0);
    }
    bool operator==(const Region&) const = default;
};

enum class Side : uint8_t { Top = 0, Bottom = 1, Left = 2, Right = 3 };

inline const char* side_name(Side s) {
    switch (s) {
        case Side::Top: return "top";
        case Side::Bottom: return "bottom";
        case Side::Left: return "left";
        default: return "right";
    }
}

} // namespace eventline
