#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rastercast {

// Raster timing of a display mode. "Active" pixels are the visible area;
// the remaining total-grid positions (blanking/porch/sync) carry no image
// data and the cable drives black level during them. All five fields are
// integers, so the pixel clock is exact.
struct DisplayTiming {
    uint32_t active_width = 0;
    uint32_t active_height = 0;
    uint32_t total_width = 0;
    uint32_t total_height = 0;
    uint32_t refresh_rate = 0;   // Hz, whole frames per second

    void validate() const;       // throws std::invalid_argument on bad fields

    uint64_t pixels_per_frame() const {
        return uint64_t(total_width) * total_height;
    }
    uint64_t active_pixels_per_frame() const {
        return uint64_t(active_width) * active_height;
    }
};

// tw * th * refresh, exact
uint64_t pixel_clock_hz(const DisplayTiming& t);

double pixel_duration_s(const DisplayTiming& t);

// duration of the hidden tail of one scanline: (tw - aw) * Tp
double line_gap_duration_s(const DisplayTiming& t);

// duration of the hidden scanline block at the end of each frame:
// (th - ah) * tw * Tp, one contiguous gap per frame (trailing convention)
double frame_gap_duration_s(const DisplayTiming& t);

// Where a stream index lands on the raster grid.
struct PixelPos {
    uint64_t frame;
    uint32_t row;        // 0..th-1
    uint32_t col;        // 0..tw-1
    bool active;         // row < ah && col < aw
    bool in_line_gap;    // col >= aw && row < ah
    bool in_frame_gap;   // row >= ah
};

PixelPos locate_pixel(const DisplayTiming& t, uint64_t index);

// True when the pixel at `index` contributes emission. Gap gating can be
// disabled per class for diagnostics (an ungated gap passes the stream
// value through as if the hidden positions were visible).
bool pixel_emits(const DisplayTiming& t, uint64_t index,
                 bool gate_line_gaps = true, bool gate_frame_gaps = true);

// Boolean mask at pixel rate covering `frames` whole frames; 1 = active.
// Sum over one frame equals aw * ah.
std::vector<uint8_t> emission_mask(const DisplayTiming& t, uint64_t frames);

// Known-name presets ("1080p60", "720p60"). Throws on unknown names.
DisplayTiming timing_preset(std::string_view name);

// Parses "WxH@R" presets like "1080p60" via timing_preset, or a custom
// five-field spec "aw:ah:tw:th:rr".
DisplayTiming parse_timing(const std::string& s);

}  // namespace rastercast
