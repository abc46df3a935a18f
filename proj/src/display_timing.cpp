#include "rastercast/display_timing.hpp"

#include <charconv>
#include <stdexcept>

namespace rastercast {

void DisplayTiming::validate() const {
    if (active_width == 0 || active_height == 0)
        throw std::invalid_argument("active area must be positive");
    if (total_width < active_width || total_height < active_height)
        throw std::invalid_argument("total raster must contain the active area");
    if (refresh_rate == 0)
        throw std::invalid_argument("refresh rate must be positive");
}

uint64_t pixel_clock_hz(const DisplayTiming& t) {
    t.validate();
    return uint64_t(t.total_width) * t.total_height * t.refresh_rate;
}

double pixel_duration_s(const DisplayTiming& t) {
    return 1.0 / double(pixel_clock_hz(t));
}

double line_gap_duration_s(const DisplayTiming& t) {
    t.validate();
    return double(t.total_width - t.active_width) / double(pixel_clock_hz(t));
}

double frame_gap_duration_s(const DisplayTiming& t) {
    t.validate();
    return double(t.total_height - t.active_height) * double(t.total_width) /
           double(pixel_clock_hz(t));
}

PixelPos locate_pixel(const DisplayTiming& t, uint64_t index) {
    const uint64_t per_frame = t.pixels_per_frame();
    PixelPos p{};
    p.frame = index / per_frame;
    uint64_t in_frame = index % per_frame;
    p.row = uint32_t(in_frame / t.total_width);
    p.col = uint32_t(in_frame % t.total_width);
    p.in_frame_gap = p.row >= t.active_height;
    p.in_line_gap = !p.in_frame_gap && p.col >= t.active_width;
    p.active = !p.in_frame_gap && !p.in_line_gap;
    return p;
}

bool pixel_emits(const DisplayTiming& t, uint64_t index,
                 bool gate_line_gaps, bool gate_frame_gaps) {
    const uint64_t per_frame = t.pixels_per_frame();
    uint64_t in_frame = index % per_frame;
    uint32_t row = uint32_t(in_frame / t.total_width);
    if (row >= t.active_height) return !gate_frame_gaps;
    uint32_t col = uint32_t(in_frame % t.total_width);
    if (col >= t.active_width) return !gate_line_gaps;
    return true;
}

std::vector<uint8_t> emission_mask(const DisplayTiming& t, uint64_t frames) {
    t.validate();
    std::vector<uint8_t> mask(t.pixels_per_frame() * frames, 0);
    uint64_t idx = 0;
    for (uint64_t f = 0; f < frames; ++f) {
        for (uint32_t r = 0; r < t.total_height; ++r) {
            for (uint32_t c = 0; c < t.total_width; ++c, ++idx) {
                mask[idx] = (r < t.active_height && c < t.active_width) ? 1 : 0;
            }
        }
    }
    return mask;
}

DisplayTiming timing_preset(std::string_view name) {
    if (name == "1080p60") return DisplayTiming{1920, 1080, 2200, 1125, 60};
    if (name == "720p60") return DisplayTiming{1280, 720, 1650, 750, 60};
    throw std::invalid_argument("unknown timing preset: " + std::string(name));
}

DisplayTiming parse_timing(const std::string& s) {
    if (s.find(':') == std::string::npos) return timing_preset(s);
    uint32_t f[5] = {};
    size_t pos = 0;
    for (int i = 0; i < 5; ++i) {
        size_t next = s.find(':', pos);
        std::string_view part(s.data() + pos,
                              (next == std::string::npos ? s.size() : next) - pos);
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), f[i]);
        if (ec != std::errc() || ptr != part.data() + part.size())
            throw std::invalid_argument("bad timing spec: " + s);
        if (next == std::string::npos) {
            if (i != 4) throw std::invalid_argument("timing spec needs 5 fields: " + s);
            break;
        }
        pos = next + 1;
    }
    DisplayTiming t{f[0], f[1], f[2], f[3], f[4]};
    t.validate();
    return t;
}

}  // namespace rastercast
