#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "rastercast/display_timing.hpp"
#include "rastercast/lora_phy.hpp"

namespace rastercast {

enum class PixelMode {
    binary,     // values in {0, 1}; sign of the synthesis sine
    grayscale,  // sine mapped to [0, 1]
};

// A run of pixel values at pixel-clock rate, laid out row-major over the
// full raster grid starting at stream index 0 == frame 0, row 0, col 0.
struct PixelStream {
    std::vector<float> values;
    DisplayTiming timing;
    PixelMode mode = PixelMode::binary;
};

struct ToneSegment {
    double freq_hz = 0.0;    // RF target; emitted at mod(f, pixel clock)
    uint64_t pixels = 0;     // duration in pixels
};
using ToneSchedule = std::vector<ToneSegment>;

// Active-area frames of 8-bit grayscale, one vector per frame,
// aw*ah bytes each, row-major.
struct AttackVideo {
    std::vector<std::vector<uint8_t>> frames;
    DisplayTiming timing;
    PixelMode mode = PixelMode::binary;
};

struct SteppingParams {
    uint32_t sf = 10;
    double bw = 500e3;
    double center_freq = 433e6;
    uint32_t guard_lines = 56;     // blank lines after the chirp lines
    uint32_t preamble_len = 4;     // leading symbol-0 chirps
    lora::Coding coding = lora::Coding::raw;

    uint32_t lines_per_chirp() const { return 1u << sf; }
    double step_hz() const { return bw / double(1u << sf); }
    void validate(const DisplayTiming& t) const;
};

enum class ChirpDir { up, down };

// Pull-based pixel generator; lets multi-hundred-megapixel streams flow
// through the channel without materializing.
class PixelSource {
  public:
    virtual ~PixelSource() = default;
    virtual uint64_t total_pixels() const = 0;
    // Fills up to dst.size() values, returns the count produced (0 = done).
    virtual size_t fill(std::span<float> dst) = 0;
};

std::unique_ptr<PixelSource> make_tone_source(const ToneSchedule& sched,
                                              const DisplayTiming& t, PixelMode mode);
std::unique_ptr<PixelSource> make_chirp_source(const lora::LoRaParams& p, uint16_t symbol,
                                               ChirpDir dir, const DisplayTiming& t,
                                               PixelMode mode);
std::unique_ptr<PixelSource> make_packet_source(const lora::LoRaParams& p,
                                                std::span<const uint16_t> symbols,
                                                const DisplayTiming& t, PixelMode mode);
std::unique_ptr<PixelSource> make_stepping_source(const SteppingParams& sp,
                                                  std::span<const uint16_t> symbols,
                                                  const DisplayTiming& t);
// Replays an existing stream (for pipelines taking a PixelSource).
std::unique_ptr<PixelSource> make_stream_source(const PixelStream& s);

PixelStream materialize(PixelSource& src, const DisplayTiming& t, PixelMode mode);

// chirp length in pixels: round(2^sf / bw * pixel_clock)
uint64_t chirp_pixel_count(const lora::LoRaParams& p, const DisplayTiming& t);
// whole packet incl. framing (preamble, sync, 2.25-chirp SFD, payload)
uint64_t packet_pixel_count(const lora::LoRaParams& p, size_t payload_symbols,
                            const DisplayTiming& t);
// pixel offset of payload symbol 0 within the packet stream
uint64_t payload_start_pixel(const lora::LoRaParams& p, const DisplayTiming& t);

// --- synthesis operations --------------------------------------------------

// Tone kernel: value = sin(2*pi * mod(f,PC)/PC * (Timer - 1/2)), Timer
// starting at 1 and advancing globally across the whole schedule, so
// concatenating schedules equals synthesizing the concatenation.
PixelStream synth_tone_stream(const ToneSchedule& sched, const DisplayTiming& t,
                              PixelMode mode = PixelMode::binary);

// One LoRa chirp as pixels. The per-pixel instantaneous frequency follows
// the cyclically shifted sweep; the phase is accumulated pixel by pixel
// (integrating the frequency), evaluated mid-pixel.
PixelStream synth_chirp_stream(const lora::LoRaParams& p, uint16_t symbol, ChirpDir dir,
                               const DisplayTiming& t, PixelMode mode = PixelMode::binary);

// Full packet: phase accumulates across chirp boundaries.
PixelStream synth_packet_stream(const lora::LoRaParams& p,
                                std::span<const uint16_t> symbols,
                                const DisplayTiming& t, PixelMode mode = PixelMode::binary);

// Lays a stream onto whole frames (padding the tail with black), then
// crops to the active area. Pixels at hidden grid positions are discarded;
// the display hardware re-inserts them as black on scan-out.
AttackVideo stream_to_frames(const PixelStream& s);

// Full-grid stream from frames; hidden positions are black (0).
PixelStream frames_to_stream(const AttackVideo& v);

// One frame per symbol: line i of the frame for symbol K carries the tone
// center_freq - bw/2 + ((i+K) mod 2^sf) * bw/2^sf for i < 2^sf, guard
// lines black. Tones use the global-Timer kernel so every line's phase
// lies on the common stream timeline.
AttackVideo synth_stepping_frames(const SteppingParams& sp,
                                  std::span<const uint16_t> symbols,
                                  const DisplayTiming& t);

}  // namespace rastercast
