#include "rastercast/waveform_synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rastercast {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Alg. kernel for constant tones: the cable samples a sine at the pixel
// clock, evaluated mid-pixel. Timer is 1-based and global, so value(n)
// depends only on the absolute stream position — segments stay coherent.
double tone_value(double ratio, uint64_t timer) {
    return std::sin(kTwoPi * ratio * (double(timer) - 0.5));
}

float map_value(double v, PixelMode mode) {
    if (mode == PixelMode::binary) return v > 0.0 ? 1.0f : 0.0f;
    return float(0.5 * (v + 1.0));
}

void check_band_fits_period(double lo, double hi, double pc) {
    if (std::floor(lo / pc) != std::floor(hi / pc))
        throw std::invalid_argument(
            "swept band straddles a pixel-clock multiple; the aliased sweep "
            "would split at the receiver. Move center_freq or shrink bw.");
}

struct ChirpSeg {
    uint16_t symbol;
    bool down;
    uint64_t pixels;
};

class ToneSource final : public PixelSource {
  public:
    ToneSource(const ToneSchedule& sched, const DisplayTiming& t, PixelMode mode)
        : mode_(mode) {
        t.validate();
        if (sched.empty()) throw std::invalid_argument("empty tone schedule");
        const double pc = double(pixel_clock_hz(t));
        for (const auto& seg : sched) {
            if (seg.freq_hz < 0.0) throw std::invalid_argument("negative tone frequency");
            if (seg.pixels < 1) throw std::invalid_argument("tone segment shorter than one pixel");
            ratios_.push_back(std::fmod(seg.freq_hz, pc) / pc);
            lengths_.push_back(seg.pixels);
            total_ += seg.pixels;
        }
    }

    uint64_t total_pixels() const override { return total_; }

    size_t fill(std::span<float> dst) override {
        size_t produced = 0;
        while (produced < dst.size() && seg_ < lengths_.size()) {
            if (within_ == lengths_[seg_]) {
                ++seg_;
                within_ = 0;
                continue;
            }
            dst[produced++] = map_value(tone_value(ratios_[seg_], ++timer_), mode_);
            ++within_;
        }
        return produced;
    }

  private:
    std::vector<double> ratios_;
    std::vector<uint64_t> lengths_;
    uint64_t total_ = 0;
    uint64_t timer_ = 0;  // last emitted Timer value; first pixel gets 1
    size_t seg_ = 0;
    uint64_t within_ = 0;
    PixelMode mode_;
};

// Chirps integrate the instantaneous frequency pixel by pixel; the phase
// accumulator runs across segment boundaries so a packet is one waveform.
class ChirpSource final : public PixelSource {
  public:
    ChirpSource(const lora::LoRaParams& p, std::vector<ChirpSeg> segs,
                const DisplayTiming& t, PixelMode mode)
        : segs_(std::move(segs)), mode_(mode) {
        p.validate();
        t.validate();
        pc_ = double(pixel_clock_hz(t));
        np_ = double(chirp_pixel_count(p, t));
        if (np_ < 1.0) throw std::invalid_argument("chirp shorter than one pixel");
        chip_px_ = np_ / double(p.chips());
        f_lo_ = p.center_freq - p.bw / 2.0;
        f_hi_ = p.center_freq + p.bw / 2.0;
        fstep_ = p.bw / np_;
        check_band_fits_period(f_lo_, f_hi_, pc_);
        for (const auto& s : segs_) total_ += s.pixels;
    }

    uint64_t total_pixels() const override { return total_; }

    size_t fill(std::span<float> dst) override {
        size_t produced = 0;
        while (produced < dst.size() && seg_ < segs_.size()) {
            const auto& s = segs_[seg_];
            if (within_ == s.pixels) {
                ++seg_;
                within_ = 0;
                continue;
            }
            double x = std::fmod(double(within_) + double(s.symbol) * chip_px_, np_);
            double f = s.down ? f_hi_ - fstep_ * x : f_lo_ + fstep_ * x;
            double fr = f / pc_;
            dst[produced++] = map_value(std::sin(phase_ + std::numbers::pi * fr), mode_);
            phase_ += kTwoPi * fr;
            ++within_;
        }
        return produced;
    }

  private:
    std::vector<ChirpSeg> segs_;
    double pc_ = 0, np_ = 0, chip_px_ = 0, f_lo_ = 0, f_hi_ = 0, fstep_ = 0;
    double phase_ = 0.0;
    uint64_t total_ = 0;
    size_t seg_ = 0;
    uint64_t within_ = 0;
    PixelMode mode_;
};

// Full-grid stepping video stream: one chirp per frame, one tone per line,
// hidden and guard pixels black. Tones are evaluated at the global Timer.
class SteppingSource final : public PixelSource {
  public:
    SteppingSource(const SteppingParams& sp, std::span<const uint16_t> symbols,
                   const DisplayTiming& t)
        : timing_(t) {
        sp.validate(t);
        const double pc = double(pixel_clock_hz(t));
        check_band_fits_period(sp.center_freq - sp.bw / 2.0, sp.center_freq + sp.bw / 2.0, pc);
        const uint32_t n = sp.lines_per_chirp();
        for (uint16_t k : symbols)
            if (k >= n) throw std::invalid_argument("stepping symbol out of range");
        symbols_.assign(symbols.begin(), symbols.end());
        line_ratio_.resize(n);
        for (uint32_t j = 0; j < n; ++j) {
            double f = sp.center_freq - sp.bw / 2.0 + double(j) * sp.step_hz();
            line_ratio_[j] = std::fmod(f, pc) / pc;
        }
        chirp_lines_ = n;
        total_ = uint64_t(symbols_.size()) * t.pixels_per_frame();
    }

    uint64_t total_pixels() const override { return total_; }

    size_t fill(std::span<float> dst) override {
        const uint64_t tw = timing_.total_width;
        const uint64_t aw = timing_.active_width;
        size_t produced = 0;
        while (produced < dst.size() && g_ < total_) {
            if (col_ >= aw || row_ >= chirp_lines_) {
                dst[produced++] = 0.0f;
            } else {
                uint32_t j = (row_ + symbols_[frame_]) % chirp_lines_;
                dst[produced++] = map_value(tone_value(line_ratio_[j], g_ + 1), PixelMode::binary);
            }
            ++g_;
            if (++col_ == tw) {
                col_ = 0;
                if (++row_ == timing_.total_height) {
                    row_ = 0;
                    ++frame_;
                }
            }
        }
        return produced;
    }

  private:
    DisplayTiming timing_;
    std::vector<uint16_t> symbols_;
    std::vector<double> line_ratio_;
    uint32_t chirp_lines_ = 0;
    uint64_t total_ = 0;
    uint64_t g_ = 0;
    uint64_t col_ = 0;
    uint32_t row_ = 0;
    size_t frame_ = 0;
};

class StreamSource final : public PixelSource {
  public:
    explicit StreamSource(const PixelStream& s) : stream_(&s) {}
    uint64_t total_pixels() const override { return stream_->values.size(); }
    size_t fill(std::span<float> dst) override {
        size_t n = std::min(dst.size(), stream_->values.size() - pos_);
        std::copy_n(stream_->values.begin() + long(pos_), n, dst.begin());
        pos_ += n;
        return n;
    }

  private:
    const PixelStream* stream_;
    size_t pos_ = 0;
};

std::vector<ChirpSeg> packet_segments(const lora::LoRaParams& p,
                                      std::span<const uint16_t> symbols,
                                      uint64_t np) {
    std::vector<ChirpSeg> segs;
    segs.reserve(p.preamble_len + 3 + p.sync_symbols.size() + symbols.size());
    for (uint32_t i = 0; i < p.preamble_len; ++i) segs.push_back({0, false, np});
    for (uint16_t s : p.sync_symbols) {
        if (s >= p.chips()) throw std::invalid_argument("sync symbol out of range");
        segs.push_back({s, false, np});
    }
    segs.push_back({0, true, np});
    segs.push_back({0, true, np});
    segs.push_back({0, true, uint64_t(std::llround(double(np) / 4.0))});
    for (uint16_t s : symbols) {
        if (s >= p.chips()) throw std::invalid_argument("payload symbol out of range");
        segs.push_back({s, false, np});
    }
    return segs;
}

}  // namespace

void SteppingParams::validate(const DisplayTiming& t) const {
    if (sf < 6 || sf > 12) throw std::invalid_argument("stepping sf must be in [6, 12]");
    if (bw <= 0.0) throw std::invalid_argument("stepping bw must be positive");
    if (center_freq <= bw / 2.0)
        throw std::invalid_argument("stepping center_freq must exceed bw/2");
    if (lines_per_chirp() + guard_lines > t.active_height)
        throw std::invalid_argument("stepping chirp lines plus guard exceed the active height");
    if (preamble_len < 2)
        throw std::invalid_argument("stepping preamble_len must be >= 2");
}

std::unique_ptr<PixelSource> make_tone_source(const ToneSchedule& sched,
                                              const DisplayTiming& t, PixelMode mode) {
    return std::make_unique<ToneSource>(sched, t, mode);
}

std::unique_ptr<PixelSource> make_chirp_source(const lora::LoRaParams& p, uint16_t symbol,
                                               ChirpDir dir, const DisplayTiming& t,
                                               PixelMode mode) {
    if (symbol >= p.chips()) throw std::invalid_argument("symbol out of range");
    uint64_t np = chirp_pixel_count(p, t);
    return std::make_unique<ChirpSource>(
        p, std::vector<ChirpSeg>{{symbol, dir == ChirpDir::down, np}}, t, mode);
}

std::unique_ptr<PixelSource> make_packet_source(const lora::LoRaParams& p,
                                                std::span<const uint16_t> symbols,
                                                const DisplayTiming& t, PixelMode mode) {
    uint64_t np = chirp_pixel_count(p, t);
    return std::make_unique<ChirpSource>(p, packet_segments(p, symbols, np), t, mode);
}

std::unique_ptr<PixelSource> make_stepping_source(const SteppingParams& sp,
                                                  std::span<const uint16_t> symbols,
                                                  const DisplayTiming& t) {
    return std::make_unique<SteppingSource>(sp, symbols, t);
}

std::unique_ptr<PixelSource> make_stream_source(const PixelStream& s) {
    return std::make_unique<StreamSource>(s);
}

PixelStream materialize(PixelSource& src, const DisplayTiming& t, PixelMode mode) {
    PixelStream out;
    out.timing = t;
    out.mode = mode;
    out.values.resize(src.total_pixels());
    size_t pos = 0;
    while (pos < out.values.size()) {
        size_t n = src.fill(std::span<float>(out.values.data() + pos, out.values.size() - pos));
        if (n == 0) break;
        pos += n;
    }
    out.values.resize(pos);
    if (out.values.empty()) throw std::runtime_error("pixel source produced nothing");
    return out;
}

uint64_t chirp_pixel_count(const lora::LoRaParams& p, const DisplayTiming& t) {
    p.validate();
    double np = p.chirp_duration_s() * double(pixel_clock_hz(t));
    return uint64_t(std::llround(np));
}

uint64_t payload_start_pixel(const lora::LoRaParams& p, const DisplayTiming& t) {
    uint64_t np = chirp_pixel_count(p, t);
    return (uint64_t(p.preamble_len) + p.sync_symbols.size() + 2) * np +
           uint64_t(std::llround(double(np) / 4.0));
}

uint64_t packet_pixel_count(const lora::LoRaParams& p, size_t payload_symbols,
                            const DisplayTiming& t) {
    return payload_start_pixel(p, t) + payload_symbols * chirp_pixel_count(p, t);
}

PixelStream synth_tone_stream(const ToneSchedule& sched, const DisplayTiming& t,
                              PixelMode mode) {
    auto src = make_tone_source(sched, t, mode);
    return materialize(*src, t, mode);
}

PixelStream synth_chirp_stream(const lora::LoRaParams& p, uint16_t symbol, ChirpDir dir,
                               const DisplayTiming& t, PixelMode mode) {
    auto src = make_chirp_source(p, symbol, dir, t, mode);
    return materialize(*src, t, mode);
}

PixelStream synth_packet_stream(const lora::LoRaParams& p,
                                std::span<const uint16_t> symbols,
                                const DisplayTiming& t, PixelMode mode) {
    auto src = make_packet_source(p, symbols, t, mode);
    return materialize(*src, t, mode);
}

AttackVideo stream_to_frames(const PixelStream& s) {
    const DisplayTiming& t = s.timing;
    t.validate();
    if (s.values.empty()) throw std::invalid_argument("empty pixel stream");
    const uint64_t ppf = t.pixels_per_frame();
    const uint64_t nframes = (uint64_t(s.values.size()) + ppf - 1) / ppf;
    AttackVideo video;
    video.timing = t;
    video.mode = s.mode;
    video.frames.reserve(nframes);
    for (uint64_t f = 0; f < nframes; ++f) {
        std::vector<uint8_t> frame(size_t(t.active_width) * t.active_height, 0);
        for (uint32_t r = 0; r < t.active_height; ++r) {
            for (uint32_t c = 0; c < t.active_width; ++c) {
                uint64_t idx = f * ppf + uint64_t(r) * t.total_width + c;
                if (idx >= s.values.size()) break;
                float v = std::clamp(s.values[idx], 0.0f, 1.0f);
                frame[size_t(r) * t.active_width + c] = uint8_t(std::lround(v * 255.0f));
            }
        }
        video.frames.push_back(std::move(frame));
    }
    return video;
}

PixelStream frames_to_stream(const AttackVideo& v) {
    const DisplayTiming& t = v.timing;
    t.validate();
    if (v.frames.empty()) throw std::invalid_argument("video has no frames");
    const size_t frame_px = size_t(t.active_width) * t.active_height;
    for (const auto& f : v.frames)
        if (f.size() != frame_px) throw std::invalid_argument("frame size mismatch");
    const uint64_t ppf = t.pixels_per_frame();
    PixelStream out;
    out.timing = t;
    out.mode = v.mode;
    out.values.assign(size_t(ppf * v.frames.size()), 0.0f);
    for (size_t f = 0; f < v.frames.size(); ++f)
        for (uint32_t r = 0; r < t.active_height; ++r)
            for (uint32_t c = 0; c < t.active_width; ++c)
                out.values[size_t(f * ppf + uint64_t(r) * t.total_width + c)] =
                    float(v.frames[f][size_t(r) * t.active_width + c]) / 255.0f;
    return out;
}

AttackVideo synth_stepping_frames(const SteppingParams& sp,
                                  std::span<const uint16_t> symbols,
                                  const DisplayTiming& t) {
    sp.validate(t);
    if (symbols.empty()) throw std::invalid_argument("no stepping symbols");
    const double pc = double(pixel_clock_hz(t));
    check_band_fits_period(sp.center_freq - sp.bw / 2.0, sp.center_freq + sp.bw / 2.0, pc);
    const uint32_t n = sp.lines_per_chirp();
    std::vector<double> line_ratio(n);
    for (uint32_t j = 0; j < n; ++j) {
        double f = sp.center_freq - sp.bw / 2.0 + double(j) * sp.step_hz();
        line_ratio[j] = std::fmod(f, pc) / pc;
    }
    const uint64_t ppf = t.pixels_per_frame();
    AttackVideo video;
    video.timing = t;
    video.mode = PixelMode::binary;
    video.frames.reserve(symbols.size());
    for (size_t fi = 0; fi < symbols.size(); ++fi) {
        uint16_t k = symbols[fi];
        if (k >= n) throw std::invalid_argument("stepping symbol out of range");
        std::vector<uint8_t> frame(size_t(t.active_width) * t.active_height, 0);
        for (uint32_t i = 0; i < n; ++i) {
            double ratio = line_ratio[(i + k) % n];
            uint64_t row_base = uint64_t(fi) * ppf + uint64_t(i) * t.total_width;
            for (uint32_t c = 0; c < t.active_width; ++c) {
                double v = tone_value(ratio, row_base + c + 1);
                frame[size_t(i) * t.active_width + c] = v > 0.0 ? 255 : 0;
            }
        }
        video.frames.push_back(std::move(frame));
    }
    return video;
}

}  // namespace rastercast
