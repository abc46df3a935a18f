#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rastercast/display_timing.hpp"
#include "rastercast/dsp.hpp"
#include "rastercast/waveform_synth.hpp"

namespace rastercast {

struct CableProfile {
    std::string name;
    double black_level_v = 0.0;
    double white_level_v = 0.7;
    bool harmonic_rolloff = true;  // scale by the ZOH image envelope

    double mid_level_v() const { return 0.5 * (black_level_v + white_level_v); }

    static CableProfile vga();               // 0 V .. 0.7 V
    static CableProfile hdmi_simplified();   // bipolar +-0.2 V, no TMDS coding
};

CableProfile cable_from_string(std::string_view s);

struct GainPoint {
    double freq_hz;
    double gain_db;
};

struct ChannelConfig {
    double center_freq = 433e6;       // receiver tuning, Hz
    double rx_sample_rate = 1e6;      // Hz; rx path output rate
    double rx_bandwidth = 500e3;      // Hz; lowpass cutoff = rx_bandwidth/2
    std::optional<double> snr_db;     // absent = noiseless
    double gain_db = 0.0;
    bool gate_line_gaps = true;
    bool gate_frame_gaps = true;
    int64_t timing_offset = 0;        // circular delay, output samples
    uint64_t rng_seed = 0;
    double sync_spur_amplitude = 0.0; // additive tone at the nearest PC harmonic
    std::vector<GainPoint> gain_table; // optional measured rolloff, interpolated

    void validate() const;
};

struct IQBuffer {
    std::vector<std::complex<float>> samples;
    double sample_rate = 0.0;
    double center_freq = 0.0;
};

// pixel [0,1] -> cable voltage; mask forces hidden positions to black level.
// mask may be empty (everything emits) or one byte per pixel.
std::vector<float> stream_to_voltage(const PixelStream& s, const CableProfile& cable,
                                     std::span<const uint8_t> mask);

// Streaming emission extractor: the cable acts as a zero-order-hold DAC at
// the pixel clock, so the spectrum repeats at multiples of PC under a
// |sinc(f/PC)| envelope. Extraction mixes the alias at mod(f_c, PC) down to
// baseband with an exact rational oscillator, lowpasses to rx_bandwidth,
// and decimates PC -> rx_sample_rate through an integer L/M chain.
class EmissionExtractor {
  public:
    EmissionExtractor(const CableProfile& cable, const ChannelConfig& cfg,
                      const DisplayTiming& t);
    void push(std::span<const float> voltage);
    IQBuffer finish();
    double scale() const { return scale_; }

  private:
    ChannelConfig cfg_;
    double mid_;
    double scale_;
    std::unique_ptr<dsp::ToneMixer> mixer_;
    std::unique_ptr<dsp::RationalResampler> resampler_;
    std::vector<dsp::cplx> mixbuf_;
    std::vector<std::complex<float>> out_;
    double spur_offset_hz_ = 0.0;
};

// Whole-buffer form of the extractor (identical output).
IQBuffer emission_extract(std::span<const float> voltage, const CableProfile& cable,
                          const ChannelConfig& cfg, const DisplayTiming& t);

// gain, circular timing offset, then calibrated complex AWGN. SNR is
// signal power over the packet's time support (samples within 20 dB of
// the envelope peak) divided by total noise power.
IQBuffer apply_channel(const IQBuffer& in, const ChannelConfig& cfg);

double measure_signal_power(std::span<const std::complex<float>> x);

// Convenience pipeline: source -> gate mask -> voltage -> extraction,
// processing frame-sized chunks; the stream is padded with black to whole
// frames. Bit-identical to the materialized path.
IQBuffer pixels_to_iq(PixelSource& src, const DisplayTiming& t,
                      const CableProfile& cable, const ChannelConfig& cfg);

}  // namespace rastercast
