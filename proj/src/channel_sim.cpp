#include "rastercast/channel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace rastercast {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kStopbandDb = 60.0;

double sinc(double x) {
    if (x == 0.0) return 1.0;
    double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

double table_gain_db(const std::vector<GainPoint>& tbl, double f) {
    if (tbl.empty()) return 0.0;
    if (f <= tbl.front().freq_hz) return tbl.front().gain_db;
    if (f >= tbl.back().freq_hz) return tbl.back().gain_db;
    for (size_t i = 1; i < tbl.size(); ++i) {
        if (f <= tbl[i].freq_hz) {
            double f0 = tbl[i - 1].freq_hz, f1 = tbl[i].freq_hz;
            double a = (f - f0) / (f1 - f0);
            return tbl[i - 1].gain_db + a * (tbl[i].gain_db - tbl[i - 1].gain_db);
        }
    }
    return tbl.back().gain_db;
}

}  // namespace

CableProfile CableProfile::vga() {
    return {"vga", 0.0, 0.7, true};
}

CableProfile CableProfile::hdmi_simplified() {
    return {"hdmi_simplified", -0.2, 0.2, true};
}

CableProfile cable_from_string(std::string_view s) {
    if (s == "vga") return CableProfile::vga();
    if (s == "hdmi" || s == "hdmi_simplified") return CableProfile::hdmi_simplified();
    throw std::invalid_argument("unknown cable profile: " + std::string(s));
}

void ChannelConfig::validate() const {
    if (center_freq <= 0.0) throw std::invalid_argument("center_freq must be positive");
    if (rx_sample_rate <= 0.0 || rx_bandwidth <= 0.0)
        throw std::invalid_argument("rx rates must be positive");
    if (rx_sample_rate < rx_bandwidth)
        throw std::invalid_argument("rx_sample_rate must be at least rx_bandwidth");
    if (sync_spur_amplitude < 0.0)
        throw std::invalid_argument("sync_spur_amplitude must be non-negative");
    for (size_t i = 1; i < gain_table.size(); ++i)
        if (gain_table[i].freq_hz <= gain_table[i - 1].freq_hz)
            throw std::invalid_argument("gain_table frequencies must be ascending");
}

std::vector<float> stream_to_voltage(const PixelStream& s, const CableProfile& cable,
                                     std::span<const uint8_t> mask) {
    if (!mask.empty() && mask.size() != s.values.size())
        throw std::invalid_argument("mask length does not match the stream");
    if (cable.white_level_v <= cable.black_level_v)
        throw std::invalid_argument("cable white level must exceed black level");
    const float black = float(cable.black_level_v);
    const float swing = float(cable.white_level_v - cable.black_level_v);
    std::vector<float> v(s.values.size());
    for (size_t i = 0; i < v.size(); ++i) {
        bool on = mask.empty() || mask[i] != 0;
        v[i] = on ? black + s.values[i] * swing : black;
    }
    return v;
}

EmissionExtractor::EmissionExtractor(const CableProfile& cable, const ChannelConfig& cfg,
                                     const DisplayTiming& t)
    : cfg_(cfg) {
    cfg_.validate();
    t.validate();
    if (cable.white_level_v <= cable.black_level_v)
        throw std::invalid_argument("cable white level must exceed black level");
    const uint64_t pc = pixel_clock_hz(t);

    auto cf_int = uint64_t(std::llround(cfg_.center_freq));
    if (std::abs(cfg_.center_freq - double(cf_int)) > 1e-6)
        throw std::invalid_argument("center_freq must be a whole number of Hz");
    uint64_t fm = cf_int % pc;
    if (fm == 0)
        throw std::invalid_argument(
            "center_freq sits exactly on a pixel-clock harmonic and aliases to DC; "
            "tune off the harmonic");
    mixer_ = std::make_unique<dsp::ToneMixer>(fm, pc);

    mid_ = cable.mid_level_v();
    scale_ = 1.0;
    if (cable.harmonic_rolloff)
        scale_ *= std::abs(sinc(cfg_.center_freq / double(pc)));
    scale_ *= std::pow(10.0, table_gain_db(cfg_.gain_table, cfg_.center_freq) / 20.0);

    auto rx = uint64_t(std::llround(cfg_.rx_sample_rate));
    if (std::abs(cfg_.rx_sample_rate - double(rx)) > 1e-6 || rx == 0)
        throw std::invalid_argument("rx_sample_rate must be a whole number of Hz");
    if (rx > pc)
        throw std::invalid_argument("rx_sample_rate must not exceed the pixel clock");
    const uint64_t g = std::gcd(pc, rx);
    const auto up = uint32_t(rx / g);
    const auto down = uint32_t(pc / g);

    const double up_rate = double(pc) * double(up);
    const double cutoff_hz = cfg_.rx_bandwidth / 2.0;
    double trans_hz = cfg_.rx_sample_rate / 2.0 - cutoff_hz;
    if (trans_hz <= 0.0) trans_hz = 0.05 * cfg_.rx_sample_rate;
    size_t ntaps = dsp::kaiser_taps(kStopbandDb, trans_hz / up_rate);
    while (ntaps % (2 * size_t(up)) != 1) ++ntaps;
    auto taps = dsp::kaiser_lowpass(ntaps, cutoff_hz / up_rate, dsp::kaiser_beta(kStopbandDb));
    resampler_ = std::make_unique<dsp::RationalResampler>(up, down, std::move(taps));

    if (cfg_.sync_spur_amplitude > 0.0) {
        double k = std::round(cfg_.center_freq / double(pc));
        spur_offset_hz_ = k * double(pc) - cfg_.center_freq;
    }
}

void EmissionExtractor::push(std::span<const float> voltage) {
    if (voltage.empty()) return;
    std::vector<double> centered(voltage.size());
    for (size_t i = 0; i < voltage.size(); ++i)
        centered[i] = (double(voltage[i]) - mid_) * scale_;
    mixer_->mix(centered, mixbuf_);
    resampler_->push(mixbuf_, out_);
}

IQBuffer EmissionExtractor::finish() {
    resampler_->finish(out_);
    if (cfg_.sync_spur_amplitude > 0.0 &&
        std::abs(spur_offset_hz_) < cfg_.rx_sample_rate / 2.0) {
        const double w = kTwoPi * spur_offset_hz_ / cfg_.rx_sample_rate;
        for (size_t m = 0; m < out_.size(); ++m) {
            double ph = w * double(m);
            out_[m] += std::complex<float>(float(cfg_.sync_spur_amplitude * std::cos(ph)),
                                           float(cfg_.sync_spur_amplitude * std::sin(ph)));
        }
    }
    IQBuffer iq;
    iq.samples = std::move(out_);
    out_.clear();
    iq.sample_rate = cfg_.rx_sample_rate;
    iq.center_freq = cfg_.center_freq;
    return iq;
}

IQBuffer emission_extract(std::span<const float> voltage, const CableProfile& cable,
                          const ChannelConfig& cfg, const DisplayTiming& t) {
    EmissionExtractor ex(cable, cfg, t);
    ex.push(voltage);
    return ex.finish();
}

double measure_signal_power(std::span<const std::complex<float>> x) {
    double peak = 0.0;
    for (const auto& s : x) peak = std::max(peak, double(std::norm(s)));
    if (peak <= 0.0) return 0.0;
    // packet time support = samples within 20 dB of the envelope peak
    const double thresh = peak * 0.01;
    double acc = 0.0;
    size_t n = 0;
    for (const auto& s : x) {
        double p = std::norm(s);
        if (p >= thresh) {
            acc += p;
            ++n;
        }
    }
    return n > 0 ? acc / double(n) : 0.0;
}

IQBuffer apply_channel(const IQBuffer& in, const ChannelConfig& cfg) {
    cfg.validate();
    IQBuffer out;
    out.sample_rate = in.sample_rate;
    out.center_freq = in.center_freq;
    const size_t n = in.samples.size();
    out.samples.resize(n);
    if (n == 0) return out;

    const auto gain = float(std::pow(10.0, cfg.gain_db / 20.0));
    const int64_t off = cfg.timing_offset;
    for (size_t m = 0; m < n; ++m) {
        int64_t src = (int64_t(m) - off) % int64_t(n);
        if (src < 0) src += int64_t(n);
        out.samples[m] = in.samples[size_t(src)] * gain;
    }

    if (cfg.snr_db) {
        const double p_sig = measure_signal_power(out.samples);
        if (p_sig > 0.0) {
            const double snr_lin = std::pow(10.0, *cfg.snr_db / 10.0);
            const double sigma = std::sqrt(p_sig / (2.0 * snr_lin));
            dsp::GaussianRng rng(cfg.rng_seed);
            for (auto& s : out.samples)
                s += std::complex<float>(float(sigma * rng.next()), float(sigma * rng.next()));
        }
    }
    return out;
}

IQBuffer pixels_to_iq(PixelSource& src, const DisplayTiming& t,
                      const CableProfile& cable, const ChannelConfig& cfg) {
    t.validate();
    EmissionExtractor ex(cable, cfg, t);
    const uint64_t ppf = t.pixels_per_frame();
    const uint64_t total = src.total_pixels();
    const uint64_t frames = std::max<uint64_t>(1, (total + ppf - 1) / ppf);

    // per-frame emission pattern; gating choices fold into the mask
    std::vector<uint8_t> frame_mask(static_cast<size_t>(ppf), 0);
    for (uint64_t i = 0; i < ppf; ++i)
        frame_mask[size_t(i)] =
            pixel_emits(t, i, cfg.gate_line_gaps, cfg.gate_frame_gaps) ? 1 : 0;

    const float black = float(cable.black_level_v);
    const float swing = float(cable.white_level_v - cable.black_level_v);

    std::vector<float> pixels(static_cast<size_t>(ppf), 0.0f);
    std::vector<float> voltage(static_cast<size_t>(ppf), 0.0f);
    uint64_t produced = 0;
    for (uint64_t f = 0; f < frames; ++f) {
        size_t got = 0;
        while (got < pixels.size()) {
            size_t n = src.fill(std::span<float>(pixels.data() + got, pixels.size() - got));
            if (n == 0) break;
            got += n;
            produced += n;
        }
        std::fill(pixels.begin() + long(got), pixels.end(), 0.0f);
        for (size_t i = 0; i < pixels.size(); ++i)
            voltage[i] = frame_mask[i] ? black + pixels[i] * swing : black;
        ex.push(voltage);
    }
    (void)produced;
    return ex.finish();
}

}  // namespace rastercast
