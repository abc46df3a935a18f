#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "rastercast/channel_sim.hpp"
#include "rastercast/dsp.hpp"

using namespace rastercast;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ChannelConfig clean_config(double cf = 433e6) {
    ChannelConfig c;
    c.center_freq = cf;
    c.rx_sample_rate = 1e6;
    c.rx_bandwidth = 500e3;
    return c;
}

double mean_power(std::span<const std::complex<float>> x, size_t skip) {
    double acc = 0.0;
    size_t n = 0;
    for (size_t i = skip; i + skip < x.size(); ++i, ++n) acc += std::norm(x[i]);
    return n ? acc / double(n) : 0.0;
}

// peak bin of |FFT| over an interior window
size_t peak_bin(std::span<const std::complex<float>> x, size_t start, size_t nfft) {
    std::vector<dsp::cplx> w(nfft);
    for (size_t i = 0; i < nfft; ++i) w[i] = dsp::cplx(x[start + i].real(), x[start + i].imag());
    dsp::fft_inplace(w);
    size_t best = 0;
    for (size_t k = 1; k < nfft; ++k)
        if (std::abs(w[k]) > std::abs(w[best])) best = k;
    return best;
}

}  // namespace

TEST_SUITE("channel_sim") {

TEST_CASE("pixel values map linearly onto cable voltage") {
    auto t = timing_preset("1080p60");
    PixelStream s;
    s.timing = t;
    s.mode = PixelMode::grayscale;
    s.values = {0.0f, 1.0f, 0.5f, 0.25f};

    auto vga = stream_to_voltage(s, CableProfile::vga(), {});
    CHECK(vga[0] == doctest::Approx(0.0));
    CHECK(vga[1] == doctest::Approx(0.7));
    CHECK(vga[2] == doctest::Approx(0.35));
    CHECK(vga[3] == doctest::Approx(0.175));

    auto hdmi = stream_to_voltage(s, CableProfile::hdmi_simplified(), {});
    CHECK(hdmi[0] == doctest::Approx(-0.2));
    CHECK(hdmi[1] == doctest::Approx(0.2));
    CHECK(hdmi[2] == doctest::Approx(0.0));
}

TEST_CASE("the mask forces hidden pixels to black level") {
    auto t = timing_preset("1080p60");
    PixelStream s;
    s.timing = t;
    s.values = {1.0f, 1.0f, 1.0f};
    std::vector<uint8_t> mask{1, 0, 1};
    auto v = stream_to_voltage(s, CableProfile::vga(), mask);
    CHECK(v[0] == doctest::Approx(0.7));
    CHECK(v[1] == doctest::Approx(0.0));
    CHECK(v[2] == doctest::Approx(0.7));

    std::vector<uint8_t> short_mask{1, 0};
    CHECK_THROWS_AS(stream_to_voltage(s, CableProfile::vga(), short_mask),
                    std::invalid_argument);
}

TEST_CASE("extraction tunes the alias of the synthesized tone to DC") {
    auto t = timing_preset("1080p60");
    const double cf = 433e6;
    auto s = synth_tone_stream({{cf, 600000}}, t, PixelMode::binary);
    auto v = stream_to_voltage(s, CableProfile::vga(), {});
    auto iq = emission_extract(v, CableProfile::vga(), clean_config(cf), t);
    CHECK(iq.sample_rate == doctest::Approx(1e6));
    CHECK(iq.center_freq == doctest::Approx(cf));
    REQUIRE(iq.samples.size() > 3000);

    // a tone exactly at the tuned frequency lands in bin 0
    CHECK(peak_bin(iq.samples, 1024, 1024) == 0);
    CHECK(mean_power(iq.samples, 500) > 1e-5);
}

TEST_CASE("targets one pixel-clock apart produce the same capture") {
    auto t = timing_preset("1080p60");
    const double pc = double(pixel_clock_hz(t));
    const double f = 433e6;
    auto cfg = clean_config(f);

    auto sa = synth_tone_stream({{f, 300000}}, t, PixelMode::binary);
    auto sb = synth_tone_stream({{f + pc, 300000}}, t, PixelMode::binary);
    for (size_t i = 0; i < sa.values.size(); ++i) REQUIRE(sa.values[i] == sb.values[i]);

    auto va = stream_to_voltage(sa, CableProfile::vga(), {});
    auto ia = emission_extract(va, CableProfile::vga(), cfg, t);
    auto vb = stream_to_voltage(sb, CableProfile::vga(), {});
    auto ib = emission_extract(vb, CableProfile::vga(), cfg, t);
    REQUIRE(ia.samples.size() == ib.samples.size());
    for (size_t i = 0; i < ia.samples.size(); ++i) CHECK(ia.samples[i] == ib.samples[i]);
}

TEST_CASE("all-black input yields a silent capture") {
    auto t = timing_preset("1080p60");
    PixelStream s;
    s.timing = t;
    s.values.assign(400000, 0.0f);
    auto v = stream_to_voltage(s, CableProfile::vga(), {});
    auto iq = emission_extract(v, CableProfile::vga(), clean_config(), t);
    // black maps to -mid after centering; the DC ends up far outside the
    // passband of the 433 MHz alias, so only filter leakage remains
    CHECK(mean_power(iq.samples, 200) < 1e-10);
}

TEST_CASE("extraction is linear in the voltage") {
    auto t = timing_preset("1080p60");
    auto s = synth_tone_stream({{433.1e6, 300000}}, t, PixelMode::grayscale);
    auto v = stream_to_voltage(s, CableProfile::vga(), {});
    auto full = emission_extract(v, CableProfile::vga(), clean_config(), t);

    // halve the swing around the mid level
    const float mid = 0.35f;
    std::vector<float> half(v.size());
    for (size_t i = 0; i < v.size(); ++i) half[i] = mid + 0.5f * (v[i] - mid);
    auto hiq = emission_extract(half, CableProfile::vga(), clean_config(), t);

    REQUIRE(hiq.samples.size() == full.samples.size());
    for (size_t i = 800; i + 800 < full.samples.size(); i += 97) {
        CHECK(hiq.samples[i].real() == doctest::Approx(0.5f * full.samples[i].real()).epsilon(1e-4));
        CHECK(hiq.samples[i].imag() == doctest::Approx(0.5f * full.samples[i].imag()).epsilon(1e-4));
    }
}

TEST_CASE("chunked extraction is bit-identical to whole-buffer") {
    auto t = timing_preset("1080p60");
    auto s = synth_tone_stream({{433e6, 250000}}, t, PixelMode::binary);
    auto v = stream_to_voltage(s, CableProfile::vga(), {});
    auto whole = emission_extract(v, CableProfile::vga(), clean_config(), t);

    EmissionExtractor ex(CableProfile::vga(), clean_config(), t);
    for (size_t i = 0; i < v.size(); i += 7777)
        ex.push(std::span<const float>(v.data() + i, std::min<size_t>(7777, v.size() - i)));
    auto parts = ex.finish();

    REQUIRE(parts.samples.size() == whole.samples.size());
    for (size_t i = 0; i < whole.samples.size(); ++i) {
        CHECK(parts.samples[i].real() == whole.samples[i].real());
        CHECK(parts.samples[i].imag() == whole.samples[i].imag());
    }
}

TEST_CASE("tuning to a pixel-clock harmonic is rejected") {
    auto t = timing_preset("1080p60");
    CHECK_THROWS_AS(EmissionExtractor(CableProfile::vga(), clean_config(148.5e6), t),
                    std::invalid_argument);
    CHECK_THROWS_AS(EmissionExtractor(CableProfile::vga(), clean_config(297e6), t),
                    std::invalid_argument);
    CHECK_NOTHROW(EmissionExtractor(CableProfile::vga(), clean_config(433e6), t));
}

TEST_CASE("rolloff envelope follows the ZOH image magnitudes") {
    auto t = timing_preset("1080p60");
    const double pc = double(pixel_clock_hz(t));
    auto mk = [&](double cf, bool rolloff) {
        auto cable = CableProfile::vga();
        cable.harmonic_rolloff = rolloff;
        return EmissionExtractor(cable, clean_config(cf), t).scale();
    };
    const double f1 = 433e6, f2 = 915e6;
    double want_ratio = std::abs(std::sin(std::numbers::pi * f2 / pc) / (std::numbers::pi * f2 / pc)) /
                        std::abs(std::sin(std::numbers::pi * f1 / pc) / (std::numbers::pi * f1 / pc));
    CHECK(mk(f2, true) / mk(f1, true) == doctest::Approx(want_ratio).epsilon(1e-9));
    CHECK(mk(f2, false) / mk(f1, false) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gain table points override the analytic envelope") {
    auto t = timing_preset("1080p60");
    auto base = clean_config();
    auto damped = base;
    damped.gain_table = {{100e6, -6.0}, {900e6, -6.0}};  // flat -6 dB across band
    double s0 = EmissionExtractor(CableProfile::vga(), base, t).scale();
    double s1 = EmissionExtractor(CableProfile::vga(), damped, t).scale();
    CHECK(s1 / s0 == doctest::Approx(std::pow(10.0, -6.0 / 20.0)).epsilon(1e-9));
}

TEST_CASE("gap gating removes emission during hidden pixels") {
    auto t = timing_preset("1080p60");
    lora::LoRaParams p;
    p.sf = 6;
    p.bw = 500e3;
    p.center_freq = 433e6;
    std::vector<uint16_t> syms{11, 40};

    auto run = [&](bool gate) {
        auto cfg = clean_config();
        cfg.gate_line_gaps = gate;
        cfg.gate_frame_gaps = gate;
        auto src = make_packet_source(p, syms, t, PixelMode::binary);
        return pixels_to_iq(*src, t, CableProfile::vga(), cfg);
    };
    auto gated = run(true);
    auto ungated = run(false);
    REQUIRE(gated.samples.size() == ungated.samples.size());

    // gating blanks 1 - (1920*1080)/(2200*1125) of the pixels, so the gated
    // capture must carry measurably less energy
    double pg = mean_power(gated.samples, 400);
    double pu = mean_power(ungated.samples, 400);
    CHECK(pg > 5e-7);
    CHECK(pg < pu * 0.95);
    CHECK(pg > pu * 0.5);
}

TEST_CASE("apply_channel identity passes samples through bit-exactly") {
    IQBuffer in;
    in.sample_rate = 1e6;
    in.center_freq = 433e6;
    dsp::GaussianRng g(5);
    for (int i = 0; i < 5000; ++i)
        in.samples.emplace_back(float(g.next()), float(g.next()));

    ChannelConfig cfg = clean_config();
    auto out = apply_channel(in, cfg);
    REQUIRE(out.samples.size() == in.samples.size());
    for (size_t i = 0; i < in.samples.size(); ++i) CHECK(out.samples[i] == in.samples[i]);
}

TEST_CASE("apply_channel gain and circular delay") {
    IQBuffer in;
    in.sample_rate = 1e6;
    in.center_freq = 433e6;
    for (int i = 0; i < 100; ++i) in.samples.emplace_back(float(i), float(-i));

    ChannelConfig cfg = clean_config();
    cfg.gain_db = -20.0;
    cfg.timing_offset = 3;
    auto out = apply_channel(in, cfg);
    REQUIRE(out.samples.size() == 100);
    // sample m of the output is input (m - 3) mod 100 scaled by 0.1
    CHECK(out.samples[3].real() == doctest::Approx(0.0));
    CHECK(out.samples[4].real() == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(out.samples[0].real() == doctest::Approx(9.7).epsilon(1e-6));
    CHECK(out.samples[0].imag() == doctest::Approx(-9.7).epsilon(1e-6));
}

TEST_CASE("apply_channel noise is seeded and calibrated") {
    IQBuffer in;
    in.sample_rate = 1e6;
    in.center_freq = 433e6;
    in.samples.assign(200000, {1.0f, 0.0f});

    ChannelConfig cfg = clean_config();
    cfg.snr_db = 10.0;
    cfg.rng_seed = 77;
    auto a = apply_channel(in, cfg);
    auto b = apply_channel(in, cfg);
    REQUIRE(a.samples.size() == b.samples.size());
    for (size_t i = 0; i < a.samples.size(); i += 53) CHECK(a.samples[i] == b.samples[i]);

    cfg.rng_seed = 78;
    auto c = apply_channel(in, cfg);
    size_t differs = 0;
    for (size_t i = 0; i < a.samples.size(); ++i)
        if (a.samples[i] != c.samples[i]) ++differs;
    CHECK(differs > a.samples.size() / 2);

    // signal power 1, snr 10 dB -> total noise power 0.1
    double noise = 0.0;
    for (auto& v : a.samples) {
        double re = v.real() - 1.0;
        double im = v.imag();
        noise += re * re + im * im;
    }
    noise /= double(a.samples.size());
    CHECK(noise == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("signal power is measured over the packet support only") {
    std::vector<std::complex<float>> x(1000, {0.0f, 0.0f});
    for (size_t i = 100; i < 300; ++i) x[i] = {2.0f, 0.0f};
    // 200 hot samples of power 4; quiet samples fall below the support gate
    CHECK(measure_signal_power(x) == doctest::Approx(4.0).epsilon(1e-6));
    std::vector<std::complex<float>> flat(64, {0.5f, 0.0f});
    CHECK(measure_signal_power(flat) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("config validation") {
    auto cfg = clean_config();
    CHECK_NOTHROW(cfg.validate());
    cfg.rx_bandwidth = 2e6;  // wider than the sample rate
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = clean_config();
    cfg.rx_sample_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

}  // TEST_SUITE
