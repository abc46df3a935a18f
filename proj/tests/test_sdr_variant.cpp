#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "rastercast/channel_sim.hpp"
#include "rastercast/sdr_variant.hpp"

using namespace rastercast;

namespace {

SteppingParams stepping_defaults() {
    SteppingParams sp;
    sp.sf = 10;
    sp.bw = 500e3;
    sp.center_freq = 433e6;
    sp.guard_lines = 56;
    sp.preamble_len = 4;
    return sp;
}

// stream holding one stepping chirp per frame, symbol list = preamble zeros
// then payload, each chirp laid at its frame's sample-exact start time
std::vector<std::complex<float>> stepping_stream(const SteppingParams& sp,
                                                 const std::vector<uint16_t>& payload,
                                                 const DisplayTiming& t, double fs,
                                                 size_t lead_silence, size_t tail_silence) {
    std::vector<uint16_t> all(sp.preamble_len, 0);
    all.insert(all.end(), payload.begin(), payload.end());
    const double t_frame = 1.0 / double(t.refresh_rate);
    const size_t total =
        lead_silence + size_t(std::llround(double(all.size()) * t_frame * fs)) + tail_silence;
    std::vector<std::complex<float>> iq(total, {0.0f, 0.0f});
    for (size_t i = 0; i < all.size(); ++i) {
        auto m0 = int64_t(lead_silence) + std::llround(double(i) * t_frame * fs);
        auto chirp = stepping_reference(sp, all[i], fs, t, double(m0) / fs);
        for (size_t m = 0; m < chirp.size() && m0 + int64_t(m) < int64_t(iq.size()); ++m)
            iq[size_t(m0) + m] += chirp[m];
    }
    return iq;
}

}  // namespace

TEST_SUITE("sdr_variant") {

TEST_CASE("per-line emission window") {
    auto t = timing_preset("1080p60");
    auto w = stepping_window(t);
    CHECK(w.t_line == doctest::Approx(1920.0 / 148.5e6).epsilon(1e-15));
    CHECK(w.t_invalid == doctest::Approx(280.0 / 148.5e6).epsilon(1e-15));
    CHECK(w.t_total == doctest::Approx(2200.0 / 148.5e6).epsilon(1e-15));

    auto u = stepping_window(timing_preset("720p60"));
    CHECK(u.t_total == doctest::Approx(1650.0 / 74.25e6).epsilon(1e-15));
}

TEST_CASE("reference chirp is gated line by line") {
    auto t = timing_preset("1080p60");
    auto sp = stepping_defaults();
    const double fs = 1e6;
    auto ref = stepping_reference(sp, 0, fs, t, 0.0);

    auto w = stepping_window(t);
    CHECK(ref.size() == size_t(std::llround(1024.0 * w.t_total * fs)));

    size_t active = 0, silent = 0;
    for (const auto& v : ref) {
        double mag = std::abs(std::complex<double>(v.real(), v.imag()));
        if (mag == 0.0) {
            ++silent;
        } else {
            CHECK(mag == doctest::Approx(1.0).epsilon(1e-6));
            ++active;
        }
    }
    // the duty cycle of the gate is aw/tw
    double duty = double(active) / double(active + silent);
    CHECK(duty == doctest::Approx(1920.0 / 2200.0).epsilon(0.01));

    // first sample: line 0 tone of symbol 0 at t0 = 0 has zero phase
    CHECK(ref[0].real() == doctest::Approx(1.0));
    CHECK(ref[0].imag() == doctest::Approx(0.0));
}

TEST_CASE("stepping dechirp identifies symbols from the absolute timeline") {
    auto t = timing_preset("1080p60");
    auto sp = stepping_defaults();
    const double fs = 1e6;
    for (uint16_t sym : {0, 1, 7, 100, 511, 512, 1023}) {
        auto ref = stepping_reference(sp, sym, fs, t, 0.0);
        auto r = stepping_dechirp(ref, sp, t, fs, 0.0);
        CHECK(r.symbol == sym);
        CHECK(r.dnr_db > 30.0);
    }
}

TEST_CASE("dechirp needs the true chirp start time") {
    auto t = timing_preset("1080p60");
    auto sp = stepping_defaults();
    const double fs = 1e6;
    // chirp begins at stream time 0.02 s; the receiver window starts there
    const double t0 = 0.02;
    auto ref = stepping_reference(sp, 300, fs, t, t0);
    auto good = stepping_dechirp(ref, sp, t, fs, t0);
    CHECK(good.symbol == 300);

    // same window dechirped as if it began at t = 0: the per-line phase
    // offsets scramble the coherent sum
    auto bad = stepping_dechirp(ref, sp, t, fs, 0.0);
    CHECK(good.dnr_db > bad.dnr_db + 10.0);
}

TEST_CASE("sample rate must land the FFT grid on the step spacing") {
    auto t = timing_preset("1080p60");
    auto sp = stepping_defaults();
    std::vector<std::complex<float>> window(20000, {1.0f, 0.0f});
    CHECK_THROWS_AS(stepping_dechirp(window, sp, t, 900e3, 0.0), std::invalid_argument);
    CHECK_NOTHROW(stepping_dechirp(window, sp, t, 1e6, 0.0));
}

TEST_CASE("stepping demodulation at IQ level") {
    auto t = timing_preset("1080p60");
    auto sp = stepping_defaults();
    const double fs = 1e6;
    std::vector<uint16_t> payload{123, 777, 0, 1023, 512};
    auto iq = stepping_stream(sp, payload, t, fs, 1000, 4000);

    auto dec = stepping_demodulate(iq, sp, t, fs, payload.size());
    REQUIRE(dec.found);
    CHECK(std::abs(dec.start_offset - 1000) <= 1);
    REQUIRE(dec.symbols.size() == payload.size());
    for (size_t i = 0; i < payload.size(); ++i) CHECK(dec.symbols[i] == payload[i]);
    for (double c : dec.symbol_confidences) CHECK(c > 20.0);
}

TEST_CASE("stepping demodulation finds its own length") {
    auto t = timing_preset("1080p60");
    auto sp = stepping_defaults();
    const double fs = 1e6;
    std::vector<uint16_t> payload{5, 900, 333};
    // two frames of trailing silence for the collapse detector to see
    auto iq = stepping_stream(sp, payload, t, fs, 500,
                              size_t(std::llround(2.0 / 60.0 * fs)));
    auto dec = stepping_demodulate(iq, sp, t, fs);
    REQUIRE(dec.found);
    CHECK(dec.symbols == payload);
}

TEST_CASE("stepping frames round the full pipeline") {
    auto t = timing_preset("1080p60");
    auto sp = stepping_defaults();
    std::vector<uint16_t> all(sp.preamble_len, 0);
    std::vector<uint16_t> payload{123, 777};
    all.insert(all.end(), payload.begin(), payload.end());

    auto src = make_stepping_source(sp, all, t);
    ChannelConfig cfg;
    cfg.center_freq = sp.center_freq;
    cfg.rx_sample_rate = 1e6;
    cfg.rx_bandwidth = 600e3;
    auto iq = pixels_to_iq(*src, t, CableProfile::vga(), cfg);
    CHECK(iq.sample_rate == doctest::Approx(1e6));

    auto dec = stepping_demodulate(iq.samples, sp, t, 1e6, payload.size());
    REQUIRE(dec.found);
    REQUIRE(dec.symbols.size() == payload.size());
    CHECK(dec.symbols[0] == payload[0]);
    CHECK(dec.symbols[1] == payload[1]);
    for (double c : dec.symbol_confidences) CHECK(c > 20.0);
}

TEST_CASE("tall stepping chirps are rejected on short rasters") {
    auto t = timing_preset("1080p60");
    auto sp = stepping_defaults();
    sp.sf = 11;
    std::vector<std::complex<float>> iq(1000);
    CHECK_THROWS_AS(stepping_demodulate(iq, sp, t, 1e6), std::invalid_argument);
}

}  // TEST_SUITE
