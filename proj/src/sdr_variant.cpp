#include "rastercast/sdr_variant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rastercast/dsp.hpp"
#include "rastercast/lora_phy.hpp"

namespace rastercast {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDetectThresholdDb = 10.0;
constexpr double kDnrFloorDb = -300.0;
constexpr double kDnrCeilDb = 300.0;

// FFT bins per stepping symbol; exact when fs/step is a power-of-two ratio
size_t bins_per_symbol(const SteppingParams& sp, double fs, size_t nfft) {
    double bps = double(nfft) * sp.step_hz() / fs;
    auto ibps = size_t(std::llround(bps));
    if (ibps < 1 || std::abs(bps - double(ibps)) > 1e-6)
        throw std::invalid_argument(
            "stepping demod needs the FFT grid to land on the step spacing; "
            "use a sample rate that is a power-of-two multiple of bw/2^sf");
    return ibps;
}

size_t chirp_samples(const SteppingParams& sp, const SteppingWindow& w, double fs) {
    return size_t(std::llround(double(sp.lines_per_chirp()) * w.t_total * fs));
}

}  // namespace

SteppingWindow stepping_window(const DisplayTiming& t) {
    t.validate();
    SteppingWindow w;
    const double tp = pixel_duration_s(t);
    w.t_line = double(t.active_width) * tp;
    w.t_invalid = double(t.total_width - t.active_width) * tp;
    w.t_total = double(t.total_width) * tp;
    return w;
}

std::vector<std::complex<float>> stepping_reference(const SteppingParams& sp,
                                                    uint16_t symbol, double fs,
                                                    const DisplayTiming& t, double t0) {
    sp.validate(t);
    const uint32_t n = sp.lines_per_chirp();
    if (symbol >= n) throw std::invalid_argument("stepping symbol out of range");
    const SteppingWindow w = stepping_window(t);
    const size_t nsamp = chirp_samples(sp, w, fs);
    std::vector<std::complex<float>> out(nsamp, {0.0f, 0.0f});
    for (size_t m = 0; m < nsamp; ++m) {
        double tau = double(m) / fs;
        auto line = uint64_t(tau / w.t_total);
        if (line >= n) break;
        if (tau - double(line) * w.t_total >= w.t_line) continue;
        double f_off = -sp.bw / 2.0 +
                       double((line + symbol) % n) * sp.step_hz();
        double ph = kTwoPi * f_off * (t0 + tau);
        out[m] = {float(std::cos(ph)), float(std::sin(ph))};
    }
    return out;
}

SteppingDechirpResult stepping_dechirp(std::span<const std::complex<float>> window,
                                       const SteppingParams& sp,
                                       const DisplayTiming& t, double fs, double t0) {
    sp.validate(t);
    const uint32_t n = sp.lines_per_chirp();
    const SteppingWindow w = stepping_window(t);
    const size_t nominal = chirp_samples(sp, w, fs);
    const size_t nfft = dsp::next_pow2(nominal);
    const size_t bps = bins_per_symbol(sp, fs, nfft);

    // conjugate base (K=0) stepping chirp on the absolute timeline, with the
    // invalid line tails, guard lines, and anything past the buffer zeroed
    std::vector<dsp::cplx> gated(nfft, dsp::cplx{0.0, 0.0});
    const size_t avail = std::min(window.size(), nominal);
    for (size_t m = 0; m < avail; ++m) {
        double tau = double(m) / fs;
        auto line = uint64_t(tau / w.t_total);
        if (line >= n) break;
        if (tau - double(line) * w.t_total >= w.t_line) continue;
        double f_off = -sp.bw / 2.0 + double(line) * sp.step_hz();
        double ph = kTwoPi * f_off * (t0 + tau);
        dsp::cplx x(window[m].real(), window[m].imag());
        gated[m] = x * std::polar(1.0, -ph);
    }
    dsp::fft_inplace(gated);

    // symbol K shows up at +K*step, with the wrapped lines at (K-N)*step
    std::vector<double> mags(n, 0.0);
    mags[0] = std::abs(gated[0]);
    for (uint32_t k = 1; k < n; ++k)
        mags[k] = std::abs(gated[size_t(k) * bps]) +
                  std::abs(gated[nfft - size_t(n - k) * bps]);

    SteppingDechirpResult r;
    auto it = std::max_element(mags.begin(), mags.end());
    r.symbol = uint16_t(it - mags.begin());
    r.peak_mag = *it;
    if (r.peak_mag <= 0.0) {
        r.dnr_db = kDnrFloorDb;
        return r;
    }
    std::vector<double> rest;
    rest.reserve(n - 1);
    for (uint32_t k = 0; k < n; ++k)
        if (k != r.symbol) rest.push_back(mags[k]);
    double noise = dsp::median(std::move(rest));
    r.dnr_db = noise <= r.peak_mag * 1e-15 ? kDnrCeilDb
                                           : 20.0 * std::log10(r.peak_mag / noise);
    return r;
}

namespace {

SteppingDechirpResult dechirp_at_sample(std::span<const std::complex<float>> iq,
                                        int64_t m0, const SteppingParams& sp,
                                        const DisplayTiming& t, double fs) {
    if (m0 < 0 || size_t(m0) >= iq.size()) return {0, kDnrFloorDb, 0.0};
    return stepping_dechirp(iq.subspan(size_t(m0)), sp, t, fs, double(m0) / fs);
}

}  // namespace

SteppingDecodeResult stepping_demodulate(std::span<const std::complex<float>> iq,
                                         const SteppingParams& sp,
                                         const DisplayTiming& t, double fs,
                                         std::optional<size_t> expected_payload_symbols) {
    sp.validate(t);
    SteppingDecodeResult out;
    if (iq.empty()) return out;
    const double t_frame = 1.0 / double(t.refresh_rate);

    // energy onset
    double peak = 0.0;
    for (const auto& s : iq) peak = std::max(peak, double(std::norm(s)));
    if (peak <= 0.0) return out;
    size_t onset = 0;
    while (onset < iq.size() && std::norm(iq[onset]) < 0.05 * peak) ++onset;

    // sample-accurate refinement around the onset, then widen once if the
    // preamble does not verify
    int64_t start = -1;
    for (int64_t radius : {8, 40}) {
        int64_t best = -1;
        double best_peak = -1.0;
        for (int64_t d = -radius; d <= radius; ++d) {
            int64_t m0 = int64_t(onset) + d;
            auto r = dechirp_at_sample(iq, m0, sp, t, fs);
            if (r.symbol == 0 && r.peak_mag > best_peak) {
                best_peak = r.peak_mag;
                best = m0;
            }
        }
        if (best < 0) continue;
        uint32_t good = 0;
        for (uint32_t c = 0; c < sp.preamble_len; ++c) {
            auto m0 = int64_t(std::llround(double(best) + double(c) * t_frame * fs));
            auto r = dechirp_at_sample(iq, m0, sp, t, fs);
            if (r.symbol == 0 && r.dnr_db >= kDetectThresholdDb) ++good;
        }
        if (good + 1 >= sp.preamble_len) {
            start = best;
            break;
        }
    }
    if (start < 0) return out;

    out.found = true;
    out.start_offset = start;
    out.start_time = double(start) / fs;
    const double t_payload0 = double(start) / fs + double(sp.preamble_len) * t_frame;

    auto symbol_at = [&](size_t idx) {
        auto m0 = int64_t(std::llround((t_payload0 + double(idx) * t_frame) * fs));
        return dechirp_at_sample(iq, m0, sp, t, fs);
    };

    if (expected_payload_symbols) {
        for (size_t i = 0; i < *expected_payload_symbols; ++i) {
            auto r = symbol_at(i);
            out.symbols.push_back(r.symbol);
            out.symbol_confidences.push_back(r.dnr_db);
        }
    } else {
        std::vector<double> dnrs;
        size_t collapsed = 0;
        for (size_t i = 0;; ++i) {
            auto m0 = int64_t(std::llround((t_payload0 + double(i) * t_frame) * fs));
            if (m0 >= int64_t(iq.size())) break;
            auto r = symbol_at(i);
            out.symbols.push_back(r.symbol);
            out.symbol_confidences.push_back(r.dnr_db);
            dnrs.push_back(r.dnr_db);
            double floor_db = 6.0;
            if (dnrs.size() >= 4) {
                std::vector<double> sofar(dnrs);
                floor_db = std::max(dsp::median(std::move(sofar)) - 10.0, 6.0);
            }
            collapsed = (r.dnr_db < floor_db) ? collapsed + 1 : 0;
            if (collapsed >= 2) {
                out.symbols.resize(out.symbols.size() - 2);
                out.symbol_confidences.resize(out.symbol_confidences.size() - 2);
                break;
            }
        }
    }

    lora::LoRaParams lp;
    lp.sf = sp.sf;
    lp.bw = sp.bw;
    lp.center_freq = sp.center_freq;
    lp.coding = sp.coding;
    out.payload_bits = lora::decode_payload(out.symbols, lp);
    return out;
}

}  // namespace rastercast
