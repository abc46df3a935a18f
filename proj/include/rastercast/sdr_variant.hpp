#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rastercast/display_timing.hpp"
#include "rastercast/waveform_synth.hpp"

namespace rastercast {

// Per-scanline emission window of the stepping chirp. A stepping chirp
// spends t_total on each of 2^sf lines; only the active t_line of each
// emits, and the t_invalid tail plus the guard lines and the frame gap
// are silent by construction, which is what makes the variant immune to
// raster gaps.
struct SteppingWindow {
    double t_line = 0.0;
    double t_invalid = 0.0;
    double t_total = 0.0;
};

SteppingWindow stepping_window(const DisplayTiming& t);

// Ideal complex-baseband stepping chirp for one symbol at sample rate fs.
// t0 is the absolute stream time of the first sample: line tones are
// snippets of global-timeline sinusoids, so phases depend on absolute
// time and the receiver must stay anchored to it.
std::vector<std::complex<float>> stepping_reference(const SteppingParams& sp,
                                                    uint16_t symbol, double fs,
                                                    const DisplayTiming& t,
                                                    double t0 = 0.0);

struct SteppingDechirpResult {
    uint16_t symbol = 0;
    double dnr_db = 0.0;
    double peak_mag = 0.0;
};

// Gated dechirp of one stepping chirp whose first sample sits at absolute
// stream time t0: multiply by the conjugate base stepping chirp (built on
// the same global timeline), zero everything outside the per-line t_line
// windows, FFT (gated sample count rounded up to a power of two), and map
// bins k*bw/2^sf -> symbol k with negative-frequency folding.
SteppingDechirpResult stepping_dechirp(std::span<const std::complex<float>> window,
                                       const SteppingParams& sp,
                                       const DisplayTiming& t, double fs, double t0);

struct SteppingDecodeResult {
    bool found = false;
    std::vector<uint8_t> payload_bits;
    std::vector<uint16_t> symbols;
    std::vector<double> symbol_confidences;
    int64_t start_offset = -1;
    double start_time = 0.0;
};

// Packet = preamble_len symbol-0 chirps then payload, one chirp per frame.
// Detection finds the first chirp to sample accuracy (energy onset, then
// DNR-maximizing refinement, then a full scan fallback).
SteppingDecodeResult stepping_demodulate(std::span<const std::complex<float>> iq,
                                         const SteppingParams& sp,
                                         const DisplayTiming& t, double fs,
                                         std::optional<size_t> expected_payload_symbols = {});

}  // namespace rastercast
