#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rastercast::lora {

enum class Coding {
    raw,        // plain sf-bit packing
    hamming45,  // per-nibble single parity, detect only
    hamming46,  // per-nibble double parity, detect only
    hamming47,  // Hamming(7,4), corrects 1 bit per codeword
    hamming48,  // Hamming(8,4), corrects 1 bit per codeword
};

Coding coding_from_string(std::string_view s);
std::string coding_to_string(Coding c);
uint32_t coded_bits_per_nibble(Coding c);  // 4,5,6,7,8

struct LoRaParams {
    uint32_t sf = 7;                         // 6..12
    double bw = 125e3;                       // Hz; 125k/250k/500k typical
    double center_freq = 433e6;              // Hz, RF center of the chirp
    uint32_t preamble_len = 4;               // up-chirps before sync
    std::array<uint16_t, 2> sync_symbols{8, 16};
    Coding coding = Coding::raw;
    double detect_dnr_threshold_db = 10.0;

    void validate() const;
    uint32_t chips() const { return 1u << sf; }
    double chirp_duration_s() const { return double(1u << sf) / bw; }
    // framing length in chirp units: preamble + 2 sync + 2.25 SFD
    double framing_chirps() const { return preamble_len + 2 + 2.25; }
};

// --- payload codec -------------------------------------------------------

// bits are one 0/1 per byte, MSB-first within each original data byte
std::vector<uint8_t> text_to_bits(std::string_view text);
std::string bits_to_text(std::span<const uint8_t> bits);  // drops partial tail byte
std::vector<uint8_t> bytes_to_bits(std::span<const uint8_t> bytes);
std::vector<uint8_t> bits_to_bytes(std::span<const uint8_t> bits);

// Pads with zero bits to whole symbols. MSB-first within each symbol.
std::vector<uint16_t> encode_payload(std::span<const uint8_t> bits, const LoRaParams& p);
// Inverse of encode_payload up to the zero tail padding; for corrected
// codings single-bit errors per codeword are repaired.
std::vector<uint8_t> decode_payload(std::span<const uint16_t> symbols, const LoRaParams& p);

size_t symbols_for_payload_bits(size_t nbits, const LoRaParams& p);

// per-nibble codec building blocks (exposed for tests)
uint8_t hamming_encode_nibble(uint8_t nibble, Coding c);   // codeword, MSB-first in low bits
uint8_t hamming_decode_nibble(uint8_t word, Coding c, bool* corrected = nullptr);

// --- modem ----------------------------------------------------------------

// Ideal complex-baseband packet at sample rate fs (must be an integer
// multiple of bw): preamble, two sync up-chirps, 2.25 down-chirp SFD,
// payload up-chirps. Phase is continuous across the packet.
std::vector<std::complex<float>> reference_modulate(const LoRaParams& p,
                                                    std::span<const uint16_t> symbols,
                                                    double fs);

struct DechirpResult {
    uint16_t symbol = 0;
    double dnr_db = 0.0;              // 20*log10(peak / median of other bins)
    double peak_mag = 0.0;
    std::vector<double> spectrum;     // folded magnitudes, 2^sf bins
};

// One-chirp window starting at window[0]; window must hold >= one chirp of
// samples (os*2^sf, os = fs/bw integer). down=true dechirps against the
// base down-chirp (for SFD location).
DechirpResult dechirp(std::span<const std::complex<float>> window,
                      const LoRaParams& p, double fs, bool down = false);

struct DetectResult {
    bool found = false;
    int64_t packet_start = -1;    // sample index of the first preamble chirp
    int64_t payload_start = -1;   // sample index of the first payload chirp
    std::array<uint16_t, 2> sync_observed{0, 0};
    double preamble_dnr_db = 0.0;
};

// Sliding dechirp detection: >= preamble_len-1 consecutive chirp-grid
// windows with one symbol value above the DNR threshold, chip-accurate
// refinement from the preamble bin, sample-accurate refinement by peak
// magnitude, then SFD location by down-chirp dominance.
DetectResult detect_packet(std::span<const std::complex<float>> iq,
                           const LoRaParams& p, double fs);

struct DecodeResult {
    bool found = false;
    std::vector<uint8_t> payload_bits;          // after decoding, incl. pad
    std::vector<uint16_t> symbols;              // raw demodulated symbols
    std::vector<double> symbol_confidences;     // DNR per symbol, dB
    int64_t start_offset = -1;                  // packet start sample
    std::vector<uint32_t> corrupted_symbol_indices;
    std::array<uint16_t, 2> sync_observed{0, 0};
};

// expected_payload_symbols: demodulate exactly that many symbols; without
// it, stop after two consecutive symbols whose DNR collapses under the
// corrupted-symbol floor. A symbol is corrupted when its DNR falls below
// max(median packet DNR - 10 dB, 6 dB).
DecodeResult demodulate_packet(std::span<const std::complex<float>> iq,
                               const LoRaParams& p, double fs,
                               std::optional<size_t> expected_payload_symbols = {});

double corrupted_symbol_floor_db(std::span<const double> packet_dnrs);

}  // namespace rastercast::lora
