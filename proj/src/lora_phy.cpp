#include "rastercast/lora_phy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include "rastercast/dsp.hpp"

namespace rastercast::lora {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDnrFloorDb = -300.0;
constexpr double kDnrCeilDb = 300.0;

uint32_t oversample_of(const LoRaParams& p, double fs) {
    double ratio = fs / p.bw;
    auto os = uint32_t(std::llround(ratio));
    if (os == 0 || std::abs(ratio - double(os)) > 1e-9)
        throw std::invalid_argument("sample rate must be an integer multiple of bw");
    if ((os & (os - 1)) != 0)
        throw std::invalid_argument("oversample factor must be a power of two");
    return os;
}

// Phase-accumulated chirp samples. K rotates the starting chip. Appends to
// `out`, continuing from phase *ph. The sample takes the phase accumulated so
// far, not a mid-sample estimate: with the frequency stepping by a cycle
// fraction of 1/spc per sample, left-endpoint accumulation keeps the two
// halves of a wrapped symbol exactly coherent after dechirping, while a
// half-step offset would flip their relative phase by pi/os at the wrap.
void append_chirp(std::vector<dsp::cplx>& out, const LoRaParams& p, uint32_t os,
                  uint16_t symbol, bool down, size_t nsamples, double* ph) {
    const uint32_t n_chips = p.chips();
    const size_t spc = size_t(os) * n_chips;
    for (size_t n = 0; n < nsamples; ++n) {
        size_t x = (size_t(symbol) * os + n) % spc;
        double f = down ? p.bw / 2.0 - p.bw * double(x) / double(spc)
                        : -p.bw / 2.0 + p.bw * double(x) / double(spc);
        double dphi = kTwoPi * f / (p.bw * os);
        out.emplace_back(std::polar(1.0, *ph));
        *ph += dphi;
    }
}

const std::vector<dsp::cplx>& base_chirp(const LoRaParams& p, uint32_t os, bool down) {
    thread_local std::unordered_map<uint64_t, std::vector<dsp::cplx>> cache;
    uint64_t key = (uint64_t(p.sf) << 32) | (uint64_t(os) << 1) | (down ? 1 : 0);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<dsp::cplx> base;
    base.reserve(size_t(os) << p.sf);
    double ph = 0.0;
    append_chirp(base, p, os, 0, down, size_t(os) << p.sf, &ph);
    return cache.emplace(key, std::move(base)).first->second;
}

struct WindowRec {
    uint16_t sym;
    double dnr;
    double peak;
};

WindowRec dechirp_at(std::span<const std::complex<float>> iq, int64_t pos,
                     const LoRaParams& p, double fs, bool down, size_t spc) {
    if (pos < 0 || size_t(pos) >= iq.size()) return {0, kDnrFloorDb, 0.0};
    size_t avail = std::min(spc, iq.size() - size_t(pos));
    if (avail < spc) {
        std::vector<std::complex<float>> padded(spc, {0.0f, 0.0f});
        std::copy_n(iq.begin() + pos, avail, padded.begin());
        auto r = dechirp(padded, p, fs, down);
        return {r.symbol, r.dnr_db, r.peak_mag};
    }
    auto r = dechirp(iq.subspan(size_t(pos), spc), p, fs, down);
    return {r.symbol, r.dnr_db, r.peak_mag};
}

}  // namespace

void LoRaParams::validate() const {
    if (sf < 6 || sf > 12) throw std::invalid_argument("sf must be in [6, 12]");
    if (bw <= 0.0) throw std::invalid_argument("bw must be positive");
    if (center_freq <= bw / 2.0)
        throw std::invalid_argument("center_freq must exceed bw/2");
    if (preamble_len < 2) throw std::invalid_argument("preamble_len must be >= 2");
    for (uint16_t s : sync_symbols)
        if (s >= chips()) throw std::invalid_argument("sync symbol out of range");
}

Coding coding_from_string(std::string_view s) {
    if (s == "raw") return Coding::raw;
    if (s == "hamming45" || s == "4/5") return Coding::hamming45;
    if (s == "hamming46" || s == "4/6") return Coding::hamming46;
    if (s == "hamming47" || s == "4/7") return Coding::hamming47;
    if (s == "hamming48" || s == "4/8") return Coding::hamming48;
    throw std::invalid_argument("unknown coding: " + std::string(s));
}

std::string coding_to_string(Coding c) {
    switch (c) {
        case Coding::raw: return "raw";
        case Coding::hamming45: return "hamming45";
        case Coding::hamming46: return "hamming46";
        case Coding::hamming47: return "hamming47";
        case Coding::hamming48: return "hamming48";
    }
    return "raw";
}

uint32_t coded_bits_per_nibble(Coding c) {
    switch (c) {
        case Coding::raw: return 4;
        case Coding::hamming45: return 5;
        case Coding::hamming46: return 6;
        case Coding::hamming47: return 7;
        case Coding::hamming48: return 8;
    }
    return 4;
}

// --- codec -----------------------------------------------------------------

std::vector<uint8_t> text_to_bits(std::string_view text) {
    std::vector<uint8_t> bits;
    bits.reserve(text.size() * 8);
    for (unsigned char ch : text)
        for (int b = 7; b >= 0; --b) bits.push_back((ch >> b) & 1);
    return bits;
}

std::string bits_to_text(std::span<const uint8_t> bits) {
    std::string out;
    for (size_t i = 0; i + 8 <= bits.size(); i += 8) {
        unsigned ch = 0;
        for (size_t b = 0; b < 8; ++b) ch = (ch << 1) | (bits[i + b] & 1);
        out.push_back(char(ch));
    }
    return out;
}

std::vector<uint8_t> bytes_to_bits(std::span<const uint8_t> bytes) {
    std::vector<uint8_t> bits;
    bits.reserve(bytes.size() * 8);
    for (uint8_t v : bytes)
        for (int b = 7; b >= 0; --b) bits.push_back((v >> b) & 1);
    return bits;
}

std::vector<uint8_t> bits_to_bytes(std::span<const uint8_t> bits) {
    std::vector<uint8_t> bytes;
    for (size_t i = 0; i + 8 <= bits.size(); i += 8) {
        unsigned v = 0;
        for (size_t b = 0; b < 8; ++b) v = (v << 1) | (bits[i + b] & 1);
        bytes.push_back(uint8_t(v));
    }
    return bytes;
}

uint8_t hamming_encode_nibble(uint8_t nibble, Coding c) {
    nibble &= 0xF;
    const uint8_t d3 = (nibble >> 3) & 1, d2 = (nibble >> 2) & 1;
    const uint8_t d1 = (nibble >> 1) & 1, d0 = nibble & 1;
    switch (c) {
        case Coding::raw:
            return nibble;
        case Coding::hamming45:
            return uint8_t((nibble << 1) | (d3 ^ d2 ^ d1 ^ d0));
        case Coding::hamming46: {
            uint8_t p1 = d3 ^ d2 ^ d1, p0 = d2 ^ d1 ^ d0;
            return uint8_t((nibble << 2) | (p1 << 1) | p0);
        }
        case Coding::hamming47: {
            uint8_t p2 = d3 ^ d2 ^ d1, p1 = d3 ^ d2 ^ d0, p0 = d3 ^ d1 ^ d0;
            return uint8_t((nibble << 3) | (p2 << 2) | (p1 << 1) | p0);
        }
        case Coding::hamming48: {
            uint8_t w7 = hamming_encode_nibble(nibble, Coding::hamming47);
            uint8_t pall = 0;
            for (int b = 0; b < 7; ++b) pall ^= (w7 >> b) & 1;
            return uint8_t((w7 << 1) | pall);
        }
    }
    return nibble;
}

namespace {

// syndrome -> flipped bit position within the (7,4) word [d3 d2 d1 d0 p2 p1 p0],
// bit 6 = d3 ... bit 0 = p0
int hamming7_error_bit(uint8_t s) {
    switch (s) {
        case 0b111: return 6;  // d3
        case 0b110: return 5;  // d2
        case 0b101: return 4;  // d1
        case 0b011: return 3;  // d0
        case 0b100: return 2;  // p2
        case 0b010: return 1;  // p1
        case 0b001: return 0;  // p0
    }
    return -1;
}

uint8_t hamming7_syndrome(uint8_t w) {
    const uint8_t d3 = (w >> 6) & 1, d2 = (w >> 5) & 1, d1 = (w >> 4) & 1, d0 = (w >> 3) & 1;
    const uint8_t p2 = (w >> 2) & 1, p1 = (w >> 1) & 1, p0 = w & 1;
    uint8_t s2 = uint8_t(d3 ^ d2 ^ d1 ^ p2);
    uint8_t s1 = uint8_t(d3 ^ d2 ^ d0 ^ p1);
    uint8_t s0 = uint8_t(d3 ^ d1 ^ d0 ^ p0);
    return uint8_t((s2 << 2) | (s1 << 1) | s0);
}

}  // namespace

uint8_t hamming_decode_nibble(uint8_t word, Coding c, bool* corrected) {
    if (corrected) *corrected = false;
    switch (c) {
        case Coding::raw:
            return word & 0xF;
        case Coding::hamming45:
            return (word >> 1) & 0xF;  // parity detects only
        case Coding::hamming46:
            return (word >> 2) & 0xF;
        case Coding::hamming47: {
            uint8_t w = word & 0x7F;
            uint8_t s = hamming7_syndrome(w);
            if (s != 0) {
                int bit = hamming7_error_bit(s);
                if (bit >= 0) {
                    w ^= uint8_t(1u << bit);
                    if (corrected) *corrected = true;
                }
            }
            return (w >> 3) & 0xF;
        }
        case Coding::hamming48: {
            uint8_t w = word & 0xFF;
            uint8_t w7 = uint8_t(w >> 1);
            uint8_t s = hamming7_syndrome(w7);
            uint8_t q = 0;
            for (int b = 0; b < 8; ++b) q ^= (w >> b) & 1;
            if (q != 0) {
                // odd overall parity: a single flip somewhere
                if (s != 0) {
                    int bit = hamming7_error_bit(s);
                    if (bit >= 0) w7 ^= uint8_t(1u << bit);
                }
                if (corrected) *corrected = true;
            }
            // even parity with nonzero syndrome = double error, detect only
            return (w7 >> 3) & 0xF;
        }
    }
    return word & 0xF;
}

namespace {

std::vector<uint8_t> code_bits(std::span<const uint8_t> bits, Coding c) {
    if (c == Coding::raw) return {bits.begin(), bits.end()};
    const uint32_t n = coded_bits_per_nibble(c);
    std::vector<uint8_t> out;
    out.reserve((bits.size() + 3) / 4 * n);
    for (size_t i = 0; i < bits.size(); i += 4) {
        uint8_t nib = 0;
        for (size_t b = 0; b < 4; ++b)
            nib = uint8_t((nib << 1) | (i + b < bits.size() ? (bits[i + b] & 1) : 0));
        uint8_t w = hamming_encode_nibble(nib, c);
        for (int b = int(n) - 1; b >= 0; --b) out.push_back((w >> b) & 1);
    }
    return out;
}

std::vector<uint8_t> uncode_bits(std::span<const uint8_t> coded, Coding c) {
    if (c == Coding::raw) return {coded.begin(), coded.end()};
    const uint32_t n = coded_bits_per_nibble(c);
    std::vector<uint8_t> out;
    out.reserve(coded.size() / n * 4);
    for (size_t i = 0; i + n <= coded.size(); i += n) {
        uint8_t w = 0;
        for (size_t b = 0; b < n; ++b) w = uint8_t((w << 1) | (coded[i + b] & 1));
        uint8_t nib = hamming_decode_nibble(w, c, nullptr);
        for (int b = 3; b >= 0; --b) out.push_back((nib >> b) & 1);
    }
    return out;
}

}  // namespace

std::vector<uint16_t> encode_payload(std::span<const uint8_t> bits, const LoRaParams& p) {
    p.validate();
    auto coded = code_bits(bits, p.coding);
    std::vector<uint16_t> syms;
    syms.reserve((coded.size() + p.sf - 1) / p.sf);
    for (size_t i = 0; i < coded.size(); i += p.sf) {
        uint16_t s = 0;
        for (size_t b = 0; b < p.sf; ++b)
            s = uint16_t((s << 1) | (i + b < coded.size() ? (coded[i + b] & 1) : 0));
        syms.push_back(s);
    }
    return syms;
}

std::vector<uint8_t> decode_payload(std::span<const uint16_t> symbols, const LoRaParams& p) {
    p.validate();
    std::vector<uint8_t> coded;
    coded.reserve(symbols.size() * p.sf);
    for (uint16_t s : symbols)
        for (int b = int(p.sf) - 1; b >= 0; --b) coded.push_back((s >> b) & 1);
    return uncode_bits(coded, p.coding);
}

size_t symbols_for_payload_bits(size_t nbits, const LoRaParams& p) {
    size_t coded = p.coding == Coding::raw
                       ? nbits
                       : (nbits + 3) / 4 * coded_bits_per_nibble(p.coding);
    return (coded + p.sf - 1) / p.sf;
}

// --- modem -----------------------------------------------------------------

std::vector<std::complex<float>> reference_modulate(const LoRaParams& p,
                                                    std::span<const uint16_t> symbols,
                                                    double fs) {
    p.validate();
    const uint32_t os = oversample_of(p, fs);
    const size_t spc = size_t(os) << p.sf;
    std::vector<dsp::cplx> samples;
    samples.reserve(spc * (symbols.size() + p.preamble_len + 4) + spc / 4);
    double ph = 0.0;
    for (uint32_t i = 0; i < p.preamble_len; ++i)
        append_chirp(samples, p, os, 0, false, spc, &ph);
    for (uint16_t s : p.sync_symbols)
        append_chirp(samples, p, os, s, false, spc, &ph);
    append_chirp(samples, p, os, 0, true, spc, &ph);
    append_chirp(samples, p, os, 0, true, spc, &ph);
    append_chirp(samples, p, os, 0, true, size_t(std::llround(spc / 4.0)), &ph);
    for (uint16_t s : symbols) {
        if (s >= p.chips()) throw std::invalid_argument("symbol out of range");
        append_chirp(samples, p, os, s, false, spc, &ph);
    }
    std::vector<std::complex<float>> out;
    out.reserve(samples.size());
    for (const auto& v : samples) out.emplace_back(float(v.real()), float(v.imag()));
    return out;
}

DechirpResult dechirp(std::span<const std::complex<float>> window,
                      const LoRaParams& p, double fs, bool down) {
    p.validate();
    const uint32_t os = oversample_of(p, fs);
    const size_t spc = size_t(os) << p.sf;
    if (window.size() < spc)
        throw std::invalid_argument("dechirp window shorter than one chirp");
    const auto& base = base_chirp(p, os, !down ? false : true);
    const uint32_t n_chips = p.chips();
    // Dechirp, then decimate to one sample per chip before the FFT. A cyclic
    // shift splits the dechirped tone across two aliases of the oversampled
    // spectrum, but the split point is a whole number of chips, so at chip
    // rate both halves collapse onto the same bin with continuous phase.
    std::vector<dsp::cplx> prod(n_chips);
    for (uint32_t m = 0; m < n_chips; ++m) {
        size_t n = size_t(m) * os;
        dsp::cplx w(window[n].real(), window[n].imag());
        prod[m] = w * std::conj(base[n]);
    }
    dsp::fft_inplace(prod);
    DechirpResult r;
    r.spectrum.resize(n_chips);
    for (uint32_t k = 0; k < n_chips; ++k) r.spectrum[k] = std::abs(prod[k]);
    auto it = std::max_element(r.spectrum.begin(), r.spectrum.end());
    r.symbol = uint16_t(it - r.spectrum.begin());
    r.peak_mag = *it;
    if (r.peak_mag <= 0.0) {
        r.dnr_db = kDnrFloorDb;
        return r;
    }
    std::vector<double> rest;
    rest.reserve(n_chips - 1);
    for (uint32_t k = 0; k < n_chips; ++k)
        if (k != r.symbol) rest.push_back(r.spectrum[k]);
    double noise = dsp::median(std::move(rest));
    if (noise <= r.peak_mag * 1e-15)
        r.dnr_db = kDnrCeilDb;
    else
        r.dnr_db = 20.0 * std::log10(r.peak_mag / noise);
    return r;
}

DetectResult detect_packet(std::span<const std::complex<float>> iq,
                           const LoRaParams& p, double fs) {
    p.validate();
    DetectResult res;
    const uint32_t os = oversample_of(p, fs);
    const size_t spc = size_t(os) << p.sf;
    if (iq.size() < spc * 2) return res;

    const size_t nwin = iq.size() / spc;
    const size_t need_run = std::max<size_t>(2, p.preamble_len - 1);
    const double thresh = p.detect_dnr_threshold_db;

    std::vector<WindowRec> recs(nwin);
    for (size_t w = 0; w < nwin; ++w)
        recs[w] = dechirp_at(iq, int64_t(w * spc), p, fs, false, spc);

    // a window offset by a non-integer number of chips scallops between two
    // adjacent bins, so preamble windows only need to agree to within one chip
    auto near_bin = [n_chips = p.chips()](uint16_t a, uint16_t b) {
        int d = std::abs(int(a) - int(b));
        return std::min(d, int(n_chips) - d) <= 1;
    };

    size_t run_start = 0, run_len = 0;
    size_t found_at = nwin;
    for (size_t w = 0; w < nwin; ++w) {
        if (recs[w].dnr >= thresh && (run_len == 0 || near_bin(recs[w].sym, recs[run_start].sym))) {
            if (run_len == 0) run_start = w;
            ++run_len;
            if (run_len >= need_run) {
                found_at = run_start;
                break;
            }
        } else if (recs[w].dnr >= thresh) {
            run_start = w;
            run_len = 1;
        } else {
            run_len = 0;
        }
    }
    if (found_at == nwin) return res;

    // chip-accurate alignment: a window starting tau chips into the repeated
    // preamble up-chirp reads bin tau
    int64_t start = int64_t(found_at * spc) - int64_t(recs[found_at].sym) * os;
    if (start < 0) start += int64_t(spc);

    // walk back to the first preamble chirp
    while (start - int64_t(spc) >= 0) {
        auto r = dechirp_at(iq, start - int64_t(spc), p, fs, false, spc);
        if (r.sym == 0 && r.dnr >= thresh)
            start -= int64_t(spc);
        else
            break;
    }

    // sample-accurate refinement: only windows whose peak lands in bin 0 are
    // aligned candidates (an integer-chip shift of the preamble is a perfect
    // tone in a rotated bin, so raw peak magnitude cannot discriminate).
    // delta 0 goes first and ties keep it.
    std::vector<int64_t> deltas{0};
    for (int64_t d = 1; d <= int64_t(os); ++d) {
        deltas.push_back(-d);
        deltas.push_back(d);
    }
    int64_t best_delta = 0;
    double best_score = -1.0;
    for (int64_t delta : deltas) {
        if (start + delta < 0) continue;
        double score = 0.0;
        for (uint32_t c = 0; c < p.preamble_len; ++c) {
            auto r = dechirp_at(iq, start + delta + int64_t(c * spc), p, fs, false, spc);
            if (r.sym == 0) score += r.peak;
        }
        if (score > best_score) {
            best_score = score;
            best_delta = delta;
        }
    }
    start += best_delta;

    // verify the aligned preamble and advance start to the first chirp that
    // actually verifies (the run anchor can sit one chirp before the packet
    // when the first scanned window only clipped the packet head)
    uint32_t good = 0, consec = 0, best_c0 = 0, run_c0 = 0;
    double dnr_sum = 0.0, run_dnr = 0.0;
    for (uint32_t c = 0; c < p.preamble_len; ++c) {
        auto r = dechirp_at(iq, start + int64_t(c * spc), p, fs, false, spc);
        if (r.sym == 0 && r.dnr >= thresh) {
            if (consec == 0) {
                run_c0 = c;
                run_dnr = 0.0;
            }
            ++consec;
            run_dnr += r.dnr;
            if (consec > good) {
                good = consec;
                best_c0 = run_c0;
                dnr_sum = run_dnr;
            }
        } else {
            consec = 0;
        }
    }
    if (good < need_run) return res;
    start += int64_t(best_c0) * int64_t(spc);

    // locate the SFD: two consecutive windows where the down-chirp wins
    int64_t sfd_start = -1;
    for (uint32_t c = p.preamble_len > 1 ? p.preamble_len - 1 : 0;
         c <= p.preamble_len + 5; ++c) {
        int64_t pos = start + int64_t(c) * int64_t(spc);
        auto up0 = dechirp_at(iq, pos, p, fs, false, spc);
        auto dn0 = dechirp_at(iq, pos, p, fs, true, spc);
        if (dn0.peak > up0.peak * 1.25) {
            auto up1 = dechirp_at(iq, pos + int64_t(spc), p, fs, false, spc);
            auto dn1 = dechirp_at(iq, pos + int64_t(spc), p, fs, true, spc);
            if (dn1.peak > up1.peak * 1.25) {
                sfd_start = pos;
                break;
            }
        }
    }
    if (sfd_start < 0) return res;

    res.found = true;
    res.packet_start = start;
    res.payload_start = sfd_start + int64_t(2 * spc) + int64_t(spc / 4);
    res.preamble_dnr_db = dnr_sum / std::max(1u, good);
    auto s0 = dechirp_at(iq, sfd_start - int64_t(2 * spc), p, fs, false, spc);
    auto s1 = dechirp_at(iq, sfd_start - int64_t(spc), p, fs, false, spc);
    res.sync_observed = {s0.sym, s1.sym};
    return res;
}

double corrupted_symbol_floor_db(std::span<const double> packet_dnrs) {
    if (packet_dnrs.empty()) return 6.0;
    std::vector<double> v(packet_dnrs.begin(), packet_dnrs.end());
    return std::max(dsp::median(std::move(v)) - 10.0, 6.0);
}

DecodeResult demodulate_packet(std::span<const std::complex<float>> iq,
                               const LoRaParams& p, double fs,
                               std::optional<size_t> expected_payload_symbols) {
    DecodeResult out;
    auto det = detect_packet(iq, p, fs);
    if (!det.found) return out;
    const uint32_t os = oversample_of(p, fs);
    const size_t spc = size_t(os) << p.sf;

    out.found = true;
    out.start_offset = det.packet_start;
    out.sync_observed = det.sync_observed;

    if (expected_payload_symbols) {
        out.symbols.reserve(*expected_payload_symbols);
        for (size_t i = 0; i < *expected_payload_symbols; ++i) {
            auto r = dechirp_at(iq, det.payload_start + int64_t(i * spc), p, fs, false, spc);
            out.symbols.push_back(r.sym);
            out.symbol_confidences.push_back(r.dnr);
        }
    } else {
        // auto length: stop after two consecutive DNR-collapsed symbols
        std::vector<double> dnrs;
        size_t collapsed = 0;
        for (size_t i = 0;; ++i) {
            int64_t pos = det.payload_start + int64_t(i * spc);
            if (pos >= int64_t(iq.size())) break;
            auto r = dechirp_at(iq, pos, p, fs, false, spc);
            out.symbols.push_back(r.sym);
            out.symbol_confidences.push_back(r.dnr);
            dnrs.push_back(r.dnr);
            double floor_db = 6.0;
            if (dnrs.size() >= 4) {
                std::vector<double> sofar(dnrs);
                floor_db = std::max(dsp::median(std::move(sofar)) - 10.0, 6.0);
            }
            collapsed = (r.dnr < floor_db) ? collapsed + 1 : 0;
            if (collapsed >= 2) {
                out.symbols.resize(out.symbols.size() - 2);
                out.symbol_confidences.resize(out.symbol_confidences.size() - 2);
                break;
            }
        }
    }

    double floor_db = corrupted_symbol_floor_db(out.symbol_confidences);
    for (size_t i = 0; i < out.symbol_confidences.size(); ++i)
        if (out.symbol_confidences[i] < floor_db)
            out.corrupted_symbol_indices.push_back(uint32_t(i));

    out.payload_bits = decode_payload(out.symbols, p);
    return out;
}

}  // namespace rastercast::lora
