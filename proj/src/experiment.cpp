#include "rastercast/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace rastercast {

namespace {

using ordered_json = nlohmann::ordered_json;

struct SweepPoint {
    uint32_t sf;
    double bw;
    size_t payload_bits;
    std::optional<double> snr_db;
    size_t index;
};

struct TrialResult {
    bool success = false;
    double dnr_sum = 0.0;
    size_t dnr_count = 0;
    uint32_t corrupted = 0;
};

uint32_t resolve_threads(uint32_t requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

bool bits_match(std::span<const uint8_t> decoded, std::span<const uint8_t> sent) {
    if (decoded.size() < sent.size()) return false;
    for (size_t i = 0; i < sent.size(); ++i)
        if ((decoded[i] & 1) != (sent[i] & 1)) return false;
    return true;
}

ordered_json row_to_json(const SweepRow& r) {
    ordered_json j;
    j["sf"] = r.sf;
    j["bw"] = r.bw;
    j["payload_bits"] = r.payload_bits;
    if (r.snr_db)
        j["snr_db"] = *r.snr_db;
    else
        j["snr_db"] = nullptr;
    j["trials"] = r.trials;
    j["successes"] = r.successes;
    j["prr"] = r.prr;
    j["mean_dnr_db"] = r.mean_dnr_db;
    j["frames_per_packet"] = r.frames_per_packet;
    j["goodput_bps"] = r.goodput_bps;
    ordered_json hist;
    for (const auto& [k, v] : r.corrupted_histogram) hist[std::to_string(k)] = v;
    j["corrupted_histogram"] = hist;
    return j;
}

}  // namespace

void ExperimentConfig::normalize() {
    if (sweep_sf.empty()) sweep_sf = {use_stepping ? stepping.sf : lora.sf};
    if (sweep_bw.empty()) sweep_bw = {use_stepping ? stepping.bw : lora.bw};
    if (payload_text)
        sweep_payload_bits = {payload_text->size() * 8};
    else if (sweep_payload_bits.empty())
        sweep_payload_bits = {24};
    if (trials == 0) trials = 1;
    if (noiseless_trials == 0) noiseless_trials = 1;
}

FrameBudget compute_frame_budget(const lora::LoRaParams& p, size_t payload_bits,
                                 const DisplayTiming& t) {
    FrameBudget b;
    b.payload_symbols = lora::symbols_for_payload_bits(payload_bits, p);
    b.packet_pixels = packet_pixel_count(p, b.payload_symbols, t);
    b.pixels_per_frame = t.pixels_per_frame();
    b.frames = (b.packet_pixels + b.pixels_per_frame - 1) / b.pixels_per_frame;
    b.frames_exact = double(b.packet_pixels) / double(b.pixels_per_frame);
    b.gap_to_chirp_ratio = frame_gap_duration_s(t) / p.chirp_duration_s();
    return b;
}

GoodputReport goodput_report(const lora::LoRaParams& p, size_t payload_bits,
                             const DisplayTiming& t, double prr) {
    auto b = compute_frame_budget(p, payload_bits, t);
    GoodputReport g;
    g.payload_bits = payload_bits;
    g.payload_symbols = b.payload_symbols;
    g.coded_bits = p.coding == lora::Coding::raw
                       ? payload_bits
                       : (payload_bits + 3) / 4 * lora::coded_bits_per_nibble(p.coding);
    g.framing_chirps = p.framing_chirps();
    g.frames = b.frames;
    g.frame_period_s = 1.0 / double(t.refresh_rate);
    g.packet_airtime_s = double(b.frames) * g.frame_period_s;
    g.prr = prr;
    g.goodput_bps = g.packet_airtime_s > 0.0
                        ? double(payload_bits) * prr / g.packet_airtime_s
                        : 0.0;
    g.channel_bit_ceiling_bps = double(p.sf) * p.bw / double(p.chips());
    double total_chirps = g.framing_chirps + double(b.payload_symbols);
    g.framing_overhead_fraction = total_chirps > 0.0 ? g.framing_chirps / total_chirps : 0.0;
    size_t symbol_bits = b.payload_symbols * p.sf;
    g.coding_overhead_fraction =
        symbol_bits > 0 ? 1.0 - double(payload_bits) / double(symbol_bits) : 0.0;
    double packet_s = double(b.packet_pixels) * pixel_duration_s(t);
    g.raster_overhead_fraction =
        g.packet_airtime_s > 0.0 ? 1.0 - packet_s / g.packet_airtime_s : 0.0;
    return g;
}

std::string GoodputReport::to_json() const {
    ordered_json j;
    j["payload_bits"] = payload_bits;
    j["payload_symbols"] = payload_symbols;
    j["coded_bits"] = coded_bits;
    j["framing_chirps"] = framing_chirps;
    j["frames"] = frames;
    j["frame_period_s"] = frame_period_s;
    j["packet_airtime_s"] = packet_airtime_s;
    j["prr"] = prr;
    j["goodput_bps"] = goodput_bps;
    j["channel_bit_ceiling_bps"] = channel_bit_ceiling_bps;
    j["framing_overhead_fraction"] = framing_overhead_fraction;
    j["coding_overhead_fraction"] = coding_overhead_fraction;
    j["raster_overhead_fraction"] = raster_overhead_fraction;
    return j.dump(2) + "\n";
}

std::vector<uint8_t> experiment_payload_bits(uint64_t seed, size_t point_index,
                                             size_t nbits) {
    std::vector<uint8_t> bits(nbits);
    uint64_t s = dsp::derive_seed(seed, point_index, 0xDA7Aull);
    uint64_t word = 0;
    for (size_t i = 0; i < nbits; ++i) {
        if (i % 64 == 0) word = dsp::splitmix64(s);
        bits[i] = uint8_t((word >> (i % 64)) & 1);
    }
    return bits;
}

std::vector<GapWindow> predict_frame_gap_windows(const lora::LoRaParams& p,
                                                 size_t payload_symbols,
                                                 const DisplayTiming& t) {
    std::vector<GapWindow> out;
    if (payload_symbols == 0) return out;
    const uint64_t np = chirp_pixel_count(p, t);
    const uint64_t pstart = payload_start_pixel(p, t);
    const uint64_t pend = pstart + payload_symbols * np;
    const uint64_t ppf = t.pixels_per_frame();
    const uint64_t active_px = uint64_t(t.active_height) * t.total_width;
    const uint64_t frames = (pend + ppf - 1) / ppf;
    for (uint64_t f = 0; f < frames; ++f) {
        const uint64_t g0 = f * ppf + active_px;
        const uint64_t g1 = (f + 1) * ppf;
        if (g1 <= pstart || g0 >= pend) continue;
        const uint64_t o0 = std::max(g0, pstart);
        const uint64_t o1 = std::min(g1, pend);
        if (o0 >= o1) continue;
        GapWindow w;
        w.first_symbol = size_t((o0 - pstart) / np);
        w.last_symbol = size_t((o1 - 1 - pstart) / np);
        uint64_t fs0 = pstart + uint64_t(w.first_symbol) * np;
        uint64_t ls0 = pstart + uint64_t(w.last_symbol) * np;
        w.first_overlap = double(std::min(o1, fs0 + np) - o0) / double(np);
        w.last_overlap = double(o1 - std::max(o0, ls0)) / double(np);
        out.push_back(w);
    }
    return out;
}

ExperimentReport run_prr_experiment(const ExperimentConfig& raw_cfg) {
    ExperimentConfig cfg = raw_cfg;
    cfg.normalize();
    cfg.timing.validate();
    cfg.channel.validate();
    if (!cfg.use_stepping) cfg.lora.validate();

    std::vector<SweepPoint> points;
    const bool noiseless_axis = cfg.sweep_snr_db.empty();
    size_t idx = 0;
    for (uint32_t sf : cfg.sweep_sf)
        for (double bw : cfg.sweep_bw)
            for (size_t bits : cfg.sweep_payload_bits) {
                if (noiseless_axis) {
                    points.push_back({sf, bw, bits, std::nullopt, idx++});
                } else {
                    for (double snr : cfg.sweep_snr_db)
                        points.push_back({sf, bw, bits, snr, idx++});
                }
            }

    ExperimentReport report;
    report.seed = cfg.seed;
    report.rows.reserve(points.size());
    const uint32_t nthreads = resolve_threads(cfg.threads);

    for (const auto& pt : points) {
        // payload for this point
        std::vector<uint8_t> bits =
            cfg.payload_text ? lora::text_to_bits(*cfg.payload_text)
                             : experiment_payload_bits(cfg.seed, pt.index, pt.payload_bits);

        ChannelConfig clean = cfg.channel;
        clean.snr_db.reset();
        clean.gain_db = 0.0;
        clean.timing_offset = 0;

        IQBuffer clean_iq;
        size_t nsym = 0;
        uint64_t frames_per_packet = 0;
        double goodput_scale = 0.0;  // bits / airtime, to be multiplied by prr

        lora::LoRaParams lp = cfg.lora;
        SteppingParams sp = cfg.stepping;

        if (cfg.use_stepping) {
            sp.sf = pt.sf;
            sp.bw = pt.bw;
            if (sp.lines_per_chirp() > cfg.timing.active_height)
                throw std::invalid_argument("stepping chirp does not fit the active height");
            sp.guard_lines = cfg.timing.active_height - sp.lines_per_chirp();
            sp.validate(cfg.timing);
            lora::LoRaParams codec;
            codec.sf = sp.sf;
            codec.bw = sp.bw;
            codec.center_freq = sp.center_freq;
            codec.coding = sp.coding;
            auto syms = lora::encode_payload(bits, codec);
            nsym = syms.size();
            std::vector<uint16_t> all(sp.preamble_len, 0);
            all.insert(all.end(), syms.begin(), syms.end());
            clean.center_freq = sp.center_freq;
            auto src = make_stepping_source(sp, all, cfg.timing);
            clean_iq = pixels_to_iq(*src, cfg.timing, cfg.cable, clean);
            frames_per_packet = all.size();
            goodput_scale = double(bits.size()) /
                            (double(frames_per_packet) / double(cfg.timing.refresh_rate));
        } else {
            lp.sf = pt.sf;
            lp.bw = pt.bw;
            lp.validate();
            auto syms = lora::encode_payload(bits, lp);
            nsym = syms.size();
            clean.center_freq = lp.center_freq;
            auto src = make_packet_source(lp, syms, cfg.timing, PixelMode::binary);
            clean_iq = pixels_to_iq(*src, cfg.timing, cfg.cable, clean);
            auto budget = compute_frame_budget(lp, bits.size(), cfg.timing);
            frames_per_packet = budget.frames;
            goodput_scale = double(bits.size()) /
                            (double(budget.frames) / double(cfg.timing.refresh_rate));
        }

        const uint32_t n_trials = pt.snr_db ? cfg.trials : cfg.noiseless_trials;
        std::vector<TrialResult> trials(n_trials);
        std::atomic<uint32_t> cursor{0};

        auto run_trial = [&](uint32_t tr) {
            TrialResult res;
            ChannelConfig tc = cfg.channel;
            tc.center_freq = clean.center_freq;
            tc.snr_db = pt.snr_db;
            tc.rng_seed = dsp::derive_seed(cfg.seed, pt.index, tr);
            const bool identity =
                !tc.snr_db && tc.gain_db == 0.0 && tc.timing_offset == 0;
            const IQBuffer* buf = &clean_iq;
            IQBuffer noisy;
            if (!identity) {
                noisy = apply_channel(clean_iq, tc);
                buf = &noisy;
            }
            if (cfg.use_stepping) {
                auto dec = stepping_demodulate(buf->samples, sp, cfg.timing,
                                               buf->sample_rate, nsym);
                res.success = dec.found && bits_match(dec.payload_bits, bits);
                for (double d : dec.symbol_confidences) res.dnr_sum += d;
                res.dnr_count = dec.symbol_confidences.size();
                uint32_t bad = 0;
                if (dec.found) {
                    double floor_db = lora::corrupted_symbol_floor_db(dec.symbol_confidences);
                    for (double d : dec.symbol_confidences)
                        if (d < floor_db) ++bad;
                } else {
                    bad = uint32_t(nsym);
                }
                res.corrupted = bad;
            } else {
                auto dec = lora::demodulate_packet(buf->samples, lp, buf->sample_rate, nsym);
                res.success = dec.found && bits_match(dec.payload_bits, bits);
                for (double d : dec.symbol_confidences) res.dnr_sum += d;
                res.dnr_count = dec.symbol_confidences.size();
                res.corrupted = dec.found ? uint32_t(dec.corrupted_symbol_indices.size())
                                          : uint32_t(nsym);
            }
            trials[tr] = res;
        };

        const uint32_t workers = std::min(nthreads, n_trials);
        if (workers <= 1) {
            for (uint32_t tr = 0; tr < n_trials; ++tr) run_trial(tr);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (uint32_t w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (;;) {
                        uint32_t tr = cursor.fetch_add(1);
                        if (tr >= n_trials) break;
                        run_trial(tr);
                    }
                });
            for (auto& th : pool) th.join();
        }

        SweepRow row;
        row.sf = pt.sf;
        row.bw = pt.bw;
        row.payload_bits = pt.payload_bits;
        row.snr_db = pt.snr_db;
        row.trials = n_trials;
        double dnr_sum = 0.0;
        size_t dnr_count = 0;
        for (const auto& tr : trials) {
            if (tr.success) ++row.successes;
            dnr_sum += tr.dnr_sum;
            dnr_count += tr.dnr_count;
            ++row.corrupted_histogram[tr.corrupted];
        }
        row.prr = n_trials > 0 ? double(row.successes) / double(n_trials) : 0.0;
        row.mean_dnr_db = dnr_count > 0 ? dnr_sum / double(dnr_count) : 0.0;
        row.frames_per_packet = frames_per_packet;
        row.goodput_bps = goodput_scale * row.prr;
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string ExperimentReport::to_jsonl() const {
    std::string out;
    for (const auto& r : rows) {
        out += row_to_json(r).dump();
        out += "\n";
    }
    return out;
}

std::string ExperimentReport::to_table() const {
    std::string out =
        "   sf        bw  payload    snr_db  trials      prr   mean_dnr  frames     goodput\n";
    char line[160];
    for (const auto& r : rows) {
        char snr[16];
        if (r.snr_db)
            std::snprintf(snr, sizeof(snr), "%8.1f", *r.snr_db);
        else
            std::snprintf(snr, sizeof(snr), "   clean");
        std::snprintf(line, sizeof(line),
                      "%5u %9.0f %8zu  %s %7u %8.3f %10.2f %7llu %11.1f\n",
                      r.sf, r.bw, r.payload_bits, snr, r.trials, r.prr, r.mean_dnr_db,
                      static_cast<unsigned long long>(r.frames_per_packet), r.goodput_bps);
        out += line;
    }
    return out;
}

}  // namespace rastercast
