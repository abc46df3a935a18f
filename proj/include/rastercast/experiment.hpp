#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rastercast/channel_sim.hpp"
#include "rastercast/display_timing.hpp"
#include "rastercast/lora_phy.hpp"
#include "rastercast/sdr_variant.hpp"

namespace rastercast {

struct ExperimentConfig {
    DisplayTiming timing = timing_preset("1080p60");
    CableProfile cable = CableProfile::vga();
    ChannelConfig channel;
    lora::LoRaParams lora;
    SteppingParams stepping;
    bool use_stepping = false;

    // sweep axes; empty = single point from the base params
    std::vector<uint32_t> sweep_sf;
    std::vector<double> sweep_bw;
    std::vector<size_t> sweep_payload_bits;
    std::vector<double> sweep_snr_db;       // empty = noiseless

    std::optional<std::string> payload_text; // overrides payload bit sweeps
    uint32_t trials = 200;
    uint32_t noiseless_trials = 1;
    uint64_t seed = 1;
    uint32_t threads = 0;                    // 0 = hardware concurrency

    void normalize();  // fill sweep axes from base params where empty
};

struct SweepRow {
    uint32_t sf = 0;
    double bw = 0.0;
    size_t payload_bits = 0;
    std::optional<double> snr_db;
    uint32_t trials = 0;
    uint32_t successes = 0;
    double prr = 0.0;
    double mean_dnr_db = 0.0;
    uint64_t frames_per_packet = 0;
    double goodput_bps = 0.0;
    std::map<uint32_t, uint32_t> corrupted_histogram;  // #corrupted -> trials
};

struct ExperimentReport {
    std::vector<SweepRow> rows;
    uint64_t seed = 0;
    std::string to_jsonl() const;   // one record per row, deterministic bytes
    std::string to_table() const;   // human-readable summary
};

struct FrameBudget {
    uint64_t packet_pixels = 0;
    uint64_t pixels_per_frame = 0;
    uint64_t frames = 0;                 // ceil
    double frames_exact = 0.0;
    double gap_to_chirp_ratio = 0.0;     // frame gap duration / chirp duration
    size_t payload_symbols = 0;
};

FrameBudget compute_frame_budget(const lora::LoRaParams& p, size_t payload_bits,
                                 const DisplayTiming& t);

struct GoodputReport {
    size_t payload_bits = 0;
    size_t payload_symbols = 0;
    size_t coded_bits = 0;
    double framing_chirps = 0.0;
    uint64_t frames = 0;
    double frame_period_s = 0.0;
    double packet_airtime_s = 0.0;       // frames * frame period
    double prr = 1.0;
    double goodput_bps = 0.0;            // payload_bits * prr / airtime
    double channel_bit_ceiling_bps = 0.0; // sf * bw / 2^sf
    double framing_overhead_fraction = 0.0;
    double coding_overhead_fraction = 0.0;
    double raster_overhead_fraction = 0.0; // airtime lost to partial frames+gaps
    std::string to_json() const;
};

GoodputReport goodput_report(const lora::LoRaParams& p, size_t payload_bits,
                             const DisplayTiming& t, double prr = 1.0);

// Deterministic pseudo-random payload for sweep points.
std::vector<uint8_t> experiment_payload_bits(uint64_t seed, size_t point_index,
                                             size_t nbits);

// Synthesizes each sweep point once, then runs seeded noise trials against
// the clean extraction; trial t of point i draws from
// derive_seed(seed, i, t). Rows come out in axis order regardless of the
// thread count.
ExperimentReport run_prr_experiment(const ExperimentConfig& cfg);

// Analytic prediction of which payload symbols a frame gap destroys.
struct GapWindow {
    size_t first_symbol = 0;
    size_t last_symbol = 0;       // inclusive
    double first_overlap = 0.0;   // fraction of first symbol inside the gap
    double last_overlap = 0.0;
};
std::vector<GapWindow> predict_frame_gap_windows(const lora::LoRaParams& p,
                                                 size_t payload_symbols,
                                                 const DisplayTiming& t);

}  // namespace rastercast
