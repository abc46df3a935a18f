#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rastercast/channel_sim.hpp"
#include "rastercast/display_timing.hpp"
#include "rastercast/experiment.hpp"
#include "rastercast/lora_phy.hpp"
#include "rastercast/sdr_variant.hpp"
#include "rastercast/waveform_synth.hpp"

namespace py = pybind11;
using namespace rastercast;

namespace {

lora::LoRaParams make_lora(uint32_t sf, double bw, double center_freq,
                           const std::string& coding) {
    lora::LoRaParams p;
    p.sf = sf;
    p.bw = bw;
    p.center_freq = center_freq;
    p.coding = lora::coding_from_string(coding);
    return p;
}

SteppingParams make_stepping(uint32_t sf, double bw, double center_freq,
                             const std::string& coding, const DisplayTiming& t) {
    SteppingParams sp;
    sp.sf = sf;
    sp.bw = bw;
    sp.center_freq = center_freq;
    sp.coding = lora::coding_from_string(coding);
    if (sp.lines_per_chirp() > t.active_height)
        throw std::invalid_argument("stepping chirp does not fit the active height");
    sp.guard_lines = t.active_height - sp.lines_per_chirp();
    return sp;
}

ChannelConfig make_channel_cfg(double center_freq, double rx_rate, double rx_bw,
                               std::optional<double> snr_db, bool gaps, uint64_t seed) {
    ChannelConfig c;
    c.center_freq = center_freq;
    c.rx_sample_rate = rx_rate;
    c.rx_bandwidth = rx_bw;
    c.snr_db = snr_db;
    c.gate_line_gaps = gaps;
    c.gate_frame_gaps = gaps;
    c.rng_seed = seed;
    return c;
}

py::array_t<std::complex<float>> to_array(const std::vector<std::complex<float>>& v) {
    return py::array_t<std::complex<float>>({py::ssize_t(v.size())}, v.data());
}

py::dict timing_info(const std::string& spec) {
    auto t = parse_timing(spec);
    py::dict d;
    d["active_width"] = t.active_width;
    d["active_height"] = t.active_height;
    d["total_width"] = t.total_width;
    d["total_height"] = t.total_height;
    d["refresh_rate"] = t.refresh_rate;
    d["pixel_clock_hz"] = pixel_clock_hz(t);
    d["pixels_per_frame"] = t.pixels_per_frame();
    return d;
}

py::array_t<float> attack_pixels(const std::string& text, uint32_t sf, double bw,
                                 double center_freq, const std::string& coding,
                                 const std::string& timing) {
    auto t = parse_timing(timing);
    auto p = make_lora(sf, bw, center_freq, coding);
    auto syms = lora::encode_payload(lora::text_to_bits(text), p);
    auto stream = synth_packet_stream(p, syms, t);
    return py::array_t<float>({py::ssize_t(stream.values.size())}, stream.values.data());
}

py::list attack_frames(const std::string& text, uint32_t sf, double bw, double center_freq,
                       const std::string& coding, const std::string& timing) {
    auto t = parse_timing(timing);
    auto p = make_lora(sf, bw, center_freq, coding);
    auto syms = lora::encode_payload(lora::text_to_bits(text), p);
    auto src = make_packet_source(p, syms, t, PixelMode::binary);
    auto stream = materialize(*src, t, PixelMode::binary);
    auto video = stream_to_frames(stream);
    py::list frames;
    for (const auto& f : video.frames) {
        py::array_t<uint8_t> arr({py::ssize_t(t.active_height), py::ssize_t(t.active_width)});
        std::copy(f.begin(), f.end(), arr.mutable_data());
        frames.append(arr);
    }
    return frames;
}

py::dict capture(const std::string& text, uint32_t sf, double bw, double center_freq,
                 const std::string& coding, const std::string& cable,
                 const std::string& timing, double rx_rate, double rx_bw,
                 std::optional<double> snr_db, bool gaps, uint64_t seed, bool stepping) {
    auto t = parse_timing(timing);
    auto cab = cable_from_string(cable);
    auto bits = lora::text_to_bits(text);
    auto cc = make_channel_cfg(center_freq, rx_rate, rx_bw, std::nullopt, gaps, seed);

    IQBuffer iq;
    size_t nsym = 0;
    if (stepping) {
        auto sp = make_stepping(sf, bw, center_freq, coding, t);
        lora::LoRaParams codec;
        codec.sf = sp.sf;
        codec.bw = sp.bw;
        codec.center_freq = sp.center_freq;
        codec.coding = sp.coding;
        auto syms = lora::encode_payload(bits, codec);
        nsym = syms.size();
        std::vector<uint16_t> all(sp.preamble_len, 0);
        all.insert(all.end(), syms.begin(), syms.end());
        auto src = make_stepping_source(sp, all, t);
        iq = pixels_to_iq(*src, t, cab, cc);
    } else {
        auto p = make_lora(sf, bw, center_freq, coding);
        auto syms = lora::encode_payload(bits, p);
        nsym = syms.size();
        auto src = make_packet_source(p, syms, t, PixelMode::binary);
        iq = pixels_to_iq(*src, t, cab, cc);
    }
    if (snr_db) {
        cc.snr_db = snr_db;
        iq = apply_channel(iq, cc);
    }

    py::dict d;
    d["iq"] = to_array(iq.samples);
    d["sample_rate"] = iq.sample_rate;
    d["center_freq"] = iq.center_freq;
    d["payload_symbols"] = nsym;
    return d;
}

py::dict demodulate(py::array_t<std::complex<float>, py::array::c_style | py::array::forcecast>
                        iq,
                    uint32_t sf, double bw, double fs, const std::string& coding,
                    std::optional<size_t> expected_symbols, bool stepping,
                    double center_freq, const std::string& timing) {
    std::span<const std::complex<float>> samples(iq.data(), size_t(iq.size()));
    py::dict d;
    if (stepping) {
        auto t = parse_timing(timing);
        auto sp = make_stepping(sf, bw, center_freq, coding, t);
        auto dec = stepping_demodulate(samples, sp, t, fs, expected_symbols);
        d["found"] = dec.found;
        d["start_offset"] = dec.start_offset;
        d["symbols"] = dec.symbols;
        d["confidences_db"] = dec.symbol_confidences;
        d["bits"] = dec.payload_bits;
        d["text"] = dec.found ? lora::bits_to_text(dec.payload_bits) : std::string();
    } else {
        auto p = make_lora(sf, bw, center_freq, coding);
        auto dec = lora::demodulate_packet(samples, p, fs, expected_symbols);
        d["found"] = dec.found;
        d["start_offset"] = dec.start_offset;
        d["symbols"] = dec.symbols;
        d["confidences_db"] = dec.symbol_confidences;
        d["corrupted_symbols"] = dec.corrupted_symbol_indices;
        d["bits"] = dec.payload_bits;
        d["text"] = dec.found ? lora::bits_to_text(dec.payload_bits) : std::string();
    }
    return d;
}

py::dict frame_budget(uint32_t sf, double bw, const std::string& coding, size_t payload_bits,
                      const std::string& timing) {
    auto t = parse_timing(timing);
    auto b = compute_frame_budget(make_lora(sf, bw, 433e6, coding), payload_bits, t);
    py::dict d;
    d["payload_symbols"] = b.payload_symbols;
    d["packet_pixels"] = b.packet_pixels;
    d["pixels_per_frame"] = b.pixels_per_frame;
    d["frames"] = b.frames;
    d["frames_exact"] = b.frames_exact;
    d["gap_to_chirp_ratio"] = b.gap_to_chirp_ratio;
    return d;
}

py::dict goodput(uint32_t sf, double bw, const std::string& coding, size_t payload_bits,
                 const std::string& timing, double prr) {
    auto t = parse_timing(timing);
    auto g = goodput_report(make_lora(sf, bw, 433e6, coding), payload_bits, t, prr);
    py::dict d;
    d["payload_bits"] = g.payload_bits;
    d["payload_symbols"] = g.payload_symbols;
    d["coded_bits"] = g.coded_bits;
    d["framing_chirps"] = g.framing_chirps;
    d["frames"] = g.frames;
    d["frame_period_s"] = g.frame_period_s;
    d["packet_airtime_s"] = g.packet_airtime_s;
    d["prr"] = g.prr;
    d["goodput_bps"] = g.goodput_bps;
    d["channel_bit_ceiling_bps"] = g.channel_bit_ceiling_bps;
    d["framing_overhead_fraction"] = g.framing_overhead_fraction;
    d["coding_overhead_fraction"] = g.coding_overhead_fraction;
    d["raster_overhead_fraction"] = g.raster_overhead_fraction;
    return d;
}

std::string prr_sweep(std::vector<uint32_t> sf, std::vector<double> bw,
                      std::vector<size_t> payload_bits, std::vector<double> snr_db,
                      uint32_t trials, uint64_t seed, uint32_t threads, bool stepping,
                      std::optional<std::string> text, const std::string& coding, bool gaps,
                      const std::string& cable, const std::string& timing, double rx_rate,
                      double rx_bw) {
    ExperimentConfig cfg;
    cfg.timing = parse_timing(timing);
    cfg.cable = cable_from_string(cable);
    cfg.use_stepping = stepping;
    cfg.lora.coding = lora::coding_from_string(coding);
    cfg.stepping.coding = cfg.lora.coding;
    cfg.channel = make_channel_cfg(cfg.lora.center_freq, rx_rate, rx_bw, std::nullopt, gaps,
                                   0);
    cfg.sweep_sf = std::move(sf);
    cfg.sweep_bw = std::move(bw);
    cfg.sweep_payload_bits = std::move(payload_bits);
    cfg.sweep_snr_db = std::move(snr_db);
    cfg.payload_text = std::move(text);
    if (trials > 0) cfg.trials = trials;
    cfg.seed = seed;
    cfg.threads = threads;
    auto report = run_prr_experiment(cfg);
    return report.to_jsonl();
}

}  // namespace

PYBIND11_MODULE(_rastercast, m) {
    m.doc() = "raster display emission laboratory";
    m.attr("__version__") = "0.1.0";

    m.def("pixel_clock_hz", [](const std::string& spec) {
        return pixel_clock_hz(parse_timing(spec));
    }, py::arg("timing") = "1080p60");
    m.def("timing_info", &timing_info, py::arg("timing") = "1080p60");
    m.def("chirp_pixels", [](uint32_t sf, double bw, const std::string& timing) {
        return chirp_pixel_count(make_lora(sf, bw, 433e6, "raw"), parse_timing(timing));
    }, py::arg("sf"), py::arg("bw"), py::arg("timing") = "1080p60");

    m.def("attack_pixels", &attack_pixels, py::arg("text"), py::arg("sf") = 6,
          py::arg("bw") = 500e3, py::arg("center_freq") = 433e6,
          py::arg("coding") = "hamming47", py::arg("timing") = "1080p60");
    m.def("attack_frames", &attack_frames, py::arg("text"), py::arg("sf") = 6,
          py::arg("bw") = 500e3, py::arg("center_freq") = 433e6,
          py::arg("coding") = "hamming47", py::arg("timing") = "1080p60");

    m.def("capture", &capture, py::arg("text"), py::arg("sf") = 6, py::arg("bw") = 500e3,
          py::arg("center_freq") = 433e6, py::arg("coding") = "hamming47",
          py::arg("cable") = "vga", py::arg("timing") = "1080p60",
          py::arg("rx_rate") = 1e6, py::arg("rx_bw") = 500e3,
          py::arg("snr_db") = std::nullopt, py::arg("gaps") = true, py::arg("seed") = 0,
          py::arg("stepping") = false);

    m.def("demodulate", &demodulate, py::arg("iq"), py::arg("sf") = 6, py::arg("bw") = 500e3,
          py::arg("fs") = 1e6, py::arg("coding") = "hamming47",
          py::arg("expected_symbols") = std::nullopt, py::arg("stepping") = false,
          py::arg("center_freq") = 433e6, py::arg("timing") = "1080p60");

    m.def("frame_budget", &frame_budget, py::arg("sf"), py::arg("bw"), py::arg("coding"),
          py::arg("payload_bits"), py::arg("timing") = "1080p60");
    m.def("goodput", &goodput, py::arg("sf"), py::arg("bw"), py::arg("coding"),
          py::arg("payload_bits"), py::arg("timing") = "1080p60", py::arg("prr") = 1.0);

    m.def("prr_sweep", &prr_sweep, py::arg("sf") = std::vector<uint32_t>{},
          py::arg("bw") = std::vector<double>{},
          py::arg("payload_bits") = std::vector<size_t>{},
          py::arg("snr_db") = std::vector<double>{}, py::arg("trials") = 0,
          py::arg("seed") = 1, py::arg("threads") = 0, py::arg("stepping") = false,
          py::arg("text") = std::nullopt, py::arg("coding") = "raw", py::arg("gaps") = true,
          py::arg("cable") = "vga", py::arg("timing") = "1080p60", py::arg("rx_rate") = 1e6,
          py::arg("rx_bw") = 500e3);
}
