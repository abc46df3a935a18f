// Command line front end: synthesize attack images/videos, run the cable
// and channel simulation, decode captures, and sweep experiments.

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rastercast/channel_sim.hpp"
#include "rastercast/display_timing.hpp"
#include "rastercast/dsp.hpp"
#include "rastercast/experiment.hpp"
#include "rastercast/io_util.hpp"
#include "rastercast/lora_phy.hpp"
#include "rastercast/sdr_variant.hpp"
#include "rastercast/waveform_synth.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace rastercast;

namespace {

// ---- config file ----------------------------------------------------------

struct Settings {
    DisplayTiming timing = timing_preset("1080p60");
    CableProfile cable = CableProfile::vga();
    lora::LoRaParams lora;
    SteppingParams stepping;
    ChannelConfig channel;
    ExperimentConfig experiment;
    uint64_t seed = 1;
    fs::path out = ".";
    bool channel_freq_from_config = false;
};

const std::string* find(const IniData& ini, const std::string& sec, const std::string& key) {
    auto s = ini.find(sec);
    if (s == ini.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    return &k->second;
}

void load_d(const IniData& ini, const std::string& sec, const std::string& key, double& out) {
    if (const auto* v = find(ini, sec, key)) out = std::stod(*v);
}

void load_u32(const IniData& ini, const std::string& sec, const std::string& key,
              uint32_t& out) {
    if (const auto* v = find(ini, sec, key)) out = uint32_t(std::stoul(*v));
}

void load_u64(const IniData& ini, const std::string& sec, const std::string& key,
              uint64_t& out) {
    if (const auto* v = find(ini, sec, key)) out = std::stoull(*v);
}

void load_i64(const IniData& ini, const std::string& sec, const std::string& key,
              int64_t& out) {
    if (const auto* v = find(ini, sec, key)) out = std::stoll(*v);
}

void load_b(const IniData& ini, const std::string& sec, const std::string& key, bool& out) {
    if (const auto* v = find(ini, sec, key))
        out = (*v == "1" || *v == "true" || *v == "yes" || *v == "on");
}

void load_s(const IniData& ini, const std::string& sec, const std::string& key,
            std::string& out) {
    if (const auto* v = find(ini, sec, key)) out = *v;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void apply_config(Settings& s, const fs::path& path) {
    auto ini = load_ini(path);

    std::string tspec;
    load_s(ini, "timing", "mode", tspec);
    if (!tspec.empty()) s.timing = parse_timing(tspec);

    std::string cname;
    load_s(ini, "cable", "profile", cname);
    if (!cname.empty()) s.cable = cable_from_string(cname);
    load_d(ini, "cable", "black_level_v", s.cable.black_level_v);
    load_d(ini, "cable", "white_level_v", s.cable.white_level_v);
    load_b(ini, "cable", "harmonic_rolloff", s.cable.harmonic_rolloff);

    load_u32(ini, "lora", "sf", s.lora.sf);
    load_d(ini, "lora", "bw", s.lora.bw);
    load_d(ini, "lora", "center_freq", s.lora.center_freq);
    load_u32(ini, "lora", "preamble_len", s.lora.preamble_len);
    if (const auto* v = find(ini, "lora", "sync0"))
        s.lora.sync_symbols[0] = uint16_t(std::stoul(*v));
    if (const auto* v = find(ini, "lora", "sync1"))
        s.lora.sync_symbols[1] = uint16_t(std::stoul(*v));
    if (const auto* v = find(ini, "lora", "coding")) s.lora.coding = lora::coding_from_string(*v);
    load_d(ini, "lora", "detect_dnr_threshold_db", s.lora.detect_dnr_threshold_db);

    load_u32(ini, "stepping", "sf", s.stepping.sf);
    load_d(ini, "stepping", "bw", s.stepping.bw);
    load_d(ini, "stepping", "center_freq", s.stepping.center_freq);
    load_u32(ini, "stepping", "guard_lines", s.stepping.guard_lines);
    load_u32(ini, "stepping", "preamble_len", s.stepping.preamble_len);
    if (const auto* v = find(ini, "stepping", "coding"))
        s.stepping.coding = lora::coding_from_string(*v);

    if (find(ini, "channel", "center_freq")) s.channel_freq_from_config = true;
    load_d(ini, "channel", "center_freq", s.channel.center_freq);
    load_d(ini, "channel", "rx_sample_rate", s.channel.rx_sample_rate);
    load_d(ini, "channel", "rx_bandwidth", s.channel.rx_bandwidth);
    if (const auto* v = find(ini, "channel", "snr_db")) s.channel.snr_db = std::stod(*v);
    load_d(ini, "channel", "gain_db", s.channel.gain_db);
    load_b(ini, "channel", "gate_line_gaps", s.channel.gate_line_gaps);
    load_b(ini, "channel", "gate_frame_gaps", s.channel.gate_frame_gaps);
    load_i64(ini, "channel", "timing_offset", s.channel.timing_offset);
    load_u64(ini, "channel", "rng_seed", s.channel.rng_seed);
    load_d(ini, "channel", "sync_spur_amplitude", s.channel.sync_spur_amplitude);
    if (const auto* v = find(ini, "channel", "gain_table")) {
        for (const auto& pair : split_list(*v)) {
            auto colon = pair.find(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("gain_table entries must be freq:gain_db");
            s.channel.gain_table.push_back(
                {std::stod(pair.substr(0, colon)), std::stod(pair.substr(colon + 1))});
        }
    }

    if (const auto* v = find(ini, "experiment", "sweep_sf"))
        for (const auto& e : split_list(*v))
            s.experiment.sweep_sf.push_back(uint32_t(std::stoul(e)));
    if (const auto* v = find(ini, "experiment", "sweep_bw"))
        for (const auto& e : split_list(*v)) s.experiment.sweep_bw.push_back(std::stod(e));
    if (const auto* v = find(ini, "experiment", "sweep_payload_bits"))
        for (const auto& e : split_list(*v))
            s.experiment.sweep_payload_bits.push_back(std::stoull(e));
    if (const auto* v = find(ini, "experiment", "sweep_snr_db"))
        for (const auto& e : split_list(*v)) s.experiment.sweep_snr_db.push_back(std::stod(e));
    if (const auto* v = find(ini, "experiment", "payload_text")) s.experiment.payload_text = *v;
    load_u32(ini, "experiment", "trials", s.experiment.trials);
    load_u32(ini, "experiment", "noiseless_trials", s.experiment.noiseless_trials);
    load_u64(ini, "experiment", "seed", s.experiment.seed);
    load_u32(ini, "experiment", "threads", s.experiment.threads);
    load_b(ini, "experiment", "use_stepping", s.experiment.use_stepping);
}

// ---- shared payload / packet helpers ---------------------------------------

struct PayloadArgs {
    std::string text;
    uint64_t random_bits = 0;
};

std::vector<uint8_t> resolve_payload(const PayloadArgs& pa, uint64_t seed) {
    if (!pa.text.empty()) return lora::text_to_bits(pa.text);
    uint64_t nbits = pa.random_bits > 0 ? pa.random_bits : 24;
    return experiment_payload_bits(seed, 0, size_t(nbits));
}

std::unique_ptr<PixelSource> packet_source(const Settings& s, std::span<const uint8_t> bits,
                                           bool stepping, size_t& nsym_out) {
    if (stepping) {
        lora::LoRaParams codec;
        codec.sf = s.stepping.sf;
        codec.bw = s.stepping.bw;
        codec.center_freq = s.stepping.center_freq;
        codec.coding = s.stepping.coding;
        auto syms = lora::encode_payload(bits, codec);
        nsym_out = syms.size();
        std::vector<uint16_t> all(s.stepping.preamble_len, 0);
        all.insert(all.end(), syms.begin(), syms.end());
        return make_stepping_source(s.stepping, all, s.timing);
    }
    auto syms = lora::encode_payload(bits, s.lora);
    nsym_out = syms.size();
    return make_packet_source(s.lora, syms, s.timing, PixelMode::binary);
}

double carrier_freq(const Settings& s, bool stepping) {
    return stepping ? s.stepping.center_freq : s.lora.center_freq;
}

ChannelConfig tuned_channel(const Settings& s, bool stepping) {
    ChannelConfig c = s.channel;
    if (!s.channel_freq_from_config) c.center_freq = carrier_freq(s, stepping);
    if (c.rng_seed == 0) c.rng_seed = s.seed;
    return c;
}

// ---- subcommand bodies ------------------------------------------------------

int cmd_gen_image(const Settings& s, double freq, uint64_t pixels, const std::string& mode,
                  const std::string& name) {
    ToneSchedule sched{{freq, pixels > 0 ? pixels : s.timing.pixels_per_frame()}};
    PixelMode pm = mode == "grayscale" ? PixelMode::grayscale : PixelMode::binary;
    auto stream = synth_tone_stream(sched, s.timing, pm);
    auto video = stream_to_frames(stream);

    fs::create_directories(s.out);
    auto base = s.out / name;
    for (size_t i = 0; i < video.frames.size(); ++i) {
        auto p = video.frames.size() == 1
                     ? fs::path(base.string() + ".pgm")
                     : fs::path(base.string() + "_" + std::to_string(i) + ".pgm");
        write_pgm(p, video.frames[i], s.timing.active_width, s.timing.active_height);
        std::printf("wrote %s\n", p.string().c_str());
    }
    ordered_json j;
    j["freq_hz"] = freq;
    j["emitted_freq_hz"] = std::fmod(freq, double(pixel_clock_hz(s.timing)));
    j["pixels"] = pixels > 0 ? pixels : s.timing.pixels_per_frame();
    j["mode"] = mode;
    j["frames"] = video.frames.size();
    write_text_file(base.string() + ".json", j.dump(2) + "\n");
    return 0;
}

int cmd_gen_video(const Settings& s, const PayloadArgs& pa, bool stepping,
                  const std::string& name) {
    auto bits = resolve_payload(pa, s.seed);
    size_t nsym = 0;
    auto src = packet_source(s, bits, stepping, nsym);
    auto stream = materialize(*src, s.timing, PixelMode::binary);
    auto video = stream_to_frames(stream);

    fs::create_directories(s.out / name);
    std::map<std::string, std::string> extra;
    extra["payload_bits"] = std::to_string(bits.size());
    extra["payload_symbols"] = std::to_string(nsym);
    extra["variant"] = stepping ? "stepping" : "packet";
    extra["carrier_freq_hz"] = format_double(carrier_freq(s, stepping));
    auto manifest = export_video(s.out / name, video, extra);
    std::printf("wrote %zu frame(s), manifest %s\n", video.frames.size(),
                manifest.string().c_str());

    if (!stepping) {
        auto budget = compute_frame_budget(s.lora, bits.size(), s.timing);
        if (budget.frames != video.frames.size())
            throw std::runtime_error("frame budget disagrees with the produced video");
    }
    return 0;
}

int run_chain(const Settings& s, const PayloadArgs& pa, bool stepping, bool with_channel,
              const std::string& name) {
    auto bits = resolve_payload(pa, s.seed);
    size_t nsym = 0;
    auto src = packet_source(s, bits, stepping, nsym);
    auto cc = tuned_channel(s, stepping);
    auto iq = pixels_to_iq(*src, s.timing, s.cable, cc);
    if (with_channel) iq = apply_channel(iq, cc);

    fs::create_directories(s.out);
    auto path = s.out / (name + ".iq");
    std::map<std::string, std::string> prov;
    prov["variant"] = stepping ? "stepping" : "packet";
    prov["payload_bits"] = std::to_string(bits.size());
    prov["payload_symbols"] = std::to_string(nsym);
    prov["seed"] = std::to_string(s.seed);
    prov["snr_db"] = with_channel && cc.snr_db ? format_double(*cc.snr_db) : "clean";
    write_iq(path, iq, prov);
    std::printf("wrote %zu samples at %.0f Hz to %s\n", iq.samples.size(), iq.sample_rate,
                path.string().c_str());

    if (with_channel) {
        ordered_json j;
        if (stepping) {
            auto dec = stepping_demodulate(iq.samples, s.stepping, s.timing, iq.sample_rate,
                                           nsym);
            j["found"] = dec.found;
            j["start_offset"] = dec.start_offset;
            j["symbols"] = dec.symbols;
            bool ok = dec.found && dec.payload_bits.size() >= bits.size() &&
                      std::equal(bits.begin(), bits.end(), dec.payload_bits.begin());
            j["payload_recovered"] = ok;
            if (dec.found && !pa.text.empty())
                j["text"] = lora::bits_to_text(dec.payload_bits);
        } else {
            auto dec = lora::demodulate_packet(iq.samples, s.lora, iq.sample_rate, nsym);
            j["found"] = dec.found;
            j["start_offset"] = dec.start_offset;
            j["corrupted_symbols"] = dec.corrupted_symbol_indices;
            bool ok = dec.found && dec.payload_bits.size() >= bits.size() &&
                      std::equal(bits.begin(), bits.end(), dec.payload_bits.begin());
            j["payload_recovered"] = ok;
            if (dec.found && !pa.text.empty())
                j["text"] = lora::bits_to_text(dec.payload_bits);
        }
        std::printf("%s\n", j.dump(2).c_str());
    }
    return 0;
}

int cmd_decode(const Settings& s, const fs::path& iq_path, bool stepping,
               std::optional<size_t> nsym, bool as_text) {
    auto iq = read_iq(iq_path);
    ordered_json j;
    if (stepping) {
        auto dec = stepping_demodulate(iq.samples, s.stepping, s.timing, iq.sample_rate, nsym);
        j["found"] = dec.found;
        j["start_offset"] = dec.start_offset;
        j["start_time_s"] = dec.start_time;
        j["symbols"] = dec.symbols;
        j["symbol_confidences_db"] = dec.symbol_confidences;
        j["payload_bits"] = dec.payload_bits;
        if (dec.found && as_text) j["text"] = lora::bits_to_text(dec.payload_bits);
    } else {
        auto dec = lora::demodulate_packet(iq.samples, s.lora, iq.sample_rate, nsym);
        j["found"] = dec.found;
        j["start_offset"] = dec.start_offset;
        j["sync_observed"] = dec.sync_observed;
        j["symbols"] = dec.symbols;
        j["symbol_confidences_db"] = dec.symbol_confidences;
        j["corrupted_symbols"] = dec.corrupted_symbol_indices;
        j["payload_bits"] = dec.payload_bits;
        if (dec.found && as_text) j["text"] = lora::bits_to_text(dec.payload_bits);
    }
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

int cmd_prr_sweep(const Settings& s, const std::string& name) {
    ExperimentConfig cfg = s.experiment;
    cfg.timing = s.timing;
    cfg.cable = s.cable;
    cfg.channel = s.channel;
    cfg.lora = s.lora;
    cfg.stepping = s.stepping;
    if (cfg.seed == 1 && s.seed != 1) cfg.seed = s.seed;
    if (!s.channel_freq_from_config)
        cfg.channel.center_freq = carrier_freq(s, cfg.use_stepping);

    auto report = run_prr_experiment(cfg);
    fs::create_directories(s.out);
    auto path = s.out / (name + ".jsonl");
    write_text_file(path, report.to_jsonl());
    std::printf("%s", report.to_table().c_str());
    std::printf("wrote %zu row(s) to %s\n", report.rows.size(), path.string().c_str());
    return 0;
}

int cmd_frame_budget(const Settings& s, uint64_t bits, bool verify) {
    auto b = compute_frame_budget(s.lora, size_t(bits), s.timing);
    ordered_json j;
    j["payload_bits"] = bits;
    j["payload_symbols"] = b.payload_symbols;
    j["packet_pixels"] = b.packet_pixels;
    j["pixels_per_frame"] = b.pixels_per_frame;
    j["frames"] = b.frames;
    j["frames_exact"] = b.frames_exact;
    j["gap_to_chirp_ratio"] = b.gap_to_chirp_ratio;
    if (verify) {
        auto payload = experiment_payload_bits(s.seed, 0, size_t(bits));
        auto syms = lora::encode_payload(payload, s.lora);
        auto src = make_packet_source(s.lora, syms, s.timing, PixelMode::binary);
        auto stream = materialize(*src, s.timing, PixelMode::binary);
        auto video = stream_to_frames(stream);
        j["video_frames"] = video.frames.size();
        if (video.frames.size() != b.frames)
            throw std::runtime_error("frame budget disagrees with the produced video");
    }
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

int cmd_goodput(const Settings& s, uint64_t bits, double prr) {
    auto g = goodput_report(s.lora, size_t(bits), s.timing, prr);
    std::printf("%s", g.to_json().c_str());
    return 0;
}

// ---- plot -------------------------------------------------------------------

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> pts;
};

int cmd_plot(const Settings& s, const fs::path& report_path, std::string x_axis,
             const std::string& name) {
    auto text = read_text_file(report_path);
    std::vector<ordered_json> rows;
    size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        rows.push_back(ordered_json::parse(line));
    }
    if (rows.empty()) throw std::runtime_error("report has no rows");

    if (x_axis == "auto")
        x_axis = rows.front().at("snr_db").is_null() ? "payload_bits" : "snr_db";

    std::map<std::string, Series> series;
    for (const auto& r : rows) {
        std::string label = "sf" + std::to_string(r.at("sf").get<uint32_t>()) + "/" +
                            std::to_string(int64_t(r.at("bw").get<double>() / 1e3)) + "k";
        double x = x_axis == "snr_db"
                       ? (r.at("snr_db").is_null() ? 0.0 : r.at("snr_db").get<double>())
                       : double(r.at("payload_bits").get<uint64_t>());
        auto& ser = series[label];
        ser.label = label;
        ser.pts.emplace_back(x, r.at("prr").get<double>());
    }

    double xmin = 1e300, xmax = -1e300;
    for (auto& [_, ser] : series) {
        std::sort(ser.pts.begin(), ser.pts.end());
        for (auto& [x, y] : ser.pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
    }
    if (xmax == xmin) {
        xmin -= 1.0;
        xmax += 1.0;
    }

    const double W = 840, H = 520, L = 70, R = 30, T = 30, B = 60;
    auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto sy = [&](double y) { return H - B - y * (H - T - B); };
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(W) +
           "\" height=\"" + format_double(H) + "\" viewBox=\"0 0 " + format_double(W) + " " +
           format_double(H) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  L, H - B, W - R, H - B, L, T, L, H - B);
    svg += buf;
    for (int i = 0; i <= 5; ++i) {
        double xv = xmin + (xmax - xmin) * i / 5.0;
        double yv = i / 5.0;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">"
                      "%g</text>\n",
                      sx(xv), H - B + 18, xv);
        svg += buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"end\">"
                      "%.1f</text>\n",
                      L - 8, sy(yv) + 4, yv);
        svg += buf;
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                      "stroke=\"#dddddd\"/>\n",
                      L, sy(yv), W - R, sy(yv));
        svg += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"14\" text-anchor=\"middle\">"
                  "%s</text>\n",
                  (L + W - R) / 2, H - 18, x_axis.c_str());
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"18\" y=\"%.1f\" font-size=\"14\" text-anchor=\"middle\" "
                  "transform=\"rotate(-90 18 %.1f)\">prr</text>\n",
                  (T + H - B) / 2, (T + H - B) / 2);
    svg += buf;

    size_t ci = 0;
    double ly = T + 10;
    for (const auto& [_, ser] : series) {
        const char* color = colors[ci % 6];
        std::string pts;
        for (auto& [x, y] : ser.pts) {
            std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", sx(x), sy(y));
            pts += buf;
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
        for (auto& [x, y] : ser.pts) {
            std::snprintf(buf, sizeof(buf),
                          "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>\n", sx(x),
                          sy(y), color);
            svg += buf;
        }
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" fill=\"%s\">%s</text>\n",
                      W - R - 90.0, ly, color, ser.label.c_str());
        svg += buf;
        ly += 16;
        ++ci;
    }
    svg += "</svg>\n";

    fs::create_directories(s.out);
    auto path = s.out / (name + ".svg");
    write_text_file(path, svg);
    std::printf("wrote %s (%zu series)\n", path.string().c_str(), series.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"raster display emission laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string timing_spec;
    std::string cable_name;
    std::string out_dir;
    uint64_t seed = 1;
    app.add_option("--config", config_path, "INI settings file");
    app.add_option("--seed", seed, "master seed for payloads and noise");
    app.add_option("--timing", timing_spec, "display mode: 1080p60, 720p60 or aw:ah:tw:th:rr");
    app.add_option("--cable", cable_name, "cable profile: vga or hdmi");
    app.add_option("--out", out_dir, "output directory");

    // gen-image
    auto* gi = app.add_subcommand("gen-image", "single-tone attack image");
    double gi_freq = 433e6;
    uint64_t gi_pixels = 0;
    std::string gi_mode = "binary", gi_name = "tone";
    gi->add_option("--freq", gi_freq, "target RF frequency, Hz")->required();
    gi->add_option("--pixels", gi_pixels, "tone length in pixels (default one frame)");
    gi->add_option("--mode", gi_mode, "binary or grayscale")
        ->check(CLI::IsMember({"binary", "grayscale"}));
    gi->add_option("--name", gi_name, "output basename");

    // gen-video
    auto* gv = app.add_subcommand("gen-video", "packet attack video (frames + manifest)");
    PayloadArgs gv_pay;
    bool gv_stepping = false;
    std::string gv_name = "video";
    gv->add_option("--text", gv_pay.text, "payload text");
    gv->add_option("--random-bits", gv_pay.random_bits, "seeded random payload length");
    gv->add_flag("--stepping", gv_stepping, "use the stepping-chirp variant");
    gv->add_option("--name", gv_name, "output directory name under --out");

    // simulate
    auto* sim = app.add_subcommand("simulate",
                                   "synthesize, run the channel, decode, write the capture");
    PayloadArgs sim_pay;
    bool sim_stepping = false;
    std::string sim_name = "capture";
    sim->add_option("--text", sim_pay.text, "payload text");
    sim->add_option("--random-bits", sim_pay.random_bits, "seeded random payload length");
    sim->add_flag("--stepping", sim_stepping, "use the stepping-chirp variant");
    sim->add_option("--name", sim_name, "capture basename");

    // export-iq
    auto* exq = app.add_subcommand("export-iq", "clean emission capture, no channel effects");
    PayloadArgs exq_pay;
    bool exq_stepping = false;
    std::string exq_name = "emission";
    exq->add_option("--text", exq_pay.text, "payload text");
    exq->add_option("--random-bits", exq_pay.random_bits, "seeded random payload length");
    exq->add_flag("--stepping", exq_stepping, "use the stepping-chirp variant");
    exq->add_option("--name", exq_name, "capture basename");

    // decode
    auto* dec = app.add_subcommand("decode", "demodulate an IQ capture");
    std::string dec_iq;
    bool dec_stepping = false;
    bool dec_text = false;
    int64_t dec_nsym = -1;
    dec->add_option("--iq", dec_iq, "capture file")->required();
    dec->add_flag("--stepping", dec_stepping, "stepping-chirp demodulator");
    dec->add_flag("--text", dec_text, "also render payload bits as text");
    dec->add_option("--symbols", dec_nsym, "expected payload symbol count");

    // prr-sweep
    auto* prr = app.add_subcommand("prr-sweep", "packet reception rate sweep");
    std::string prr_name = "prr";
    std::vector<uint32_t> prr_sf;
    std::vector<double> prr_bw, prr_snr;
    std::vector<uint64_t> prr_bits;
    uint32_t prr_trials = 0;
    bool prr_stepping = false;
    std::string prr_text;
    prr->add_option("--sf", prr_sf, "spreading factors");
    prr->add_option("--bw", prr_bw, "bandwidths, Hz");
    prr->add_option("--bits", prr_bits, "payload lengths, bits");
    prr->add_option("--snr", prr_snr, "SNR axis, dB (omit for noiseless)");
    prr->add_option("--trials", prr_trials, "trials per noisy point");
    prr->add_option("--text", prr_text, "fixed text payload");
    prr->add_flag("--stepping", prr_stepping, "sweep the stepping variant");
    prr->add_option("--name", prr_name, "report basename");

    // frame-budget
    auto* fb = app.add_subcommand("frame-budget", "frames needed for a payload");
    uint64_t fb_bits = 24;
    bool fb_verify = false;
    fb->add_option("--bits", fb_bits, "payload length, bits")->required();
    fb->add_flag("--verify", fb_verify, "also synthesize the video and compare");

    // goodput
    auto* gp = app.add_subcommand("goodput", "itemized goodput model");
    uint64_t gp_bits = 24;
    double gp_prr = 1.0;
    gp->add_option("--bits", gp_bits, "payload length, bits")->required();
    gp->add_option("--prr", gp_prr, "reception rate to fold in");

    // plot
    auto* pl = app.add_subcommand("plot", "render a sweep report to SVG");
    std::string pl_report, pl_x = "auto", pl_name = "plot";
    pl->add_option("--report", pl_report, "JSONL sweep report")->required();
    pl->add_option("--x", pl_x, "x axis: auto, snr_db or payload_bits")
        ->check(CLI::IsMember({"auto", "snr_db", "payload_bits"}));
    pl->add_option("--name", pl_name, "output basename");

    CLI11_PARSE(app, argc, argv);

    try {
        Settings s;
        if (!config_path.empty()) apply_config(s, config_path);
        if (!timing_spec.empty()) s.timing = parse_timing(timing_spec);
        if (!cable_name.empty()) s.cable = cable_from_string(cable_name);
        if (!out_dir.empty()) s.out = out_dir;
        s.seed = seed;
        s.timing.validate();

        if (gi->parsed()) return cmd_gen_image(s, gi_freq, gi_pixels, gi_mode, gi_name);
        if (gv->parsed()) return cmd_gen_video(s, gv_pay, gv_stepping, gv_name);
        if (sim->parsed()) return run_chain(s, sim_pay, sim_stepping, true, sim_name);
        if (exq->parsed()) return run_chain(s, exq_pay, exq_stepping, false, exq_name);
        if (dec->parsed())
            return cmd_decode(s, dec_iq, dec_stepping,
                              dec_nsym >= 0 ? std::optional<size_t>(size_t(dec_nsym))
                                            : std::nullopt,
                              dec_text);
        if (prr->parsed()) {
            if (!prr_sf.empty()) s.experiment.sweep_sf = prr_sf;
            if (!prr_bw.empty()) s.experiment.sweep_bw = prr_bw;
            if (!prr_bits.empty()) {
                s.experiment.sweep_payload_bits.clear();
                for (auto b : prr_bits) s.experiment.sweep_payload_bits.push_back(size_t(b));
            }
            if (!prr_snr.empty()) s.experiment.sweep_snr_db = prr_snr;
            if (prr_trials > 0) s.experiment.trials = prr_trials;
            if (!prr_text.empty()) s.experiment.payload_text = prr_text;
            if (prr_stepping) s.experiment.use_stepping = true;
            return cmd_prr_sweep(s, prr_name);
        }
        if (fb->parsed()) return cmd_frame_budget(s, fb_bits, fb_verify);
        if (gp->parsed()) return cmd_goodput(s, gp_bits, gp_prr);
        if (pl->parsed()) return cmd_plot(s, pl_report, pl_x, pl_name);
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
