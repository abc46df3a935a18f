#include "rastercast/io_util.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "raw IQ and report formats assume a little-endian host");

namespace rastercast {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

void write_binary(const std::filesystem::path& path, const void* data, size_t bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f.write(static_cast<const char*>(data), std::streamsize(bytes));
    if (!f) throw std::runtime_error("short write: " + path.string());
}

std::vector<char> read_binary(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    auto size = size_t(f.tellg());
    f.seekg(0);
    std::vector<char> data(size);
    f.read(data.data(), std::streamsize(size));
    if (!f) throw std::runtime_error("short read: " + path.string());
    return data;
}

ordered_json timing_to_json(const DisplayTiming& t) {
    ordered_json j;
    j["active_width"] = t.active_width;
    j["active_height"] = t.active_height;
    j["total_width"] = t.total_width;
    j["total_height"] = t.total_height;
    j["refresh_rate"] = t.refresh_rate;
    return j;
}

DisplayTiming timing_from_json(const ordered_json& j) {
    DisplayTiming t;
    t.active_width = j.at("active_width").get<uint32_t>();
    t.active_height = j.at("active_height").get<uint32_t>();
    t.total_width = j.at("total_width").get<uint32_t>();
    t.total_height = j.at("total_height").get<uint32_t>();
    t.refresh_rate = j.at("refresh_rate").get<uint32_t>();
    t.validate();
    return t;
}

}  // namespace

void write_iq(const std::filesystem::path& path, const IQBuffer& buf,
              const std::map<std::string, std::string>& provenance) {
    write_binary(path, buf.samples.data(), buf.samples.size() * sizeof(std::complex<float>));
    ordered_json j;
    j["format"] = "cf32_le";
    j["sample_rate"] = buf.sample_rate;
    j["center_freq"] = buf.center_freq;
    j["samples"] = buf.samples.size();
    if (!provenance.empty()) {
        ordered_json p;
        for (const auto& [k, v] : provenance) p[k] = v;
        j["provenance"] = p;
    }
    write_text_file(path.string() + ".json", j.dump(2) + "\n");
}

IQBuffer read_iq(const std::filesystem::path& path) {
    auto j = ordered_json::parse(read_text_file(path.string() + ".json"));
    if (j.at("format").get<std::string>() != "cf32_le")
        throw std::runtime_error("unsupported IQ format in sidecar");
    IQBuffer buf;
    buf.sample_rate = j.at("sample_rate").get<double>();
    buf.center_freq = j.at("center_freq").get<double>();
    auto raw = read_binary(path);
    if (raw.size() % sizeof(std::complex<float>) != 0)
        throw std::runtime_error("IQ file size is not a whole number of samples");
    buf.samples.resize(raw.size() / sizeof(std::complex<float>));
    std::memcpy(buf.samples.data(), raw.data(), raw.size());
    auto expect = j.at("samples").get<size_t>();
    if (expect != buf.samples.size())
        throw std::runtime_error("IQ sample count differs from sidecar");
    return buf;
}

void write_pgm(const std::filesystem::path& path, const std::vector<uint8_t>& pixels,
               uint32_t width, uint32_t height) {
    if (pixels.size() != size_t(width) * height)
        throw std::invalid_argument("pixel count does not match dimensions");
    std::ostringstream head;
    head << "P5\n" << width << " " << height << "\n255\n";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << head.str();
    f.write(reinterpret_cast<const char*>(pixels.data()), std::streamsize(pixels.size()));
    if (!f) throw std::runtime_error("short write: " + path.string());
}

std::vector<uint8_t> read_pgm(const std::filesystem::path& path,
                              uint32_t& width, uint32_t& height) {
    auto raw = read_binary(path);
    size_t pos = 0;
    auto next_token = [&]() -> std::string {
        while (pos < raw.size()) {
            if (std::isspace(static_cast<unsigned char>(raw[pos]))) {
                ++pos;
            } else if (raw[pos] == '#') {
                while (pos < raw.size() && raw[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        size_t start = pos;
        while (pos < raw.size() && !std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
        return std::string(raw.begin() + long(start), raw.begin() + long(pos));
    };
    if (next_token() != "P5") throw std::runtime_error("not a binary PGM: " + path.string());
    width = uint32_t(std::stoul(next_token()));
    height = uint32_t(std::stoul(next_token()));
    auto maxval = std::stoul(next_token());
    if (maxval == 0 || maxval > 255) throw std::runtime_error("unsupported PGM maxval");
    ++pos;  // single whitespace after maxval
    size_t need = size_t(width) * height;
    if (raw.size() - pos < need) throw std::runtime_error("truncated PGM: " + path.string());
    return {raw.begin() + long(pos), raw.begin() + long(pos + need)};
}

std::filesystem::path export_video(const std::filesystem::path& dir, const AttackVideo& v,
                                   const std::map<std::string, std::string>& extra) {
    v.timing.validate();
    if (v.frames.empty()) throw std::invalid_argument("video has no frames");
    std::filesystem::create_directories(dir);
    ordered_json manifest;
    manifest["timing"] = timing_to_json(v.timing);
    manifest["mode"] = v.mode == PixelMode::binary ? "binary" : "grayscale";
    ordered_json names = ordered_json::array();
    for (size_t i = 0; i < v.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04zu.pgm", i);
        write_pgm(dir / name, v.frames[i], v.timing.active_width, v.timing.active_height);
        names.push_back(name);
    }
    manifest["frames"] = names;
    if (!extra.empty()) {
        ordered_json meta;
        for (const auto& [k, val] : extra) meta[k] = val;
        manifest["meta"] = meta;
    }
    auto mpath = dir / "manifest.json";
    write_text_file(mpath, manifest.dump(2) + "\n");
    return mpath;
}

AttackVideo import_video(const std::filesystem::path& manifest_path) {
    auto j = ordered_json::parse(read_text_file(manifest_path));
    AttackVideo v;
    v.timing = timing_from_json(j.at("timing"));
    v.mode = j.at("mode").get<std::string>() == "grayscale" ? PixelMode::grayscale
                                                            : PixelMode::binary;
    auto dir = manifest_path.parent_path();
    for (const auto& name : j.at("frames")) {
        uint32_t w = 0, h = 0;
        auto px = read_pgm(dir / name.get<std::string>(), w, h);
        if (w != v.timing.active_width || h != v.timing.active_height)
            throw std::runtime_error("frame dimensions disagree with the manifest timing");
        v.frames.push_back(std::move(px));
    }
    if (v.frames.empty()) throw std::runtime_error("manifest lists no frames");
    return v;
}

IniData parse_ini(const std::string& text) {
    IniData data;
    std::string section;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto cut = line.find_first_of("#;"); cut != std::string::npos)
            line.erase(cut);
        std::string s = trim(line);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::runtime_error("unterminated section header at line " +
                                         std::to_string(lineno));
            section = trim(s.substr(1, s.size() - 2));
            data[section];
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("expected key = value at line " + std::to_string(lineno));
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("empty key at line " + std::to_string(lineno));
        data[section][key] = value;
    }
    return data;
}

IniData load_ini(const std::filesystem::path& path) {
    return parse_ini(read_text_file(path));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << text;
    if (!f) throw std::runtime_error("short write: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    auto raw = read_binary(path);
    return std::string(raw.begin(), raw.end());
}

std::string format_double(double v) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("float formatting failed");
    return std::string(buf, end);
}

}  // namespace rastercast
