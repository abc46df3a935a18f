#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rastercast/channel_sim.hpp"
#include "rastercast/waveform_synth.hpp"

namespace rastercast {

// Raw interleaved float32 little-endian I,Q pairs plus a JSON sidecar
// (<path>.json) with sample_rate, center_freq and provenance fields.
void write_iq(const std::filesystem::path& path, const IQBuffer& buf,
              const std::map<std::string, std::string>& provenance = {});
IQBuffer read_iq(const std::filesystem::path& path);

// Binary PGM (P5), 8-bit.
void write_pgm(const std::filesystem::path& path, const std::vector<uint8_t>& pixels,
               uint32_t width, uint32_t height);
std::vector<uint8_t> read_pgm(const std::filesystem::path& path,
                              uint32_t& width, uint32_t& height);

// Frames as frame_NNNN.pgm under dir plus manifest.json describing the
// timing, mode and frame order. Returns the manifest path.
std::filesystem::path export_video(const std::filesystem::path& dir, const AttackVideo& v,
                                   const std::map<std::string, std::string>& extra = {});
AttackVideo import_video(const std::filesystem::path& manifest_path);

// Flat INI: [section] then key = value lines; '#' or ';' comments.
using IniData = std::map<std::string, std::map<std::string, std::string>>;
IniData parse_ini(const std::string& text);
IniData load_ini(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Deterministic float formatting used by every report writer.
std::string format_double(double v);

}  // namespace rastercast
