#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lfuw/degrade.hpp"
#include "lfuw/light_field.hpp"
#include "lfuw/types.hpp"

namespace lfuw {

// ---------------------------------------------------------------------------
// On-disk scene layout (all formats little-endian, layout versioned in the
// manifest):
//   view_{v}_{u}.png        primary light field, 16-bit RGB PNG
//   clean_view_{v}_{u}.png  clean views when the bundle holds both roles
//   depth_{v}_{u}.pfm       per-view depth, 32-bit float PFM (or 16-bit
//                           gray PNG + per-file scale in png16 mode)
//   camera.json             rig and per-view camera placement
//   degradation.json        formation-model parameters when known
//   manifest.json           file index with CRC-32 checksums
// ---------------------------------------------------------------------------

struct SceneMeta {
  std::string name;
  std::uint64_t seed = 0;
  std::string preset;       // empty when not degraded from a preset
  double recenter_d0 = 0.0; // zero-parallax offset already applied to views
};

struct SceneBundle {
  std::optional<LightField> lf_clean;
  std::optional<LightField> lf_degraded;
  std::vector<DepthMap> depths;  // one per view when present
  CameraRig rig;
  std::optional<DegradationParams> params;
  SceneMeta meta;

  const LightField& primary() const {
    return lf_degraded ? *lf_degraded : *lf_clean;
  }
};

struct SaveOptions {
  bool depth_as_png16 = false;       // PFM by default (lossless float)
  std::string config_json;           // resolved CLI config, embedded verbatim
  std::string role_label;            // manifest primary_role override
                                     // ("enhanced" results live in the clean slot)
  std::vector<std::pair<std::string, std::string>> extra_files;  // name, bytes
};

struct SaveSummary {
  std::filesystem::path manifest_path;
  std::string checksum;  // combined CRC-32, hex
  int file_count = 0;
};

SaveSummary save_scene(const SceneBundle& bundle, const std::filesystem::path& dir,
                       const SaveOptions& options = {});

SceneBundle load_scene(const std::filesystem::path& dir);

// --- low-level format helpers (exposed for tests and tools) ----------------

void write_png16(const std::filesystem::path& path, const Image& img);
Image read_png16(const std::filesystem::path& path);

void write_png16_gray(const std::filesystem::path& path, const Mat& values,
                      double lo, double hi);
Mat read_png16_gray(const std::filesystem::path& path, double lo, double hi);

// Grayscale PFM ("Pf", negative scale = little-endian, rows bottom-up).
// Values pass through float32. The reader also accepts 3-channel "PF" files
// and returns their first channel.
void write_pfm(const std::filesystem::path& path, const Mat& values);
Mat read_pfm(const std::filesystem::path& path);

std::string crc32_hex(const std::string& bytes);

}  // namespace lfuw
