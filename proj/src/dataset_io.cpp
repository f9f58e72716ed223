#include "lfuw/dataset_io.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace lfuw {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoFailure("short write to " + path.string());
}

std::uint16_t quantize16(double v) {
  const double q = std::round(std::min(1.0, std::max(0.0, v)) * 65535.0);
  return static_cast<std::uint16_t>(q);
}

struct PngReadCtx {
  const std::string* bytes;
  size_t pos;
};

void png_read_fn(png_structp png, png_bytep out, png_size_t n) {
  auto* ctx = static_cast<PngReadCtx*>(png_get_io_ptr(png));
  if (ctx->pos + n > ctx->bytes->size())
    png_error(png, "unexpected end of PNG stream");
  std::memcpy(out, ctx->bytes->data() + ctx->pos, n);
  ctx->pos += n;
}

void png_write_fn(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), n);
}

void png_flush_fn(png_structp) {}

std::string encode_png16(const std::vector<std::uint16_t>& pixels, Index h,
                         Index w, int channels) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  if (!png) throw IoFailure("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoFailure("PNG encode failed");
  }
  png_set_write_fn(png, &out, png_write_fn, png_flush_fn);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h),
               16, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_swap(png);  // in-memory samples are host (little) endian
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (Index y = 0; y < h; ++y)
    rows[static_cast<size_t>(y)] = reinterpret_cast<png_bytep>(const_cast<std::uint16_t*>(
        pixels.data() + static_cast<size_t>(y) * w * channels));
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<std::uint16_t> decode_png16(const std::string& bytes, Index& h,
                                        Index& w, int expected_channels,
                                        const std::string& what) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, nullptr);
  if (!png) throw IoFailure("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoFailure("PNG decode failed for " + what);
  }
  PngReadCtx ctx{&bytes, 0};
  png_set_read_fn(png, &ctx, png_read_fn);
  png_read_info(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  const int want = expected_channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
  if (bit_depth != 16 || color_type != want) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoFailure(what + ": expected 16-bit " +
                    (expected_channels == 3 ? "RGB" : "gray") + " PNG");
  }
  w = static_cast<Index>(png_get_image_width(png, info));
  h = static_cast<Index>(png_get_image_height(png, info));
  png_set_swap(png);
  std::vector<std::uint16_t> pixels(static_cast<size_t>(h * w) * expected_channels);
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (Index y = 0; y < h; ++y)
    rows[static_cast<size_t>(y)] = reinterpret_cast<png_bytep>(
        pixels.data() + static_cast<size_t>(y) * w * expected_channels);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

std::string view_file(const char* prefix, int v, int u) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%sview_%d_%d.png", prefix, v, u);
  return buf;
}

std::string depth_file(int v, int u, bool png16) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "depth_%d_%d.%s", v, u, png16 ? "png" : "pfm");
  return buf;
}

json rig_to_json(const CameraRig& rig, int V, int U, double baseline) {
  json cam;
  cam["focal_length"] = rig.focal_length;
  cam["baseline"] = rig.baseline;
  cam["sensor_size"] = rig.sensor_size;
  cam["resolution"] = rig.resolution;
  json views = json::array();
  const int vc = (V - 1) / 2, uc = (U - 1) / 2;
  for (int v = 0; v < V; ++v) {
    for (int u = 0; u < U; ++u) {
      json e;
      e["v"] = v;
      e["u"] = u;
      e["location"] = {(u - uc) * baseline, (v - vc) * baseline, 0.0};
      e["rotation"] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
      views.push_back(e);
    }
  }
  cam["views"] = views;
  return cam;
}

}  // namespace

std::string crc32_hex(const std::string& bytes) {
  const auto crc = ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
                           static_cast<uInt>(bytes.size()));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

void write_png16(const fs::path& path, const Image& img) {
  const Index h = img.height(), w = img.width();
  std::vector<std::uint16_t> pixels(static_cast<size_t>(h * w) * 3);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        pixels[(static_cast<size_t>(y) * w + x) * 3 + c] = quantize16(img.at(y, x, c));
  write_file(path, encode_png16(pixels, h, w, 3));
}

Image read_png16(const fs::path& path) {
  Index h = 0, w = 0;
  const auto pixels = decode_png16(read_file(path), h, w, 3, path.string());
  Image img(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) =
            pixels[(static_cast<size_t>(y) * w + x) * 3 + c] / 65535.0;
  return img;
}

void write_png16_gray(const fs::path& path, const Mat& values, double lo,
                      double hi) {
  const Index h = values.rows(), w = values.cols();
  const double span = (hi > lo) ? hi - lo : 1.0;
  std::vector<std::uint16_t> pixels(static_cast<size_t>(h * w));
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      pixels[static_cast<size_t>(y) * w + x] = quantize16((values(y, x) - lo) / span);
  write_file(path, encode_png16(pixels, h, w, 1));
}

Mat read_png16_gray(const fs::path& path, double lo, double hi) {
  Index h = 0, w = 0;
  const auto pixels = decode_png16(read_file(path), h, w, 1, path.string());
  Mat out(h, w);
  const double span = (hi > lo) ? hi - lo : 1.0;
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      out(y, x) = lo + span * (pixels[static_cast<size_t>(y) * w + x] / 65535.0);
  return out;
}

void write_pfm(const fs::path& path, const Mat& values) {
  const Index h = values.rows(), w = values.cols();
  std::string out;
  char header[64];
  std::snprintf(header, sizeof(header), "Pf\n%lld %lld\n-1.0\n",
                static_cast<long long>(w), static_cast<long long>(h));
  out = header;
  // Scanlines bottom-up per the PFM convention.
  for (Index y = h - 1; y >= 0; --y) {
    for (Index x = 0; x < w; ++x) {
      const float f = static_cast<float>(values(y, x));
      out.append(reinterpret_cast<const char*>(&f), sizeof(float));
    }
  }
  write_file(path, out);
}

Mat read_pfm(const fs::path& path) {
  const std::string bytes = read_file(path);
  std::istringstream in(bytes);
  std::string magic;
  long long w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if ((magic != "Pf" && magic != "PF") || w <= 0 || h <= 0 || scale == 0.0 || !in)
    throw IoFailure("malformed PFM header in " + path.string());
  in.get();  // single whitespace byte after the scale
  const int channels = (magic == "PF") ? 3 : 1;
  const size_t offset = static_cast<size_t>(in.tellg());
  const size_t need = static_cast<size_t>(w * h * channels) * sizeof(float);
  if (bytes.size() - offset < need)
    throw IoFailure("truncated PFM data in " + path.string());
  const bool swap = scale > 0.0;  // positive scale marks big-endian data
  Mat out(h, w);
  const char* p = bytes.data() + offset;
  for (Index y = h - 1; y >= 0; --y) {
    for (Index x = 0; x < w; ++x) {
      char raw[4];
      std::memcpy(raw, p, 4);
      if (swap) std::swap(raw[0], raw[3]), std::swap(raw[1], raw[2]);
      float f;
      std::memcpy(&f, raw, 4);
      out(y, x) = static_cast<double>(f);
      p += 4 * channels;
    }
  }
  return out;
}

SaveSummary save_scene(const SceneBundle& bundle, const fs::path& dir,
                       const SaveOptions& options) {
  if (!bundle.lf_clean && !bundle.lf_degraded)
    throw IncompleteBundle("save_scene: bundle holds no light field");
  const LightField& primary = bundle.primary();
  if (bundle.lf_clean && bundle.lf_degraded) {
    const auto& a = *bundle.lf_clean;
    if (a.angular_rows != primary.angular_rows ||
        a.angular_cols != primary.angular_cols || a.height != primary.height ||
        a.width != primary.width)
      throw IncompleteBundle("save_scene: clean/degraded shapes differ");
  }
  if (!bundle.depths.empty() && bundle.depths.size() != primary.views.size())
    throw IncompleteBundle("save_scene: depth count != view count");

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create " + dir.string());

  const int V = primary.angular_rows, U = primary.angular_cols;
  std::map<std::string, std::string> checksums;  // file -> crc32 (sorted)
  json depth_scales = json::object();

  auto emit = [&](const std::string& name, const std::string& bytes) {
    write_file(dir / name, bytes);
    checksums[name] = crc32_hex(bytes);
  };

  for (int v = 0; v < V; ++v) {
    for (int u = 0; u < U; ++u) {
      const size_t idx = static_cast<size_t>(v) * U + u;
      {
        const Image& im = primary.views[idx];
        std::vector<std::uint16_t> px(static_cast<size_t>(im.height() * im.width()) * 3);
        for (Index y = 0; y < im.height(); ++y)
          for (Index x = 0; x < im.width(); ++x)
            for (int c = 0; c < 3; ++c)
              px[(static_cast<size_t>(y) * im.width() + x) * 3 + c] =
                  quantize16(im.at(y, x, c));
        emit(view_file("", v, u), encode_png16(px, im.height(), im.width(), 3));
      }
      if (bundle.lf_clean && bundle.lf_degraded) {
        const Image& im = bundle.lf_clean->views[idx];
        std::vector<std::uint16_t> px(static_cast<size_t>(im.height() * im.width()) * 3);
        for (Index y = 0; y < im.height(); ++y)
          for (Index x = 0; x < im.width(); ++x)
            for (int c = 0; c < 3; ++c)
              px[(static_cast<size_t>(y) * im.width() + x) * 3 + c] =
                  quantize16(im.at(y, x, c));
        emit(view_file("clean_", v, u), encode_png16(px, im.height(), im.width(), 3));
      }
      if (!bundle.depths.empty()) {
        const Mat& d = bundle.depths[idx].values;
        if (options.depth_as_png16) {
          const double lo = d.minCoeff(), hi = d.maxCoeff();
          const std::string name = depth_file(v, u, true);
          std::vector<std::uint16_t> px(static_cast<size_t>(d.rows() * d.cols()));
          const double span = (hi > lo) ? hi - lo : 1.0;
          for (Index y = 0; y < d.rows(); ++y)
            for (Index x = 0; x < d.cols(); ++x)
              px[static_cast<size_t>(y) * d.cols() + x] =
                  quantize16((d(y, x) - lo) / span);
          emit(name, encode_png16(px, d.rows(), d.cols(), 1));
          depth_scales[name] = {lo, hi};
        } else {
          std::string bytes;
          char header[64];
          std::snprintf(header, sizeof(header), "Pf\n%lld %lld\n-1.0\n",
                        static_cast<long long>(d.cols()),
                        static_cast<long long>(d.rows()));
          bytes = header;
          for (Index y = d.rows() - 1; y >= 0; --y)
            for (Index x = 0; x < d.cols(); ++x) {
              const float f = static_cast<float>(d(y, x));
              bytes.append(reinterpret_cast<const char*>(&f), sizeof(float));
            }
          emit(depth_file(v, u, false), bytes);
        }
      }
    }
  }

  for (const auto& [name, bytes] : options.extra_files) emit(name, bytes);

  emit("camera.json",
       rig_to_json(bundle.rig, V, U, bundle.rig.baseline).dump(2) + "\n");

  if (bundle.params) {
    json deg;
    deg["beta"] = {bundle.params->beta[0], bundle.params->beta[1],
                   bundle.params->beta[2]};
    deg["background_light"] = {bundle.params->background_light[0],
                               bundle.params->background_light[1],
                               bundle.params->background_light[2]};
    deg["noise_sigma"] = bundle.params->noise_sigma;
    deg["seed"] = bundle.params->seed;
    if (!bundle.meta.preset.empty()) deg["preset"] = bundle.meta.preset;
    emit("degradation.json", deg.dump(2) + "\n");
  }

  json manifest;
  manifest["format"] = "lfuw-scene";
  manifest["version"] = 1;
  manifest["name"] = bundle.meta.name;
  manifest["seed"] = bundle.meta.seed;
  if (!bundle.meta.preset.empty()) manifest["preset"] = bundle.meta.preset;
  manifest["angular_rows"] = V;
  manifest["angular_cols"] = U;
  manifest["height"] = primary.height;
  manifest["width"] = primary.width;
  manifest["primary_role"] = !options.role_label.empty()
                                 ? options.role_label
                                 : (bundle.lf_degraded ? "degraded" : "clean");
  manifest["has_clean"] = static_cast<bool>(bundle.lf_clean);
  manifest["has_depths"] = !bundle.depths.empty();
  manifest["depth_format"] = options.depth_as_png16 ? "png16" : "pfm";
  if (options.depth_as_png16) manifest["depth_scales"] = depth_scales;
  manifest["recenter_d0"] = bundle.meta.recenter_d0;
  if (!options.config_json.empty())
    manifest["config"] = json::parse(options.config_json);
  json files = json::object();
  std::string combined;
  for (const auto& [name, crc] : checksums) {
    files[name] = crc;
    combined += name + ":" + crc + "\n";
  }
  manifest["files"] = files;
  const std::string checksum = crc32_hex(combined);
  manifest["checksum"] = checksum;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  return {dir / "manifest.json", checksum, static_cast<int>(checksums.size()) + 1};
}

SceneBundle load_scene(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const IoFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw MalformedManifest("manifest.json: " + std::string(e.what()));
  }

  auto require = [&](const char* key) -> const json& {
    if (!manifest.contains(key))
      throw MalformedManifest("manifest.json: missing key '" + std::string(key) + "'");
    return manifest.at(key);
  };
  if (require("format") != "lfuw-scene")
    throw MalformedManifest("manifest.json: not a scene manifest");

  const int V = require("angular_rows").get<int>();
  const int U = require("angular_cols").get<int>();
  const Index H = require("height").get<Index>();
  const Index W = require("width").get<Index>();
  if (V <= 0 || U <= 0 || V % 2 == 0 || U % 2 == 0)
    throw MalformedManifest("manifest.json: angular grid must be odd-sized");

  // Verify the per-file checksums and the combined digest before decoding.
  const json& files = require("files");
  std::string combined;
  for (auto it = files.begin(); it != files.end(); ++it) {
    const fs::path p = dir / it.key();
    if (!fs::exists(p)) {
      int v = -1, u = -1;
      if (std::sscanf(it.key().c_str(), "view_%d_%d.png", &v, &u) == 2 ||
          std::sscanf(it.key().c_str(), "clean_view_%d_%d.png", &v, &u) == 2)
        throw MissingView("missing view (" + std::to_string(v) + "," +
                          std::to_string(u) + "): " + it.key());
      throw IoFailure("missing file " + it.key());
    }
    const std::string crc = crc32_hex(read_file(p));
    if (crc != it.value().get<std::string>())
      throw ChecksumMismatch("checksum mismatch for " + it.key());
    combined += it.key() + ":" + crc + "\n";
  }
  if (crc32_hex(combined) != require("checksum").get<std::string>())
    throw ChecksumMismatch("combined checksum mismatch");

  SceneBundle bundle;
  bundle.meta.name = manifest.value("name", "");
  bundle.meta.seed = manifest.value("seed", 0ULL);
  bundle.meta.preset = manifest.value("preset", "");
  bundle.meta.recenter_d0 = manifest.value("recenter_d0", 0.0);

  {
    json cam;
    try {
      cam = json::parse(read_file(dir / "camera.json"));
    } catch (const std::exception& e) {
      throw MalformedManifest("camera.json: " + std::string(e.what()));
    }
    bundle.rig.focal_length = cam.at("focal_length").get<double>();
    bundle.rig.baseline = cam.at("baseline").get<double>();
    bundle.rig.sensor_size = cam.at("sensor_size").get<double>();
    bundle.rig.resolution = cam.at("resolution").get<double>();
  }

  const bool has_clean = manifest.value("has_clean", false);
  const std::string role = require("primary_role").get<std::string>();
  auto load_lf = [&](const char* prefix) {
    std::vector<Image> views;
    views.reserve(static_cast<size_t>(V) * U);
    for (int v = 0; v < V; ++v) {
      for (int u = 0; u < U; ++u) {
        const fs::path p = dir / view_file(prefix, v, u);
        if (!fs::exists(p))
          throw MissingView("missing view (" + std::to_string(v) + "," +
                            std::to_string(u) + ")");
        Image im = read_png16(p);
        if (im.height() != H || im.width() != W)
          throw MalformedManifest("view size mismatch in " + p.string());
        views.push_back(std::move(im));
      }
    }
    return make_lightfield(V, U, H, W, std::move(views));
  };

  if (role == "degraded") {
    bundle.lf_degraded = load_lf("");
    if (has_clean) bundle.lf_clean = load_lf("clean_");
  } else if (role == "clean" || role == "enhanced") {
    bundle.lf_clean = load_lf("");
  } else {
    throw MalformedManifest("manifest.json: unknown primary_role '" + role + "'");
  }

  if (manifest.value("has_depths", false)) {
    const bool png16 = manifest.value("depth_format", "pfm") == "png16";
    for (int v = 0; v < V; ++v) {
      for (int u = 0; u < U; ++u) {
        const std::string name = depth_file(v, u, png16);
        DepthMap d;
        if (png16) {
          const auto& sc = manifest.at("depth_scales").at(name);
          d.values = read_png16_gray(dir / name, sc.at(0).get<double>(),
                                     sc.at(1).get<double>());
        } else {
          d.values = read_pfm(dir / name);
        }
        if (d.values.rows() != H || d.values.cols() != W)
          throw MalformedManifest("depth size mismatch in " + name);
        bundle.depths.push_back(std::move(d));
      }
    }
  }

  if (fs::exists(dir / "degradation.json")) {
    json deg;
    try {
      deg = json::parse(read_file(dir / "degradation.json"));
    } catch (const std::exception& e) {
      throw MalformedManifest("degradation.json: " + std::string(e.what()));
    }
    DegradationParams p;
    for (int c = 0; c < 3; ++c) {
      p.beta[c] = deg.at("beta").at(c).get<double>();
      p.background_light[c] = deg.at("background_light").at(c).get<double>();
    }
    p.noise_sigma = deg.value("noise_sigma", 0.0);
    p.seed = deg.value("seed", 0ULL);
    bundle.params = p;
  }

  return bundle;
}

}  // namespace lfuw
