// lfuw: batch tool for synthesizing, degrading, enhancing, and evaluating
// underwater 4-D light fields. Exit codes: 0 ok, 2 configuration error,
// 3 I/O error, 4 degraded numerical path (beta fit fell back to zero).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <json.hpp>

#include "lfuw/dataset_io.hpp"
#include "lfuw/degrade.hpp"
#include "lfuw/enhance.hpp"
#include "lfuw/metrics.hpp"
#include "lfuw/scene.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace lfuw;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

TextureKind texture_from_name(const std::string& name) {
  if (name == "checker") return TextureKind::kChecker;
  if (name == "noise") return TextureKind::kValueNoise;
  if (name == "gradient") return TextureKind::kGradient;
  throw CliError(kExitConfig, "unknown texture '" + name + "'");
}

GeometryKind geometry_from_name(const std::string& name) {
  if (name == "plane") return GeometryKind::kPlane;
  if (name == "slanted") return GeometryKind::kSlantedPlane;
  if (name == "sphere_cap") return GeometryKind::kSphereCap;
  throw CliError(kExitConfig, "unknown geometry '" + name + "'");
}

SceneSpec parse_scene_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kExitIo, "cannot open spec file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    // nlohmann reports "at line L, column C" for stream input.
    throw CliError(kExitConfig, "spec file " + path.string() + ": " + e.what());
  }
  try {
    SceneSpec spec;
    spec.height = j.value("height", 256);
    spec.width = j.value("width", 256);
    spec.seed = j.value("seed", 1ULL);
    if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty())
      throw CliError(kExitConfig, "spec file needs a non-empty 'layers' array");
    for (const auto& lj : j["layers"]) {
      LayerSpec l;
      l.geometry = geometry_from_name(lj.value("geometry", "plane"));
      l.depth = lj.value("depth", 4.0);
      l.tilt_x = lj.value("tilt_x", 0.0);
      l.tilt_y = lj.value("tilt_y", 0.0);
      l.center_y = lj.value("center_y", 0.5);
      l.center_x = lj.value("center_x", 0.5);
      l.radius = lj.value("radius", 0.25);
      l.depth_near = lj.value("depth_near", l.depth * 0.7);
      l.texture = texture_from_name(lj.value("texture", "noise"));
      l.period = lj.value("period", 16.0);
      l.untextured = lj.value("untextured", false);
      spec.layers.push_back(l);
    }
    return spec;
  } catch (const CliError&) {
    throw;
  } catch (const json::exception& e) {
    throw CliError(kExitConfig, "spec file " + path.string() + ": " + e.what());
  }
}

SceneSpec builtin_spec(const std::string& name, Index height, Index width,
                       std::uint64_t seed) {
  SceneSpec spec;
  spec.height = height;
  spec.width = width;
  spec.seed = seed;
  LayerSpec bg;
  bg.geometry = GeometryKind::kSlantedPlane;
  bg.depth = 4.2;
  bg.tilt_x = 0.004;
  bg.tilt_y = -0.003;
  bg.texture = TextureKind::kValueNoise;
  bg.period = 18.0;
  spec.layers.push_back(bg);
  if (name == "default") {
    LayerSpec cap;
    cap.geometry = GeometryKind::kSphereCap;
    cap.depth = 2.1;
    cap.depth_near = 1.6;
    cap.radius = 0.22;
    cap.center_y = 0.42;
    cap.center_x = 0.58;
    cap.texture = TextureKind::kChecker;
    cap.period = 13.0;
    spec.layers.push_back(cap);
    return spec;
  }
  if (name == "hard") {
    // Rugged variant: more relief, finer texture, a gradient patch.
    spec.layers[0].period = 9.0;
    LayerSpec mid;
    mid.geometry = GeometryKind::kSphereCap;
    mid.depth = 2.4;
    mid.depth_near = 1.8;
    mid.radius = 0.3;
    mid.center_y = 0.35;
    mid.center_x = 0.3;
    mid.texture = TextureKind::kGradient;
    spec.layers.push_back(mid);
    LayerSpec cap;
    cap.geometry = GeometryKind::kSphereCap;
    cap.depth = 1.45;
    cap.depth_near = 1.05;
    cap.radius = 0.16;
    cap.center_y = 0.6;
    cap.center_x = 0.65;
    cap.texture = TextureKind::kChecker;
    cap.period = 7.0;
    spec.layers.push_back(cap);
    LayerSpec cap2;
    cap2.geometry = GeometryKind::kSphereCap;
    cap2.depth = 0.95;
    cap2.depth_near = 0.78;
    cap2.radius = 0.1;
    cap2.center_y = 0.72;
    cap2.center_x = 0.25;
    cap2.texture = TextureKind::kValueNoise;
    cap2.period = 5.0;
    spec.layers.push_back(cap2);
    return spec;
  }
  throw CliError(kExitConfig, "unknown builtin scene '" + name + "'");
}

// Shifts every view (and its depth map) by d0 * angular offset so the
// zero-parallax plane moves; depths use edge replication like the views.
void recenter_bundle(SceneBundle& bundle, LightField& lf,
                     std::vector<DepthMap>& depths, double d0) {
  lf = recenter_zero_parallax(lf, d0);
  const int U = lf.angular_cols;
  for (int v = 0; v < lf.angular_rows; ++v)
    for (int u = 0; u < U; ++u) {
      const double dv = (v - lf.center_row()) * d0;
      const double du = (u - lf.center_col()) * d0;
      Mat& m = depths[size_t(v) * U + u].values;
      Mat shifted(m.rows(), m.cols());
      for (Index x = 0; x < m.cols(); ++x)
        for (Index y = 0; y < m.rows(); ++y)
          shifted(y, x) = bilinear_clamped(m, double(y) + dv, double(x) + du);
      m = std::move(shifted);
    }
  bundle.meta.recenter_d0 += d0;
}

SceneBundle load_scene_or_die(const fs::path& dir) {
  try {
    return load_scene(dir);
  } catch (const Error& e) {
    throw CliError(kExitIo, std::string(e.what()));
  }
}

DisparityMap gt_center_disparity(const SceneBundle& bundle) {
  const LightField& lf = bundle.primary();
  const size_t center =
      size_t(lf.center_row()) * lf.angular_cols + lf.center_col();
  auto disp = disparity_from_depth(bundle.rig, bundle.depths[center]);
  if (bundle.meta.recenter_d0 != 0.0) disp.values -= bundle.meta.recenter_d0;
  return disp;
}

std::string pfm_bytes(const Mat& values) {
  char header[64];
  std::snprintf(header, sizeof(header), "Pf\n%lld %lld\n-1.0\n",
                static_cast<long long>(values.cols()),
                static_cast<long long>(values.rows()));
  std::string out = header;
  for (Index y = values.rows() - 1; y >= 0; --y)
    for (Index x = 0; x < values.cols(); ++x) {
      const float f = static_cast<float>(values(y, x));
      out.append(reinterpret_cast<const char*>(&f), sizeof(float));
    }
  return out;
}

int cmd_generate(const std::optional<std::string>& spec_file,
                 const std::string& builtin, std::uint64_t seed, bool seed_set,
                 Index height, Index width, int angular_rows, int angular_cols,
                 double max_disparity, double baseline, double focal,
                 double sensor, double recenter_d0, const std::string& name,
                 const fs::path& out) {
  SceneSpec spec = spec_file ? parse_scene_spec(*spec_file)
                             : builtin_spec(builtin, height, width, seed);
  if (spec_file && seed_set) spec.seed = seed;  // explicit flag wins

  CameraRig rig;
  if (baseline > 0.0) {
    rig.focal_length = focal;
    rig.sensor_size = sensor;
    rig.resolution = double(spec.width);
    rig.baseline = baseline;
  } else {
    rig = suggest_rig(spec, max_disparity, focal, sensor);
  }

  RenderedLF r = render_lf(spec, rig, angular_rows, angular_cols);
  auto scene = gen_scene(spec);
  auto disp = disparity_from_depth(rig, scene.depth);
  const double dmax = disp.values.maxCoeff(), dmin = disp.values.minCoeff();
  std::printf("scene '%s': %dx%d views of %lldx%lld, %zu layers\n", name.c_str(),
              angular_rows, angular_cols, (long long)spec.height,
              (long long)spec.width, spec.layers.size());
  std::printf("disparity range [%.3f, %.3f] px/view (baseline %.6g)\n",
              dmin - recenter_d0, dmax - recenter_d0, rig.baseline);
  if (std::max(std::abs(dmax - recenter_d0), std::abs(dmin - recenter_d0)) >
      3.0 + 1e-9)
    std::printf("warning: disparity exceeds the [-3, 3] px dataset budget\n");

  SceneBundle bundle;
  bundle.lf_clean = std::move(r.lf);
  bundle.depths = std::move(r.view_depths);
  bundle.rig = rig;
  bundle.meta.name = name;
  bundle.meta.seed = spec.seed;
  if (recenter_d0 != 0.0)
    recenter_bundle(bundle, *bundle.lf_clean, bundle.depths, recenter_d0);

  json config;
  config["command"] = "generate";
  config["builtin"] = spec_file ? "" : builtin;
  config["spec_file"] = spec_file ? *spec_file : "";
  config["seed"] = spec.seed;
  config["height"] = spec.height;
  config["width"] = spec.width;
  config["angular_rows"] = angular_rows;
  config["angular_cols"] = angular_cols;
  config["max_disparity"] = max_disparity;
  config["baseline"] = rig.baseline;
  config["focal_length"] = focal;
  config["sensor_size"] = sensor;
  config["recenter_d0"] = recenter_d0;
  SaveOptions opt;
  opt.config_json = config.dump();
  try {
    auto summary = save_scene(bundle, out, opt);
    std::printf("wrote %d files to %s (checksum %s)\n", summary.file_count,
                out.string().c_str(), summary.checksum.c_str());
  } catch (const Error& e) {
    throw CliError(kExitIo, e.what());
  }
  return 0;
}

int cmd_degrade(const fs::path& in, const std::string& preset, double sigma,
                std::uint64_t seed, double recenter_d0, const fs::path& out) {
  WaterPreset wp = preset_from_name(preset);  // UnknownPreset -> config error
  SceneBundle bundle = load_scene_or_die(in);
  if (!bundle.lf_clean)
    throw CliError(kExitIo, "input scene has no clean light field");
  if (bundle.depths.empty())
    throw CliError(kExitIo, "input scene has no depth maps");

  DegradationParams params = sample_preset(wp, seed);
  params.noise_sigma = sigma;
  params.seed = seed;

  SceneBundle result;
  result.lf_degraded = degrade(*bundle.lf_clean, bundle.depths, params);
  result.depths = bundle.depths;
  result.rig = bundle.rig;
  result.params = params;
  result.meta = bundle.meta;
  result.meta.preset = preset;
  if (recenter_d0 != 0.0)
    recenter_bundle(result, *result.lf_degraded, result.depths, recenter_d0);

  json config;
  config["command"] = "degrade";
  config["input"] = in.string();
  config["preset"] = preset;
  config["sigma"] = sigma;
  config["seed"] = seed;
  config["recenter_d0"] = recenter_d0;
  SaveOptions opt;
  opt.config_json = config.dump();
  try {
    auto summary = save_scene(result, out, opt);
    std::printf("degraded '%s' with preset %s (sigma %.4g) -> %s\n",
                result.meta.name.c_str(), preset.c_str(), sigma,
                out.string().c_str());
    std::printf("beta = [%.4f %.4f %.4f], A = [%.3f %.3f %.3f], checksum %s\n",
                params.beta[0], params.beta[1], params.beta[2],
                params.background_light[0], params.background_light[1],
                params.background_light[2], summary.checksum.c_str());
  } catch (const Error& e) {
    throw CliError(kExitIo, e.what());
  }
  return 0;
}

int cmd_enhance(const fs::path& in, int stages, const fs::path& clean_dir,
                const fs::path& out) {
  SceneBundle bundle = load_scene_or_die(in);
  const LightField& degraded = bundle.primary();

  EnhanceConfig config;
  config.stages = stages;
  config.zero_parallax_offset = bundle.meta.recenter_d0;

  EnhanceReferences refs;
  std::optional<DisparityMap> gt_disp;
  if (!bundle.depths.empty()) {
    gt_disp = gt_center_disparity(bundle);
    refs.disparity_gt = &*gt_disp;
  }
  SceneBundle clean_bundle;
  if (!clean_dir.empty()) {
    clean_bundle = load_scene_or_die(clean_dir);
    if (clean_bundle.lf_clean) refs.clean = &*clean_bundle.lf_clean;
  }

  ProgressiveResult result;
  bool beta_fallback = false;
  try {
    result = progressive_enhance(degraded, bundle.rig, config, refs);
  } catch (const InsufficientSamples& e) {
    std::fprintf(stderr, "beta fit failed (%s); writing beta=0 fallback\n",
                 e.what());
    beta_fallback = true;
    config.beta_override = Vec3::Zero();
    result = progressive_enhance(degraded, bundle.rig, config, refs);
  }

  json reports = json::array();
  for (const auto& r : result.reports) {
    json jr;
    jr["stage"] = r.stage_index;
    jr["beta"] = {r.beta[0], r.beta[1], r.beta[2]};
    jr["background_light"] = {r.background_light[0], r.background_light[1],
                              r.background_light[2]};
    if (r.disparity_mae) jr["disparity_mae_px"] = *r.disparity_mae;
    if (r.psnr) jr["psnr_db"] = *r.psnr;
    jr["seconds"] = r.seconds;
    reports.push_back(jr);
  }

  SceneBundle out_bundle;
  out_bundle.lf_clean = result.lf;
  out_bundle.depths = bundle.depths;
  out_bundle.rig = bundle.rig;
  out_bundle.meta = bundle.meta;

  json config_json;
  config_json["command"] = "enhance";
  config_json["input"] = in.string();
  config_json["stages"] = stages;
  config_json["beta_fallback"] = beta_fallback;
  SaveOptions opt;
  opt.role_label = "enhanced";
  opt.config_json = config_json.dump();
  opt.extra_files.emplace_back("stage_reports.json", reports.dump(2) + "\n");
  opt.extra_files.emplace_back("disparity.pfm", pfm_bytes(result.disparity.values));
  opt.extra_files.emplace_back("reliability.pfm",
                               pfm_bytes(result.reliability.values));
  try {
    save_scene(out_bundle, out, opt);
  } catch (const Error& e) {
    throw CliError(kExitIo, e.what());
  }

  for (const auto& r : result.reports) {
    std::printf("stage %d: beta=[%.4f %.4f %.4f]", r.stage_index, r.beta[0],
                r.beta[1], r.beta[2]);
    if (r.disparity_mae) std::printf(" mae=%.4f px", *r.disparity_mae);
    if (r.psnr) std::printf(" psnr=%.2f dB", *r.psnr);
    std::printf(" (%.1f s)\n", r.seconds);
  }
  std::printf("enhanced %d stage(s) -> %s\n", stages, out.string().c_str());
  return beta_fallback ? kExitNumerical : 0;
}

int cmd_eval(const fs::path& result_dir, const fs::path& reference_dir,
             const std::string& csv_path) {
  SceneBundle result = load_scene_or_die(result_dir);
  SceneBundle reference = load_scene_or_die(reference_dir);
  const LightField& a = result.primary();
  const LightField& b = reference.primary();

  MetricReport report;
  try {
    report.psnr = psnr(a, b);
    report.ssim = ssim(a, b);
  } catch (const ShapeMismatch& e) {
    throw CliError(kExitConfig, e.what());
  }
  report.uiqm = uiqm(a.center_view());
  report.uciqe = uciqe(a.center_view());

  if (fs::exists(result_dir / "disparity.pfm") && !reference.depths.empty()) {
    DisparityMap est;
    est.values = read_pfm(result_dir / "disparity.pfm");
    est.valid = BoolMat::Constant(est.values.rows(), est.values.cols(), true);
    auto gt = gt_center_disparity(reference);
    if (est.values.rows() == gt.values.rows() &&
        est.values.cols() == gt.values.cols()) {
      auto err = disparity_error(est, gt);
      report.disparity_mae = err.mae;
      report.badpix_ratio = err.badpix_ratio;
    }
  }

  std::printf("metric            value\n");
  std::printf("psnr (dB)         %.4f\n", report.psnr);
  std::printf("ssim              %.6f\n", report.ssim);
  std::printf("uiqm              %.6f\n", report.uiqm);
  std::printf("uciqe             %.6f\n", report.uciqe);
  if (report.disparity_mae)
    std::printf("disparity mae     %.4f px\n", *report.disparity_mae);
  if (report.badpix_ratio)
    std::printf("badpix(0.2)       %.4f\n", *report.badpix_ratio);
  std::printf("%s\n%s\n", report.csv_header().c_str(), report.csv_row().c_str());

  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) throw CliError(kExitIo, "cannot write " + csv_path);
    csv << report.csv_header() << "\n" << report.csv_row() << "\n";
  }
  return 0;
}

int cmd_refocus(const fs::path& in, std::optional<double> slope,
                std::optional<double> depth, const fs::path& out) {
  if (!slope && !depth)
    throw CliError(kExitConfig, "refocus needs --slope or --depth");
  SceneBundle bundle = load_scene_or_die(in);
  double s;
  if (depth) {
    if (slope)
      std::fprintf(stderr, "warning: both --slope and --depth given; depth wins\n");
    if (*depth <= 0.0) throw CliError(kExitConfig, "depth must be positive");
    s = bundle.rig.disparity_scale() / *depth - bundle.meta.recenter_d0;
  } else {
    s = *slope;
  }
  Image img = refocus(bundle.primary(), s);
  try {
    write_png16(out, img);
  } catch (const Error& e) {
    throw CliError(kExitIo, e.what());
  }
  std::printf("refocused at slope %.4f px/view -> %s\n", s, out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"underwater 4-D light-field toolkit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "render a clean procedural scene");
  std::string gen_spec, gen_builtin = "default", gen_name = "scene";
  std::uint64_t gen_seed = 7;
  Index gen_h = 256, gen_w = 256;
  int gen_v = 5, gen_u = 5;
  double gen_maxd = 2.8, gen_baseline = 0.0, gen_focal = 35.0, gen_sensor = 32.0;
  double gen_recenter = 0.0;
  std::string gen_out;
  gen->add_option("--spec", gen_spec, "scene spec JSON file");
  gen->add_option("--builtin", gen_builtin, "builtin scene: default|hard");
  auto* seed_opt = gen->add_option("--seed", gen_seed, "scene seed");
  gen->add_option("--height", gen_h, "spatial height");
  gen->add_option("--width", gen_w, "spatial width");
  gen->add_option("--angular-rows", gen_v, "angular rows (odd)");
  gen->add_option("--angular-cols", gen_u, "angular cols (odd)");
  gen->add_option("--max-disparity", gen_maxd, "disparity budget for auto baseline");
  gen->add_option("--baseline", gen_baseline, "explicit baseline (overrides budget)");
  gen->add_option("--focal", gen_focal, "focal length");
  gen->add_option("--sensor", gen_sensor, "sensor size");
  gen->add_option("--recenter", gen_recenter, "zero-parallax recentering d0");
  gen->add_option("--name", gen_name, "scene name");
  gen->add_option("--out", gen_out, "output directory")->required();

  auto* deg = app.add_subcommand("degrade", "apply an underwater preset");
  std::string deg_in, deg_preset = "blue", deg_out;
  double deg_sigma = 0.0, deg_recenter = 0.0;
  std::uint64_t deg_seed = 1;
  deg->add_option("--in", deg_in, "clean scene directory")->required();
  deg->add_option("--preset", deg_preset,
                  "water preset: blue|green|yellow|other-color|low-light");
  deg->add_option("--sigma", deg_sigma, "Gaussian noise level");
  deg->add_option("--seed", deg_seed, "degradation seed");
  deg->add_option("--recenter", deg_recenter, "zero-parallax recentering d0");
  deg->add_option("--out", deg_out, "output directory")->required();

  auto* enh = app.add_subcommand("enhance", "progressive model-based enhancement");
  std::string enh_in, enh_clean, enh_out;
  int enh_stages = 3;
  enh->add_option("--in", enh_in, "degraded scene directory")->required();
  enh->add_option("--stages", enh_stages, "number of refinement stages");
  enh->add_option("--clean", enh_clean, "clean reference directory (for reports)");
  enh->add_option("--out", enh_out, "output directory")->required();

  auto* ev = app.add_subcommand("eval", "image quality metrics");
  std::string ev_result, ev_reference, ev_csv;
  ev->add_option("--result", ev_result, "result scene directory")->required();
  ev->add_option("--reference", ev_reference, "reference scene directory")->required();
  ev->add_option("--csv", ev_csv, "also write a CSV file");

  auto* ref = app.add_subcommand("refocus", "shift-and-add refocusing");
  std::string ref_in, ref_out;
  double ref_slope = 0.0, ref_depth = 0.0;
  ref->add_option("--in", ref_in, "scene directory")->required();
  auto* slope_opt = ref->add_option("--slope", ref_slope, "slope in px/view");
  auto* depth_opt = ref->add_option("--depth", ref_depth, "focus depth (scene units)");
  ref->add_option("--out", ref_out, "output PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (gen->parsed())
      return cmd_generate(
          gen_spec.empty() ? std::nullopt : std::optional<std::string>(gen_spec),
          gen_builtin, gen_seed, seed_opt->count() > 0, gen_h, gen_w, gen_v,
          gen_u, gen_maxd, gen_baseline, gen_focal, gen_sensor, gen_recenter,
          gen_name, gen_out);
    if (deg->parsed())
      return cmd_degrade(deg_in, deg_preset, deg_sigma, deg_seed, deg_recenter,
                         deg_out);
    if (enh->parsed()) return cmd_enhance(enh_in, enh_stages, enh_clean, enh_out);
    if (ev->parsed()) return cmd_eval(ev_result, ev_reference, ev_csv);
    if (ref->parsed())
      return cmd_refocus(
          ref_in,
          slope_opt->count() ? std::optional<double>(ref_slope) : std::nullopt,
          depth_opt->count() ? std::optional<double>(ref_depth) : std::nullopt,
          ref_out);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code;
  } catch (const UnknownPreset& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const ValueOutOfRange& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const EmptySpec& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return 0;
}
