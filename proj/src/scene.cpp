#include "lfuw/scene.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lfuw/rng.hpp"

namespace lfuw {

namespace {

std::uint64_t as_counter(std::int64_t v) {
  return static_cast<std::uint64_t>(v) ^ 0x8000000000000000ULL;
}

// Surface depth at continuous frame coordinates, extended beyond both the
// frame and the layer's coverage region (caps fall back to their base depth).
double layer_depth(const LayerSpec& l, Index h, Index w, double y, double x) {
  switch (l.geometry) {
    case GeometryKind::kPlane:
      return l.depth;
    case GeometryKind::kSlantedPlane:
      return l.depth + l.tilt_x * (x - 0.5 * static_cast<double>(w - 1)) +
             l.tilt_y * (y - 0.5 * static_cast<double>(h - 1));
    case GeometryKind::kSphereCap: {
      const double cy = l.center_y * static_cast<double>(h - 1);
      const double cx = l.center_x * static_cast<double>(w - 1);
      const double r = l.radius * static_cast<double>(std::min(h, w));
      const double rho2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
      const double t = 1.0 - rho2 / (r * r);
      if (t <= 0.0) return l.depth;
      return l.depth - (l.depth - l.depth_near) * std::sqrt(t);
    }
  }
  return l.depth;
}

bool layer_covers(const LayerSpec& l, Index h, Index w, double y, double x) {
  if (l.geometry != GeometryKind::kSphereCap) return true;
  const double cy = l.center_y * static_cast<double>(h - 1);
  const double cx = l.center_x * static_cast<double>(w - 1);
  const double r = l.radius * static_cast<double>(std::min(h, w));
  return (y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r;
}

double layer_min_depth(const LayerSpec& l, Index h, Index w) {
  switch (l.geometry) {
    case GeometryKind::kPlane:
      return l.depth;
    case GeometryKind::kSlantedPlane: {
      double m = l.depth;
      for (double y : {0.0, static_cast<double>(h - 1)})
        for (double x : {0.0, static_cast<double>(w - 1)})
          m = std::min(m, layer_depth(l, h, w, y, x));
      return m;
    }
    case GeometryKind::kSphereCap:
      return l.depth_near;
  }
  return l.depth;
}

double layer_max_depth(const LayerSpec& l, Index h, Index w) {
  double m = l.depth;
  if (l.geometry == GeometryKind::kSlantedPlane)
    for (double y : {0.0, static_cast<double>(h - 1)})
      for (double x : {0.0, static_cast<double>(w - 1)})
        m = std::max(m, layer_depth(l, h, w, y, x));
  return m;
}

Vec3 hash_color(std::uint64_t seed, std::uint64_t layer, std::uint64_t which) {
  Vec3 c;
  for (int ch = 0; ch < 3; ++ch)
    c[ch] = hash_uniform_in(0.05, 0.95, seed, layer, which,
                            static_cast<std::uint64_t>(ch));
  return c;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// One octave of lattice value noise; portable given (seed, layer, channel).
double value_noise(std::uint64_t seed, std::uint64_t layer, int channel,
                   std::uint64_t octave, double y, double x, double period) {
  const double gy = y / period, gx = x / period;
  const std::int64_t iy = static_cast<std::int64_t>(std::floor(gy));
  const std::int64_t ix = static_cast<std::int64_t>(std::floor(gx));
  const double fy = smoothstep(gy - static_cast<double>(iy));
  const double fx = smoothstep(gx - static_cast<double>(ix));
  auto lattice = [&](std::int64_t ly, std::int64_t lx) {
    return hash_uniform(seed ^ (0xA5A5ULL + octave * 1315423911ULL),
                        layer * 4 + static_cast<std::uint64_t>(channel),
                        as_counter(ly), as_counter(lx));
  };
  const double v00 = lattice(iy, ix), v01 = lattice(iy, ix + 1);
  const double v10 = lattice(iy + 1, ix), v11 = lattice(iy + 1, ix + 1);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) +
         fy * ((1.0 - fx) * v10 + fx * v11);
}

// Texture value at continuous frame coordinates (valid on the padded grid).
Vec3 texture_at(const SceneSpec& spec, size_t layer_idx, const LayerSpec& l,
                double y, double x) {
  const std::uint64_t li = static_cast<std::uint64_t>(layer_idx);
  if (l.untextured) return hash_color(spec.seed, li, 0);
  switch (l.texture) {
    case TextureKind::kChecker: {
      const Vec3 a = hash_color(spec.seed, li, 0);
      const Vec3 b = hash_color(spec.seed, li, 1);
      const std::int64_t cy = static_cast<std::int64_t>(std::floor(y / l.period));
      const std::int64_t cx = static_cast<std::int64_t>(std::floor(x / l.period));
      return (((cy + cx) % 2 + 2) % 2 == 0) ? a : b;
    }
    case TextureKind::kValueNoise: {
      Vec3 v;
      for (int ch = 0; ch < 3; ++ch) {
        const double n = 0.65 * value_noise(spec.seed, li, ch, 0, y, x, l.period) +
                         0.35 * value_noise(spec.seed, li, ch, 1, y, x,
                                            std::max(2.0, l.period * 0.5));
        // Stretch to use the full range; clamping produces saturated patches.
        v[ch] = std::min(1.0, std::max(0.0, (n - 0.5) * 1.9 + 0.5));
      }
      return v;
    }
    case TextureKind::kGradient: {
      const Vec3 a = hash_color(spec.seed, li, 0);
      const Vec3 b = hash_color(spec.seed, li, 1);
      const double theta =
          hash_uniform_in(0.0, 6.283185307179586477, spec.seed, li, 7);
      const double span = 0.9 * static_cast<double>(std::min(spec.height, spec.width));
      double t = (std::cos(theta) * x + std::sin(theta) * y) / span + 0.5;
      t = std::min(1.0, std::max(0.0, t));
      return a + t * (b - a);
    }
  }
  return Vec3::Zero();
}

struct PreparedLayer {
  LayerSpec spec;
  size_t texture_index;  // index into the original (unsorted) layer list
  Image raster;          // padded texture raster
};

struct PreparedScene {
  std::vector<PreparedLayer> layers;  // sorted back to front
  Index pad = 0;
};

void validate_spec(const SceneSpec& spec) {
  if (spec.layers.empty()) throw EmptySpec("gen_scene: scene has no layers");
  if (spec.height < 2 || spec.width < 2)
    throw DimensionMismatch("gen_scene: frame must be at least 2x2");
  for (const auto& l : spec.layers) {
    if (layer_min_depth(l, spec.height, spec.width) <= 0.0)
      throw NonPositiveDepth("gen_scene: layer depth must stay positive");
    if (l.period <= 0.0) throw ValueOutOfRange("gen_scene: texture period <= 0");
  }
}

PreparedScene prepare_scene(const SceneSpec& spec, Index pad) {
  validate_spec(spec);

  std::vector<size_t> order(spec.layers.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return layer_min_depth(spec.layers[a], spec.height, spec.width) >
           layer_min_depth(spec.layers[b], spec.height, spec.width);
  });
  if (spec.layers[order[0]].geometry == GeometryKind::kSphereCap)
    throw EmptySpec("gen_scene: farthest layer must cover the full frame");

  PreparedScene ps;
  ps.pad = pad;
  const Index rh = spec.height + 2 * pad, rw = spec.width + 2 * pad;
  for (size_t k = 0; k < order.size(); ++k) {
    PreparedLayer pl;
    pl.spec = spec.layers[order[k]];
    pl.texture_index = order[k];
    pl.raster = Image(rh, rw);
    for (Index gx = 0; gx < rw; ++gx) {
      for (Index gy = 0; gy < rh; ++gy) {
        const Vec3 c = texture_at(spec, pl.texture_index, pl.spec,
                                  static_cast<double>(gy - pad),
                                  static_cast<double>(gx - pad));
        for (int ch = 0; ch < 3; ++ch) pl.raster.at(gy, gx, ch) = c[ch];
      }
    }
    ps.layers.push_back(std::move(pl));
  }
  return ps;
}

// Disparity of `layer` along the ray through view pixel (y, x): fixed-point
// iteration of d = k / D(y - d*dv, x - d*du). Planes converge in one step.
double solve_layer_disparity(const LayerSpec& l, Index h, Index w, double k,
                             double y, double x, double dv, double du) {
  double d = k / layer_depth(l, h, w, y, x);
  if (l.geometry == GeometryKind::kPlane) return d;
  for (int it = 0; it < 12; ++it) {
    const double nd = k / layer_depth(l, h, w, y - d * dv, x - d * du);
    if (std::abs(nd - d) < 1e-13) return nd;
    d = nd;
  }
  return d;
}

}  // namespace

double min_scene_depth(const SceneSpec& spec) {
  validate_spec(spec);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& l : spec.layers)
    m = std::min(m, layer_min_depth(l, spec.height, spec.width));
  return m;
}

double max_scene_depth(const SceneSpec& spec) {
  validate_spec(spec);
  double m = 0.0;
  for (const auto& l : spec.layers)
    m = std::max(m, layer_max_depth(l, spec.height, spec.width));
  return m;
}

CenterScene gen_scene(const SceneSpec& spec) {
  PreparedScene ps = prepare_scene(spec, 0);
  const Index h = spec.height, w = spec.width;
  CenterScene out;
  out.texture = Image(h, w);
  out.depth.values.resize(h, w);
  out.layer_id.resize(h, w);
  for (Index x = 0; x < w; ++x) {
    for (Index y = 0; y < h; ++y) {
      for (size_t k = 0; k < ps.layers.size(); ++k) {
        const auto& pl = ps.layers[k];
        const double fy = static_cast<double>(y), fx = static_cast<double>(x);
        if (!layer_covers(pl.spec, h, w, fy, fx)) continue;
        for (int c = 0; c < 3; ++c) out.texture.at(y, x, c) = pl.raster.at(y, x, c);
        out.depth.values(y, x) = layer_depth(pl.spec, h, w, fy, fx);
        out.layer_id(y, x) = static_cast<int>(k);
      }
    }
  }
  return out;
}

RenderedLF render_lf(const SceneSpec& spec, const CameraRig& rig,
                     int angular_rows, int angular_cols,
                     double zero_parallax_d0) {
  if (angular_rows % 2 == 0 || angular_cols % 2 == 0)
    throw EvenAngularSize("render_lf: angular dimensions must be odd");
  if (!(rig.focal_length > 0.0) || !(rig.sensor_size > 0.0) ||
      !(rig.resolution > 0.0) || !(rig.baseline >= 0.0))
    throw DepthUnitMismatch("render_lf: invalid camera rig");

  const double k = rig.disparity_scale();
  const double d0 = zero_parallax_d0;
  const double max_off =
      std::max((angular_rows - 1) / 2, (angular_cols - 1) / 2);
  const double dmax = std::max(std::abs(k / min_scene_depth(spec) - d0),
                               std::abs(k / max_scene_depth(spec) - d0));
  const Index pad =
      std::min<Index>(128, static_cast<Index>(std::ceil(dmax * max_off)) + 2);
  PreparedScene ps = prepare_scene(spec, pad);

  const Index h = spec.height, w = spec.width;
  RenderedLF out;
  out.lf.angular_rows = angular_rows;
  out.lf.angular_cols = angular_cols;
  out.lf.height = h;
  out.lf.width = w;
  out.lf.views.assign(static_cast<size_t>(angular_rows) * angular_cols, Image());
  out.view_depths.assign(out.lf.views.size(), DepthMap());

  out.zero_parallax_d0 = d0;
  const int vc = (angular_rows - 1) / 2, uc = (angular_cols - 1) / 2;
#pragma omp parallel for schedule(static) collapse(2)
  for (int v = 0; v < angular_rows; ++v) {
    for (int u = 0; u < angular_cols; ++u) {
      const double dv = v - vc, du = u - uc;
      Image img(h, w);
      Mat depth(h, w);
      for (Index x = 0; x < w; ++x) {
        for (Index y = 0; y < h; ++y) {
          const double fy = static_cast<double>(y), fx = static_cast<double>(x);
          for (const auto& pl : ps.layers) {
            // The effective view-to-view shift is d - d0; the surface point
            // seen through (y, x) solves d = k / D(source) as usual.
            const double d = solve_layer_disparity(pl.spec, h, w, k,
                                                   fy + d0 * dv, fx + d0 * du,
                                                   dv, du);
            const double sy = fy - (d - d0) * dv, sx = fx - (d - d0) * du;
            if (!layer_covers(pl.spec, h, w, sy, sx)) continue;
            for (int c = 0; c < 3; ++c)
              img.at(y, x, c) = bilinear_clamped(
                  pl.raster.plane(c), sy + static_cast<double>(pad),
                  sx + static_cast<double>(pad));
            depth(y, x) = layer_depth(pl.spec, h, w, sy, sx);
          }
        }
      }
      const size_t idx = static_cast<size_t>(v) * angular_cols + u;
      out.lf.views[idx] = std::move(img);
      out.view_depths[idx].values = std::move(depth);
    }
  }
  return out;
}

RenderedLF render_lf(const CenterScene& scene, const CameraRig& rig,
                     int angular_rows, int angular_cols) {
  if (angular_rows % 2 == 0 || angular_cols % 2 == 0)
    throw EvenAngularSize("render_lf: angular dimensions must be odd");
  if ((scene.depth.values <= 0.0).any())
    throw NonPositiveDepth("render_lf: center scene depth must be > 0");

  const double k = rig.disparity_scale();
  const Index h = scene.texture.height(), w = scene.texture.width();
  RenderedLF out;
  out.lf.angular_rows = angular_rows;
  out.lf.angular_cols = angular_cols;
  out.lf.height = h;
  out.lf.width = w;
  out.lf.views.assign(static_cast<size_t>(angular_rows) * angular_cols, Image());
  out.view_depths.assign(out.lf.views.size(), DepthMap());

  const int vc = (angular_rows - 1) / 2, uc = (angular_cols - 1) / 2;
#pragma omp parallel for schedule(static) collapse(2)
  for (int v = 0; v < angular_rows; ++v) {
    for (int u = 0; u < angular_cols; ++u) {
      const double dv = v - vc, du = u - uc;
      Image img(h, w);
      Mat depth(h, w);
      for (Index x = 0; x < w; ++x) {
        for (Index y = 0; y < h; ++y) {
          const double fy = static_cast<double>(y), fx = static_cast<double>(x);
          double d = k / bilinear_clamped(scene.depth.values, fy, fx);
          for (int it = 0; it < 12; ++it) {
            const double nd =
                k / bilinear_clamped(scene.depth.values, fy - d * dv, fx - d * du);
            if (std::abs(nd - d) < 1e-13) break;
            d = nd;
          }
          const double sy = fy - d * dv, sx = fx - d * du;
          for (int c = 0; c < 3; ++c)
            img.at(y, x, c) = bilinear_clamped(scene.texture.plane(c), sy, sx);
          depth(y, x) = k / d;
        }
      }
      const size_t idx = static_cast<size_t>(v) * angular_cols + u;
      out.lf.views[idx] = std::move(img);
      out.view_depths[idx].values = std::move(depth);
    }
  }
  return out;
}

CameraRig suggest_rig(const SceneSpec& spec, double max_abs_disparity,
                      double focal_length, double sensor_size) {
  if (max_abs_disparity <= 0.0)
    throw ValueOutOfRange("suggest_rig: disparity budget must be > 0");
  CameraRig rig;
  rig.focal_length = focal_length;
  rig.sensor_size = sensor_size;
  rig.resolution = static_cast<double>(spec.width);
  rig.baseline = max_abs_disparity * sensor_size * min_scene_depth(spec) /
                 (focal_length * rig.resolution);
  return rig;
}

CameraRig suggest_recentered_rig(const SceneSpec& spec, double* d0_out,
                                 double max_abs_disparity, double focal_length,
                                 double sensor_size) {
  if (max_abs_disparity <= 0.0)
    throw ValueOutOfRange("suggest_recentered_rig: disparity budget must be > 0");
  const double inv_near = 1.0 / min_scene_depth(spec);
  const double inv_far = 1.0 / max_scene_depth(spec);
  CameraRig rig;
  rig.focal_length = focal_length;
  rig.sensor_size = sensor_size;
  rig.resolution = static_cast<double>(spec.width);
  // Disparity span k*(1/Dmin - 1/Dmax) fills the symmetric budget.
  const double k = (inv_near > inv_far)
                       ? 2.0 * max_abs_disparity / (inv_near - inv_far)
                       : 2.0 * max_abs_disparity * min_scene_depth(spec);
  rig.baseline = k * sensor_size / (focal_length * rig.resolution);
  if (d0_out) *d0_out = 0.5 * k * (inv_near + inv_far);
  return rig;
}

}  // namespace lfuw
