#pragma once

#include <cstdint>
#include <vector>

#include "lfuw/light_field.hpp"
#include "lfuw/types.hpp"

namespace lfuw {

// ---------------------------------------------------------------------------
// Procedural layered scenes. A scene is a back-to-front stack of textured
// surfaces; the farthest layer must cover the whole frame. Layer geometry is
// analytic, textures are rasterized once (on a padded grid) and every view
// samples the same rasters, so a scene point observed from two views carries
// identical radiance.
// ---------------------------------------------------------------------------

enum class GeometryKind { kPlane, kSlantedPlane, kSphereCap };
enum class TextureKind { kChecker, kValueNoise, kGradient };

struct LayerSpec {
  GeometryKind geometry = GeometryKind::kPlane;

  // kPlane: constant depth. kSlantedPlane: depth at the frame center plus
  // tilt_x/tilt_y (depth units per pixel). kSphereCap: spherical bulge from
  // `depth` (base/far) to depth_near (apex), centered at fractional
  // (center_y, center_x) with radius a fraction of min(H, W).
  double depth = 10.0;
  double tilt_x = 0.0;
  double tilt_y = 0.0;
  double center_y = 0.5;
  double center_x = 0.5;
  double radius = 0.25;
  double depth_near = 2.0;

  TextureKind texture = TextureKind::kValueNoise;
  double period = 16.0;     // checker cell size / noise feature scale, pixels
  bool untextured = false;  // flat color; flagged so tests can filter it out
};

struct SceneSpec {
  Index height = 256;
  Index width = 256;
  std::uint64_t seed = 1;
  std::vector<LayerSpec> layers;
};

struct CenterScene {
  Image texture;
  DepthMap depth;
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic> layer_id;  // back-to-front index
};

struct RenderedLF {
  LightField lf;
  std::vector<DepthMap> view_depths;  // one per view, v-major order
  double zero_parallax_d0 = 0.0;      // raw disparity of the zero-parallax plane
};

// Surface depth extrema over the frame (used for disparity budgeting).
double min_scene_depth(const SceneSpec& spec);
double max_scene_depth(const SceneSpec& spec);

// Deterministic center-view rasterization with exact layered occlusion.
CenterScene gen_scene(const SceneSpec& spec);

// Renders all views by back-to-front compositing; each layer is sampled at
// the sub-pixel position dictated by its own disparity, so occlusion is
// exact and the center view reproduces gen_scene's texture bit for bit.
// zero_parallax_d0 places the zero-parallax plane at disparity d0 during
// rendering (content at raw disparity d0 stays put across views), the
// in-camera analog of recenter_zero_parallax without border replication.
RenderedLF render_lf(const SceneSpec& spec, const CameraRig& rig,
                     int angular_rows, int angular_cols,
                     double zero_parallax_d0 = 0.0);

// Heightfield variant driven by a rasterized center scene. Disocclusions are
// filled by the surface itself (no hidden layers are known), which is exact
// for single-layer scenes.
RenderedLF render_lf(const CenterScene& scene, const CameraRig& rig,
                     int angular_rows, int angular_cols);

// Picks a baseline so the scene's largest absolute disparity equals
// max_abs_disparity (default matches the +-3 px dataset convention).
CameraRig suggest_rig(const SceneSpec& spec, double max_abs_disparity = 3.0,
                      double focal_length = 35.0, double sensor_size = 32.0);

// Baseline plus zero-parallax offset placing the scene's disparities
// symmetrically in [-max_abs_disparity, max_abs_disparity]; this maximizes
// the usable parallax for a given budget the way recentered datasets do.
CameraRig suggest_recentered_rig(const SceneSpec& spec, double* d0_out,
                                 double max_abs_disparity = 2.5,
                                 double focal_length = 35.0,
                                 double sensor_size = 32.0);

}  // namespace lfuw
