#pragma once

#include <utility>
#include <vector>

#include "lfuw/types.hpp"

namespace lfuw {

// ---------------------------------------------------------------------------
// 4-D light field: an angular_rows x angular_cols grid of sub-aperture views.
//
// Angular indexing is centered on the middle view. For a view at angular
// offset (dv, du) = (v - v_c, u - u_c), a scene point with disparity d
// appears shifted by (d*dv, d*du) pixels relative to the center view, so
// positive disparity moves content in the same direction as the camera
// offset and zero disparity sits at the zero-parallax plane.
// ---------------------------------------------------------------------------

struct LightField {
  int angular_rows = 0;  // V
  int angular_cols = 0;  // U
  Index height = 0;
  Index width = 0;
  std::vector<Image> views;  // index v * angular_cols + u

  int center_row() const { return (angular_rows - 1) / 2; }
  int center_col() const { return (angular_cols - 1) / 2; }

  Image& view(int v, int u) { return views[static_cast<size_t>(v) * angular_cols + u]; }
  const Image& view(int v, int u) const {
    return views[static_cast<size_t>(v) * angular_cols + u];
  }
  const Image& center_view() const { return view(center_row(), center_col()); }
};

// Camera rig of the planar translation array: f and s share one length unit,
// b shares the scene-depth unit, r is the pixel count along the image width.
struct CameraRig {
  double focal_length = 35.0;
  double baseline = 0.1;
  double sensor_size = 32.0;
  double resolution = 512.0;

  // f*b*r/s: disparity in pixels equals this divided by scene depth.
  double disparity_scale() const {
    return focal_length * baseline * resolution / sensor_size;
  }
};

struct DepthMap {
  Mat values;  // strictly positive, scene-length units

  Index height() const { return values.rows(); }
  Index width() const { return values.cols(); }
};

struct DisparityMap {
  Mat values;     // signed pixels per unit angular offset
  BoolMat valid;  // per-pixel validity

  Index height() const { return values.rows(); }
  Index width() const { return values.cols(); }

  static DisparityMap constant(Index h, Index w, double d) {
    return DisparityMap{Mat::Constant(h, w, d), BoolMat::Constant(h, w, true)};
  }
};

enum class EpiOrientation { kHorizontal, kVertical };

// 2-D light-field slice: one angular axis by one spatial axis, 3 channels.
// Horizontal slices are U x W at fixed (v, y); vertical slices are V x H at
// fixed (u, x). Scene depth shows up as line slope in pixels per view.
struct EpiSlice {
  EpiOrientation orientation = EpiOrientation::kHorizontal;
  int fixed_angular = 0;
  Index fixed_spatial = 0;
  std::array<Mat, 3> planes;  // (angular extent) x (spatial extent)
};

// --- construction ----------------------------------------------------------

// Validating constructor: odd angular dimensions, consistent view shapes,
// all values finite in [0, 1].
LightField make_lightfield(int angular_rows, int angular_cols, Index height,
                           Index width, std::vector<Image> views);

// --- access ----------------------------------------------------------------

Image sai(const LightField& lf, int v, int u);

EpiSlice epi(const LightField& lf, EpiOrientation orientation,
             int fixed_angular, Index fixed_spatial);

// --- geometry --------------------------------------------------------------

// d = f*b*r / (s*D) per pixel; valid everywhere.
DisparityMap disparity_from_depth(const CameraRig& rig, const DepthMap& depth);

// D = f*b*r / (s*d). Pixels with |d| <= eps or d < 0 cannot be inverted to a
// positive depth; they are flagged false in the returned mask and filled with
// the depth of the eps-clamped disparity.
std::pair<DepthMap, BoolMat> depth_from_disparity(const CameraRig& rig,
                                                  const DisparityMap& disp,
                                                  double eps = 1e-6);

// Resamples img at (y + dv*d(y,x), x + du*d(y,x)) with bilinear
// interpolation; out-of-bounds samples and samples at invalid disparity
// pixels are flagged false.
std::pair<Image, BoolMat> warp_view(const Image& img, const DisparityMap& disp,
                                    double dv, double du);

// Shift-and-add refocusing: every view shifted by slope*(v-v_c, u-u_c) and
// averaged over the views whose sample lands in bounds.
Image refocus(const LightField& lf, double slope);

// Shifts every view by d0*(v-v_c, u-u_c) so content at disparity d0 moves to
// the zero-parallax plane. Border samples that leave the frame are filled by
// edge replication; when valid_out is given it receives one mask per view
// (false on replicated pixels).
LightField recenter_zero_parallax(const LightField& lf, double d0,
                                  std::vector<BoolMat>* valid_out = nullptr);

}  // namespace lfuw
