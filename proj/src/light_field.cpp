#include "lfuw/light_field.hpp"

#include <cmath>
#include <string>

namespace lfuw {

LightField make_lightfield(int angular_rows, int angular_cols, Index height,
                           Index width, std::vector<Image> views) {
  if (angular_rows <= 0 || angular_cols <= 0 || height <= 0 || width <= 0)
    throw DimensionMismatch("make_lightfield: non-positive dimension");
  if (angular_rows % 2 == 0 || angular_cols % 2 == 0)
    throw EvenAngularSize("make_lightfield: angular dimensions must be odd, got " +
                          std::to_string(angular_rows) + "x" +
                          std::to_string(angular_cols));
  if (views.size() != static_cast<size_t>(angular_rows) * angular_cols)
    throw DimensionMismatch("make_lightfield: expected " +
                            std::to_string(angular_rows * angular_cols) +
                            " views, got " + std::to_string(views.size()));
  for (const auto& im : views) {
    if (im.height() != height || im.width() != width)
      throw DimensionMismatch("make_lightfield: view shape mismatch");
    for (const auto& p : im.planes) {
      if (!p.isFinite().all() || (p < 0.0).any() || (p > 1.0).any())
        throw ValueOutOfRange("make_lightfield: radiance must be finite in [0,1]");
    }
  }
  LightField lf;
  lf.angular_rows = angular_rows;
  lf.angular_cols = angular_cols;
  lf.height = height;
  lf.width = width;
  lf.views = std::move(views);
  return lf;
}

Image sai(const LightField& lf, int v, int u) {
  if (v < 0 || v >= lf.angular_rows || u < 0 || u >= lf.angular_cols)
    throw IndexOutOfRange("sai: view (" + std::to_string(v) + "," +
                          std::to_string(u) + ") out of range");
  return lf.view(v, u);
}

EpiSlice epi(const LightField& lf, EpiOrientation orientation, int fixed_angular,
             Index fixed_spatial) {
  EpiSlice s;
  s.orientation = orientation;
  s.fixed_angular = fixed_angular;
  s.fixed_spatial = fixed_spatial;
  if (orientation == EpiOrientation::kHorizontal) {
    if (fixed_angular < 0 || fixed_angular >= lf.angular_rows)
      throw IndexOutOfRange("epi: angular row out of range");
    if (fixed_spatial < 0 || fixed_spatial >= lf.height)
      throw IndexOutOfRange("epi: spatial row out of range");
    for (int c = 0; c < 3; ++c) {
      Mat m(lf.angular_cols, lf.width);
      for (int u = 0; u < lf.angular_cols; ++u)
        m.row(u) = lf.view(fixed_angular, u).plane(c).row(fixed_spatial);
      s.planes[static_cast<size_t>(c)] = std::move(m);
    }
  } else {
    if (fixed_angular < 0 || fixed_angular >= lf.angular_cols)
      throw IndexOutOfRange("epi: angular column out of range");
    if (fixed_spatial < 0 || fixed_spatial >= lf.width)
      throw IndexOutOfRange("epi: spatial column out of range");
    for (int c = 0; c < 3; ++c) {
      Mat m(lf.angular_rows, lf.height);
      for (int v = 0; v < lf.angular_rows; ++v)
        m.row(v) = lf.view(v, fixed_angular).plane(c).col(fixed_spatial).transpose();
      s.planes[static_cast<size_t>(c)] = std::move(m);
    }
  }
  return s;
}

namespace {

void check_rig(const CameraRig& rig, const char* where) {
  if (!(rig.focal_length > 0.0) || !(rig.sensor_size > 0.0) ||
      !(rig.resolution > 0.0) || !(rig.baseline >= 0.0) ||
      !std::isfinite(rig.focal_length) || !std::isfinite(rig.baseline) ||
      !std::isfinite(rig.sensor_size) || !std::isfinite(rig.resolution))
    throw DepthUnitMismatch(std::string(where) + ": invalid camera rig");
}

}  // namespace

DisparityMap disparity_from_depth(const CameraRig& rig, const DepthMap& depth) {
  check_rig(rig, "disparity_from_depth");
  if (!depth.values.isFinite().all() || (depth.values <= 0.0).any())
    throw NonPositiveDepth("disparity_from_depth: depth must be finite and > 0");
  const double k = rig.disparity_scale();
  DisparityMap out;
  out.values = k / depth.values;
  out.valid = BoolMat::Constant(depth.height(), depth.width(), true);
  return out;
}

std::pair<DepthMap, BoolMat> depth_from_disparity(const CameraRig& rig,
                                                  const DisparityMap& disp,
                                                  double eps) {
  check_rig(rig, "depth_from_disparity");
  if (!(rig.baseline > 0.0))
    throw DepthUnitMismatch("depth_from_disparity: baseline must be > 0");
  const double k = rig.disparity_scale();
  const Index h = disp.height(), w = disp.width();
  DepthMap depth;
  depth.values.resize(h, w);
  BoolMat valid(h, w);
  for (Index x = 0; x < w; ++x) {
    for (Index y = 0; y < h; ++y) {
      const double d = disp.values(y, x);
      const bool ok = disp.valid(y, x) && std::isfinite(d) && d > eps;
      valid(y, x) = ok;
      depth.values(y, x) = k / (ok ? d : eps);
    }
  }
  return {std::move(depth), std::move(valid)};
}

std::pair<Image, BoolMat> warp_view(const Image& img, const DisparityMap& disp,
                                    double dv, double du) {
  if (img.height() != disp.height() || img.width() != disp.width())
    throw ShapeMismatch("warp_view: image and disparity shapes differ");
  const Index h = img.height(), w = img.width();
  Image out(h, w);
  BoolMat valid(h, w);
  for (Index x = 0; x < w; ++x) {
    for (Index y = 0; y < h; ++y) {
      const double d = disp.values(y, x);
      const double sy = static_cast<double>(y) + dv * d;
      const double sx = static_cast<double>(x) + du * d;
      const bool ok = disp.valid(y, x) && bilinear_valid(img.planes[0], sy, sx);
      valid(y, x) = ok;
      if (ok) {
        for (int c = 0; c < 3; ++c)
          out.at(y, x, c) = bilinear_at(img.plane(c), sy, sx);
      }
    }
  }
  return {std::move(out), std::move(valid)};
}

Image refocus(const LightField& lf, double slope) {
  const Index h = lf.height, w = lf.width;
  Image acc(h, w);
  Mat count = Mat::Zero(h, w);
  for (int v = 0; v < lf.angular_rows; ++v) {
    for (int u = 0; u < lf.angular_cols; ++u) {
      const double dv = static_cast<double>(v - lf.center_row());
      const double du = static_cast<double>(u - lf.center_col());
      const Image& src = lf.view(v, u);
      for (Index x = 0; x < w; ++x) {
        for (Index y = 0; y < h; ++y) {
          const double sy = static_cast<double>(y) + slope * dv;
          const double sx = static_cast<double>(x) + slope * du;
          if (!bilinear_valid(src.planes[0], sy, sx)) continue;
          for (int c = 0; c < 3; ++c)
            acc.at(y, x, c) += bilinear_at(src.plane(c), sy, sx);
          count(y, x) += 1.0;
        }
      }
    }
  }
  // Center view contributes everywhere, so count >= 1.
  for (int c = 0; c < 3; ++c) acc.plane(c) /= count;
  return clamp01(std::move(acc));
}

LightField recenter_zero_parallax(const LightField& lf, double d0,
                                  std::vector<BoolMat>* valid_out) {
  LightField out = lf;
  if (valid_out) valid_out->assign(lf.views.size(), BoolMat());
  for (int v = 0; v < lf.angular_rows; ++v) {
    for (int u = 0; u < lf.angular_cols; ++u) {
      const double dv = static_cast<double>(v - lf.center_row());
      const double du = static_cast<double>(u - lf.center_col());
      const Image& src = lf.view(v, u);
      Image& dst = out.view(v, u);
      BoolMat valid(lf.height, lf.width);
      for (Index x = 0; x < lf.width; ++x) {
        for (Index y = 0; y < lf.height; ++y) {
          const double sy = static_cast<double>(y) + d0 * dv;
          const double sx = static_cast<double>(x) + d0 * du;
          valid(y, x) = bilinear_valid(src.planes[0], sy, sx);
          for (int c = 0; c < 3; ++c)
            dst.at(y, x, c) = bilinear_clamped(src.plane(c), sy, sx);
        }
      }
      if (valid_out)
        (*valid_out)[static_cast<size_t>(v) * lf.angular_cols + u] = std::move(valid);
    }
  }
  return out;
}

}  // namespace lfuw
