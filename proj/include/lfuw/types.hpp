#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lfuw {

using Scalar = double;
using Mat = Eigen::ArrayXXd;                          // (rows = y, cols = x)
using BoolMat = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Vec3 = Eigen::Array3d;                          // per-channel quantity (R,G,B)
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Error types. Each maps to one contract violation; messages carry context.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct ValueOutOfRange : Error { using Error::Error; };
struct EvenAngularSize : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct NonPositiveDepth : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct EmptySpec : Error { using Error::Error; };
struct DepthUnitMismatch : Error { using Error::Error; };
struct NegativeBeta : Error { using Error::Error; };
struct ViewCountMismatch : Error { using Error::Error; };
struct UnknownPreset : Error { using Error::Error; };
struct EmptyHypotheses : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct EmptyFarSet : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };
struct NoValidOverlap : Error { using Error::Error; };
struct TooSmall : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };
struct IncompleteBundle : Error { using Error::Error; };
struct MissingView : Error { using Error::Error; };
struct ChecksumMismatch : Error { using Error::Error; };
struct MalformedManifest : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Image: three H x W radiance planes in [0, 1], channel order R, G, B.
// ---------------------------------------------------------------------------

struct Image {
  std::array<Mat, 3> planes;

  Image() = default;
  Image(Index h, Index w)
      : planes{Mat::Zero(h, w), Mat::Zero(h, w), Mat::Zero(h, w)} {}

  static Image constant(Index h, Index w, double r, double g, double b) {
    Image im;
    im.planes = {Mat::Constant(h, w, r), Mat::Constant(h, w, g),
                 Mat::Constant(h, w, b)};
    return im;
  }

  Index height() const { return planes[0].rows(); }
  Index width() const { return planes[0].cols(); }

  Mat& plane(int c) { return planes[static_cast<size_t>(c)]; }
  const Mat& plane(int c) const { return planes[static_cast<size_t>(c)]; }

  double& at(Index y, Index x, int c) { return planes[static_cast<size_t>(c)](y, x); }
  double at(Index y, Index x, int c) const { return planes[static_cast<size_t>(c)](y, x); }

  bool same_shape(const Image& o) const {
    return height() == o.height() && width() == o.width();
  }
};

inline Image clamp01(Image im) {
  for (auto& p : im.planes) p = p.min(1.0).max(0.0);
  return im;
}

// Rec.601 luma of an RGB image.
inline Mat luma(const Image& im) {
  return 0.299 * im.planes[0] + 0.587 * im.planes[1] + 0.114 * im.planes[2];
}

// ---------------------------------------------------------------------------
// Bilinear sampling. The exact formula below is the project-wide contract:
//   v = (1-fy)*((1-fx)*m(y0,x0) + fx*m(y0,x0+1))
//     +    fy *((1-fx)*m(y1,x0) + fx*m(y1,x0+1))
// A sample is valid iff y in [0, rows-1] and x in [0, cols-1].
// ---------------------------------------------------------------------------

inline bool bilinear_valid(const Mat& m, double y, double x) {
  return y >= 0.0 && x >= 0.0 && y <= static_cast<double>(m.rows() - 1) &&
         x <= static_cast<double>(m.cols() - 1);
}

inline double bilinear_at(const Mat& m, double y, double x) {
  Index y0 = static_cast<Index>(std::floor(y));
  Index x0 = static_cast<Index>(std::floor(x));
  if (y0 > m.rows() - 2) y0 = m.rows() - 2;
  if (x0 > m.cols() - 2) x0 = m.cols() - 2;
  if (y0 < 0) y0 = 0;
  if (x0 < 0) x0 = 0;
  const Index y1 = (m.rows() == 1) ? y0 : y0 + 1;
  const Index x1 = (m.cols() == 1) ? x0 : x0 + 1;
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  return (1.0 - fy) * ((1.0 - fx) * m(y0, x0) + fx * m(y0, x1)) +
         fy * ((1.0 - fx) * m(y1, x0) + fx * m(y1, x1));
}

// Same interpolation with coordinates clamped to the image rectangle.
inline double bilinear_clamped(const Mat& m, double y, double x) {
  const double ymax = static_cast<double>(m.rows() - 1);
  const double xmax = static_cast<double>(m.cols() - 1);
  return bilinear_at(m, std::min(std::max(y, 0.0), ymax),
                     std::min(std::max(x, 0.0), xmax));
}

}  // namespace lfuw
