#pragma once

#include <optional>
#include <string>

#include "lfuw/light_field.hpp"
#include "lfuw/types.hpp"

namespace lfuw {

// Full-reference and non-reference image quality metrics plus disparity
// error statistics. All functions are pure; light-field overloads average
// per-view scores.

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double uiqm = 0.0;
  double uciqe = 0.0;
  std::optional<double> disparity_mae;
  std::optional<double> badpix_ratio;

  std::string csv_header() const;
  std::string csv_row() const;
};

inline constexpr double kPsnrCap = 99.0;  // reported for identical inputs

// 10*log10(1/MSE) with peak 1.0, capped at kPsnrCap dB.
double psnr(const Image& a, const Image& b);
double psnr(const LightField& a, const LightField& b);  // mean of per-view PSNR

// Mean local SSIM on Rec.601 luma, 11x11 Gaussian window (sigma 1.5),
// K1=0.01, K2=0.03, peak 1.0; windows fully inside the image only.
double ssim(const Image& a, const Image& b);
double ssim(const LightField& a, const LightField& b);
// Per-channel variant (mean of channel scores) for cross-checking.
double ssim_per_channel(const Image& a, const Image& b);

// Underwater colorfulness / sharpness / contrast composite. Zero on constant
// gray input; invariant to transposition (blocks cover the full image
// including partial edge blocks).
double uiqm(const Image& img);

// Chroma spread + luma contrast + mean saturation in CIELab. Zero on
// constant gray input.
double uciqe(const Image& img);

struct DisparityError {
  double mae = 0.0;          // pixels, over the mutually valid region
  double badpix_ratio = 0.0; // fraction with |err| > threshold
};

DisparityError disparity_error(const DisparityMap& est, const DisparityMap& gt,
                               double badpix_threshold = 0.2);

}  // namespace lfuw
