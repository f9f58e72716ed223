#include "lfuw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace lfuw {

namespace {

void check_same_shape(const Image& a, const Image& b, const char* where) {
  if (!a.same_shape(b))
    throw ShapeMismatch(std::string(where) + ": image shapes differ");
}

double mse(const Image& a, const Image& b) {
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) acc += (a.plane(c) - b.plane(c)).square().sum();
  return acc / (3.0 * static_cast<double>(a.height() * a.width()));
}

std::vector<double> gaussian_kernel_11() {
  std::vector<double> g(11);
  double sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5;
    g[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += g[static_cast<size_t>(i)];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Separable "valid" correlation with an odd 1-D kernel applied along both
// axes; output is (H-10) x (W-10) for the 11-tap kernel.
Mat gaussian_valid(const Mat& m, const std::vector<double>& g) {
  const Index h = m.rows(), w = m.cols();
  const Index r = static_cast<Index>(g.size() / 2);
  Mat tmp(h, w - 2 * r);
  for (Index x = 0; x < w - 2 * r; ++x) {
    for (Index y = 0; y < h; ++y) {
      double acc = 0.0;
      for (size_t k = 0; k < g.size(); ++k)
        acc += g[k] * m(y, x + static_cast<Index>(k));
      tmp(y, x) = acc;
    }
  }
  Mat out(h - 2 * r, w - 2 * r);
  for (Index x = 0; x < out.cols(); ++x) {
    for (Index y = 0; y < out.rows(); ++y) {
      double acc = 0.0;
      for (size_t k = 0; k < g.size(); ++k)
        acc += g[k] * tmp(y + static_cast<Index>(k), x);
      out(y, x) = acc;
    }
  }
  return out;
}

double ssim_luma(const Mat& la, const Mat& lb) {
  static const std::vector<double> g = gaussian_kernel_11();
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const Mat mu_a = gaussian_valid(la, g);
  const Mat mu_b = gaussian_valid(lb, g);
  const Mat e_aa = gaussian_valid(la * la, g);
  const Mat e_bb = gaussian_valid(lb * lb, g);
  const Mat e_ab = gaussian_valid(la * lb, g);
  const Mat var_a = e_aa - mu_a * mu_a;
  const Mat var_b = e_bb - mu_b * mu_b;
  const Mat cov = e_ab - mu_a * mu_b;
  const Mat num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
  const Mat den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
  return (num / den).mean();
}

struct TrimmedStats {
  double mean = 0.0;
  double var = 0.0;  // population variance about the trimmed mean
};

// Asymmetric alpha-trimmed statistics with 10% discarded on each side.
TrimmedStats trimmed_stats(const Mat& m) {
  std::vector<double> v(m.data(), m.data() + m.size());
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  const size_t lo = static_cast<size_t>(std::floor(0.1 * static_cast<double>(n)));
  const size_t hi = n - lo;
  double mean = 0.0;
  for (size_t i = lo; i < hi; ++i) mean += v[i];
  mean /= static_cast<double>(hi - lo);
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  return {mean, var};
}

// Sobel gradient magnitude with replicated borders.
Mat sobel_magnitude(const Mat& m) {
  const Index h = m.rows(), w = m.cols();
  Mat out(h, w);
  auto at = [&](Index y, Index x) {
    y = std::min(std::max<Index>(y, 0), h - 1);
    x = std::min(std::max<Index>(x, 0), w - 1);
    return m(y, x);
  };
  for (Index x = 0; x < w; ++x) {
    for (Index y = 0; y < h; ++y) {
      const double gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
      out(y, x) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

constexpr double kEmeGuard = 1e-4;  // keeps block ratios finite and 0 on flats
constexpr Index kBlock = 8;

// EME over an 8x8 ceil partition (partial edge blocks included, which makes
// the statistic invariant to transposition).
double eme(const Mat& m) {
  const Index h = m.rows(), w = m.cols();
  double acc = 0.0;
  Index blocks = 0;
  for (Index by = 0; by < h; by += kBlock) {
    for (Index bx = 0; bx < w; bx += kBlock) {
      double mn = m(by, bx), mx = m(by, bx);
      for (Index x = bx; x < std::min(w, bx + kBlock); ++x) {
        for (Index y = by; y < std::min(h, by + kBlock); ++y) {
          mn = std::min(mn, m(y, x));
          mx = std::max(mx, m(y, x));
        }
      }
      acc += std::log((mx + kEmeGuard) / (mn + kEmeGuard));
      ++blocks;
    }
  }
  return 2.0 * acc / static_cast<double>(blocks);
}

// Mean log-Michelson block contrast, same partition as eme().
double log_amee(const Mat& m) {
  const Index h = m.rows(), w = m.cols();
  double acc = 0.0;
  Index blocks = 0;
  for (Index by = 0; by < h; by += kBlock) {
    for (Index bx = 0; bx < w; bx += kBlock) {
      double mn = m(by, bx), mx = m(by, bx);
      for (Index x = bx; x < std::min(w, bx + kBlock); ++x) {
        for (Index y = by; y < std::min(h, by + kBlock); ++y) {
          mn = std::min(mn, m(y, x));
          mx = std::max(mx, m(y, x));
        }
      }
      const double michelson = (mx > mn) ? (mx - mn) / (mx + mn + kEmeGuard) : 0.0;
      acc += std::log1p(michelson);
      ++blocks;
    }
  }
  return acc / static_cast<double>(blocks);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t i0 = static_cast<size_t>(std::floor(pos));
  const size_t i1 = std::min(i0 + 1, sorted.size() - 1);
  const double f = pos - static_cast<double>(i0);
  return (1.0 - f) * sorted[i0] + f * sorted[i1];
}

double lab_f(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return (t > kDelta * kDelta * kDelta)
             ? std::cbrt(t)
             : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_same_shape(a, b, "psnr");
  const double m = mse(a, b);
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

double psnr(const LightField& a, const LightField& b) {
  if (a.angular_rows != b.angular_rows || a.angular_cols != b.angular_cols)
    throw ShapeMismatch("psnr: angular dimensions differ");
  double acc = 0.0;
  for (size_t i = 0; i < a.views.size(); ++i) acc += psnr(a.views[i], b.views[i]);
  return acc / static_cast<double>(a.views.size());
}

double ssim(const Image& a, const Image& b) {
  check_same_shape(a, b, "ssim");
  if (a.height() < 11 || a.width() < 11)
    throw TooSmall("ssim: images must be at least 11x11");
  return ssim_luma(luma(a), luma(b));
}

double ssim(const LightField& a, const LightField& b) {
  if (a.angular_rows != b.angular_rows || a.angular_cols != b.angular_cols)
    throw ShapeMismatch("ssim: angular dimensions differ");
  double acc = 0.0;
  for (size_t i = 0; i < a.views.size(); ++i) acc += ssim(a.views[i], b.views[i]);
  return acc / static_cast<double>(a.views.size());
}

double ssim_per_channel(const Image& a, const Image& b) {
  check_same_shape(a, b, "ssim");
  if (a.height() < 11 || a.width() < 11)
    throw TooSmall("ssim: images must be at least 11x11");
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) acc += ssim_luma(a.plane(c), b.plane(c));
  return acc / 3.0;
}

double uiqm(const Image& img) {
  // Colorfulness: trimmed opponent-channel statistics.
  const Mat rg = img.plane(0) - img.plane(1);
  const Mat yb = 0.5 * (img.plane(0) + img.plane(1)) - img.plane(2);
  const TrimmedStats srg = trimmed_stats(rg);
  const TrimmedStats syb = trimmed_stats(yb);
  const double uicm =
      -0.0268 * std::sqrt(srg.mean * srg.mean + syb.mean * syb.mean) +
      0.1586 * std::sqrt(srg.var + syb.var);

  // Sharpness: EME of the Sobel-weighted channels, Rec.601 weighting.
  const double lambda[3] = {0.299, 0.587, 0.114};
  double uism = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Mat edge = sobel_magnitude(img.plane(c)) * img.plane(c);
    uism += lambda[c] * eme(edge);
  }

  // Contrast: blockwise log-Michelson on luma.
  const double uiconm = log_amee(luma(img));

  return 0.0282 * uicm + 0.2953 * uism + 3.5753 * uiconm;
}

double uciqe(const Image& img) {
  // Linear RGB -> XYZ (D65) -> CIELab, L and chroma rescaled to ~[0,1].
  const Index h = img.height(), w = img.width();
  const Index n = h * w;
  std::vector<double> lum(static_cast<size_t>(n));
  std::vector<double> chroma(static_cast<size_t>(n));
  constexpr double kXn = 0.4124564 + 0.3575761 + 0.1804375;
  constexpr double kYn = 0.2126729 + 0.7151522 + 0.0721750;
  constexpr double kZn = 0.0193339 + 0.1191920 + 0.9503041;
  size_t i = 0;
  double sat_sum = 0.0;
  for (Index x = 0; x < w; ++x) {
    for (Index y = 0; y < h; ++y, ++i) {
      const double r = img.at(y, x, 0), g = img.at(y, x, 1), b = img.at(y, x, 2);
      const double xx = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
      const double yy = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
      const double zz = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
      const double fx = lab_f(xx / kXn), fy = lab_f(yy / kYn), fz = lab_f(zz / kZn);
      const double lab_l = 116.0 * fy - 16.0;
      const double lab_a = 500.0 * (fx - fy);
      const double lab_b = 200.0 * (fy - fz);
      const double ll = std::max(0.0, lab_l) / 100.0;
      const double cc = std::hypot(lab_a, lab_b) / 100.0;
      lum[i] = ll;
      chroma[i] = cc;
      // Chroma below the numerical noise floor counts as achromatic.
      sat_sum += (cc > 1e-9) ? cc / std::hypot(cc, ll) : 0.0;
    }
  }
  double cmean = 0.0;
  for (double c : chroma) cmean += c;
  cmean /= static_cast<double>(n);
  double cvar = 0.0;
  for (double c : chroma) cvar += (c - cmean) * (c - cmean);
  const double sigma_chroma = std::sqrt(cvar / static_cast<double>(n));

  std::sort(lum.begin(), lum.end());
  const double contrast = quantile_sorted(lum, 0.99) - quantile_sorted(lum, 0.01);
  const double mu_sat = sat_sum / static_cast<double>(n);
  return 0.4680 * sigma_chroma + 0.2745 * contrast + 0.2576 * mu_sat;
}

DisparityError disparity_error(const DisparityMap& est, const DisparityMap& gt,
                               double badpix_threshold) {
  if (est.height() != gt.height() || est.width() != gt.width())
    throw ShapeMismatch("disparity_error: shapes differ");
  double mae = 0.0;
  Index n = 0, bad = 0;
  for (Index x = 0; x < est.width(); ++x) {
    for (Index y = 0; y < est.height(); ++y) {
      if (!est.valid(y, x) || !gt.valid(y, x)) continue;
      const double err = std::abs(est.values(y, x) - gt.values(y, x));
      mae += err;
      if (err > badpix_threshold) ++bad;
      ++n;
    }
  }
  if (n == 0) throw NoValidOverlap("disparity_error: no mutually valid pixels");
  return {mae / static_cast<double>(n),
          static_cast<double>(bad) / static_cast<double>(n)};
}

std::string MetricReport::csv_header() const {
  return "psnr_db,ssim,uiqm,uciqe,disparity_mae_px,badpix_ratio";
}

std::string MetricReport::csv_row() const {
  char buf[256];
  std::string row;
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g", psnr, ssim, uiqm, uciqe);
  row = buf;
  if (disparity_mae) {
    std::snprintf(buf, sizeof(buf), ",%.17g", *disparity_mae);
    row += buf;
  } else {
    row += ",";
  }
  if (badpix_ratio) {
    std::snprintf(buf, sizeof(buf), ",%.17g", *badpix_ratio);
    row += buf;
  } else {
    row += ",";
  }
  return row;
}

}  // namespace lfuw
