#include "lfuw/enhance.hpp"

#include <algorithm>
#include <tuple>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "lfuw/metrics.hpp"

namespace lfuw {

namespace {

// Disparities below this cannot be inverted to a usable depth; clamping keeps
// the inversion total (deep regions saturate at the t_min floor anyway).
constexpr double kDisparityFloor = 0.02;

void fill_from_neighbors(Mat& values, BoolMat& valid) {
  const Index h = values.rows(), w = values.cols();
  if (valid.all()) return;
  if (!valid.any()) return;  // nothing to propagate from
  while (!valid.all()) {
    Mat next_values = values;
    BoolMat next_valid = valid;
    bool progressed = false;
    for (Index x = 0; x < w; ++x) {
      for (Index y = 0; y < h; ++y) {
        if (valid(y, x)) continue;
        double sum = 0.0;
        int cnt = 0;
        const Index ys[4] = {y - 1, y + 1, y, y};
        const Index xs[4] = {x, x, x - 1, x + 1};
        for (int k = 0; k < 4; ++k) {
          if (ys[k] < 0 || ys[k] >= h || xs[k] < 0 || xs[k] >= w) continue;
          if (!valid(ys[k], xs[k])) continue;
          sum += values(ys[k], xs[k]);
          ++cnt;
        }
        if (cnt > 0) {
          next_values(y, x) = sum / cnt;
          next_valid(y, x) = true;
          progressed = true;
        }
      }
    }
    values = std::move(next_values);
    valid = std::move(next_valid);
    if (!progressed) break;
  }
}

}  // namespace

Vec3 estimate_background_light(const Image& img, const DepthMap& depth,
                               double far_percentile, double* pool_depth_out) {
  if (img.height() != depth.height() || img.width() != depth.width())
    throw ShapeMismatch("estimate_background_light: shapes differ");
  if (!(far_percentile > 0.0) || far_percentile > 0.5)
    throw ValueOutOfRange("estimate_background_light: far_percentile in (0, 0.5]");
  const Index n = depth.height() * depth.width();
  std::vector<double> d(depth.values.data(), depth.values.data() + n);
  std::sort(d.begin(), d.end());
  // Rank of the first pixel inside the top far_percentile; ties at the
  // threshold are pooled too, so a constant map pools the whole image.
  const size_t k = std::min<size_t>(
      static_cast<size_t>(n - 1),
      static_cast<size_t>(std::ceil((1.0 - far_percentile) * static_cast<double>(n))));
  const double threshold = d[k];

  Vec3 acc = Vec3::Zero();
  double depth_acc = 0.0;
  Index cnt = 0;
  for (Index x = 0; x < depth.width(); ++x) {
    for (Index y = 0; y < depth.height(); ++y) {
      if (depth.values(y, x) < threshold) continue;
      for (int c = 0; c < 3; ++c) acc[c] += img.at(y, x, c);
      depth_acc += depth.values(y, x);
      ++cnt;
    }
  }
  if (cnt == 0) throw EmptyFarSet("estimate_background_light: empty far set");
  if (pool_depth_out) *pool_depth_out = depth_acc / static_cast<double>(cnt);
  return (acc / static_cast<double>(cnt)).min(1.0).max(0.0);
}

namespace {

struct ChannelFit {
  double slope = 0.0;
  double intercept = 0.0;
  double sign = 1.0;
  double residual = std::numeric_limits<double>::infinity();
  double r2 = 0.0;  // weighted explained-variance fraction
  size_t samples = 0;

  double beta() const { return std::max(0.0, -slope); }
};

// Weighted least squares of ln|a - I_c| against depth on the dominant sign
// set, with w = r^2 and the optional 10% residual trim.
ChannelFit fit_channel(const Image& img, const DepthMap& depth, double a,
                       int c, BetaFit fit) {
  constexpr double kEps = 1e-3;
  const Index h = img.height(), w = img.width();
  ChannelFit out;

  Index n_pos = 0, n_neg = 0;
  for (Index x = 0; x < w; ++x) {
    for (Index y = 0; y < h; ++y) {
      const double r = a - img.at(y, x, c);
      if (r > kEps) ++n_pos;
      if (-r > kEps) ++n_neg;
    }
  }
  out.sign = (n_neg > n_pos) ? -1.0 : 1.0;

  std::vector<double> ds, ys, ws;
  ds.reserve(static_cast<size_t>(std::max(n_pos, n_neg)));
  ys.reserve(ds.capacity());
  ws.reserve(ds.capacity());
  for (Index x = 0; x < w; ++x) {
    for (Index y = 0; y < h; ++y) {
      const double r = out.sign * (a - img.at(y, x, c));
      if (r > kEps) {
        ds.push_back(depth.values(y, x));
        ys.push_back(std::log(r));
        // Additive noise n becomes ~ n/r after the log; w = r^2 is the
        // inverse-variance weight, so the noise floor cannot flatten the
        // slope.
        ws.push_back(r * r);
      }
    }
  }
  out.samples = ds.size();
  if (out.samples < 2) return out;

  auto solve = [](const std::vector<double>& xs, const std::vector<double>& yy,
                  const std::vector<double>& wt) {
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      sw += wt[i];
      sx += wt[i] * xs[i];
      sy += wt[i] * yy[i];
      sxx += wt[i] * xs[i] * xs[i];
      sxy += wt[i] * xs[i] * yy[i];
    }
    const double denom = sw * sxx - sx * sx;
    if (denom <= 0.0 || sw <= 0.0)
      return std::pair<double, double>(0.0, sw > 0.0 ? sy / sw : 0.0);
    const double slope = (sw * sxy - sx * sy) / denom;
    return std::pair<double, double>(slope, (sy - slope * sx) / sw);
  };

  auto [slope, intercept] = solve(ds, ys, ws);
  if (fit == BetaFit::kRobustTrimmed && ds.size() > 100) {
    std::vector<double> res(ds.size());
    for (size_t i = 0; i < ds.size(); ++i)
      res[i] = std::abs(ys[i] - (slope * ds[i] + intercept));
    std::vector<double> sorted = res;
    std::sort(sorted.begin(), sorted.end());
    const double cutoff = sorted[static_cast<size_t>(0.9 * (sorted.size() - 1))];
    std::vector<double> ds2, ys2, ws2;
    for (size_t i = 0; i < ds.size(); ++i) {
      if (res[i] <= cutoff) {
        ds2.push_back(ds[i]);
        ys2.push_back(ys[i]);
        ws2.push_back(ws[i]);
      }
    }
    if (ds2.size() >= 100) {
      std::tie(slope, intercept) = solve(ds2, ys2, ws2);
      ds.swap(ds2);
      ys.swap(ys2);
      ws.swap(ws2);
    }
  }
  out.slope = slope;
  out.intercept = intercept;
  double acc = 0.0, wsum = 0.0, ymean = 0.0;
  for (size_t i = 0; i < ds.size(); ++i) {
    const double r = ys[i] - (slope * ds[i] + intercept);
    acc += ws[i] * r * r;
    wsum += ws[i];
    ymean += ws[i] * ys[i];
  }
  if (wsum > 0.0) {
    out.residual = acc / wsum;
    ymean /= wsum;
    double yvar = 0.0;
    for (size_t i = 0; i < ds.size(); ++i)
      yvar += ws[i] * (ys[i] - ymean) * (ys[i] - ymean);
    yvar /= wsum;
    out.r2 = (yvar > 1e-12) ? std::max(0.0, 1.0 - out.residual / yvar) : 0.0;
  }
  return out;
}

// Per channel, search an offset around the prior background light for the
// fit that explains the most depth-dependent variance; a biased A bends the
// log-depth relation and bleeds signal into the residual. Coarse pass over
// +-range, fine pass at a quarter step around the winner (the far-field
// sign test is sensitive to A errors comparable to the residual contrast).
Vec3 refine_background_and_beta(const Image& img, const DepthMap& depth,
                                Vec3* a_inout, BetaFit fit,
                                double range = 0.12, double step = 0.01) {
  Vec3 beta = Vec3::Zero();
  for (int c = 0; c < 3; ++c) {
    const double base = (*a_inout)[c];
    ChannelFit best = fit_channel(img, depth, base, c, fit);
    if (best.samples < 100)
      throw InsufficientSamples(
          "estimate_beta: fewer than 100 usable pixels in channel " +
          std::to_string(c));
    const size_t min_samples = std::max<size_t>(100, best.samples / 2);
    double best_a = base;
    auto consider = [&](double a) {
      a = std::min(1.0, std::max(0.0, a));
      ChannelFit f = fit_channel(img, depth, a, c, fit);
      if (f.samples < min_samples) return;
      if (f.r2 > best.r2) {
        best = f;
        best_a = a;
      }
    };
    const int n_coarse = static_cast<int>(std::round(range / step));
    for (int k = -n_coarse; k <= n_coarse; ++k)
      if (k != 0) consider(base + step * k);
    const double coarse_a = best_a;
    for (int k = -3; k <= 3; ++k)
      if (k != 0) consider(coarse_a + 0.25 * step * k);
    (*a_inout)[c] = best_a;
    beta[c] = best.beta();
  }
  return beta;
}

}  // namespace

Vec3 estimate_beta(const Image& img, const DepthMap& depth, const Vec3& A,
                   BetaFit fit, Vec3* intercept_out, Vec3* sign_out) {
  if (img.height() != depth.height() || img.width() != depth.width())
    throw ShapeMismatch("estimate_beta: shapes differ");
  Vec3 beta = Vec3::Zero();
  for (int c = 0; c < 3; ++c) {
    ChannelFit f = fit_channel(img, depth, A[c], c, fit);
    if (f.samples < 100)
      throw InsufficientSamples(
          "estimate_beta: fewer than 100 usable pixels in channel " +
          std::to_string(c));
    beta[c] = f.beta();
    if (intercept_out) (*intercept_out)[c] = f.intercept;
    if (sign_out) (*sign_out)[c] = f.sign;
  }
  return beta;
}

Image invert_model(const Image& img, const DepthMap& depth, const Vec3& beta,
                   const Vec3& A, double t_min) {
  if (img.height() != depth.height() || img.width() != depth.width())
    throw ShapeMismatch("invert_model: shapes differ");
  Image out(img.height(), img.width());
  for (int c = 0; c < 3; ++c) {
    const Mat t = (-beta[c] * depth.values).exp();
    // A + (I - A)/max(T, t_min): equals (I - A*(1-T))/T wherever T >= t_min
    // and degrades gracefully toward the veiling light below the floor
    // (dividing the full numerator by the floored T would instead drive
    // deep regions to black).
    out.plane(c) = A[c] + (img.plane(c) - A[c]) / t.max(t_min);
  }
  return clamp01(std::move(out));
}

LightField enhance_stage(const LightField& lf, const DisparityMap& center_disparity,
                         const CameraRig& rig, const EnhanceConfig& config,
                         StageReport* used) {
  if (center_disparity.height() != lf.height || center_disparity.width() != lf.width)
    throw ShapeMismatch("enhance_stage: disparity shape mismatch");

  const double k = rig.disparity_scale();
  const int vc = lf.center_row(), uc = lf.center_col();

  // Center depth from the estimated disparity, holes filled, floor applied.
  Mat disp_values = center_disparity.values;
  BoolMat disp_valid = center_disparity.valid;
  fill_from_neighbors(disp_values, disp_valid);
  DepthMap center_depth;
  center_depth.values =
      k / (disp_values + config.zero_parallax_offset).max(kDisparityFloor);

  const Image& center = lf.center_view();
  Vec3 A = config.background_override
               ? *config.background_override
               : estimate_background_light(center, center_depth,
                                           config.far_percentile);
  Vec3 beta;
  if (config.beta_override) {
    beta = *config.beta_override;
  } else if (config.background_prior) {
    // Later stages keep the stage-1 estimate as the anchor (the veil is no
    // longer observable in the far pool) but fine-tune it against the
    // residual fit, whose far-field sign test needs A to a few thousandths.
    A = *config.background_prior;
    beta = refine_background_and_beta(center, center_depth, &A, config.beta_fit,
                                      0.03, 0.005);
    if (beta.maxCoeff() < 0.02) beta = Vec3::Zero();
    beta *= config.beta_relaxation;
  } else if (config.background_override) {
    beta = estimate_beta(center, center_depth, A, config.beta_fit);
    if (beta.maxCoeff() < 0.02) beta = Vec3::Zero();
    beta *= config.beta_relaxation;
  } else {
    // The far pool still carries e^(-beta*D_pool) of scene radiance, so the
    // pooled A is biased toward the scene mean. A wrong A also bends the
    // ln|A - I| vs depth relation away from a line, so search a small offset
    // per channel for the straightest (lowest weighted-residual) fit.
    beta = refine_background_and_beta(center, center_depth, &A, config.beta_fit);
    // A residual fit this small is indistinguishable from texture-depth
    // correlation; applying it would only chase noise.
    if (beta.maxCoeff() < 0.02) beta = Vec3::Zero();
    beta *= config.beta_relaxation;
  }
  if (used) {
    used->beta = beta;
    used->background_light = A;
  }

  LightField out = lf;
#pragma omp parallel for schedule(static) collapse(2)
  for (int v = 0; v < lf.angular_rows; ++v) {
    for (int u = 0; u < lf.angular_cols; ++u) {
      const size_t idx = static_cast<size_t>(v) * lf.angular_cols + u;
      DepthMap view_depth;
      if (config.view_depths_override) {
        view_depth = (*config.view_depths_override)[idx];
      } else if (v == vc && u == uc) {
        view_depth = center_depth;
      } else {
        // Backward-warp the center depth into this view. The disparity used
        // for the lookup is resolved at the source position by a short fixed
        // point (a one-shot target-side lookup grabs the wrong surface in a
        // disparity-wide band around every depth edge, and the resulting
        // per-view transmissions disagree between views). Off-frame samples
        // take the nearest valid source via the clamped lookup.
        const double dv = static_cast<double>(v - vc);
        const double du = static_cast<double>(u - uc);
        Mat d(lf.height, lf.width);
        for (Index x = 0; x < lf.width; ++x) {
          for (Index y = 0; y < lf.height; ++y) {
            double disp = disp_values(y, x);
            double sy = static_cast<double>(y) - dv * disp;
            double sx = static_cast<double>(x) - du * disp;
            for (int it = 0; it < 3; ++it) {
              disp = bilinear_clamped(disp_values, sy, sx);
              sy = static_cast<double>(y) - dv * disp;
              sx = static_cast<double>(x) - du * disp;
            }
            d(y, x) = bilinear_clamped(center_depth.values, sy, sx);
          }
        }
        view_depth.values = std::move(d);
      }
      out.views[idx] = invert_model(lf.views[idx], view_depth, beta, A, config.t_min);
    }
  }
  return out;
}

ProgressiveResult progressive_enhance(const LightField& lf_degraded,
                                      const CameraRig& rig,
                                      const EnhanceConfig& config,
                                      const EnhanceReferences& refs) {
  if (config.stages < 1)
    throw ValueOutOfRange("progressive_enhance: stages must be >= 1");

  ProgressiveResult result;
  result.lf = lf_degraded;
  EnhanceConfig stage_config = config;
  for (int stage = 1; stage <= config.stages; ++stage) {
    const auto t0 = std::chrono::steady_clock::now();
    auto [disp, rel] = estimate_disparity(result.lf, config.disparity);

    StageReport report;
    report.stage_index = stage;
    result.lf = enhance_stage(result.lf, disp, rig, stage_config, &report);
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // The veiling light is only observable while the input is still
    // degraded; stage 1's estimate anchors the rest of the loop (the
    // parameters are global to the scene) with only local re-tuning.
    if (!stage_config.background_override && !stage_config.background_prior)
      stage_config.background_prior = report.background_light;

    if (refs.disparity_gt)
      report.disparity_mae = disparity_error(disp, *refs.disparity_gt).mae;
    if (refs.clean) report.psnr = psnr(result.lf, *refs.clean);

    result.disparity = std::move(disp);
    result.reliability = std::move(rel);
    result.reports.push_back(std::move(report));
  }
  return result;
}

}  // namespace lfuw
