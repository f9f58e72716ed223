#pragma once

#include <optional>
#include <vector>

#include "lfuw/degrade.hpp"
#include "lfuw/disparity.hpp"
#include "lfuw/light_field.hpp"
#include "lfuw/types.hpp"

namespace lfuw {

// ---------------------------------------------------------------------------
// Model-based enhancement: estimate the veiling light A from the farthest
// pixels, fit the attenuation beta from the depth dependence of ln|A - I|,
// and invert the formation model with depth derived from the light field's
// own disparity. progressive_enhance alternates disparity estimation and
// enhancement so each improves the other's input.
// ---------------------------------------------------------------------------

enum class BetaFit { kLeastSquares, kRobustTrimmed };

struct EnhanceConfig {
  int stages = 3;
  double t_min = 0.05;          // transmission floor for the inversion
  double far_percentile = 0.01; // fraction of pixels pooled for A
  BetaFit beta_fit = BetaFit::kRobustTrimmed;
  DisparityConfig disparity;    // passthrough for the per-stage estimator

  // Fraction of the fitted beta applied per stage. Overshooting beta blows
  // up exponentially with depth while undershoot is recovered by the next
  // stage's fit on the residual veil, so each stage takes a conservative
  // step and the stage loop closes the remainder.
  double beta_relaxation = 0.85;

  // Estimated disparity d maps to depth k/(d + zero_parallax_offset); leave 0
  // for un-recentered light fields.
  double zero_parallax_offset = 0.0;

  // Later stages anchor the background light here and only fine-tune it;
  // the raw veil stops being observable once stage 1 has inverted it.
  std::optional<Vec3> background_prior;

  // Oracle overrides for round-trip testing; estimation is skipped when set.
  std::optional<Vec3> beta_override;
  std::optional<Vec3> background_override;
  const std::vector<DepthMap>* view_depths_override = nullptr;  // non-owning
};

struct StageReport {
  int stage_index = 0;                 // 1-based
  Vec3 beta = Vec3::Zero();            // parameters used by this stage
  Vec3 background_light = Vec3::Zero();
  std::optional<double> disparity_mae;  // vs ground truth, when available
  std::optional<double> psnr;           // stage output vs clean, when available
  double seconds = 0.0;
};

// Optional ground truth used only to fill StageReport diagnostics.
struct EnhanceReferences {
  const LightField* clean = nullptr;
  const DisparityMap* disparity_gt = nullptr;
};

// Mean of each channel over the pixels whose depth lies in the deepest
// far_percentile quantile (ties at the threshold included). The optional
// out-parameter reports the mean depth of the pooled pixels.
Vec3 estimate_background_light(const Image& img, const DepthMap& depth,
                               double far_percentile = 0.01,
                               double* pool_depth_out = nullptr);

// Least-squares slope of ln|A_c - I_c| against depth gives -beta_c, weighted
// by |A_c - I_c|^2 (the inverse variance of a log residual under additive
// noise, so samples at the noise floor cannot flatten the slope). Uses the
// pixels where A_c - I_c > eps when they are numerous enough, otherwise the
// mirrored set I_c - A_c > eps (dark veils lit scenes). Throws
// InsufficientSamples below 100 usable pixels. Robust mode drops the 10%
// largest residuals and refits once. Result clamped to beta >= 0. The
// optional out-parameters expose the fitted intercept and the residual-set
// sign (+1 for A - I, -1 for I - A) so callers can evaluate the veil model.
Vec3 estimate_beta(const Image& img, const DepthMap& depth, const Vec3& A,
                   BetaFit fit = BetaFit::kLeastSquares,
                   Vec3* intercept_out = nullptr, Vec3* sign_out = nullptr);

// A + (I - A) / max(T, t_min), clamped to [0, 1]; identical to the direct
// algebraic inverse wherever T >= t_min and fading toward the veil below it.
Image invert_model(const Image& img, const DepthMap& depth, const Vec3& beta,
                   const Vec3& A, double t_min = 0.05);

// One enhancement pass: center depth from disparity, per-view depth by
// warping the center depth, A/beta estimated on the center view (or taken
// from the config overrides), then per-view inversion. When `used` is given
// it receives the parameters applied.
LightField enhance_stage(const LightField& lf, const DisparityMap& center_disparity,
                         const CameraRig& rig, const EnhanceConfig& config,
                         StageReport* used = nullptr);

struct ProgressiveResult {
  LightField lf;
  DisparityMap disparity;  // estimate that drove the final stage
  ReliabilityMap reliability;
  std::vector<StageReport> reports;
};

ProgressiveResult progressive_enhance(const LightField& lf_degraded,
                                      const CameraRig& rig,
                                      const EnhanceConfig& config = {},
                                      const EnhanceReferences& refs = {});

}  // namespace lfuw
