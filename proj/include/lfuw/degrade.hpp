#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lfuw/light_field.hpp"
#include "lfuw/types.hpp"

namespace lfuw {

// ---------------------------------------------------------------------------
// Haze-style underwater image formation: per channel
//   I = T * J + (1 - T) * A,   T = exp(-beta * D)
// applied view by view with that view's true depth, plus optional additive
// Gaussian sensor noise before clamping.
// ---------------------------------------------------------------------------

struct DegradationParams {
  Vec3 beta = Vec3::Zero();              // attenuation, 1/depth-unit, >= 0
  Vec3 background_light = Vec3::Zero();  // veiling light A in [0, 1]
  double noise_sigma = 0.0;              // radiance units, >= 0
  std::uint64_t seed = 0;
};

enum class WaterPreset { kBlue, kGreen, kYellow, kOtherColor, kLowLight };

const char* preset_name(WaterPreset p);
WaterPreset preset_from_name(const std::string& name);  // throws UnknownPreset

// Per-channel transmission maps T_c = exp(-beta_c * D), channel order R,G,B.
std::array<Mat, 3> transmission(const DepthMap& depth, const Vec3& beta);

// Applies the formation model to every view using its own depth map.
LightField degrade(const LightField& lf_clean,
                   const std::vector<DepthMap>& view_depths,
                   const DegradationParams& params);

// Deterministic draw from the preset's parameter ranges. Channel orderings
// are enforced by construction (blue: beta_R > beta_G > beta_B with a bluish
// A, and so on); low-light pulls A toward black. noise_sigma is left at 0.
DegradationParams sample_preset(WaterPreset preset, std::uint64_t seed);

}  // namespace lfuw
