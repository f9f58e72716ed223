#include "lfuw/degrade.hpp"

#include <cmath>

#include "lfuw/rng.hpp"

namespace lfuw {

const char* preset_name(WaterPreset p) {
  switch (p) {
    case WaterPreset::kBlue: return "blue";
    case WaterPreset::kGreen: return "green";
    case WaterPreset::kYellow: return "yellow";
    case WaterPreset::kOtherColor: return "other-color";
    case WaterPreset::kLowLight: return "low-light";
  }
  return "unknown";
}

WaterPreset preset_from_name(const std::string& name) {
  if (name == "blue") return WaterPreset::kBlue;
  if (name == "green") return WaterPreset::kGreen;
  if (name == "yellow") return WaterPreset::kYellow;
  if (name == "other-color") return WaterPreset::kOtherColor;
  if (name == "low-light") return WaterPreset::kLowLight;
  throw UnknownPreset("unknown water preset '" + name + "'");
}

std::array<Mat, 3> transmission(const DepthMap& depth, const Vec3& beta) {
  if ((beta < 0.0).any())
    throw NegativeBeta("transmission: beta must be >= 0 per channel");
  if (!depth.values.isFinite().all() || (depth.values <= 0.0).any())
    throw NonPositiveDepth("transmission: depth must be finite and > 0");
  std::array<Mat, 3> t;
  for (int c = 0; c < 3; ++c) t[static_cast<size_t>(c)] = (-beta[c] * depth.values).exp();
  return t;
}

LightField degrade(const LightField& lf_clean,
                   const std::vector<DepthMap>& view_depths,
                   const DegradationParams& params) {
  if (view_depths.size() != lf_clean.views.size())
    throw ViewCountMismatch("degrade: expected " +
                            std::to_string(lf_clean.views.size()) +
                            " depth maps, got " +
                            std::to_string(view_depths.size()));
  if ((params.beta < 0.0).any()) throw NegativeBeta("degrade: beta must be >= 0");
  if ((params.background_light < 0.0).any() || (params.background_light > 1.0).any())
    throw ValueOutOfRange("degrade: background light must lie in [0,1]");
  if (params.noise_sigma < 0.0)
    throw ValueOutOfRange("degrade: noise sigma must be >= 0");

  for (size_t vi = 0; vi < view_depths.size(); ++vi)
    if (view_depths[vi].height() != lf_clean.height ||
        view_depths[vi].width() != lf_clean.width)
      throw ShapeMismatch("degrade: depth map shape mismatch at view " +
                          std::to_string(vi));

  LightField out = lf_clean;
#pragma omp parallel for schedule(static)
  for (int vi = 0; vi < static_cast<int>(lf_clean.views.size()); ++vi) {
    const auto& depth = view_depths[static_cast<size_t>(vi)];
    Image& img = out.views[static_cast<size_t>(vi)];
    for (int c = 0; c < 3; ++c) {
      const Mat t = (-params.beta[c] * depth.values).exp();
      img.plane(c) = t * img.plane(c) + (1.0 - t) * params.background_light[c];
      if (params.noise_sigma > 0.0) {
        Mat& p = img.plane(c);
        for (Index x = 0; x < p.cols(); ++x)
          for (Index y = 0; y < p.rows(); ++y)
            p(y, x) += params.noise_sigma *
                       hash_normal(params.seed, static_cast<std::uint64_t>(vi),
                                   static_cast<std::uint64_t>(y),
                                   static_cast<std::uint64_t>(x),
                                   static_cast<std::uint64_t>(c));
      }
      img.plane(c) = img.plane(c).min(1.0).max(0.0);
    }
  }
  return out;
}

namespace {

double draw(double lo, double hi, std::uint64_t seed, std::uint64_t k) {
  return hash_uniform_in(lo, hi, seed, 0xD17AULL, k);
}

}  // namespace

DegradationParams sample_preset(WaterPreset preset, std::uint64_t seed) {
  // Channel bands keep a clear ordering while staying narrow enough that
  // every channel both veils at the far end of a desk-scale scene and
  // remains invertible under the default transmission floor; the cast
  // strength comes mostly from A.
  constexpr double kStrong[2] = {0.33, 0.37};
  constexpr double kMid[2] = {0.27, 0.32};
  constexpr double kWeak[2] = {0.22, 0.26};

  DegradationParams p;
  p.seed = seed;
  switch (preset) {
    case WaterPreset::kBlue:
      // Red dies first, blue survives; veil is bluish.
      p.beta = Vec3(draw(kStrong[0], kStrong[1], seed, 0),
                    draw(kMid[0], kMid[1], seed, 1),
                    draw(kWeak[0], kWeak[1], seed, 2));
      p.background_light = Vec3(draw(0.04, 0.18, seed, 3), draw(0.28, 0.48, seed, 4),
                                (0.55 + draw(0.0, 0.30, seed, 5)));
      break;
    case WaterPreset::kGreen:
      p.beta = Vec3(draw(kStrong[0], kStrong[1], seed, 0),
                    draw(kWeak[0], kWeak[1], seed, 1),
                    draw(kMid[0], kMid[1], seed, 2));
      p.background_light = Vec3(draw(0.04, 0.18, seed, 3), (0.55 + draw(0.0, 0.30, seed, 4)),
                                draw(0.28, 0.48, seed, 5));
      break;
    case WaterPreset::kYellow:
      // Tannin-like water: blue absorbed fastest, warm veil.
      p.beta = Vec3(draw(kWeak[0], kWeak[1], seed, 0),
                    draw(kMid[0], kMid[1], seed, 1),
                    draw(kStrong[0], kStrong[1], seed, 2));
      p.background_light = Vec3((0.55 + draw(0.0, 0.28, seed, 3)),
                                draw(0.35, 0.55, seed, 4), draw(0.04, 0.18, seed, 5));
      break;
    case WaterPreset::kOtherColor: {
      // Seeded channel permutation of the three attenuation bands.
      const double bands[3][2] = {{kStrong[0], kStrong[1]},
                                  {kMid[0], kMid[1]},
                                  {kWeak[0], kWeak[1]}};
      int perm[3] = {0, 1, 2};
      for (int i = 2; i > 0; --i) {
        const int j = static_cast<int>(hash_uniform(seed, 0xD17AULL, 20 + static_cast<std::uint64_t>(i)) * (i + 1));
        std::swap(perm[i], perm[std::min(j, i)]);
      }
      for (int c = 0; c < 3; ++c)
        p.beta[perm[c]] = draw(bands[c][0], bands[c][1], seed, static_cast<std::uint64_t>(c));
      for (int c = 0; c < 3; ++c)
        p.background_light[c] = draw(0.15, 0.65, seed, 10 + static_cast<std::uint64_t>(c));
      // Least-attenuated channel carries the strongest veil.
      p.background_light[perm[2]] = std::max(p.background_light[perm[2]],
                                             0.55 + draw(0.0, 0.25, seed, 14));
      break;
    }
    case WaterPreset::kLowLight:
      p.beta = Vec3(draw(0.25, 0.35, seed, 0), draw(0.25, 0.35, seed, 1),
                    draw(0.25, 0.35, seed, 2));
      p.background_light = Vec3(draw(0.06, 0.22, seed, 3), draw(0.06, 0.22, seed, 4),
                                draw(0.06, 0.22, seed, 5));
      break;
  }
  return p;
}

}  // namespace lfuw
