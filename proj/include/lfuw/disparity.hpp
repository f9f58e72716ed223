#pragma once

#include <vector>

#include "lfuw/light_field.hpp"
#include "lfuw/types.hpp"

namespace lfuw {

// ---------------------------------------------------------------------------
// Classical central-view disparity estimation. The light field is split into
// four sub light fields through the center (row, column, two diagonals); each
// builds a photo-consistency cost volume, takes a sub-pixel winner per pixel
// with a confidence margin, and an occlusion-aware selection fuses them.
// ---------------------------------------------------------------------------

enum class SubLFKind { kHorizontalRow, kVerticalColumn, kMainDiagonal, kAntiDiagonal };

struct SubLF {
  SubLFKind id = SubLFKind::kHorizontalRow;
  std::vector<std::pair<int, int>> views;  // (v, u), always includes center
};

SubLF make_sublf(SubLFKind kind, int angular_rows, int angular_cols);
std::vector<SubLF> all_sublfs(int angular_rows, int angular_cols);

// Cost above which a pixel is considered unmatched (fewer than two valid
// warped samples at that hypothesis).
inline constexpr double kUnmatchedCost = 1e9;

struct CostVolume {
  std::vector<double> hypotheses;  // strictly increasing
  std::vector<Mat> cost;           // one H x W slab per hypothesis, >= 0
  SubLFKind sublf_id = SubLFKind::kHorizontalRow;
};

std::vector<double> make_hypotheses(double lo = -4.0, double hi = 4.0,
                                    double step = 0.1);

struct ReliabilityMap {
  Mat values;  // confidence in [0, 1]
};

struct DisparityConfig {
  double hyp_min = -4.0;
  double hyp_max = 4.0;
  double hyp_step = 0.1;
  bool smooth = true;
  int smooth_radius = 4;
  double smooth_sigma = 0.06;
  double edge_threshold = 0.2;   // no smoothing across guide steps above this
  double min_reliability = 0.0002; // below this a pixel cannot vote in the
                                 // median and is refilled from confident ones
};

// Cost at (pixel, hypothesis d): warp every sub-LF view to the center with
// constant d and take the across-view variance of the valid samples, averaged
// over channels. Pixels with fewer than two valid samples get kUnmatchedCost.
CostVolume build_cost_volume(const LightField& lf, const SubLF& sublf,
                             const std::vector<double>& hypotheses);

// Winner-take-all with parabolic sub-pixel refinement between grid
// neighbours. Ties go to the hypothesis closest to zero, then to the smaller
// value. Reliability is 1 - exp(-margin/tau) with margin = second-best
// matched cost minus best cost (zero when no alternative hypothesis
// matched).
std::pair<DisparityMap, ReliabilityMap> wta_disparity(const CostVolume& cv,
                                                      double tau = 0.01);

// Per pixel, keep the estimate with the highest reliability; reliabilities
// within kFuseTie count as tied and the earliest estimate wins, so regions
// where every margin is noise inherit one coherent sub light field. Pixels
// invalid in every estimate stay invalid.
inline constexpr double kFuseTie = 0.05;

std::pair<DisparityMap, ReliabilityMap> fuse(
    const std::vector<std::pair<DisparityMap, ReliabilityMap>>& estimates);

// Guide-weighted median filter. Neighbours whose guide color differs from the
// center by more than edge_threshold (max over channels) get zero weight;
// invalid pixels are filled from the valid neighbours in their window. With
// fill_remaining, pixels whose window holds nothing valid are filled by
// iterative dilation; otherwise they stay invalid.
DisparityMap smooth_disparity(const DisparityMap& disp, const Image& guide,
                              int radius, double sigma,
                              double edge_threshold = 0.25,
                              bool fill_remaining = true);

// Full pipeline: per-sub-LF cost volumes -> WTA -> fusion -> optional
// edge-aware smoothing. Deterministic.
std::pair<DisparityMap, ReliabilityMap> estimate_disparity(
    const LightField& lf, const DisparityConfig& config = {});

}  // namespace lfuw
