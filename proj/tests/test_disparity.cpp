#include <doctest.h>

#include <cmath>

#include "lfuw/degrade.hpp"
#include "lfuw/disparity.hpp"
#include "lfuw/metrics.hpp"
#include "lfuw/rng.hpp"
#include "lfuw/scene.hpp"
#include "support/oracles.hpp"
#include "support/suite.hpp"

using namespace lfuw;

namespace {

// Noise-textured plane whose true disparity is exactly `dstar`.
RenderedLF plane_at_disparity(double dstar, Index size, int angular,
                              std::uint64_t seed, double period = 7.0) {
  SceneSpec spec;
  spec.height = spec.width = size;
  spec.seed = seed;
  LayerSpec l;
  l.depth = 6.0;
  l.texture = TextureKind::kValueNoise;
  l.period = period;
  spec.layers.push_back(l);
  CameraRig rig = suggest_rig(spec, dstar);
  return render_lf(spec, rig, angular, angular);
}

LightField constant_lf(int angular, Index size, double value) {
  std::vector<Image> views(size_t(angular) * angular,
                           Image::constant(size, size, value, value, value));
  return make_lightfield(angular, angular, size, size, std::move(views));
}

}  // namespace

TEST_CASE("sub light fields all pass through the center view") {
  for (auto kind : {SubLFKind::kHorizontalRow, SubLFKind::kVerticalColumn,
                    SubLFKind::kMainDiagonal, SubLFKind::kAntiDiagonal}) {
    auto s = make_sublf(kind, 5, 5);
    CHECK(s.views.size() == 5);
    bool has_center = false;
    for (auto [v, u] : s.views) has_center |= (v == 2 && u == 2);
    CHECK(has_center);
  }
  CHECK(all_sublfs(3, 3).size() == 4);
}

TEST_CASE("build_cost_volume scores photo-consistency per hypothesis") {
  SUBCASE("on-grid plane: argmin sits at the true disparity everywhere inside") {
    auto r = plane_at_disparity(1.5, 32, 3, 19, 5.0);
    auto hyps = make_hypotheses(-4.0, 4.0, 0.1);
    auto sub = make_sublf(SubLFKind::kHorizontalRow, 3, 3);
    auto cv = build_cost_volume(r.lf, sub, hyps);

    // Cross-check the whole volume against a plain-loop recomputation.
    const int vc = 1, uc = 1;
    for (size_t hi = 0; hi < hyps.size(); hi += 7) {
      const double d = hyps[hi];
      for (Index y = 2; y < 30; y += 3) {
        for (Index x = 2; x < 30; x += 3) {
          double cost_sum = 0.0;
          int n_valid = 0;
          for (int c = 0; c < 3; ++c) {
            std::vector<double> samp;
            for (auto [v, u] : sub.views) {
              bool ok = false;
              const double val = lfuw::testing::oracle_bilinear(
                  r.lf.view(v, u).plane(c), double(y) + (v - vc) * d,
                  double(x) + (u - uc) * d, ok);
              if (ok) samp.push_back(val);
            }
            if (c == 0) n_valid = int(samp.size());
            if (samp.size() >= 2) {
              double mean = 0.0;
              for (double t : samp) mean += t;
              mean /= double(samp.size());
              double var = 0.0;
              for (double t : samp) var += (t - mean) * (t - mean);
              cost_sum += var / double(samp.size());
            }
          }
          const double expect = (n_valid < 2) ? kUnmatchedCost : cost_sum / 3.0;
          CHECK(cv.cost[hi](y, x) == doctest::Approx(expect).epsilon(1e-12));
        }
      }
    }

    // argmin at the true hypothesis on the interior.
    const size_t true_idx = 55;  // -4.0 + 55*0.1 = 1.5
    REQUIRE(hyps[true_idx] == doctest::Approx(1.5).epsilon(1e-12));
    for (Index y = 4; y < 28; ++y)
      for (Index x = 4; x < 28; ++x) {
        size_t best = 0;
        for (size_t i = 1; i < hyps.size(); ++i)
          if (cv.cost[i](y, x) < cv.cost[best](y, x)) best = i;
        CHECK(best == true_idx);
      }
  }
  SUBCASE("textureless field ties every hypothesis") {
    auto lf = constant_lf(3, 16, 0.5);
    auto cv = build_cost_volume(lf, make_sublf(SubLFKind::kHorizontalRow, 3, 3),
                                make_hypotheses(-1.0, 1.0, 0.5));
    for (size_t i = 1; i < cv.cost.size(); ++i)
      CHECK(cv.cost[i](8, 8) == cv.cost[0](8, 8));
  }
  SUBCASE("a single-view sub-LF cannot match anything") {
    auto lf = constant_lf(3, 8, 0.5);
    SubLF degenerate;
    degenerate.views = {{1, 1}};
    auto cv = build_cost_volume(lf, degenerate, make_hypotheses(-1, 1, 1));
    CHECK(cv.cost[0].minCoeff() == kUnmatchedCost);
  }
  SUBCASE("empty hypotheses are rejected") {
    auto lf = constant_lf(3, 8, 0.5);
    CHECK_THROWS_AS(
        build_cost_volume(lf, make_sublf(SubLFKind::kHorizontalRow, 3, 3), {}),
        EmptyHypotheses);
  }
}

TEST_CASE("wta_disparity refines sub-pixel winners with margins") {
  SUBCASE("plane scene accuracy on the textured interior") {
    auto r = plane_at_disparity(1.5, 32, 3, 19, 5.0);
    auto cv = build_cost_volume(r.lf, make_sublf(SubLFKind::kHorizontalRow, 3, 3),
                                make_hypotheses(-4, 4, 0.1));
    auto [disp, rel] = wta_disparity(cv);
    double mae = 0.0;
    Index n = 0;
    for (Index y = 4; y < 28; ++y)
      for (Index x = 4; x < 28; ++x) {
        REQUIRE(disp.valid(y, x));
        mae += std::abs(disp.values(y, x) - 1.5);
        ++n;
      }
    CHECK(mae / double(n) <= 0.05);
  }
  SUBCASE("all-equal costs fall back to zero disparity with zero reliability") {
    auto lf = constant_lf(3, 12, 0.5);
    auto cv = build_cost_volume(lf, make_sublf(SubLFKind::kVerticalColumn, 3, 3),
                                make_hypotheses(-2, 2, 0.5));
    auto [disp, rel] = wta_disparity(cv);
    CHECK(disp.values(6, 6) == 0.0);
    CHECK(rel.values(6, 6) == 0.0);
    CHECK(disp.valid(6, 6));
  }
  SUBCASE("parabolic refinement recovers an off-grid quadratic minimum") {
    CostVolume cv;
    cv.hypotheses = make_hypotheses(-4, 4, 0.1);
    for (double h : cv.hypotheses)
      cv.cost.push_back(Mat::Constant(2, 2, (h - 1.23) * (h - 1.23)));
    auto [disp, rel] = wta_disparity(cv);
    CHECK(disp.values(0, 0) == doctest::Approx(1.23).epsilon(0.01));
    CHECK(rel.values(0, 0) > 0.0);
  }
}

TEST_CASE("fuse selects the most reliable estimate per pixel") {
  auto est = [](double d, double r) {
    return std::make_pair(DisparityMap::constant(4, 4, d),
                          ReliabilityMap{Mat::Constant(4, 4, r)});
  };
  SUBCASE("winner by reliability") {
    auto [d, r] = fuse({est(1.0, 0.0), est(2.0, 1.0), est(3.0, 0.5)});
    CHECK((d.values == 2.0).all());
    CHECK((r.values == 1.0).all());
  }
  SUBCASE("identical estimates are unchanged regardless of reliability") {
    auto [d, r] = fuse({est(1.5, 0.2), est(1.5, 0.9)});
    CHECK((d.values == 1.5).all());
  }
  SUBCASE("invalid pixels lose to valid ones") {
    auto a = est(1.0, 0.9);
    a.first.valid(2, 2) = false;
    auto [d, r] = fuse({a, est(2.0, 0.1)});
    CHECK(d.values(2, 2) == 2.0);
    CHECK(d.values(0, 0) == 1.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(fuse({}), EmptyInput);
    CHECK_THROWS_AS(fuse({est(1, 1), std::make_pair(DisparityMap::constant(3, 3, 0),
                                                    ReliabilityMap{Mat::Zero(3, 3)})}),
                    ShapeMismatch);
  }
}

TEST_CASE("smooth_disparity is an edge-aware weighted median") {
  SUBCASE("constants are fixed points") {
    auto d = DisparityMap::constant(16, 16, 1.25);
    auto out = smooth_disparity(d, Image::constant(16, 16, 0.5, 0.5, 0.5), 2, 0.1);
    CHECK((out.values == 1.25).all());
    CHECK(out.valid.all());
  }
  SUBCASE("salt-and-pepper outliers vanish, edges survive") {
    const Index n = 32;
    Image guide(n, n);
    DisparityMap d = DisparityMap::constant(n, n, 0.0);
    for (Index y = 0; y < n; ++y)
      for (Index x = 0; x < n; ++x) {
        const double v = (x < n / 2) ? 0.2 : 0.8;
        for (int c = 0; c < 3; ++c) guide.at(y, x, c) = v;
        d.values(y, x) = (x < n / 2) ? 1.0 : 2.0;
      }
    DisparityMap noisy = d;
    int outliers = 0;
    for (Index y = 0; y < n; ++y)
      for (Index x = 0; x < n; ++x)
        if (hash_uniform(6, std::uint64_t(y), std::uint64_t(x)) < 0.01) {
          noisy.values(y, x) = 4.0;
          ++outliers;
        }
    REQUIRE(outliers > 0);
    auto out = smooth_disparity(noisy, guide, 3, 0.1, 0.25);
    CHECK((out.values == d.values).all());
  }
  SUBCASE("invalid pixels are filled from their window") {
    auto d = DisparityMap::constant(16, 16, 2.0);
    d.valid(8, 8) = false;
    d.values(8, 8) = -99.0;
    auto out = smooth_disparity(d, Image::constant(16, 16, 0.5, 0.5, 0.5), 2, 0.1);
    CHECK(out.valid(8, 8));
    CHECK(out.values(8, 8) == 2.0);
  }
  SUBCASE("all-invalid input throws") {
    auto d = DisparityMap::constant(8, 8, 1.0);
    d.valid.setConstant(false);
    CHECK_THROWS_AS(
        smooth_disparity(d, Image::constant(8, 8, 0.5, 0.5, 0.5), 2, 0.1),
        EmptyInput);
  }
  SUBCASE("shape mismatch throws") {
    CHECK_THROWS_AS(smooth_disparity(DisparityMap::constant(8, 8, 1.0),
                                     Image::constant(4, 4, 0.5, 0.5, 0.5), 2, 0.1),
                    ShapeMismatch);
  }
}

TEST_CASE("estimate_disparity recovers planar scenes") {
  auto r = plane_at_disparity(1.37, 48, 5, 23, 6.0);
  auto gt = DisparityMap::constant(48, 48, 1.37);
  auto [disp, rel] = estimate_disparity(r.lf);
  // Interior-only comparison; the true value is off-grid.
  DisparityMap est_interior = disp, gt_interior = gt;
  for (Index y = 0; y < 48; ++y)
    for (Index x = 0; x < 48; ++x)
      if (y < 6 || y >= 42 || x < 6 || x >= 42) gt_interior.valid(y, x) = false;
  const double clean_mae = disparity_error(est_interior, gt_interior).mae;
  CHECK(clean_mae <= 0.1);

  SUBCASE("degradation makes the estimate strictly worse") {
    DegradationParams p = sample_preset(WaterPreset::kBlue, 3);
    p.noise_sigma = 0.01;
    p.seed = 17;
    auto degraded = degrade(r.lf, r.view_depths, p);
    auto [disp2, rel2] = estimate_disparity(degraded);
    CHECK(disparity_error(disp2, gt_interior).mae > clean_mae);
  }
  SUBCASE("zero parallax leaves no signal: reliability collapses") {
    auto lf = constant_lf(3, 24, 0.5);
    auto [d, rel2] = estimate_disparity(lf, DisparityConfig{});
    CHECK(rel2.values.maxCoeff() < 1e-9);
  }
}

TEST_CASE("estimate_disparity equals the exhaustive oracle exactly") {
  // 3x3 angular, 24x24 spatial two-layer scene, smoothing disabled: the
  // pipeline must reproduce the brute-force per-pixel search bit for bit,
  // including tie handling and reliability values.
  SceneSpec spec;
  spec.height = spec.width = 24;
  spec.seed = 55;
  LayerSpec bg;
  bg.depth = 9.0;
  bg.texture = TextureKind::kValueNoise;
  bg.period = 5.0;
  spec.layers.push_back(bg);
  LayerSpec fg;
  fg.geometry = GeometryKind::kSphereCap;
  fg.depth = 4.0;
  fg.depth_near = 3.2;
  fg.radius = 0.25;
  fg.center_y = 0.4;
  fg.center_x = 0.6;
  fg.texture = TextureKind::kChecker;
  fg.period = 3.0;
  spec.layers.push_back(fg);
  auto r = render_lf(spec, suggest_rig(spec, 2.2), 3, 3);

  DisparityConfig config;
  config.smooth = false;
  auto [disp, rel] = estimate_disparity(r.lf, config);
  auto oracle = lfuw::testing::brute_force_disparity(
      r.lf, make_hypotheses(config.hyp_min, config.hyp_max, config.hyp_step));

  Index mismatches = 0;
  for (Index y = 0; y < 24; ++y)
    for (Index x = 0; x < 24; ++x) {
      if (disp.valid(y, x) != oracle.valid(y, x)) ++mismatches;
      if (disp.valid(y, x) && disp.values(y, x) != oracle.values(y, x)) ++mismatches;
      if (disp.valid(y, x) && rel.values(y, x) != oracle.reliability(y, x)) ++mismatches;
    }
  CHECK(mismatches == 0);
}

TEST_CASE("cost-volume argmin is invariant to radiance offsets") {
  auto r = plane_at_disparity(1.5, 24, 3, 31, 5.0);
  LightField shifted = r.lf;
  for (auto& view : shifted.views)
    for (int c = 0; c < 3; ++c) view.plane(c) = (view.plane(c) * 0.5 + 0.25);

  auto hyps = make_hypotheses(-2, 2, 0.25);
  for (auto kind : {SubLFKind::kHorizontalRow, SubLFKind::kVerticalColumn}) {
    auto a = build_cost_volume(r.lf, make_sublf(kind, 3, 3), hyps);
    // Adding a constant must not move the argmin (variance is shift
    // invariant); scaling by 0.5 scales costs by 0.25 but keeps order.
    LightField offset_lf = r.lf;
    for (auto& view : offset_lf.views)
      for (int c = 0; c < 3; ++c) view.plane(c) = view.plane(c) * 0.5;
    auto b = build_cost_volume(offset_lf, make_sublf(kind, 3, 3), hyps);
    LightField plus = offset_lf;
    for (auto& view : plus.views)
      for (int c = 0; c < 3; ++c) view.plane(c) = view.plane(c) + 0.25;
    auto c2 = build_cost_volume(plus, make_sublf(kind, 3, 3), hyps);
    for (Index y = 3; y < 21; ++y)
      for (Index x = 3; x < 21; ++x) {
        size_t best_b = 0, best_c = 0;
        for (size_t i = 1; i < hyps.size(); ++i) {
          if (b.cost[i](y, x) < b.cost[best_b](y, x)) best_b = i;
          if (c2.cost[i](y, x) < c2.cost[best_c](y, x)) best_c = i;
        }
        CHECK(best_b == best_c);
      }
    (void)a;
  }
}

TEST_CASE("occlusion-aware fusion beats every single sub light field") {
  // Two-layer occlusion scenes with stationary textures: the premise of
  // per-pixel selection is that reliability separates occluded directions
  // from clean ones, which needs texture on both sides of the boundary.
  for (int idx : {0, 5}) {
    lfuw::testing::SuiteEntry e = lfuw::testing::standard_suite()[size_t(idx)];
    e.spec.height = e.spec.width = 128;
    e.spec.layers.resize(1);
    LayerSpec cap;
    cap.geometry = GeometryKind::kSphereCap;
    cap.depth = 2.6;
    cap.depth_near = 2.1;
    cap.radius = 0.3;
    cap.center_y = 0.45 + 0.1 * (idx % 2);
    cap.center_x = 0.55 - 0.1 * (idx % 2);
    cap.texture = TextureKind::kValueNoise;
    cap.period = 8.0;
    e.spec.layers.push_back(cap);
    for (auto& layer : e.spec.layers) layer.texture = TextureKind::kValueNoise;
    // Small raw parallax: at larger warps the per-direction interpolation
    // bias dominates the comparison, which is not the property under test.
    e.rig = suggest_rig(e.spec, 1.5);
    e.zero_parallax_d0 = 0.0;
    auto r = e.render();
    auto gt = e.gt_disparity(r.view_depths[12]);
    // Interior comparison: near the frame border the larger hypotheses lose
    // all side views, so every sub-LF censors differently there and the
    // property under test (occlusion handling) is swamped by the aperture.
    const Index margin = 6;
    for (Index y = 0; y < 128; ++y)
      for (Index x = 0; x < 128; ++x)
        if (y < margin || y >= 128 - margin || x < margin || x >= 128 - margin)
          gt.valid(y, x) = false;

    auto hyps = make_hypotheses(-4, 4, 0.1);
    std::vector<std::pair<DisparityMap, ReliabilityMap>> singles;
    double best_single = 1e9;
    for (const auto& s : all_sublfs(5, 5)) {
      singles.push_back(wta_disparity(build_cost_volume(r.lf, s, hyps)));
      best_single = std::min(best_single, disparity_error(singles.back().first, gt).mae);
    }
    auto [fused, rel] = fuse(singles);
    CHECK(disparity_error(fused, gt).mae <= best_single + 0.02);
  }
}
