#include <doctest.h>

#include <cmath>

#include "lfuw/degrade.hpp"
#include "lfuw/metrics.hpp"
#include "lfuw/scene.hpp"
#include "support/suite.hpp"

using namespace lfuw;

namespace {

LightField constant_lf(int angular, Index size, double value) {
  std::vector<Image> views(size_t(angular) * angular,
                           Image::constant(size, size, value, value, value));
  return make_lightfield(angular, angular, size, size, std::move(views));
}

std::vector<DepthMap> constant_depths(int n, Index size, double d) {
  DepthMap dm;
  dm.values = Mat::Constant(size, size, d);
  return std::vector<DepthMap>(size_t(n), dm);
}

}  // namespace

TEST_CASE("transmission follows the exponential decay law") {
  DepthMap depth;
  depth.values = Mat::Constant(4, 4, 1.0);

  SUBCASE("beta = 0 means no attenuation") {
    auto t = transmission(depth, Vec3::Zero());
    for (int c = 0; c < 3; ++c) {
      CHECK(t[size_t(c)].minCoeff() == 1.0);
      CHECK(t[size_t(c)].maxCoeff() == 1.0);
    }
  }
  SUBCASE("beta = ln 2 at unit depth halves the signal") {
    auto t = transmission(depth, Vec3::Constant(std::log(2.0)));
    CHECK(t[0](0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("deep water limit") {
    depth.values = Mat::Constant(4, 4, 1e6);
    auto t = transmission(depth, Vec3::Constant(0.1));
    CHECK(t[2].maxCoeff() < 1e-30);
  }
  SUBCASE("negative beta is rejected") {
    CHECK_THROWS_AS(transmission(depth, Vec3(-0.1, 0.0, 0.0)), NegativeBeta);
  }
  SUBCASE("non-positive depth is rejected") {
    depth.values(2, 2) = -1.0;
    CHECK_THROWS_AS(transmission(depth, Vec3::Constant(0.1)), NonPositiveDepth);
  }
}

TEST_CASE("degrade composites signal against the veiling light") {
  SUBCASE("hand-computed midpoint") {
    // J = 0.8, A = 0.2, T = 0.5 -> I = 0.5.
    auto lf = constant_lf(3, 8, 0.8);
    DegradationParams p;
    p.beta = Vec3::Constant(std::log(2.0));
    p.background_light = Vec3::Constant(0.2);
    auto out = degrade(lf, constant_depths(9, 8, 1.0), p);
    CHECK(out.views[0].at(0, 0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("beta = 0 with no noise is the identity") {
    auto lf = constant_lf(3, 8, 0.37);
    DegradationParams p;
    auto out = degrade(lf, constant_depths(9, 8, 2.0), p);
    for (size_t i = 0; i < out.views.size(); ++i)
      for (int c = 0; c < 3; ++c)
        CHECK((out.views[i].plane(c) == lf.views[i].plane(c)).all());
  }
  SUBCASE("deep uniform water converges to the background light") {
    auto lf = constant_lf(3, 8, 0.9);
    DegradationParams p;
    p.beta = Vec3::Constant(0.5);
    p.background_light = Vec3(0.1, 0.3, 0.6);
    auto out = degrade(lf, constant_depths(9, 8, 1e6), p);
    CHECK(out.views[4].at(3, 3, 0) == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(out.views[4].at(3, 3, 2) == doctest::Approx(0.6).epsilon(1e-9));
  }
  SUBCASE("view count mismatch is rejected") {
    auto lf = constant_lf(3, 8, 0.5);
    CHECK_THROWS_AS(degrade(lf, constant_depths(8, 8, 1.0), DegradationParams{}),
                    ViewCountMismatch);
  }
  SUBCASE("noise is seeded, deterministic, and clamped") {
    auto lf = constant_lf(3, 16, 0.5);
    DegradationParams p;
    p.noise_sigma = 0.05;
    p.seed = 99;
    auto a = degrade(lf, constant_depths(9, 16, 1.0), p);
    auto b = degrade(lf, constant_depths(9, 16, 1.0), p);
    for (size_t i = 0; i < a.views.size(); ++i)
      for (int c = 0; c < 3; ++c)
        CHECK((a.views[i].plane(c) == b.views[i].plane(c)).all());
    CHECK((a.views[0].planes[0] != lf.views[0].planes[0]).any());
    CHECK(a.views[0].planes[0].maxCoeff() <= 1.0);
    CHECK(a.views[0].planes[0].minCoeff() >= 0.0);
    p.seed = 100;
    auto c2 = degrade(lf, constant_depths(9, 16, 1.0), p);
    CHECK((a.views[0].planes[0] != c2.views[0].planes[0]).any());
  }
  SUBCASE("stronger attenuation never raises PSNR against the clean field") {
    const auto& e = lfuw::testing::standard_suite()[0];
    SceneSpec small = e.spec;
    small.height = small.width = 64;
    auto r = render_lf(small, suggest_rig(small, 2.0), 3, 3);
    DegradationParams p = sample_preset(e.preset, 5);
    double prev = 1e9;
    for (double k : {0.5, 1.0, 2.0, 4.0}) {
      DegradationParams pk = p;
      pk.beta = p.beta * k;
      const double q = psnr(degrade(r.lf, r.view_depths, pk), r.lf);
      CHECK(q <= prev + 1e-9);
      prev = q;
    }
  }
  SUBCASE("degradation is view-consistent for matched scene points") {
    // Integer-disparity plane: degraded views must be exact shifts of the
    // degraded center, because T depends only on the (shared) surface depth.
    SceneSpec spec;
    spec.height = spec.width = 32;
    spec.seed = 44;
    LayerSpec l;
    l.depth = 7.0;
    l.texture = TextureKind::kValueNoise;
    l.period = 5.0;
    spec.layers.push_back(l);
    CameraRig rig;
    rig.resolution = 32;
    rig.baseline = 1.0 * 7.0 * rig.sensor_size / (rig.focal_length * rig.resolution);
    auto r = render_lf(spec, rig, 3, 3);
    DegradationParams p = sample_preset(WaterPreset::kBlue, 2);
    auto deg = degrade(r.lf, r.view_depths, p);
    for (int v = 0; v < 3; ++v)
      for (int u = 0; u < 3; ++u)
        for (Index y = 2; y < 30; ++y)
          for (Index x = 2; x < 30; ++x)
            for (int c = 0; c < 3; ++c)
              CHECK(deg.view(v, u).at(y, x, c) ==
                    doctest::Approx(deg.center_view().at(y - (v - 1), x - (u - 1), c))
                        .epsilon(1e-12));
  }
}

TEST_CASE("sample_preset enforces the documented channel orderings") {
  SUBCASE("blue water") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto p = sample_preset(WaterPreset::kBlue, seed);
      CHECK(p.beta[0] > p.beta[1]);
      CHECK(p.beta[1] > p.beta[2]);
      CHECK(p.background_light[2] > p.background_light[0]);
      CHECK(p.background_light[2] > p.background_light[1]);
      CHECK((p.background_light >= 0.0).all());
      CHECK((p.background_light <= 1.0).all());
    }
  }
  SUBCASE("green and yellow orderings") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto g = sample_preset(WaterPreset::kGreen, seed);
      CHECK(g.beta[0] > g.beta[2]);
      CHECK(g.beta[2] > g.beta[1]);
      CHECK(g.background_light[1] > g.background_light[0]);
      auto yl = sample_preset(WaterPreset::kYellow, seed);
      CHECK(yl.beta[2] > yl.beta[1]);
      CHECK(yl.beta[1] > yl.beta[0]);
      CHECK(yl.background_light[0] > yl.background_light[2]);
    }
  }
  SUBCASE("same seed reproduces identical parameters") {
    auto a = sample_preset(WaterPreset::kOtherColor, 7);
    auto b = sample_preset(WaterPreset::kOtherColor, 7);
    CHECK((a.beta == b.beta).all());
    CHECK((a.background_light == b.background_light).all());
  }
  SUBCASE("low-light pulls the veil toward black") {
    double mean_luma = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const auto p = sample_preset(WaterPreset::kLowLight, seed);
      mean_luma += 0.299 * p.background_light[0] + 0.587 * p.background_light[1] +
                   0.114 * p.background_light[2];
    }
    CHECK(mean_luma / 1000.0 < 0.25);
  }
  SUBCASE("unknown preset names are rejected") {
    CHECK_THROWS_AS(preset_from_name("magenta"), UnknownPreset);
    CHECK(preset_from_name("low-light") == WaterPreset::kLowLight);
    CHECK(std::string(preset_name(WaterPreset::kOtherColor)) == "other-color");
  }
}
