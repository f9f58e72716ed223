#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lfuw/dataset_io.hpp"
#include "lfuw/degrade.hpp"
#include "lfuw/rng.hpp"
#include "lfuw/scene.hpp"

using namespace lfuw;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("lfuw_test_" + tag);
  fs::remove_all(p);
  return p;
}

SceneBundle toy_bundle(std::uint64_t seed, bool degraded = false, Index size = 24) {
  SceneSpec spec;
  spec.height = spec.width = size;
  spec.seed = seed;
  LayerSpec bg;
  bg.depth = 6.0;
  bg.texture = TextureKind::kValueNoise;
  bg.period = 5.0;
  spec.layers.push_back(bg);
  LayerSpec fg;
  fg.geometry = GeometryKind::kSphereCap;
  fg.depth = 3.0;
  fg.depth_near = 2.5;
  fg.radius = 0.25;
  fg.texture = TextureKind::kChecker;
  fg.period = 4.0;
  spec.layers.push_back(fg);

  CameraRig rig = suggest_rig(spec, 1.5);
  auto r = render_lf(spec, rig, 3, 3);
  SceneBundle b;
  b.lf_clean = r.lf;
  b.depths = r.view_depths;
  b.rig = rig;
  b.meta.name = "toy" + std::to_string(seed);
  b.meta.seed = seed;
  if (degraded) {
    DegradationParams p = sample_preset(WaterPreset::kBlue, seed);
    p.noise_sigma = 0.002;
    p.seed = seed;
    b.lf_degraded = degrade(r.lf, r.view_depths, p);
    b.params = p;
    b.meta.preset = "blue";
  }
  return b;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("scene save/load round trip") {
  auto dir = temp_dir("roundtrip");
  SceneBundle b = toy_bundle(3, true);
  auto summary = save_scene(b, dir);
  CHECK(summary.file_count > 9 * 3);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "camera.json"));
  CHECK(fs::exists(dir / "degradation.json"));

  SceneBundle loaded = load_scene(dir);
  REQUIRE(loaded.lf_degraded.has_value());
  REQUIRE(loaded.lf_clean.has_value());
  REQUIRE(loaded.depths.size() == 9);
  CHECK(loaded.meta.name == "toy3");
  CHECK(loaded.meta.preset == "blue");
  CHECK(loaded.rig.baseline == b.rig.baseline);
  CHECK(loaded.rig.focal_length == b.rig.focal_length);

  SUBCASE("views are equal within 16-bit quantization") {
    for (size_t i = 0; i < 9; ++i)
      for (int c = 0; c < 3; ++c) {
        const double err =
            (loaded.lf_degraded->views[i].plane(c) - b.lf_degraded->views[i].plane(c))
                .abs()
                .maxCoeff();
        CHECK(err <= 1e-4);
        const double cerr =
            (loaded.lf_clean->views[i].plane(c) - b.lf_clean->views[i].plane(c))
                .abs()
                .maxCoeff();
        CHECK(cerr <= 1e-4);
      }
  }
  SUBCASE("pfm depths are bit-exact at float32 precision") {
    for (size_t i = 0; i < 9; ++i)
      for (Index y = 0; y < 24; ++y)
        for (Index x = 0; x < 24; ++x)
          CHECK(loaded.depths[i].values(y, x) ==
                double(float(b.depths[i].values(y, x))));
    // A second trip through disk must be exactly stable.
    auto dir2 = temp_dir("roundtrip2");
    save_scene(loaded, dir2);
    SceneBundle again = load_scene(dir2);
    for (size_t i = 0; i < 9; ++i)
      CHECK((again.depths[i].values == loaded.depths[i].values).all());
    fs::remove_all(dir2);
  }
  SUBCASE("degradation parameters round trip exactly") {
    REQUIRE(loaded.params.has_value());
    CHECK((loaded.params->beta == b.params->beta).all());
    CHECK((loaded.params->background_light == b.params->background_light).all());
    CHECK(loaded.params->noise_sigma == b.params->noise_sigma);
    CHECK(loaded.params->seed == b.params->seed);
  }
  fs::remove_all(dir);
}

TEST_CASE("saving is deterministic byte for byte") {
  auto d1 = temp_dir("det1"), d2 = temp_dir("det2");
  SceneBundle b = toy_bundle(9, true);
  save_scene(b, d1);
  save_scene(b, d2);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(d1)) {
    const auto name = entry.path().filename();
    CHECK(slurp(d1 / name) == slurp(d2 / name));
    ++compared;
  }
  CHECK(compared > 20);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("corruption and missing files are detected") {
  auto dir = temp_dir("corrupt");
  save_scene(toy_bundle(5, false), dir);

  SUBCASE("a flipped byte fails the checksum") {
    const fs::path victim = dir / "view_1_1.png";
    std::string bytes = slurp(victim);
    bytes[bytes.size() / 2] = char(bytes[bytes.size() / 2] ^ 0x01);
    std::ofstream(victim, std::ios::binary).write(bytes.data(), std::streamsize(bytes.size()));
    CHECK_THROWS_AS(load_scene(dir), ChecksumMismatch);
  }
  SUBCASE("a deleted view names its angular index") {
    fs::remove(dir / "view_0_2.png");
    try {
      load_scene(dir);
      FAIL("expected MissingView");
    } catch (const MissingView& e) {
      CHECK(std::string(e.what()).find("(0,2)") != std::string::npos);
    }
  }
  SUBCASE("a broken manifest is malformed") {
    std::ofstream(dir / "manifest.json") << "{ not json";
    CHECK_THROWS_AS(load_scene(dir), MalformedManifest);
  }
  SUBCASE("missing manifest is an I/O failure") {
    fs::remove(dir / "manifest.json");
    CHECK_THROWS_AS(load_scene(dir), IoFailure);
  }
  fs::remove_all(dir);
}

TEST_CASE("toy 3x3 scene loads with nine views and nine depths") {
  auto dir = temp_dir("toy33");
  save_scene(toy_bundle(7, false), dir);
  SceneBundle loaded = load_scene(dir);
  CHECK(loaded.lf_clean.has_value());
  CHECK_FALSE(loaded.lf_degraded.has_value());
  CHECK(loaded.lf_clean->views.size() == 9);
  CHECK(loaded.depths.size() == 9);
  CHECK(loaded.lf_clean->angular_rows == 3);
  fs::remove_all(dir);
}

TEST_CASE("bundle validation") {
  SceneBundle empty;
  CHECK_THROWS_AS(save_scene(empty, temp_dir("bad1")), IncompleteBundle);

  SceneBundle b = toy_bundle(2, false);
  b.depths.pop_back();
  CHECK_THROWS_AS(save_scene(b, temp_dir("bad2")), IncompleteBundle);
}

TEST_CASE("png16 depth fallback stores scaled grays") {
  auto dir = temp_dir("png16");
  SceneBundle b = toy_bundle(4, false);
  SaveOptions opt;
  opt.depth_as_png16 = true;
  save_scene(b, dir, opt);
  CHECK(fs::exists(dir / "depth_0_0.png"));
  CHECK_FALSE(fs::exists(dir / "depth_0_0.pfm"));
  SceneBundle loaded = load_scene(dir);
  REQUIRE(loaded.depths.size() == 9);
  for (size_t i = 0; i < 9; ++i) {
    const double span =
        b.depths[i].values.maxCoeff() - b.depths[i].values.minCoeff();
    const double err = (loaded.depths[i].values - b.depths[i].values).abs().maxCoeff();
    CHECK(err <= span / 65535.0 + 1e-9);
  }
  fs::remove_all(dir);
}

TEST_CASE("pfm format helpers") {
  auto dir = temp_dir("pfm");
  fs::create_directories(dir);
  Mat m(5, 7);
  for (Index y = 0; y < 5; ++y)
    for (Index x = 0; x < 7; ++x)
      m(y, x) = double(float(hash_uniform_in(0.1, 99.0, 8, std::uint64_t(y),
                                             std::uint64_t(x))));
  write_pfm(dir / "t.pfm", m);
  Mat back = read_pfm(dir / "t.pfm");
  CHECK((back == m).all());

  SUBCASE("header is the standard grayscale form") {
    const std::string bytes = slurp(dir / "t.pfm");
    CHECK(bytes.substr(0, 3) == "Pf\n");
    CHECK(bytes.find("7 5\n") != std::string::npos);
    CHECK(bytes.find("-1.0\n") != std::string::npos);
  }
  SUBCASE("color PF files are accepted, first channel wins") {
    std::string blob = "PF\n2 2\n-1.0\n";
    const float vals[] = {1.f, 2.f, 3.f, 4.f, 5.f, 6.f,   // bottom row, 2 px rgb
                          7.f, 8.f, 9.f, 10.f, 11.f, 12.f};
    blob.append(reinterpret_cast<const char*>(vals), sizeof(vals));
    std::ofstream(dir / "c.pfm", std::ios::binary).write(blob.data(), std::streamsize(blob.size()));
    Mat c = read_pfm(dir / "c.pfm");
    CHECK(c(1, 0) == 1.0);   // bottom-up storage
    CHECK(c(1, 1) == 4.0);
    CHECK(c(0, 0) == 7.0);
  }
  SUBCASE("truncated or malformed files are rejected") {
    std::ofstream(dir / "bad.pfm", std::ios::binary) << "Pf\n4 4\n-1.0\nxx";
    CHECK_THROWS_AS(read_pfm(dir / "bad.pfm"), IoFailure);
    std::ofstream(dir / "bad2.pfm", std::ios::binary) << "P6\n4 4\n-1.0\n";
    CHECK_THROWS_AS(read_pfm(dir / "bad2.pfm"), IoFailure);
  }
  fs::remove_all(dir);
}

TEST_CASE("png 16-bit codec round trips within quantization") {
  auto dir = temp_dir("png");
  fs::create_directories(dir);
  Image im(9, 13);
  for (Index y = 0; y < 9; ++y)
    for (Index x = 0; x < 13; ++x)
      for (int c = 0; c < 3; ++c)
        im.at(y, x, c) = hash_uniform(15, std::uint64_t(y), std::uint64_t(x),
                                      std::uint64_t(c));
  write_png16(dir / "a.png", im);
  Image back = read_png16(dir / "a.png");
  REQUIRE(back.height() == 9);
  REQUIRE(back.width() == 13);
  for (int c = 0; c < 3; ++c)
    CHECK((back.plane(c) - im.plane(c)).abs().maxCoeff() <= 0.5 / 65535.0 + 1e-12);
  // Quantized values survive a second trip exactly.
  write_png16(dir / "b.png", back);
  Image again = read_png16(dir / "b.png");
  for (int c = 0; c < 3; ++c) CHECK((again.plane(c) == back.plane(c)).all());
  fs::remove_all(dir);
}
