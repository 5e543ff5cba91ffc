#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "splat/rasterizer.hpp"

using namespace splat;

namespace {

// A splat whose weight at its own center pixel is exactly its base alpha.
Splat2D flat_splat(GaussianId id, double u, double v, double depth,
                   const Vec3& color, double alpha) {
  Splat2D s;
  s.source_id = id;
  s.mean2d = Vec2(u, v);
  s.cov2d = 1e8 * Mat2::Identity();  // effectively constant over the image
  s.depth = depth;
  s.color = color;
  s.alpha = alpha;
  return s;
}

std::vector<Splat2D> random_scene(std::mt19937_64& rng, const CameraModel& cam,
                                  int count) {
  std::vector<Splat2D> splats;
  for (int i = 0; i < count; ++i) {
    auto g = oracle::random_gaussian(rng);
    g.id = i;
    if (auto s = project_gaussian(cam, g)) splats.push_back(*s);
  }
  return splats;
}

}  // namespace

TEST_CASE("projection of an on-axis isotropic gaussian") {
  CameraModel cam;
  cam.fx = cam.fy = 100;
  cam.cx = cam.cy = 64;
  cam.width = cam.height = 128;

  Gaussian g;
  g.mu = Vec3(0, 0, 1);
  g.scale = Vec3(0.01, 0.01, 0.01);
  // J·Σ·Jᵀ for the axis-aligned case: (fx·σ/z)² = 1 px², plus regularization.
  const auto s = project_gaussian(cam, g);
  REQUIRE(s);
  CHECK(s->mean2d.x() == Catch::Approx(64.0));
  CHECK(s->cov2d(0, 0) == Catch::Approx(1.0 + kCov2dRegularization));
  CHECK(s->cov2d(1, 1) == Catch::Approx(1.0 + kCov2dRegularization));
  CHECK(std::abs(s->cov2d(0, 1)) < 1e-9);
}

TEST_CASE("gaussian behind the camera is culled") {
  CameraModel cam = oracle::test_camera();
  cam.translation = Vec3::Zero();
  Gaussian g;
  g.mu = Vec3(0, 0, -1);
  CHECK_FALSE(project_gaussian(cam, g));
}

TEST_CASE("gaussian far outside the image rectangle is culled") {
  CameraModel cam = oracle::test_camera();
  Gaussian g;
  g.mu = Vec3(50, 0, 0);  // projects far off-screen
  g.scale = Vec3(0.01, 0.01, 0.01);
  CHECK_FALSE(project_gaussian(cam, g));
}

TEST_CASE("opacity_scale zero zeroes the splat alpha") {
  const CameraModel cam = oracle::test_camera();
  Gaussian g;
  g.alpha = 0.9;
  const auto s = project_gaussian(cam, g, 0.0);
  REQUIRE(s);
  CHECK(s->alpha == 0.0);
}

TEST_CASE("empty scene renders pure background") {
  const CameraModel cam = oracle::test_camera(32);
  const RenderedImage img = render(cam, {}, Vec3(0, 0, 0));
  for (float v : img.rgb.data) CHECK(v == 0.0f);
  for (float v : img.accumulated_alpha.data) CHECK(v == 0.0f);

  const RenderedImage tinted = render(cam, {}, Vec3(0.25, 0.5, 0.75));
  CHECK(tinted.rgb.at(7, 9, 0) == 0.25f);
  CHECK(tinted.rgb.at(7, 9, 2) == 0.75f);
}

TEST_CASE("single opaque splat renders its color exactly") {
  const CameraModel cam = oracle::test_camera(32);
  const RenderedImage img = render(
      cam, {flat_splat(0, 16.5, 16.5, 1.0, Vec3(0.2, 0.4, 0.6), 1.0)});
  CHECK(img.rgb.at(16, 16, 0) == Catch::Approx(0.2));
  CHECK(img.rgb.at(16, 16, 1) == Catch::Approx(0.4));
  CHECK(img.rgb.at(16, 16, 2) == Catch::Approx(0.6));
  CHECK(img.accumulated_alpha.at(16, 16, 0) == 1.0f);
}

TEST_CASE("two-splat compositing matches the closed form") {
  // Front α=0.5 red over back α=0.5 green on black: (0.5, 0.25, 0).
  const CameraModel cam = oracle::test_camera(32);
  const RenderedImage img =
      render(cam, {flat_splat(0, 16.5, 16.5, 1.0, Vec3(1, 0, 0), 0.5),
                   flat_splat(1, 16.5, 16.5, 2.0, Vec3(0, 1, 0), 0.5)});
  CHECK(img.rgb.at(16, 16, 0) == Catch::Approx(0.5).margin(1e-5));
  CHECK(img.rgb.at(16, 16, 1) == Catch::Approx(0.25).margin(1e-5));
  CHECK(img.rgb.at(16, 16, 2) == Catch::Approx(0.0).margin(1e-5));
}

TEST_CASE("tiled render equals the naive oracle on random scenes") {
  std::mt19937_64 rng(23);
  const CameraModel cam = oracle::test_camera(96);
  for (int scene = 0; scene < 10; ++scene) {
    const auto splats = random_scene(rng, cam, 150);
    const RenderedImage tiled = render(cam, splats, Vec3(0.1, 0.2, 0.3));
    const RenderedImage naive =
        oracle::naive_render(cam, splats, Vec3(0.1, 0.2, 0.3));
    float max_diff = 0;
    for (std::size_t i = 0; i < tiled.rgb.data.size(); ++i)
      max_diff = std::max(max_diff,
                          std::abs(tiled.rgb.data[i] - naive.rgb.data[i]));
    CHECK(max_diff <= 1e-4f);
  }
}

TEST_CASE("render is invariant to splat input order") {
  std::mt19937_64 rng(29);
  const CameraModel cam = oracle::test_camera(64);
  auto splats = random_scene(rng, cam, 80);
  const RenderedImage a = render(cam, splats);
  std::shuffle(splats.begin(), splats.end(), rng);
  const RenderedImage b = render(cam, splats);
  CHECK(a.rgb.data == b.rgb.data);
  CHECK(a.accumulated_alpha.data == b.accumulated_alpha.data);
}

TEST_CASE("per-pixel weights follow transmittance") {
  const std::vector<Splat2D> splats = {
      flat_splat(0, 16.5, 16.5, 1.0, Vec3(1, 0, 0), 0.3),
      flat_splat(1, 16.5, 16.5, 2.0, Vec3(0, 1, 0), 0.9)};
  const auto contributors = per_pixel_contributors(splats, 16.5, 16.5);
  REQUIRE(contributors.size() == 2);
  CHECK(contributors[0].weight == Catch::Approx(0.3));
  CHECK(contributors[1].weight == Catch::Approx(0.9 * 0.7));

  const auto single = per_pixel_contributors({splats[1]}, 16.5, 16.5);
  REQUIRE(single.size() == 1);
  CHECK(single[0].weight == Catch::Approx(0.9));

  // Nothing above the cutoff -> empty.
  const auto none = per_pixel_contributors(
      {flat_splat(0, 16.5, 16.5, 1.0, Vec3(1, 0, 0), 1e-4)}, 16.5, 16.5);
  CHECK(none.empty());
}

TEST_CASE("per-pixel weights sum to at most one") {
  std::mt19937_64 rng(31);
  const CameraModel cam = oracle::test_camera(64);
  const auto splats = random_scene(rng, cam, 120);
  std::uniform_real_distribution<double> u(0.0, 64.0);
  for (int i = 0; i < 200; ++i) {
    const auto contributors = per_pixel_contributors(splats, u(rng), u(rng));
    double sum = 0;
    double prev_depth = -1;
    for (const auto& c : contributors) {
      CHECK(c.depth >= prev_depth);
      prev_depth = c.depth;
      sum += c.weight;
    }
    CHECK(sum <= 1.0 + 1e-9);
  }
}

TEST_CASE("background compositing conserves total weight") {
  std::mt19937_64 rng(37);
  const CameraModel cam = oracle::test_camera(64);
  const auto splats = random_scene(rng, cam, 100);
  // all-white splats and background: channels must come out 1 wherever
  // termination did not truncate the tail.
  auto white = splats;
  for (auto& s : white) s.color = Vec3(1, 1, 1);
  const RenderedImage img = oracle::naive_render(cam, white, Vec3(1, 1, 1));
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x)
      CHECK(img.rgb.at(x, y, 0) ==
            Catch::Approx(1.0).margin(kTransmittanceMin + 1e-6));
}

TEST_CASE("reducing opacity_scale never increases per-pixel weight") {
  std::mt19937_64 rng(41);
  const CameraModel cam = oracle::test_camera(64);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = oracle::random_gaussian(rng);
    g.id = 0;
    const auto full = project_gaussian(cam, g, 1.0);
    const auto scaled = project_gaussian(cam, g, 0.4);
    if (!full || !scaled) continue;
    std::uniform_real_distribution<double> u(0.0, 64.0);
    const double px = u(rng), py = u(rng);
    const auto a = per_pixel_contributors({*full}, px, py);
    const auto b = per_pixel_contributors({*scaled}, px, py);
    const double wa = a.empty() ? 0.0 : a[0].weight;
    const double wb = b.empty() ? 0.0 : b[0].weight;
    CHECK(wb <= wa + 1e-12);
  }
}
