#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "splat/core.hpp"

using namespace splat;

TEST_CASE("covariance of isotropic unit gaussian is identity") {
  Gaussian g;
  g.scale = Vec3(1, 1, 1);
  CHECK((g.covariance() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("covariance of axis-aligned anisotropic gaussian") {
  Gaussian g;
  g.scale = Vec3(2, 1, 1);
  CHECK((g.covariance() - Vec3(4, 1, 1).asDiagonal().toDenseMatrix())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("90 degree z-rotation swaps covariance axes") {
  Gaussian g;
  g.scale = Vec3(2, 1, 1);
  g.rotation = Quat(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()));
  // R·D·Rᵀ worked out by hand: x-variance moves to y.
  CHECK((g.covariance() - Vec3(1, 4, 1).asDiagonal().toDenseMatrix())
            .cwiseAbs()
            .maxCoeff() < 1e-9);
}

TEST_CASE("covariance is symmetric with eigenvalues scale squared") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const Gaussian g = oracle::random_gaussian(rng);
    const Mat3 cov = g.covariance();
    CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    Vec3 expected = g.scale.array().square();
    std::sort(expected.data(), expected.data() + 3);
    CHECK((es.eigenvalues() - expected).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("covariance is rotation-consistent") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    Gaussian g = oracle::random_gaussian(rng);
    const Quat q = oracle::random_rotation(rng);
    Gaussian rotated = g;
    rotated.rotation = (q * g.rotation).normalized();
    const Mat3 expected =
        q.toRotationMatrix() * g.covariance() * q.toRotationMatrix().transpose();
    CHECK((rotated.covariance() - expected).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("store insert assigns fresh increasing ids") {
  GlobalGaussianStore store;
  const auto ids = store.insert({Gaussian{}, Gaussian{}, Gaussian{}});
  CHECK(ids == std::vector<GaussianId>{0, 1, 2});
  CHECK(store.size() == 3);

  CHECK(store.insert({}).empty());
  CHECK(store.size() == 3);
}

TEST_CASE("ids are never reused after removal") {
  GlobalGaussianStore store;
  store.insert({Gaussian{}, Gaussian{}});
  CHECK(store.remove({1}) == 1);
  const auto ids = store.insert({Gaussian{}});
  CHECK(ids == std::vector<GaussianId>{2});
}

TEST_CASE("invalid candidate rejects the whole batch") {
  GlobalGaussianStore store;
  Gaussian bad;
  bad.alpha = 2.0;
  CHECK_THROWS_AS(store.insert({Gaussian{}, bad}), InvariantError);
  CHECK(store.empty());
  CHECK(store.next_id() == 0);
}

TEST_CASE("remove ignores missing ids") {
  GlobalGaussianStore store;
  store.insert({Gaussian{}, Gaussian{}, Gaussian{}});
  CHECK(store.remove({0, 1}) == 2);
  CHECK(store.size() == 1);
  CHECK(store.contains(2));
  CHECK(store.remove({}) == 0);
  CHECK(store.remove({5}) == 0);
}

TEST_CASE("id uniqueness holds under interleaved insert/remove") {
  std::mt19937_64 rng(3);
  GlobalGaussianStore store;
  std::set<GaussianId> ever_issued;
  for (int round = 0; round < 50; ++round) {
    const int n = static_cast<int>(rng() % 5);
    const auto ids = store.insert(std::vector<Gaussian>(n));
    for (GaussianId id : ids) {
      CHECK(ever_issued.insert(id).second);  // never issued twice
    }
    std::vector<GaussianId> victims;
    for (const auto& [id, g] : store)
      if (rng() % 3 == 0) victims.push_back(id);
    store.remove(victims);
  }
}

TEST_CASE("project_point hits the optical axis center") {
  CameraModel cam;
  cam.fx = cam.fy = 100;
  cam.cx = cam.cy = 50;
  cam.width = cam.height = 100;

  const auto p = cam.project(Vec3(0, 0, 1));
  REQUIRE(p);
  CHECK(p->u == Catch::Approx(50.0));
  CHECK(p->v == Catch::Approx(50.0));
  CHECK(p->depth == Catch::Approx(1.0));

  const auto q = cam.project(Vec3(0.5, 0, 1));
  REQUIRE(q);
  CHECK(q->u == Catch::Approx(100.0));
  CHECK(q->v == Catch::Approx(50.0));

  CHECK_FALSE(cam.project(Vec3(0, 0, -1)));
}

TEST_CASE("project then unproject round trips") {
  std::mt19937_64 rng(19);
  const CameraModel cam = oracle::test_camera();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const auto proj = cam.project(p);
    if (!proj) continue;
    CHECK((cam.unproject(proj->u, proj->v, proj->depth) - p).norm() < 1e-6);
  }
}

TEST_CASE("camera invariants are checked") {
  CameraModel cam = oracle::test_camera();
  CHECK_FALSE(cam.check());
  cam.near = 2.0;
  cam.far = 1.0;
  CHECK(cam.check());
  cam = oracle::test_camera();
  cam.rotation(0, 0) = 2.0;
  CHECK(cam.check());
}
