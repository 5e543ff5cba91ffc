#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "splat/pipeline.hpp"

namespace splat {

/// Desk-scale synthetic sequence: a random base scene, a fraction of
/// injected near-duplicates, and a camera trajectory. Identical seed + spec
/// yields bit-identical output; all randomness flows from the one seed.
struct SyntheticSceneSpec {
  std::uint64_t seed = 0;
  int gaussian_count = 500;        // base Gaussians
  double extent = 1.0;             // scene half-width, scene units
  double duplicate_fraction = 0.0; // d: ⌈d·N⌉ near-duplicates injected
  double duplicate_jitter = 0.02;  // σ of the duplicate position jitter
  enum class Trajectory { kOrbit, kLinear } trajectory = Trajectory::kOrbit;
  int frame_count = 10;
  int eval_count = 0;              // held-out views
  int width = 128, height = 128;
  double focal = 128.0;
};

struct SyntheticScene {
  GlobalGaussianStore store;            // ground truth; duplicates last
  std::vector<GaussianId> duplicate_ids;
  std::vector<FrameInput> frames;       // per-pixel candidates + GT images
  std::vector<EvalView> eval_views;
};

namespace detail {

inline CameraModel look_at(const Vec3& eye, const Vec3& target,
                           const SyntheticSceneSpec& spec) {
  CameraModel cam;
  cam.fx = cam.fy = spec.focal;
  cam.cx = spec.width / 2.0;
  cam.cy = spec.height / 2.0;
  cam.width = spec.width;
  cam.height = spec.height;
  cam.near = 0.05;
  cam.far = 100.0 * spec.extent;
  Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(Vec3(0, 1, 0));
  if (right.norm() < 1e-9) right = Vec3(1, 0, 0);
  right.normalize();
  const Vec3 down = forward.cross(right);  // image y
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = down;
  cam.rotation.row(2) = forward;
  cam.translation = -cam.rotation * eye;
  return cam;
}

inline CameraModel trajectory_camera(const SyntheticSceneSpec& spec,
                                     double t /* in [0,1) */) {
  if (spec.trajectory == SyntheticSceneSpec::Trajectory::kLinear) {
    const Vec3 eye((2.0 * t - 1.0) * spec.extent, 0.4 * spec.extent,
                   -2.8 * spec.extent);
    return look_at(eye, Vec3::Zero(), spec);
  }
  const double angle = 2.0 * M_PI * t;
  const double r = 2.8 * spec.extent;
  const Vec3 eye(r * std::sin(angle), 0.4 * spec.extent, -r * std::cos(angle));
  return look_at(eye, Vec3::Zero(), spec);
}

}  // namespace detail

/// Per-pixel candidates for one camera, bootstrapped from a ground-truth
/// store through its most-contributive GIR: one candidate per visible
/// Gaussian, tagged with the source id as provenance. The anchor is the
/// pixel where the Gaussian's effective opacity peaks (first such pixel in
/// row-major order on ties), which centers it inside the pixel region the
/// Gaussian wins; an edge anchor would leave far pixels of the region
/// outside the redundancy window.
inline PixelCandidates candidates_from_gir(const GaussianImage& gir,
                                           const GlobalGaussianStore& store) {
  struct Anchor {
    int x, y;
    float alpha;
  };
  std::unordered_map<GaussianId, Anchor> anchors;
  for (int y = 0; y < gir.height; ++y)
    for (int x = 0; x < gir.width; ++x) {
      const GaussianId id = gir.id_at(x, y);
      if (id == kInvalidId) continue;
      const float alpha = gir.pixel_channels(x, y)[8];
      auto [it, fresh] = anchors.emplace(id, Anchor{x, y, alpha});
      if (!fresh && alpha > it->second.alpha) it->second = {x, y, alpha};
    }

  PixelCandidates out(gir.width, gir.height);
  for (const auto& [id, anchor] : anchors) {
    const Gaussian* g = store.find(id);
    if (!g) continue;
    Candidate c;
    c.gaussian = *g;
    c.gaussian.id = kInvalidId;
    c.gaussian.birth_frame = 0;
    c.provenance = id;
    out.at(anchor.x, anchor.y) = c;
  }
  return out;
}

inline SyntheticScene generate_synthetic(const SyntheticSceneSpec& spec) {
  if (spec.frame_count < 1)
    throw InvariantError("synthetic spec: zero-frame trajectory");
  if (spec.gaussian_count < 1)
    throw InvariantError("synthetic spec: need at least one Gaussian");
  if (spec.duplicate_fraction < 0.0 || spec.duplicate_fraction > 1.0)
    throw InvariantError("synthetic spec: duplicate fraction outside [0,1]");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Gaussian> base(spec.gaussian_count);
  for (Gaussian& g : base) {
    g.mu = Vec3((2 * unit(rng) - 1) * spec.extent,
                (2 * unit(rng) - 1) * spec.extent,
                (2 * unit(rng) - 1) * spec.extent);
    g.scale = spec.extent * Vec3(0.02 + 0.04 * unit(rng),
                                 0.02 + 0.04 * unit(rng),
                                 0.02 + 0.04 * unit(rng));
    Eigen::Vector4d qv(normal(rng), normal(rng), normal(rng), normal(rng));
    qv.normalize();
    g.rotation = Quat(qv[0], qv[1], qv[2], qv[3]);
    g.color = Vec3(unit(rng), unit(rng), unit(rng));
    g.alpha = 0.6 + 0.35 * unit(rng);
  }

  const int dup_count = static_cast<int>(
      std::ceil(spec.duplicate_fraction * spec.gaussian_count));
  std::vector<Gaussian> duplicates;
  duplicates.reserve(dup_count);
  for (int i = 0; i < dup_count; ++i) {
    Gaussian g = base[i % base.size()];
    g.mu += spec.duplicate_jitter *
            Vec3(normal(rng), normal(rng), normal(rng));
    duplicates.push_back(std::move(g));
  }

  SyntheticScene scene;
  scene.store.insert(base);
  scene.duplicate_ids = scene.store.insert(duplicates);

  for (int k = 0; k < spec.frame_count; ++k) {
    FrameInput frame;
    frame.camera = detail::trajectory_camera(
        spec, static_cast<double>(k) / spec.frame_count);
    const GaussianImage gir =
        build_gir(scene.store, frame.camera, GirStrategy::kMostContributive);
    frame.candidates = candidates_from_gir(gir, scene.store);
    frame.image =
        render(frame.camera, project_store(scene.store, frame.camera)).rgb;
    scene.frames.push_back(std::move(frame));
  }

  for (int k = 0; k < spec.eval_count; ++k) {
    // Offset half a step from the input trajectory so eval views are held out.
    const double t =
        (static_cast<double>(k) + 0.5) / std::max(1, spec.eval_count);
    EvalView view;
    view.camera = detail::trajectory_camera(spec, t);
    view.image =
        render(view.camera, project_store(scene.store, view.camera)).rgb;
    scene.eval_views.push_back(std::move(view));
  }
  return scene;
}

}  // namespace splat
