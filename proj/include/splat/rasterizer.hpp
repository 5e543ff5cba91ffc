#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>
#include <vector>

#include "splat/core.hpp"

namespace splat {

constexpr double kAlphaMin = 1.0 / 255.0;        // contribution cutoff
constexpr double kTransmittanceMin = 1e-4;       // early ray termination
constexpr double kCov2dRegularization = 0.3;     // pixels², added pre-inversion
constexpr int kTileSize = 16;
constexpr double kFootprintSigmas = 3.0;

/// 2D footprint of a projected Gaussian.
struct Splat2D {
  GaussianId source_id = kInvalidId;
  Vec2 mean2d = Vec2::Zero();     // pixels
  Mat2 cov2d = Mat2::Identity();  // pixels², regularized
  double depth = 0.0;             // camera-space z
  Vec3 color = Vec3::Zero();
  double alpha = 0.0;             // base opacity, opacity_scale already applied
};

/// EWA-style perspective linearization: cov2d = J·W·Σ·Wᵀ·Jᵀ, with W the
/// camera rotation and J the projection Jacobian at μ. opacity_scale
/// multiplies the base opacity (used for mask-modulated rendering).
/// Returns nullopt when the Gaussian is behind the near plane or its 3σ
/// footprint misses the image rectangle.
inline std::optional<Splat2D> project_gaussian(const CameraModel& cam,
                                               const Gaussian& g,
                                               double opacity_scale = 1.0) {
  const Vec3 q = cam.to_camera(g.mu);
  if (q.z() <= cam.near) return std::nullopt;

  const double inv_z = 1.0 / q.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx * inv_z, 0.0, -cam.fx * q.x() * inv_z * inv_z,
      0.0, cam.fy * inv_z, -cam.fy * q.y() * inv_z * inv_z;

  Splat2D s;
  s.source_id = g.id;
  s.mean2d = Vec2(cam.fx * q.x() * inv_z + cam.cx,
                  cam.fy * q.y() * inv_z + cam.cy);
  s.cov2d = jac * cam.rotation * g.covariance() * cam.rotation.transpose() *
                jac.transpose() +
            kCov2dRegularization * Mat2::Identity();
  s.depth = q.z();
  s.color = g.color;
  s.alpha = opacity_scale * g.alpha;

  const double radius =
      kFootprintSigmas *
      std::sqrt(std::max(s.cov2d.eigenvalues().real().maxCoeff(), 0.0));
  if (s.mean2d.x() + radius < 0.0 || s.mean2d.x() - radius > cam.width ||
      s.mean2d.y() + radius < 0.0 || s.mean2d.y() - radius > cam.height)
    return std::nullopt;
  return s;
}

/// 3σ footprint radius in pixels.
inline double splat_radius(const Splat2D& s) {
  return kFootprintSigmas *
         std::sqrt(std::max(s.cov2d.eigenvalues().real().maxCoeff(), 0.0));
}

/// Conservative binning radius: covers every point where the splat's
/// Gaussian-weighted opacity can exceed kAlphaMin (slightly wider than 3σ),
/// so tile binning never drops a contributor the cutoff would keep.
inline double splat_bin_radius(const Splat2D& s) {
  const double sigma_max =
      std::sqrt(std::max(s.cov2d.eigenvalues().real().maxCoeff(), 0.0));
  const double m = std::sqrt(2.0 * std::log(1.0 / kAlphaMin)) + 1e-6;
  return m * sigma_max;
}

struct RenderedImage {
  int width = 0, height = 0;
  ImageF rgb;                // H×W×3
  ImageF accumulated_alpha;  // H×W×1, 1 − final transmittance
};

/// One entry of a pixel's depth-sorted contributor list.
struct Contributor {
  GaussianId source_id;
  double alpha;   // Gaussian-weighted opacity at the pixel
  double weight;  // alpha · Π(1−alpha_j) over nearer contributors
  double depth;
};

namespace detail {

// Depth order with deterministic id tie-break.
inline bool splat_before(const Splat2D& a, const Splat2D& b) {
  if (a.depth != b.depth) return a.depth < b.depth;
  return a.source_id < b.source_id;
}

struct Conic {
  double a, b, c;  // inverse covariance [a b; b c]
  static Conic of(const Mat2& cov) {
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    return {cov(1, 1) / det, -cov(0, 1) / det, cov(0, 0) / det};
  }
  double power(double dx, double dy) const {
    return 0.5 * (a * dx * dx + c * dy * dy) + b * dx * dy;
  }
};

}  // namespace detail

/// Gaussian-weighted opacity of a splat at a sample position.
inline double splat_opacity_at(const Splat2D& s, double u, double v) {
  const auto conic = detail::Conic::of(s.cov2d);
  const double p = conic.power(u - s.mean2d.x(), v - s.mean2d.y());
  if (p < 0.0) return 0.0;  // numerically indefinite footprint, no coverage
  return s.alpha * std::exp(-p);
}

/// Depth-sorted contributors at a sample point, with transmittance weights.
/// Considers every splat; intended for GIR construction and oracles.
inline std::vector<Contributor> per_pixel_contributors(
    const std::vector<Splat2D>& splats, double u, double v) {
  std::vector<const Splat2D*> hit;
  for (const Splat2D& s : splats)
    if (splat_opacity_at(s, u, v) > kAlphaMin) hit.push_back(&s);
  std::sort(hit.begin(), hit.end(),
            [](const Splat2D* a, const Splat2D* b) {
              return detail::splat_before(*a, *b);
            });
  std::vector<Contributor> out;
  out.reserve(hit.size());
  double transmittance = 1.0;
  for (const Splat2D* s : hit) {
    const double a = splat_opacity_at(*s, u, v);
    out.push_back({s->source_id, a, a * transmittance, s->depth});
    transmittance *= 1.0 - a;
  }
  return out;
}

/// Per-tile lists of splat indices, depth-sorted. Shared by the renderer and
/// the GIR builder.
class TileBins {
 public:
  TileBins(const std::vector<Splat2D>& splats, int width, int height)
      : width_(width), height_(height),
        tiles_x_((width + kTileSize - 1) / kTileSize),
        tiles_y_((height + kTileSize - 1) / kTileSize),
        bins_(static_cast<std::size_t>(tiles_x_) * tiles_y_) {
    for (std::size_t i = 0; i < splats.size(); ++i) {
      const Splat2D& s = splats[i];
      const double r = splat_bin_radius(s);
      const int x0 = std::clamp(
          static_cast<int>(std::floor((s.mean2d.x() - r) / kTileSize)), 0,
          tiles_x_ - 1);
      const int x1 = std::clamp(
          static_cast<int>(std::floor((s.mean2d.x() + r) / kTileSize)), 0,
          tiles_x_ - 1);
      const int y0 = std::clamp(
          static_cast<int>(std::floor((s.mean2d.y() - r) / kTileSize)), 0,
          tiles_y_ - 1);
      const int y1 = std::clamp(
          static_cast<int>(std::floor((s.mean2d.y() + r) / kTileSize)), 0,
          tiles_y_ - 1);
      for (int ty = y0; ty <= y1; ++ty)
        for (int tx = x0; tx <= x1; ++tx)
          bins_[static_cast<std::size_t>(ty) * tiles_x_ + tx].push_back(i);
    }
    for (auto& bin : bins_) {
      std::sort(bin.begin(), bin.end(), [&](std::size_t a, std::size_t b) {
        return detail::splat_before(splats[a], splats[b]);
      });
    }
  }

  int tiles_x() const { return tiles_x_; }
  int tiles_y() const { return tiles_y_; }
  const std::vector<std::size_t>& bin(int tx, int ty) const {
    return bins_[static_cast<std::size_t>(ty) * tiles_x_ + tx];
  }

 private:
  int width_, height_;
  int tiles_x_, tiles_y_;
  std::vector<std::vector<std::size_t>> bins_;
};

namespace detail {

template <typename Fn>
void parallel_for(int count, Fn&& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(count));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Front-to-back alpha compositing over 16×16 tiles. Pixels sample at their
/// centers (x+0.5, y+0.5). Color accumulation runs in 32-bit floats; each
/// contributor's opacity, the cutoff tests, and the transmittance run in
/// 64-bit so inclusion decisions match a naive all-splats-per-pixel loop
/// (a borderline contributor flipping at the alpha cutoff would otherwise
/// shift a pixel by up to 1/255). Pure function of its inputs, deterministic
/// regardless of splat input order.
inline RenderedImage render(const CameraModel& cam,
                            const std::vector<Splat2D>& splats,
                            const Vec3& background = Vec3::Zero()) {
  RenderedImage img;
  img.width = cam.width;
  img.height = cam.height;
  img.rgb = ImageF(cam.width, cam.height, 3);
  img.accumulated_alpha = ImageF(cam.width, cam.height, 1);

  const TileBins bins(splats, cam.width, cam.height);
  const float bg[3] = {static_cast<float>(background.x()),
                       static_cast<float>(background.y()),
                       static_cast<float>(background.z())};

  struct SplatC {
    double cx, cy;           // mean
    detail::Conic conic;
    float r, g, b;
    double a;
  };
  std::vector<SplatC> sc(splats.size());
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const Splat2D& s = splats[i];
    sc[i] = {s.mean2d.x(), s.mean2d.y(), detail::Conic::of(s.cov2d),
             static_cast<float>(s.color.x()), static_cast<float>(s.color.y()),
             static_cast<float>(s.color.z()), s.alpha};
  }

  const int tile_count = bins.tiles_x() * bins.tiles_y();
  detail::parallel_for(tile_count, [&](int tile) {
    const int tx = tile % bins.tiles_x();
    const int ty = tile / bins.tiles_x();
    const auto& bin = bins.bin(tx, ty);
    const int x1 = std::min((tx + 1) * kTileSize, cam.width);
    const int y1 = std::min((ty + 1) * kTileSize, cam.height);
    for (int y = ty * kTileSize; y < y1; ++y) {
      for (int x = tx * kTileSize; x < x1; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        float c0 = 0, c1 = 0, c2 = 0;
        double transmittance = 1.0;
        for (std::size_t idx : bin) {
          const SplatC& s = sc[idx];
          const double power = s.conic.power(px - s.cx, py - s.cy);
          if (power < 0.0) continue;
          const double a = s.a * std::exp(-power);
          if (a <= kAlphaMin) continue;
          const float w = static_cast<float>(a * transmittance);
          c0 += s.r * w;
          c1 += s.g * w;
          c2 += s.b * w;
          transmittance *= 1.0 - a;
          if (transmittance < kTransmittanceMin) break;
        }
        const float t = static_cast<float>(transmittance);
        img.rgb.at(x, y, 0) = c0 + bg[0] * t;
        img.rgb.at(x, y, 1) = c1 + bg[1] * t;
        img.rgb.at(x, y, 2) = c2 + bg[2] * t;
        img.accumulated_alpha.at(x, y, 0) = 1.0f - t;
      }
    }
  });
  return img;
}

/// Projects every live Gaussian of a store for one camera.
inline std::vector<Splat2D> project_store(const GlobalGaussianStore& store,
                                          const CameraModel& cam) {
  std::vector<Splat2D> splats;
  splats.reserve(store.size());
  for (const auto& [id, g] : store)
    if (auto s = project_gaussian(cam, g)) splats.push_back(*s);
  return splats;
}

}  // namespace splat
