#pragma once

#include <array>
#include <cstring>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "splat/core.hpp"
#include "splat/rasterizer.hpp"

namespace splat {

enum class GirStrategy : std::uint32_t { kNearest = 0, kMostContributive = 1 };

constexpr int kGirChannels = 10;

/// View-aligned H×W×10 encoding of a Gaussian store: per pixel the selected
/// Gaussian's projected position (u,v), the upper triangle of its 3D
/// covariance in the camera frame, its effective opacity at the pixel, and
/// its id. Background pixels carry sentinel id −1 with all channels zero.
/// Immutable after construction.
struct GaussianImage {
  int width = 0, height = 0;
  GirStrategy strategy = GirStrategy::kMostContributive;
  float tau = 0.0f;                 // opacity threshold (nearest rule)
  std::vector<float> channels;      // H×W×10, pixel-interleaved
  std::vector<std::int64_t> id_map; // H×W, exact integer ids, −1 = background

  GaussianImage() = default;
  GaussianImage(int w, int h, GirStrategy s, float t)
      : width(w), height(h), strategy(s), tau(t),
        channels(static_cast<std::size_t>(w) * h * kGirChannels, 0.0f),
        id_map(static_cast<std::size_t>(w) * h, kInvalidId) {}

  std::size_t pixel_index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  float* pixel_channels(int x, int y) {
    return channels.data() + pixel_index(x, y) * kGirChannels;
  }
  const float* pixel_channels(int x, int y) const {
    return channels.data() + pixel_index(x, y) * kGirChannels;
  }
  std::int64_t id_at(int x, int y) const { return id_map[pixel_index(x, y)]; }

  bool operator==(const GaussianImage&) const = default;
};

/// Nearest rule: index of the first depth-ordered contributor with
/// opacity above tau; nullopt when none qualifies. Contributors must be
/// depth-sorted, as produced by per_pixel_contributors.
inline std::optional<std::size_t> select_nearest(
    std::span<const Contributor> contributors, double tau) {
  for (std::size_t i = 0; i < contributors.size(); ++i)
    if (contributors[i].alpha > tau) return i;
  return std::nullopt;
}

/// Most-contributive rule: index maximizing transmittance-weighted opacity.
/// Ties go to the nearer contributor.
inline std::optional<std::size_t> select_most_contributive(
    std::span<const Contributor> contributors) {
  if (contributors.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < contributors.size(); ++i)
    if (contributors[i].weight > contributors[best].weight) best = i;
  return best;
}

/// vech ordering used in channel layout: (0,0),(0,1),(0,2),(1,1),(1,2),(2,2).
inline std::array<float, 6> vech(const Mat3& m) {
  return {static_cast<float>(m(0, 0)), static_cast<float>(m(0, 1)),
          static_cast<float>(m(0, 2)), static_cast<float>(m(1, 1)),
          static_cast<float>(m(1, 2)), static_cast<float>(m(2, 2))};
}

inline Mat3 unvech(const float* v) {
  Mat3 m;
  m << v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5];
  return m;
}

/// Builds a GIR from a store snapshot. tau only applies to the nearest rule;
/// the 1/255 visibility floor applies to both.
inline GaussianImage build_gir(const GlobalGaussianStore& store,
                               const CameraModel& cam, GirStrategy strategy,
                               double tau = kAlphaMin) {
  GaussianImage gir(cam.width, cam.height, strategy, static_cast<float>(tau));
  const std::vector<Splat2D> splats = project_store(store, cam);
  const TileBins bins(splats, cam.width, cam.height);

  // camera-frame covariance per projected Gaussian
  std::vector<std::array<float, 6>> cam_cov(splats.size());
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const Gaussian* g = store.find(splats[i].source_id);
    cam_cov[i] =
        vech(cam.rotation * g->covariance() * cam.rotation.transpose());
  }

  const int tile_count = bins.tiles_x() * bins.tiles_y();
  detail::parallel_for(tile_count, [&](int tile) {
    const int tx = tile % bins.tiles_x();
    const int ty = tile / bins.tiles_x();
    const auto& bin = bins.bin(tx, ty);
    const int x1 = std::min((tx + 1) * kTileSize, cam.width);
    const int y1 = std::min((ty + 1) * kTileSize, cam.height);
    std::vector<Contributor> contributors;
    std::vector<std::size_t> splat_of;  // contributor -> splat index
    for (int y = ty * kTileSize; y < y1; ++y) {
      for (int x = tx * kTileSize; x < x1; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        contributors.clear();
        splat_of.clear();
        double transmittance = 1.0;
        for (std::size_t idx : bin) {  // bins are depth-sorted
          const double a = splat_opacity_at(splats[idx], px, py);
          if (a <= kAlphaMin) continue;
          contributors.push_back(
              {splats[idx].source_id, a, a * transmittance, splats[idx].depth});
          splat_of.push_back(idx);
          transmittance *= 1.0 - a;
        }
        const auto pick = strategy == GirStrategy::kNearest
                              ? select_nearest(contributors, tau)
                              : select_most_contributive(contributors);
        if (!pick) continue;
        const std::size_t si = splat_of[*pick];
        float* ch = gir.pixel_channels(x, y);
        ch[0] = static_cast<float>(splats[si].mean2d.x());
        ch[1] = static_cast<float>(splats[si].mean2d.y());
        std::copy(cam_cov[si].begin(), cam_cov[si].end(), ch + 2);
        ch[8] = static_cast<float>(contributors[*pick].alpha);
        ch[9] = static_cast<float>(splats[si].source_id);
        gir.id_map[gir.pixel_index(x, y)] = splats[si].source_id;
      }
    }
  });
  return gir;
}

/// Outcome of mapping GIR pixels back to live Gaussians. Stale pixels carry
/// ids the store no longer holds; that is data, not failure — it happens
/// after compression removes ids.
struct GirResolution {
  std::vector<const Gaussian*> per_pixel;  // null for sentinel or stale
  std::set<GaussianId> stale_ids;
  std::size_t stale_pixel_count = 0;
};

inline GirResolution resolve_ids(const GaussianImage& gir,
                                 const GlobalGaussianStore& store) {
  GirResolution res;
  res.per_pixel.assign(gir.id_map.size(), nullptr);
  for (std::size_t i = 0; i < gir.id_map.size(); ++i) {
    const GaussianId id = gir.id_map[i];
    if (id == kInvalidId) continue;
    if (const Gaussian* g = store.find(id)) {
      res.per_pixel[i] = g;
    } else {
      res.stale_ids.insert(id);
      ++res.stale_pixel_count;
    }
  }
  return res;
}

// ---- GIR binary container ("GIR1") --------------------------------------
//
// magic "GIR1" | u32 width | u32 height | u32 channel count | u32 strategy |
// f32 tau | row-major f32 channels | i64 id map. All little-endian.

namespace detail {

inline void put_bytes(std::vector<std::uint8_t>& out, const void* p,
                      std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  out.insert(out.end(), b, b + n);
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  put_bytes(out, &v, sizeof(T));
}

struct ByteReader {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;

  void read(void* dst, std::size_t n, const char* what) {
    if (offset + n > bytes.size())
      throw FormatError("GIR stream truncated at offset " +
                        std::to_string(offset) + " reading " + what);
    std::memcpy(dst, bytes.data() + offset, n);
    offset += n;
  }
  template <typename T>
  T get(const char* what) {
    T v;
    read(&v, sizeof(T), what);
    return v;
  }
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize_gir(const GaussianImage& gir) {
  std::vector<std::uint8_t> out;
  out.reserve(24 + gir.channels.size() * 4 + gir.id_map.size() * 8);
  detail::put_bytes(out, "GIR1", 4);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(gir.width));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(gir.height));
  detail::put<std::uint32_t>(out, kGirChannels);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(gir.strategy));
  detail::put<float>(out, gir.tau);
  detail::put_bytes(out, gir.channels.data(), gir.channels.size() * 4);
  detail::put_bytes(out, gir.id_map.data(), gir.id_map.size() * 8);
  return out;
}

inline GaussianImage deserialize_gir(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r{bytes};
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, "GIR1", 4) != 0)
    throw FormatError("bad magic at offset 0, expected \"GIR1\"");
  const auto width = r.get<std::uint32_t>("width");
  const auto height = r.get<std::uint32_t>("height");
  const auto channel_count_offset = r.offset;
  const auto channel_count = r.get<std::uint32_t>("channel count");
  if (channel_count != kGirChannels)
    throw FormatError("channel count " + std::to_string(channel_count) +
                      " at offset " + std::to_string(channel_count_offset) +
                      ", expected " + std::to_string(kGirChannels));
  const auto strategy = r.get<std::uint32_t>("strategy");
  if (strategy > 1)
    throw FormatError("unknown strategy tag " + std::to_string(strategy));
  const float tau = r.get<float>("tau");

  GaussianImage gir(static_cast<int>(width), static_cast<int>(height),
                    static_cast<GirStrategy>(strategy), tau);
  r.read(gir.channels.data(), gir.channels.size() * 4, "channel data");
  r.read(gir.id_map.data(), gir.id_map.size() * 8, "id map");
  return gir;
}

}  // namespace splat
