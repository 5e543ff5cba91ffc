#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "splat/gir.hpp"
#include "splat/obb.hpp"

namespace splat {

/// A per-frame Gaussian candidate anchored at one pixel. `provenance` is an
/// optional external tag (e.g. the generating scene's id) used only for
/// bookkeeping; −1 means untagged.
struct Candidate {
  Gaussian gaussian;
  std::int64_t provenance = -1;
};

/// Per-pixel candidate map: at most one candidate per pixel.
struct PixelCandidates {
  int width = 0, height = 0;
  std::vector<std::optional<Candidate>> cells;

  PixelCandidates() = default;
  PixelCandidates(int w, int h)
      : width(w), height(h), cells(static_cast<std::size_t>(w) * h) {}

  std::optional<Candidate>& at(int x, int y) {
    return cells[static_cast<std::size_t>(y) * width + x];
  }
  const std::optional<Candidate>& at(int x, int y) const {
    return cells[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& c : cells) n += c.has_value();
    return n;
  }
};

struct RedundancyConfig {
  double k_sigma = 3.0;    // ellipsoid confidence level for the OBBs
  int window_radius = 2;   // Chebyshev pixel radius of the collision window
  double theta_red = 0.7;  // overlap threshold for the ground-truth mask
};

/// Per-pixel overlap of historical Gaussians against current-view neighbors.
/// gt_mask = 1 marks redundancy (iou ≥ theta_red); sentinel pixels carry 0.
struct RedundancyReport {
  int width = 0, height = 0;
  std::vector<float> iou;          // H×W in [0,1]
  std::vector<std::uint8_t> gt_mask;  // H×W binary
  RedundancyConfig config;

  float iou_at(int x, int y) const {
    return iou[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t mask_at(int x, int y) const {
    return gt_mask[static_cast<std::size_t>(y) * width + x];
  }
};

/// Grid-local evaluation of the asymmetric overlap: each non-sentinel
/// history pixel checks collisions only against current-frame candidates
/// within a fixed spatial window. Matches the brute-force all-pairs result
/// whenever every overlapping pair projects within the window.
inline RedundancyReport compute_redundancy(const GaussianImage& history_gir,
                                           const PixelCandidates& current,
                                           const GlobalGaussianStore& store,
                                           const RedundancyConfig& config) {
  if (history_gir.width != current.width ||
      history_gir.height != current.height)
    throw InvariantError("compute_redundancy: history GIR is " +
                         std::to_string(history_gir.width) + "x" +
                         std::to_string(history_gir.height) +
                         " but candidate map is " +
                         std::to_string(current.width) + "x" +
                         std::to_string(current.height));

  const int w = history_gir.width, h = history_gir.height;
  RedundancyReport report;
  report.width = w;
  report.height = h;
  report.iou.assign(static_cast<std::size_t>(w) * h, 0.0f);
  report.gt_mask.assign(static_cast<std::size_t>(w) * h, 0);
  report.config = config;

  std::vector<std::optional<OrientedBoundingBox>> candidate_obb(current.cells.size());
  for (std::size_t i = 0; i < current.cells.size(); ++i)
    if (current.cells[i])
      candidate_obb[i] =
          obb_from_gaussian(current.cells[i]->gaussian, config.k_sigma);

  std::unordered_map<GaussianId, OrientedBoundingBox> history_obb;
  for (GaussianId id : history_gir.id_map) {
    if (id == kInvalidId || history_obb.count(id)) continue;
    if (const Gaussian* g = store.find(id))
      history_obb.emplace(id, obb_from_gaussian(*g, config.k_sigma));
  }

  const int r = config.window_radius;
  detail::parallel_for(h, [&](int y) {
    std::vector<OrientedBoundingBox> neighbors;
    for (int x = 0; x < w; ++x) {
      const std::size_t pix = static_cast<std::size_t>(y) * w + x;
      const GaussianId id = history_gir.id_map[pix];
      if (id == kInvalidId) continue;
      auto it = history_obb.find(id);
      if (it == history_obb.end()) continue;  // stale id, left at iou 0
      neighbors.clear();
      for (int ny = std::max(0, y - r); ny <= std::min(h - 1, y + r); ++ny)
        for (int nx = std::max(0, x - r); nx <= std::min(w - 1, x + r); ++nx) {
          const auto& obb = candidate_obb[static_cast<std::size_t>(ny) * w + nx];
          if (obb) neighbors.push_back(*obb);
        }
      const double iou = asymmetric_iou(it->second, neighbors);
      report.iou[pix] = static_cast<float>(iou);
      report.gt_mask[pix] = iou >= config.theta_red ? 1 : 0;
    }
  });
  return report;
}

/// Two-channel (iou, gt_mask) float image for inspection.
inline ImageF report_to_image(const RedundancyReport& report) {
  ImageF img(report.width, report.height, 2);
  for (std::size_t i = 0; i < report.iou.size(); ++i) {
    img.data[2 * i] = report.iou[i];
    img.data[2 * i + 1] = static_cast<float>(report.gt_mask[i]);
  }
  return img;
}

}  // namespace splat
