#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "splat/core.hpp"
#include "splat/gir.hpp"

namespace splat {

/// Loss weights. λ_Σ scales the covariance term of the geometric loss;
/// λ_pos > λ_neg biases the mask BCE toward flagging redundancy.
struct LossWeights {
  double lambda_sigma = 0.5;
  double lambda_pos = 2.0;
  double lambda_neg = 1.0;

  void validate() const {
    if (!(lambda_sigma > 0.0)) throw InvariantError("lambda_sigma must be > 0");
    if (!(lambda_pos > lambda_neg) || !(lambda_neg > 0.0))
      throw InvariantError("require lambda_pos > lambda_neg > 0");
  }
};

namespace detail {

inline void require_same_shape(const ImageF& a, const ImageF& b,
                               const char* where) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw InvariantError(std::string(where) + ": image shape mismatch");
}

}  // namespace detail

/// Photometric L1: per-view mean absolute channel difference, summed over
/// views (per-pixel mean keeps the value resolution-independent).
inline double l_rgb(const std::vector<ImageF>& rendered,
                    const std::vector<ImageF>& target) {
  if (rendered.size() != target.size())
    throw InvariantError("l_rgb: view count mismatch");
  double total = 0.0;
  for (std::size_t v = 0; v < rendered.size(); ++v) {
    detail::require_same_shape(rendered[v], target[v], "l_rgb");
    double sum = 0.0;
    for (std::size_t i = 0; i < rendered[v].data.size(); ++i)
      sum += std::abs(static_cast<double>(rendered[v].data[i]) -
                      static_cast<double>(target[v].data[i]));
    total += sum / static_cast<double>(rendered[v].data.size());
  }
  return total;
}

/// Position alignment: mean L1 over matched pairs.
inline double l_xyz(const std::vector<Vec3>& pred,
                    const std::vector<Vec3>& gt) {
  if (pred.size() != gt.size()) throw InvariantError("l_xyz: count mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    sum += (pred[i] - gt[i]).cwiseAbs().sum();
  return sum / static_cast<double>(pred.size());
}

/// Covariance consistency: mean L1 over the six vech entries per pair.
inline double l_sigma(const std::vector<Mat3>& pred,
                      const std::vector<Mat3>& gt) {
  if (pred.size() != gt.size()) throw InvariantError("l_sigma: count mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto vp = vech(pred[i]);
    const auto vg = vech(gt[i]);
    double s = 0.0;
    for (int k = 0; k < 6; ++k)
      s += std::abs(static_cast<double>(vp[k]) - static_cast<double>(vg[k]));
    sum += s / 6.0;
  }
  return sum / static_cast<double>(pred.size());
}

inline double l_geo(const std::vector<Vec3>& mu_pred,
                    const std::vector<Vec3>& mu_gt,
                    const std::vector<Mat3>& cov_pred,
                    const std::vector<Mat3>& cov_gt,
                    const LossWeights& weights = {}) {
  return l_xyz(mu_pred, mu_gt) +
         weights.lambda_sigma * l_sigma(cov_pred, cov_gt);
}

constexpr double kBceEps = 1e-7;

/// Weighted binary cross-entropy over all pixels. gt = 1 marks a redundant
/// pixel and is weighted by lambda_pos, gt = 0 by lambda_neg.
inline double l_mask(const std::vector<float>& pred,
                     const std::vector<std::uint8_t>& gt,
                     const LossWeights& weights = {}) {
  if (pred.size() != gt.size()) throw InvariantError("l_mask: size mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p =
        std::clamp(static_cast<double>(pred[i]), kBceEps, 1.0 - kBceEps);
    const double bce = gt[i] ? -std::log(p) : -std::log(1.0 - p);
    sum += (gt[i] ? weights.lambda_pos : weights.lambda_neg) * bce;
  }
  return sum / static_cast<double>(pred.size());
}

inline double l_total(double rgb, double geo, double mask) {
  return rgb + geo + mask;
}

// ---- Image metrics -------------------------------------------------------

/// PSNR in dB for images in [0,1]; +inf for identical inputs.
inline double psnr(const ImageF& a, const ImageF& b) {
  detail::require_same_shape(a, b, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d =
        static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

/// SSIM with an 11×11 Gaussian window (σ = 1.5), K1 = 0.01, K2 = 0.03,
/// dynamic range 1. Channels averaged; windows that fit fully are used.
inline double ssim(const ImageF& a, const ImageF& b) {
  detail::require_same_shape(a, b, "ssim");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

  double kernel[kWin];
  double ksum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    kernel[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    ksum += kernel[i];
  }
  for (double& k : kernel) k /= ksum;

  if (a.width < kWin || a.height < kWin) {
    // Degenerate tiny image: global statistics.
    double ma = 0, mb = 0;
    for (float v : a.data) ma += v;
    for (float v : b.data) mb += v;
    const double n = static_cast<double>(a.data.size());
    ma /= n;
    mb /= n;
    double va = 0, vb = 0, cov = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      va += (a.data[i] - ma) * (a.data[i] - ma);
      vb += (b.data[i] - mb) * (b.data[i] - mb);
      cov += (a.data[i] - ma) * (b.data[i] - mb);
    }
    va /= n;
    vb /= n;
    cov /= n;
    return ((2 * ma * mb + c1) * (2 * cov + c2)) /
           ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }

  double total = 0.0;
  std::size_t count = 0;
  const int half = kWin / 2;
  for (int c = 0; c < a.channels; ++c) {
    for (int y = half; y < a.height - half; ++y) {
      for (int x = half; x < a.width - half; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int dy = -half; dy <= half; ++dy) {
          for (int dx = -half; dx <= half; ++dx) {
            const double wgt = kernel[dy + half] * kernel[dx + half];
            const double va = a.at(x + dx, y + dy, c);
            const double vb = b.at(x + dx, y + dy, c);
            ma += wgt * va;
            mb += wgt * vb;
            saa += wgt * va * va;
            sbb += wgt * vb * vb;
            sab += wgt * va * vb;
          }
        }
        const double var_a = saa - ma * ma;
        const double var_b = sbb - mb * mb;
        const double cov = sab - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

/// Fraction of Gaussians removed by compression.
inline double c_ratio(std::size_t removed, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(removed) /
                                static_cast<double>(total);
}

/// "0.4377" -> "43.77%", matching the reporting convention.
inline std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", fraction * 100.0);
  return buf;
}

}  // namespace splat
