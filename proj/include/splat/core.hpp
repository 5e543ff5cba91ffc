#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace splat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

using GaussianId = std::int64_t;
constexpr GaussianId kInvalidId = -1;

/// Thrown when input data violates a documented invariant.
struct InvariantError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown on malformed files or streams.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One anisotropic splat. Covariance is kept factored as scale + rotation so
/// it stays positive definite by construction.
struct Gaussian {
  GaussianId id = kInvalidId;
  Vec3 mu = Vec3::Zero();          // world-space center
  Vec3 scale = Vec3::Ones();       // per-axis standard deviations, > 0
  Quat rotation = Quat::Identity();  // unit quaternion (w,x,y,z)
  Vec3 color = Vec3::Zero();       // RGB in [0,1], SH degree 0
  double alpha = 1.0;              // opacity in [0,1]
  std::int64_t birth_frame = 0;

  /// Σ = R · diag(scale²) · Rᵀ
  Mat3 covariance() const {
    const Mat3 r = rotation.toRotationMatrix();
    return r * scale.array().square().matrix().asDiagonal() * r.transpose();
  }

  /// Returns an error message if any invariant is violated, nullopt otherwise.
  std::optional<std::string> check() const {
    if (!mu.allFinite() || !scale.allFinite() || !color.allFinite() ||
        !std::isfinite(alpha) || !rotation.coeffs().allFinite())
      return "non-finite field";
    if (std::abs(rotation.norm() - 1.0) > 1e-6) return "rotation not unit";
    if (!(scale.minCoeff() > 0.0)) return "non-positive scale";
    if (alpha < 0.0 || alpha > 1.0) return "alpha outside [0,1]";
    if (color.minCoeff() < 0.0 || color.maxCoeff() > 1.0)
      return "color channel outside [0,1]";
    if (birth_frame < 0) return "negative birth_frame";
    return std::nullopt;
  }
};

/// Identity-indexed set of all live Gaussians across the stream. Ids are
/// monotone and never reused, so ID maps from earlier frames can never alias
/// a newer Gaussian. Single writer; share read-only snapshots freely.
class GlobalGaussianStore {
 public:
  /// Inserts a batch, assigning fresh ids. All-or-nothing: any invalid
  /// candidate rejects the whole batch and leaves the store untouched.
  std::vector<GaussianId> insert(const std::vector<Gaussian>& batch) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (auto err = batch[i].check())
        throw InvariantError("store_insert: candidate " + std::to_string(i) +
                             ": " + *err);
    }
    std::vector<GaussianId> ids;
    ids.reserve(batch.size());
    for (const Gaussian& g : batch) {
      Gaussian stored = g;
      stored.id = next_id_++;
      ids.push_back(stored.id);
      gaussians_.emplace(stored.id, std::move(stored));
    }
    return ids;
  }

  /// Removes the listed ids; missing ids are ignored. Returns count removed.
  std::size_t remove(const std::vector<GaussianId>& ids) {
    std::size_t n = 0;
    for (GaussianId id : ids) n += gaussians_.erase(id);
    return n;
  }

  const Gaussian* find(GaussianId id) const {
    auto it = gaussians_.find(id);
    return it == gaussians_.end() ? nullptr : &it->second;
  }

  bool contains(GaussianId id) const { return gaussians_.count(id) != 0; }
  std::size_t size() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }
  GaussianId next_id() const { return next_id_; }

  std::int64_t frame_index = 0;  // last-updated frame

  // Deterministic id-ordered iteration.
  auto begin() const { return gaussians_.begin(); }
  auto end() const { return gaussians_.end(); }

 private:
  std::map<GaussianId, Gaussian> gaussians_;
  GaussianId next_id_ = 0;
};

struct ProjectedPoint {
  double u, v;    // pixel coordinates
  double depth;   // camera-space z
};

/// Pinhole camera: intrinsics (zero skew) plus a world-to-camera rigid
/// transform.
struct CameraModel {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  Mat3 rotation = Mat3::Identity();   // world -> camera
  Vec3 translation = Vec3::Zero();
  int width = 0, height = 0;
  double near = 0.01, far = 1000.0;

  std::optional<std::string> check() const {
    if (!(fx > 0) || !(fy > 0)) return "focal length must be positive";
    if (width <= 0 || height <= 0) return "image size must be positive";
    if (!(near > 0) || !(near < far)) return "require 0 < near < far";
    Mat3 rrt = rotation * rotation.transpose();
    if ((rrt - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
        std::abs(rotation.determinant() - 1.0) > 1e-6)
      return "extrinsic rotation not a proper rotation";
    return std::nullopt;
  }

  Vec3 to_camera(const Vec3& p) const { return rotation * p + translation; }

  /// Projects a world point; nullopt when clipped at the near plane
  /// (q_z <= near, not q_z <= 0, to avoid blow-up near the image plane).
  std::optional<ProjectedPoint> project(const Vec3& p) const {
    const Vec3 q = to_camera(p);
    if (q.z() <= near) return std::nullopt;
    return ProjectedPoint{fx * q.x() / q.z() + cx, fy * q.y() / q.z() + cy,
                          q.z()};
  }

  /// Inverse of project for depth > 0.
  Vec3 unproject(double u, double v, double depth) const {
    const Vec3 q((u - cx) * depth / fx, (v - cy) * depth / fy, depth);
    return rotation.transpose() * (q - translation);
  }
};

/// Dense float image, row-major, channel-interleaved.
struct ImageF {
  int width = 0, height = 0, channels = 0;
  std::vector<float> data;

  ImageF() = default;
  ImageF(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  float& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
};

}  // namespace splat
