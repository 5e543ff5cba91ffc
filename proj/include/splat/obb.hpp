#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "splat/core.hpp"

namespace splat {

/// Minimal rotated box enclosing a Gaussian's confidence ellipsoid at a
/// chosen sigma level. Columns of `axes` are the box axes.
struct OrientedBoundingBox {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();
  Vec3 half_extents = Vec3::Ones();

  double volume() const { return 8.0 * half_extents.prod(); }

  /// World point of box-frame coordinates c ∈ [−1,1]³ scaled by half_extents.
  Vec3 corner(int i) const {
    const Vec3 s((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0,
                 (i & 4) ? 1.0 : -1.0);
    return center + axes * s.cwiseProduct(half_extents).matrix();
  }

  bool contains(const Vec3& p) const {
    const Vec3 local = axes.transpose() * (p - center);
    return (local.cwiseAbs().array() <= half_extents.array() + 1e-12).all();
  }
};

inline OrientedBoundingBox obb_from_gaussian(const Gaussian& g,
                                             double k_sigma) {
  return {g.mu, g.rotation.toRotationMatrix(), k_sigma * g.scale};
}

namespace detail {

using Polygon = std::vector<Vec3>;

// Faces of a convex polytope; each polygon wound CCW seen from outside.
using PolytopeFaces = std::vector<Polygon>;

inline PolytopeFaces obb_faces(const OrientedBoundingBox& b) {
  // corner(i) bit layout: 1 = +x, 2 = +y, 4 = +z (box frame)
  static constexpr int kFaceCorners[6][4] = {
      {1, 3, 7, 5},  // +x
      {0, 4, 6, 2},  // −x
      {2, 6, 7, 3},  // +y
      {0, 1, 5, 4},  // −y
      {4, 5, 7, 6},  // +z
      {0, 2, 3, 1},  // −z
  };
  PolytopeFaces faces(6);
  for (int f = 0; f < 6; ++f) {
    faces[f].reserve(4);
    for (int c : kFaceCorners[f]) faces[f].push_back(b.corner(c));
  }
  return faces;
}

// Clips faces against the half-space n·x <= d; closes the cut with a cap
// polygon wound so its outward normal is n.
inline PolytopeFaces clip_halfspace(const PolytopeFaces& faces, const Vec3& n,
                                    double d, double eps) {
  // Early outs keep coplanar faces exact: an inactive clip must not emit a
  // cap on top of an existing face.
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Polygon& poly : faces)
    for (const Vec3& p : poly) {
      const double s = n.dot(p) - d;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  if (hi <= eps) return faces;   // fully inside
  if (lo >= -eps) return {};     // fully outside (volume 0)

  PolytopeFaces out;
  Polygon cap_points;
  for (const Polygon& poly : faces) {
    Polygon clipped;
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec3& a = poly[i];
      const Vec3& b = poly[(i + 1) % m];
      const double da = n.dot(a) - d;
      const double db = n.dot(b) - d;
      if (da <= eps) {
        clipped.push_back(a);
        if (da >= -eps) cap_points.push_back(a);  // on the cut plane
      }
      if ((da < -eps && db > eps) || (da > eps && db < -eps)) {
        const double t = da / (da - db);
        const Vec3 x = a + t * (b - a);
        clipped.push_back(x);
        cap_points.push_back(x);
      }
    }
    if (clipped.size() >= 3) out.push_back(std::move(clipped));
  }
  if (cap_points.size() >= 3) {
    // Order the cut points angularly around their centroid in the plane.
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : cap_points) centroid += p;
    centroid /= static_cast<double>(cap_points.size());
    Vec3 u = (cap_points[0] - centroid);
    if (u.norm() < eps) u = n.unitOrthogonal();
    u.normalize();
    const Vec3 v = n.cross(u).normalized();
    std::sort(cap_points.begin(), cap_points.end(),
              [&](const Vec3& a, const Vec3& b) {
                const Vec3 pa = a - centroid, pb = b - centroid;
                return std::atan2(pa.dot(v), pa.dot(u)) <
                       std::atan2(pb.dot(v), pb.dot(u));
              });
    // Drop near-duplicate points; two source edges can cut at one vertex.
    Polygon cap;
    for (const Vec3& p : cap_points)
      if (cap.empty() || (p - cap.back()).norm() > eps) cap.push_back(p);
    if (cap.size() >= 3 && (cap.front() - cap.back()).norm() <= eps)
      cap.pop_back();
    if (cap.size() >= 3) out.push_back(std::move(cap));
  }
  return out;
}

// Divergence-theorem volume of a closed polytope with outward-wound faces.
inline double polytope_volume(const PolytopeFaces& faces) {
  double six_v = 0.0;
  for (const Polygon& poly : faces) {
    for (std::size_t i = 1; i + 1 < poly.size(); ++i)
      six_v += poly[0].dot(poly[i].cross(poly[i + 1]));
  }
  return six_v / 6.0;
}

}  // namespace detail

/// Exact volume of the convex intersection of two oriented boxes:
/// a's polytope clipped successively by b's six half-spaces. Commutative
/// within 1e-9 of the smaller volume; 0 when disjoint.
inline double obb_intersection_volume(const OrientedBoundingBox& a,
                                      const OrientedBoundingBox& b) {
  const double eps =
      1e-12 * std::max(1.0, a.half_extents.maxCoeff() +
                                b.half_extents.maxCoeff() +
                                (a.center - b.center).norm());
  detail::PolytopeFaces faces = detail::obb_faces(a);
  for (int axis = 0; axis < 3 && !faces.empty(); ++axis) {
    const Vec3 n = b.axes.col(axis);
    const double c = n.dot(b.center);
    faces = detail::clip_halfspace(faces, n, c + b.half_extents[axis], eps);
    if (faces.empty()) break;
    faces = detail::clip_halfspace(faces, -n, -(c - b.half_extents[axis]), eps);
  }
  return std::max(detail::polytope_volume(faces), 0.0);
}

/// Eq-style view-asymmetric overlap: max over neighbors of intersection
/// volume divided by p's own volume. 0 for an empty neighbor set; in [0,1].
inline double asymmetric_iou(const OrientedBoundingBox& p,
                             const std::vector<OrientedBoundingBox>& neighbors) {
  double best = 0.0;
  const double vol_p = p.volume();
  for (const OrientedBoundingBox& q : neighbors)
    best = std::max(best, obb_intersection_volume(p, q) / vol_p);
  return std::clamp(best, 0.0, 1.0);
}

}  // namespace splat
