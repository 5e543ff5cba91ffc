#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "splat/core.hpp"

namespace splat {

// SH degree-0 basis constant; DC coefficient <-> linear color.
constexpr double kShC0 = 0.28209479177387814;

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double logit(double p) {
  constexpr double eps = 1e-7;
  p = std::clamp(p, eps, 1.0 - eps);
  return std::log(p / (1.0 - p));
}

}  // namespace detail

/// Writes a scene in the standard 3DGS point-cloud layout: binary little
/// endian, float32 attributes, opacity as logit and scale as log.
inline void save_ply(const std::string& path,
                     const std::vector<Gaussian>& gaussians) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << gaussians.size() << "\n";
  static const char* kProps[] = {"x",       "y",       "z",       "nx",
                                 "ny",      "nz",      "f_dc_0",  "f_dc_1",
                                 "f_dc_2",  "opacity", "scale_0", "scale_1",
                                 "scale_2", "rot_0",   "rot_1",   "rot_2",
                                 "rot_3"};
  for (const char* p : kProps) out << "property float " << p << "\n";
  out << "end_header\n";
  for (const Gaussian& g : gaussians) {
    float rec[17];
    rec[0] = static_cast<float>(g.mu.x());
    rec[1] = static_cast<float>(g.mu.y());
    rec[2] = static_cast<float>(g.mu.z());
    rec[3] = rec[4] = rec[5] = 0.0f;  // normals, unused
    for (int c = 0; c < 3; ++c)
      rec[6 + c] = static_cast<float>((g.color[c] - 0.5) / kShC0);
    rec[9] = static_cast<float>(detail::logit(g.alpha));
    for (int c = 0; c < 3; ++c)
      rec[10 + c] = static_cast<float>(std::log(g.scale[c]));
    rec[13] = static_cast<float>(g.rotation.w());
    rec[14] = static_cast<float>(g.rotation.x());
    rec[15] = static_cast<float>(g.rotation.y());
    rec[16] = static_cast<float>(g.rotation.z());
    out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
  if (!out) throw FormatError("write failed: " + path);
}

/// Loads a 3DGS point cloud. Unknown float attributes (e.g. f_rest_*) are
/// skipped, which truncates spherical harmonics to the DC term. On-disk
/// logit opacity and log scale are converted to stored form.
inline std::vector<Gaussian> load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path);

  std::string line;
  if (!std::getline(in, line) || line != "ply")
    throw FormatError(path + ": not a PLY file (missing \"ply\" magic)");
  bool binary_le = false;
  std::size_t vertex_count = 0;
  std::vector<std::string> props;
  bool in_vertex_element = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
      if (!binary_le) throw FormatError(path + ": unsupported format " + fmt);
    } else if (tok == "element") {
      std::string name;
      ls >> name >> vertex_count;
      in_vertex_element = name == "vertex";
      if (!in_vertex_element)
        throw FormatError(path + ": unsupported element " + name);
    } else if (tok == "property") {
      std::string type, name;
      ls >> type >> name;
      if (!in_vertex_element) continue;
      if (type != "float")
        throw FormatError(path + ": unsupported property type " + type);
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    } else if (tok.empty()) {
      continue;
    } else {
      throw FormatError(path + ": malformed header line: " + line);
    }
  }
  if (!in) throw FormatError(path + ": truncated header");

  auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < props.size(); ++i)
      if (props[i] == name) return static_cast<long>(i);
    throw FormatError(path + ": missing attribute " + name);
  };
  const long ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
  const long idc[3] = {index_of("f_dc_0"), index_of("f_dc_1"),
                       index_of("f_dc_2")};
  const long iop = index_of("opacity");
  const long isc[3] = {index_of("scale_0"), index_of("scale_1"),
                       index_of("scale_2")};
  const long irot[4] = {index_of("rot_0"), index_of("rot_1"),
                        index_of("rot_2"), index_of("rot_3")};

  std::vector<Gaussian> gaussians;
  gaussians.reserve(vertex_count);
  std::vector<float> rec(props.size());
  for (std::size_t r = 0; r < vertex_count; ++r) {
    in.read(reinterpret_cast<char*>(rec.data()), rec.size() * sizeof(float));
    if (!in)
      throw FormatError(path + ": truncated at record " + std::to_string(r));
    for (float v : rec)
      if (!std::isfinite(v))
        throw FormatError(path + ": non-finite value at record " +
                          std::to_string(r));
    Gaussian g;
    g.mu = Vec3(rec[ix], rec[iy], rec[iz]);
    for (int c = 0; c < 3; ++c)
      g.color[c] = std::clamp(0.5 + kShC0 * rec[idc[c]], 0.0, 1.0);
    g.alpha = detail::sigmoid(rec[iop]);
    for (int c = 0; c < 3; ++c) g.scale[c] = std::exp(rec[isc[c]]);
    Quat q(rec[irot[0]], rec[irot[1]], rec[irot[2]], rec[irot[3]]);
    if (q.norm() < 1e-12)
      throw FormatError(path + ": zero quaternion at record " +
                        std::to_string(r));
    g.rotation = q.normalized();
    if (auto err = g.check())
      throw FormatError(path + ": invalid record " + std::to_string(r) + ": " +
                        *err);
    gaussians.push_back(std::move(g));
  }
  return gaussians;
}

}  // namespace splat
