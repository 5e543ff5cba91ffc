#pragma once

#include <string>
#include <vector>

#include "splat/io/files.hpp"
#include "splat/io/ply.hpp"
#include "splat/pipeline.hpp"

namespace splat {

inline GirStrategy strategy_from_string(const std::string& s) {
  if (s == "nearest") return GirStrategy::kNearest;
  if (s == "most_contributive") return GirStrategy::kMostContributive;
  throw FormatError("unknown strategy: " + s);
}

inline std::string strategy_to_string(GirStrategy s) {
  return s == GirStrategy::kNearest ? "nearest" : "most_contributive";
}

/// Applies config-file keys on top of defaults.
inline PipelineConfig config_from_json(const json& j,
                                       PipelineConfig config = {}) {
  try {
    config.tau_mask = j.value("tau_mask", config.tau_mask);
    config.k_sigma = j.value("k_sigma", config.k_sigma);
    config.window_radius = j.value("window_radius", config.window_radius);
    config.theta_red = j.value("theta_red", config.theta_red);
    config.predictor = j.value("predictor", config.predictor);
    if (j.contains("strategy"))
      config.strategy = strategy_from_string(j.at("strategy"));
    config.gir_tau = j.value("gir_tau", config.gir_tau);
    if (j.contains("background")) {
      const auto& bg = j.at("background");
      config.background = Vec3(bg.at(0), bg.at(1), bg.at(2));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  make_predictor(config.predictor);  // fail early on bad names
  return config;
}

inline json config_to_json(const PipelineConfig& c) {
  return json{{"tau_mask", c.tau_mask},
              {"k_sigma", c.k_sigma},
              {"window_radius", c.window_radius},
              {"theta_red", c.theta_red},
              {"predictor", c.predictor},
              {"strategy", strategy_to_string(c.strategy)},
              {"gir_tau", c.gir_tau},
              {"background",
               {c.background.x(), c.background.y(), c.background.z()}}};
}

inline PipelineConfig load_config(const std::string& path,
                                  PipelineConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return config_from_json(j, base);
}

/// Per-pixel candidate map from a flat Gaussian list: each Gaussian anchors
/// at the pixel its center projects to; on collision the nearer one wins.
inline PixelCandidates candidates_from_gaussians(
    const std::vector<Gaussian>& gaussians, const CameraModel& cam) {
  PixelCandidates out(cam.width, cam.height);
  std::vector<double> depth(out.cells.size(),
                            std::numeric_limits<double>::infinity());
  for (const Gaussian& g : gaussians) {
    const auto p = cam.project(g.mu);
    if (!p) continue;
    const int x = static_cast<int>(std::floor(p->u));
    const int y = static_cast<int>(std::floor(p->v));
    if (x < 0 || x >= cam.width || y < 0 || y >= cam.height) continue;
    const std::size_t i = static_cast<std::size_t>(y) * cam.width + x;
    if (p->depth < depth[i]) {
      depth[i] = p->depth;
      out.cells[i] = Candidate{g, -1};
    }
  }
  return out;
}

/// Ordered frame entries plus config overrides and held-out eval views.
/// Relative paths resolve against the manifest's directory; every referenced
/// file must exist at load time.
struct SequenceManifest {
  std::vector<FrameInput> frames;
  std::vector<EvalView> eval_views;
  PipelineConfig config;
};

inline SequenceManifest load_manifest(const std::string& path,
                                      PipelineConfig base_config = {}) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }

  const fs::path dir = fs::path(path).parent_path();
  auto resolve = [&](const std::string& rel) {
    const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : dir / rel;
    if (!fs::exists(p)) throw FormatError("missing file: " + p.string());
    return p.string();
  };

  SequenceManifest manifest;
  try {
    manifest.config = j.contains("config")
                          ? config_from_json(j.at("config"), base_config)
                          : base_config;
    if (!j.contains("frames") || j.at("frames").empty())
      throw FormatError(path + ": manifest needs at least one frame");
    for (const auto& jf : j.at("frames")) {
      FrameInput frame;
      frame.camera = load_camera(resolve(jf.at("camera")));
      if (jf.contains("image")) frame.image = load_png(resolve(jf.at("image")));
      if (jf.contains("gaussians"))
        frame.candidates = candidates_from_gaussians(
            load_ply(resolve(jf.at("gaussians"))), frame.camera);
      else
        frame.candidates = PixelCandidates(frame.camera.width,
                                           frame.camera.height);
      manifest.frames.push_back(std::move(frame));
    }
    for (const auto& je : j.value("eval_views", json::array())) {
      EvalView view;
      view.camera = load_camera(resolve(je.at("camera")));
      view.image = load_png(resolve(je.at("image")));
      manifest.eval_views.push_back(std::move(view));
    }
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return manifest;
}

}  // namespace splat
