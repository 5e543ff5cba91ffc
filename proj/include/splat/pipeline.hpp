#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "splat/gir.hpp"
#include "splat/losses.hpp"
#include "splat/redundancy.hpp"

namespace splat {

/// Streaming configuration. The soft mask is a KEEP weighting: 1 retains a
/// historical Gaussian, values below tau_mask remove it. This fixes the
/// polarity so opacity modulation and compression agree.
struct PipelineConfig {
  double tau_mask = 0.5;
  double k_sigma = 3.0;
  int window_radius = 2;
  double theta_red = 0.7;
  std::string predictor = "iou_heuristic";
  GirStrategy strategy = GirStrategy::kMostContributive;
  double gir_tau = kAlphaMin;  // nearest-rule threshold
  Vec3 background = Vec3::Zero();

  RedundancyConfig redundancy() const {
    return {k_sigma, window_radius, theta_red};
  }
};

/// Pluggable soft-mask strategy: maps (history GIR, current candidates,
/// redundancy report) to a keep weighting in [0,1] per pixel. Must be
/// deterministic given its inputs.
class MaskPredictor {
 public:
  virtual ~MaskPredictor() = default;
  virtual std::vector<float> predict(const GaussianImage& gir,
                                     const PixelCandidates& current,
                                     const RedundancyReport& report) const = 0;
  virtual std::string name() const = 0;
};

/// Keep weight 1 − IoU: high overlap means low keep confidence.
class IouHeuristicPredictor final : public MaskPredictor {
 public:
  std::vector<float> predict(const GaussianImage&, const PixelCandidates&,
                             const RedundancyReport& report) const override {
    std::vector<float> soft(report.iou.size());
    for (std::size_t i = 0; i < soft.size(); ++i)
      soft[i] = 1.0f - report.iou[i];
    return soft;
  }
  std::string name() const override { return "iou_heuristic"; }
};

class ConstantPredictor final : public MaskPredictor {
 public:
  explicit ConstantPredictor(double value) : value_(value) {
    if (value < 0.0 || value > 1.0)
      throw InvariantError("constant predictor value outside [0,1]");
  }
  std::vector<float> predict(const GaussianImage& gir, const PixelCandidates&,
                             const RedundancyReport&) const override {
    return std::vector<float>(gir.id_map.size(), static_cast<float>(value_));
  }
  std::string name() const override {
    return "constant(" + std::to_string(value_) + ")";
  }

 private:
  double value_;
};

/// Keep weight 1 − gt_mask: drops exactly the pixels the redundancy ground
/// truth flags.
class GtOraclePredictor final : public MaskPredictor {
 public:
  std::vector<float> predict(const GaussianImage&, const PixelCandidates&,
                             const RedundancyReport& report) const override {
    std::vector<float> soft(report.gt_mask.size());
    for (std::size_t i = 0; i < soft.size(); ++i)
      soft[i] = report.gt_mask[i] ? 0.0f : 1.0f;
    return soft;
  }
  std::string name() const override { return "gt_oracle"; }
};

/// Parses "iou_heuristic", "gt_oracle", or "constant(v)".
inline std::unique_ptr<MaskPredictor> make_predictor(const std::string& name) {
  if (name == "iou_heuristic") return std::make_unique<IouHeuristicPredictor>();
  if (name == "gt_oracle") return std::make_unique<GtOraclePredictor>();
  if (name.rfind("constant(", 0) == 0 && name.back() == ')') {
    const std::string arg = name.substr(9, name.size() - 10);
    std::size_t pos = 0;
    const double v = std::stod(arg, &pos);
    if (pos != arg.size()) throw InvariantError("bad constant value: " + arg);
    return std::make_unique<ConstantPredictor>(v);
  }
  throw InvariantError("unknown predictor: " + name);
}

/// One input frame of the stream. Candidates are this frame's per-pixel
/// Gaussian predictions; the image, when present, is only used for metrics.
struct FrameInput {
  CameraModel camera;
  std::optional<ImageF> image;
  PixelCandidates candidates;
};

struct FrameStats {
  std::int64_t frame = 0;
  std::size_t inserted = 0;
  std::size_t removed = 0;
  std::size_t live_count = 0;
  double c_ratio = 0.0;  // removed / (removed + live_after)
};

struct StepReport {
  GaussianImage gir;
  RedundancyReport redundancy;
  std::vector<float> soft_mask;
  std::vector<std::uint8_t> binary_mask;
  std::vector<GaussianId> removed_ids;
  std::vector<GaussianId> inserted_ids;
};

/// Per-sequence pipeline state. Single writer.
struct StreamState {
  GlobalGaussianStore store;
  std::int64_t frame_index = 0;
  std::vector<FrameStats> stats;
  PipelineConfig config;
  std::unordered_map<GaussianId, std::int64_t> provenance_of;

  // Cumulative bookkeeping against a caller-supplied provenance tag set
  // (e.g. injected duplicates of a synthetic scene).
  std::unordered_set<std::int64_t> flagged_provenance;
  std::size_t flagged_inserted = 0;
  std::size_t flagged_removed = 0;

  std::size_t total_inserted = 0;
  std::size_t total_removed = 0;
};

/// Binary keep-mask: 1 where soft ≥ tau (closed at tau).
inline std::vector<std::uint8_t> threshold_mask(const std::vector<float>& soft,
                                                double tau_mask) {
  if (tau_mask < 0.0 || tau_mask > 1.0)
    throw InvariantError("tau_mask outside [0,1]");
  std::vector<std::uint8_t> mask(soft.size());
  for (std::size_t i = 0; i < soft.size(); ++i)
    mask[i] = soft[i] >= static_cast<float>(tau_mask) ? 1 : 0;
  return mask;
}

/// One frame of the streaming loop: project history into a GIR, score
/// redundancy, predict the keep mask, threshold, compress the store through
/// the ID map, then integrate the frame's candidates. A removed id's pixels
/// vote once; the per-id soft weight is the minimum over its pixels.
inline StepReport step(StreamState& state, const FrameInput& frame) {
  if (auto err = frame.camera.check())
    throw InvariantError("step: camera: " + *err);
  if (frame.candidates.width != frame.camera.width ||
      frame.candidates.height != frame.camera.height)
    throw InvariantError("step: candidate map does not match camera size");

  StepReport report;
  report.gir = build_gir(state.store, frame.camera, state.config.strategy,
                         state.config.gir_tau);
  report.redundancy = compute_redundancy(report.gir, frame.candidates,
                                         state.store,
                                         state.config.redundancy());

  const auto predictor = make_predictor(state.config.predictor);
  report.soft_mask =
      predictor->predict(report.gir, frame.candidates, report.redundancy);
  if (report.soft_mask.size() != report.gir.id_map.size())
    throw InvariantError("predictor contract violation: mask size");
  for (float v : report.soft_mask)
    if (!(v >= 0.0f && v <= 1.0f))
      throw InvariantError("predictor contract violation: value outside [0,1]");
  report.binary_mask = threshold_mask(report.soft_mask, state.config.tau_mask);

  std::unordered_map<GaussianId, float> min_soft;
  for (std::size_t i = 0; i < report.gir.id_map.size(); ++i) {
    const GaussianId id = report.gir.id_map[i];
    if (id == kInvalidId) continue;
    auto [it, fresh] = min_soft.emplace(id, report.soft_mask[i]);
    if (!fresh) it->second = std::min(it->second, report.soft_mask[i]);
  }
  for (const auto& [id, soft] : min_soft)
    if (soft < static_cast<float>(state.config.tau_mask))
      report.removed_ids.push_back(id);
  std::sort(report.removed_ids.begin(), report.removed_ids.end());

  const std::size_t removed = state.store.remove(report.removed_ids);
  for (GaussianId id : report.removed_ids) {
    auto it = state.provenance_of.find(id);
    if (it != state.provenance_of.end()) {
      if (state.flagged_provenance.count(it->second)) ++state.flagged_removed;
      state.provenance_of.erase(it);
    }
  }

  std::vector<Gaussian> batch;
  std::vector<std::int64_t> batch_provenance;
  for (const auto& cell : frame.candidates.cells) {
    if (!cell) continue;
    Gaussian g = cell->gaussian;
    g.birth_frame = state.frame_index;
    batch.push_back(std::move(g));
    batch_provenance.push_back(cell->provenance);
  }
  report.inserted_ids = state.store.insert(batch);
  for (std::size_t i = 0; i < report.inserted_ids.size(); ++i) {
    if (batch_provenance[i] == -1) continue;
    state.provenance_of[report.inserted_ids[i]] = batch_provenance[i];
    if (state.flagged_provenance.count(batch_provenance[i]))
      ++state.flagged_inserted;
  }

  state.total_inserted += report.inserted_ids.size();
  state.total_removed += removed;
  state.store.frame_index = state.frame_index;

  FrameStats fs;
  fs.frame = state.frame_index;
  fs.inserted = report.inserted_ids.size();
  fs.removed = removed;
  fs.live_count = state.store.size();
  fs.c_ratio = c_ratio(removed, removed + state.store.size());
  state.stats.push_back(fs);
  ++state.frame_index;
  return report;
}

/// Renders the store with per-Gaussian opacity weights (default 1 when
/// absent). Weight 0 is pixel-exact removal; weight 1 is the plain render.
inline RenderedImage opacity_modulation_render(
    const GlobalGaussianStore& store, const CameraModel& cam,
    const std::unordered_map<GaussianId, double>& weight_by_id,
    const Vec3& background = Vec3::Zero()) {
  std::vector<Splat2D> splats;
  splats.reserve(store.size());
  for (const auto& [id, g] : store) {
    double w = 1.0;
    if (auto it = weight_by_id.find(id); it != weight_by_id.end()) w = it->second;
    if (w < 0.0 || w > 1.0)
      throw InvariantError("opacity weight outside [0,1]");
    if (auto s = project_gaussian(cam, g, w)) splats.push_back(*s);
  }
  return render(cam, splats, background);
}

struct EvalView {
  CameraModel camera;
  ImageF image;  // ground truth RGB
};

struct EvalRow {
  double psnr = 0.0;
  double ssim = 0.0;
};

struct SequenceReport {
  std::vector<FrameStats> frames;
  std::size_t total_inserted = 0;
  std::size_t total_removed = 0;
  std::size_t final_live = 0;
  double total_c_ratio = 0.0;  // total removed / total inserted
  std::vector<EvalRow> eval;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::size_t flagged_inserted = 0;
  std::size_t flagged_removed = 0;
};

/// Folds step over an ordered frame sequence (streaming semantics: no
/// reordering), then renders the held-out eval views from the final store.
/// Errors from step propagate with the frame index attached.
inline SequenceReport run_sequence(StreamState& state,
                                   const std::vector<FrameInput>& frames,
                                   const std::vector<EvalView>& eval_views = {}) {
  if (frames.empty()) throw InvariantError("run_sequence: no frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    try {
      step(state, frames[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("frame " + std::to_string(i) + ": " + e.what());
    }
  }

  SequenceReport report;
  report.frames = state.stats;
  report.total_inserted = state.total_inserted;
  report.total_removed = state.total_removed;
  report.final_live = state.store.size();
  report.total_c_ratio = c_ratio(state.total_removed, state.total_inserted);
  report.flagged_inserted = state.flagged_inserted;
  report.flagged_removed = state.flagged_removed;

  for (const EvalView& view : eval_views) {
    const RenderedImage img = render(
        view.camera, project_store(state.store, view.camera),
        state.config.background);
    EvalRow row{psnr(img.rgb, view.image), ssim(img.rgb, view.image)};
    report.mean_psnr += row.psnr;
    report.mean_ssim += row.ssim;
    report.eval.push_back(row);
  }
  if (!report.eval.empty()) {
    report.mean_psnr /= static_cast<double>(report.eval.size());
    report.mean_ssim /= static_cast<double>(report.eval.size());
  }
  return report;
}

}  // namespace splat
