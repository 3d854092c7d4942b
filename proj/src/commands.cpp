/* Copyright 2026 The hemoseg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hemoseg/commands.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hemoseg/error.hpp"
#include "hemoseg/fcm.hpp"
#include "hemoseg/io.hpp"
#include "hemoseg/log.hpp"
#include "hemoseg/mixture.hpp"
#include "hemoseg/overlay.hpp"
#include "hemoseg/postprocess.hpp"
#include "hemoseg/preprocess.hpp"

namespace hemoseg::cli {

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const InvariantViolation& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string fcm_report(const fcm::FcmFit& fit, double threshold) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "# fcm clusters=%zu iterations=%d threshold=%.2f\n",
                fit.clusters(), fit.iterations, threshold);
  out << buf << "# id center hemorrhage\n";
  for (std::size_t c = 0; c < fit.clusters(); ++c) {
    std::snprintf(buf, sizeof(buf), "%zu %.4f %d\n", c, fit.centers[c],
                  fit.centers[c] > threshold ? 1 : 0);
    out << buf;
  }
  return out.str();
}

}  // namespace

PipelineOutput run_algorithm(const BrainExtract& brain, const std::string& algorithm,
                             const RunConfig& cfg) {
  PipelineOutput out;
  if (algorithm == "mixture") {
    em::FitResult fitted = em::fit(brain, cfg.em);
    em::check_state(fitted.state, cfg.em);
    SegmentationResult seg = finalize(fitted.resp, fitted.state, fitted.voxels, brain, cfg.post);
    out.mask = std::move(seg.hemorrhage_mask);
    out.cluster_map = std::move(seg.cluster_map);
    out.no_hemorrhage = fitted.no_hemorrhage_found;
    out.warnings = fitted.warnings;
    out.report = em::format_report(fitted.state);
    out.report += out.no_hemorrhage ? "status=no hemorrhage found\n" : "status=hemorrhage clusters fitted\n";
    return out;
  }
  fcm::FcmConfig fc = cfg.fcm;
  if (algorithm == "fcm40") {
    fc.threshold_hu = 40.0;
  } else if (algorithm == "fcm45") {
    fc.threshold_hu = 45.0;
  } else if (algorithm != "fcm") {
    throw ConfigError("unknown algorithm '" + algorithm + "'");
  }
  fcm::FcmSegmentation seg = fcm::fcm_segment(brain, fc);
  out.mask = std::move(seg.hemorrhage_mask);
  out.cluster_map = std::move(seg.cluster_map);
  out.no_hemorrhage = count_nonzero(out.mask) == 0;
  out.report = fcm_report(seg.fit, fc.threshold_hu);
  return out;
}

PipelineOutput segment_volume(const Volume3D& vol, const RunConfig& cfg) {
  cfg.validate();
  const BrainExtract brain = preprocess(vol, cfg.preprocess);
  return run_algorithm(brain, cfg.algorithm == Algorithm::kMixture ? "mixture" : "fcm", cfg);
}

int cmd_segment(const SegmentArgs& args, std::ostream& out) {
  if (!std::filesystem::exists(args.input)) {
    throw DataError("input not found: " + args.input.string());
  }
  const io::LoadedVolume loaded = io::load_volume(args.input);
  log::info("loaded " + args.input.string());
  const PipelineOutput result = segment_volume(loaded.volume, args.cfg);
  for (const auto& w : result.warnings) log::warn(w);
  if (result.no_hemorrhage) log::info("no hemorrhage found");

  std::filesystem::create_directories(args.output_dir);
  io::save_nifti(result.mask, args.output_dir / "mask.nii", loaded.volume.spacing());
  io::save_nifti(result.cluster_map, args.output_dir / "clusters.nii", loaded.volume.spacing());
  write_text(args.output_dir / "report.txt", result.report);
  if (args.cfg.overlays) {
    export_overlays(loaded.volume, result.mask, nullptr, args.output_dir / "overlays",
                    args.cfg.preprocess.window);
  }
  out << "hemorrhage voxels: " << count_nonzero(result.mask) << '\n';
  if (result.no_hemorrhage) out << "no hemorrhage found\n";
  return kOk;
}

metrics::EvalReport evaluate(const EvaluateArgs& args) {
  const LabelMask pred = io::load_mask_nifti(args.pred);
  metrics::EvalReport report;
  if (args.boxes) {
    std::optional<Volume3D> vol;
    if (args.volume) vol = io::load_volume(*args.volume).volume;
    const auto boxes = metrics::read_boxes(*args.boxes);
    report = metrics::detection_rate(pred, boxes, args.detection, vol ? &*vol : nullptr);
  }
  if (args.truth) report.dice = metrics::dice(pred, io::load_mask_nifti(*args.truth));
  if (!args.truth && !args.boxes) throw ConfigError("evaluate needs --truth and/or --boxes");
  return report;
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out) {
  const metrics::EvalReport report = evaluate(args);
  const std::string text = metrics::format_report(report);
  out << text;
  if (args.output) write_text(*args.output, text);
  return kOk;
}

int cmd_phantom(const PhantomArgs& args, std::ostream& out) {
  phantom::PhantomSpec spec = args.spec ? phantom::read_spec(*args.spec) : phantom::default_spec();
  if (args.seed) spec.seed = *args.seed;
  const phantom::PhantomOutput ph = phantom::generate(spec);
  std::filesystem::create_directories(args.output_dir);
  io::save_nifti(ph.volume, args.output_dir / "volume.nii");
  io::save_nifti(ph.truth_mask, args.output_dir / "truth.nii", spec.spacing);
  metrics::write_boxes(args.output_dir / "boxes.txt", ph.boxes);
  out << "phantom: " << ph.truth_params.size() << " blob(s), "
      << count_nonzero(ph.truth_mask) << " hemorrhage voxels, " << ph.boxes.size()
      << " boxes\n";
  return kOk;
}

std::vector<CompareRow> compare_algorithms(const Volume3D& vol, const LabelMask& truth,
                                           const std::vector<std::string>& algorithms,
                                           const RunConfig& cfg,
                                           const std::optional<std::filesystem::path>& overlay_dir) {
  if (!(vol.dims() == truth.dims())) throw DataError("volume and truth dims differ");
  cfg.validate();
  const BrainExtract brain = preprocess(vol, cfg.preprocess);
  std::vector<CompareRow> rows;
  for (const auto& name : algorithms) {
    const PipelineOutput result = run_algorithm(brain, name, cfg);
    rows.push_back({name, metrics::dice(result.mask, truth), count_nonzero(result.mask)});
    if (overlay_dir) {
      export_overlays(vol, result.mask, &truth, *overlay_dir / name, cfg.preprocess.window);
    }
  }
  return rows;
}

std::string format_compare(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-10s %10s %10s\n", "algorithm", "dice", "voxels");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-10s %10.6f %10zu\n", r.algorithm.c_str(), r.dice,
                  r.predicted_voxels);
    out << buf;
  }
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "dice.%s=%.6f\n", r.algorithm.c_str(), r.dice);
    out << buf;
  }
  return out.str();
}

int cmd_compare(const CompareArgs& args, std::ostream& out) {
  if (args.algorithms.empty()) throw ConfigError("compare needs at least one algorithm");
  const io::LoadedVolume loaded = io::load_volume(args.input);
  const LabelMask truth = io::load_mask_nifti(args.truth);
  std::filesystem::create_directories(args.output_dir);
  std::optional<std::filesystem::path> overlays;
  if (args.cfg.overlays) overlays = args.output_dir / "overlays";
  const auto rows = compare_algorithms(loaded.volume, truth, args.algorithms, args.cfg, overlays);
  const std::string text = format_compare(rows);
  write_text(args.output_dir / "compare.txt", text);
  out << text;
  return kOk;
}

}  // namespace hemoseg::cli
