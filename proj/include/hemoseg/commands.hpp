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

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hemoseg/config.hpp"
#include "hemoseg/metrics.hpp"
#include "hemoseg/phantom.hpp"
#include "hemoseg/volume.hpp"

namespace hemoseg::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

/// Runs `body`, mapping library exceptions onto exit codes and printing the diagnostic.
int guarded(const std::function<int()>& body, std::ostream& err);

/// Output of one end-to-end segmentation.
struct PipelineOutput {
  LabelMask mask;
  LabelMask cluster_map;
  std::string report;  ///< cluster table (mixture) or center list (fcm)
  bool no_hemorrhage = false;
  std::vector<std::string> warnings;
};

/// preprocess -> mixture fit -> finalize, or preprocess -> FCM.
PipelineOutput segment_volume(const Volume3D& vol, const RunConfig& cfg);

/// Same as segment_volume on an existing brain extraction. `algorithm` is one
/// of mixture, fcm (cfg threshold), fcm40, fcm45.
PipelineOutput run_algorithm(const BrainExtract& brain, const std::string& algorithm,
                             const RunConfig& cfg);

struct SegmentArgs {
  std::filesystem::path input;
  std::filesystem::path output_dir;
  RunConfig cfg;
};

/// Writes mask.nii, clusters.nii and report.txt (plus overlays/ when enabled).
int cmd_segment(const SegmentArgs& args, std::ostream& out);

struct EvaluateArgs {
  std::filesystem::path pred;
  std::optional<std::filesystem::path> truth;
  std::optional<std::filesystem::path> boxes;
  std::optional<std::filesystem::path> volume;  ///< for box intensity bins
  std::optional<std::filesystem::path> output;
  metrics::DetectionConfig detection;
};

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out);
metrics::EvalReport evaluate(const EvaluateArgs& args);

struct PhantomArgs {
  std::optional<std::filesystem::path> spec;
  std::filesystem::path output_dir;
  std::optional<std::uint64_t> seed;
};

/// Writes volume.nii, truth.nii and boxes.txt.
int cmd_phantom(const PhantomArgs& args, std::ostream& out);

struct CompareRow {
  std::string algorithm;
  double dice = 0.0;
  std::size_t predicted_voxels = 0;
};

std::vector<CompareRow> compare_algorithms(const Volume3D& vol, const LabelMask& truth,
                                           const std::vector<std::string>& algorithms,
                                           const RunConfig& cfg,
                                           const std::optional<std::filesystem::path>& overlay_dir = {});
std::string format_compare(const std::vector<CompareRow>& rows);

struct CompareArgs {
  std::filesystem::path input;
  std::filesystem::path truth;
  std::vector<std::string> algorithms{"mixture", "fcm40", "fcm45"};
  std::filesystem::path output_dir;
  RunConfig cfg;
};

/// Writes compare.txt (and per-algorithm overlays when enabled).
int cmd_compare(const CompareArgs& args, std::ostream& out);

}  // namespace hemoseg::cli
