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

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hemoseg/commands.hpp"
#include "hemoseg/config.hpp"
#include "hemoseg/error.hpp"
#include "hemoseg/log.hpp"

namespace {

using namespace hemoseg;

// Flags shared by segment and compare. Unset flags leave the config file value.
struct PipelineFlags {
  std::optional<std::string> config;
  std::optional<std::string> algorithm;
  std::optional<double> window_min;
  std::optional<double> window_max;
  std::optional<std::size_t> min_region_voxels;
  std::optional<double> fcm_threshold;
  std::optional<int> connectivity;
  std::optional<std::size_t> max_clusters;
  bool overlays = false;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "key=value config file");
    app.add_option("--window-min", window_min, "display window lower bound (HU)");
    app.add_option("--window-max", window_max, "display window upper bound (HU)");
    app.add_option("--min-region-voxels", min_region_voxels,
                   "smallest high-intensity region that seeds a cluster");
    app.add_option("--fcm-threshold", fcm_threshold, "FCM hemorrhage center threshold (HU)");
    app.add_option("--connectivity", connectivity, "6 or 26, used for brain and seed regions")
        ->check(CLI::IsMember({6, 26}));
    app.add_option("--max-clusters", max_clusters, "cluster cap, healthy included");
    app.add_flag("--overlays", overlays, "write per-slice PPM overlays");
  }

  RunConfig build() const {
    RunConfig cfg;
    if (config) cfg.apply(KeyValues::load(*config));
    if (algorithm) {
      if (*algorithm == "mixture") {
        cfg.algorithm = Algorithm::kMixture;
      } else if (*algorithm == "fcm") {
        cfg.algorithm = Algorithm::kFcm;
      } else {
        throw ConfigError("--algorithm: expected mixture or fcm, got " + *algorithm);
      }
    }
    if (window_min) cfg.preprocess.window.i_min = *window_min;
    if (window_max) cfg.preprocess.window.i_max = *window_max;
    if (min_region_voxels) cfg.em.min_region_voxels = *min_region_voxels;
    if (fcm_threshold) cfg.fcm.threshold_hu = *fcm_threshold;
    if (connectivity) {
      cfg.preprocess.connectivity = morph::connectivity_from_int(*connectivity);
      cfg.em.connectivity = cfg.preprocess.connectivity;
    }
    if (max_clusters) cfg.em.max_clusters = *max_clusters;
    if (overlays) cfg.overlays = true;
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  log::init_from_env();

  CLI::App app{"Unsupervised hemorrhage segmentation for head CT volumes.\n\n"
               "Config file defaults (override with --config):\n" +
               RunConfig::describe_defaults()};
  app.require_subcommand(1);

  cli::SegmentArgs seg;
  PipelineFlags seg_flags;
  std::string seg_input, seg_output;
  auto* segment = app.add_subcommand("segment", "segment one volume");
  segment->add_option("--input", seg_input, "input .nii or raw volume")->required();
  segment->add_option("--output", seg_output, "output directory")->required();
  segment->add_option("--algorithm", seg_flags.algorithm, "mixture or fcm");
  seg_flags.add_to(*segment);

  cli::EvaluateArgs ev;
  std::string ev_pred;
  std::optional<std::string> ev_truth, ev_boxes, ev_volume, ev_output;
  auto* evaluate = app.add_subcommand("evaluate", "score a predicted mask");
  evaluate->add_option("--pred", ev_pred, "predicted mask")->required();
  evaluate->add_option("--truth", ev_truth, "voxelwise truth mask");
  evaluate->add_option("--boxes", ev_boxes, "bounding box annotations");
  evaluate->add_option("--volume", ev_volume, "CT volume for box intensity bins");
  evaluate->add_option("--output", ev_output, "report file");

  cli::PhantomArgs ph;
  std::optional<std::string> ph_spec;
  std::string ph_output;
  std::optional<std::uint64_t> ph_seed;
  auto* phantom = app.add_subcommand("phantom", "generate a synthetic phantom");
  phantom->add_option("--input", ph_spec, "phantom spec file (default phantom if absent)");
  phantom->add_option("--output", ph_output, "output directory")->required();
  phantom->add_option("--seed", ph_seed, "noise seed, overrides the spec");

  cli::CompareArgs cmp;
  PipelineFlags cmp_flags;
  std::string cmp_input, cmp_truth, cmp_output;
  std::vector<std::string> cmp_algorithms;
  auto* compare = app.add_subcommand("compare", "Dice of several algorithms on one volume");
  compare->add_option("--input", cmp_input, "input volume")->required();
  compare->add_option("--truth", cmp_truth, "voxelwise truth mask")->required();
  compare->add_option("--output", cmp_output, "output directory")->required();
  compare->add_option("--algorithms", cmp_algorithms,
                      "subset of mixture, fcm, fcm40, fcm45 (default mixture fcm40 fcm45)");
  cmp_flags.add_to(*compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int shown = app.exit(e);
    return shown == 0 ? cli::kOk : cli::kUsage;
  }

  return cli::guarded(
      [&]() -> int {
        if (segment->parsed()) {
          seg.input = seg_input;
          seg.output_dir = seg_output;
          seg.cfg = seg_flags.build();
          return cli::cmd_segment(seg, std::cout);
        }
        if (evaluate->parsed()) {
          ev.pred = ev_pred;
          if (ev_truth) ev.truth = *ev_truth;
          if (ev_boxes) ev.boxes = *ev_boxes;
          if (ev_volume) ev.volume = *ev_volume;
          if (ev_output) ev.output = *ev_output;
          return cli::cmd_evaluate(ev, std::cout);
        }
        if (phantom->parsed()) {
          if (ph_spec) ph.spec = *ph_spec;
          ph.output_dir = ph_output;
          ph.seed = ph_seed;
          return cli::cmd_phantom(ph, std::cout);
        }
        cmp.input = cmp_input;
        cmp.truth = cmp_truth;
        cmp.output_dir = cmp_output;
        if (!cmp_algorithms.empty()) cmp.algorithms = cmp_algorithms;
        cmp.cfg = cmp_flags.build();
        return cli::cmd_compare(cmp, std::cout);
      },
      std::cerr);
}
