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

#include "hemoseg/postprocess.hpp"

#include "hemoseg/error.hpp"

namespace hemoseg {

LabelMask hard_label(const em::Responsibilities& resp, const em::BrainVoxels& voxels) {
  if (resp.voxels() != voxels.size()) {
    throw InvariantViolation("responsibilities do not match brain voxels");
  }
  const auto votes = em::hemorrhage_votes(resp);
  LabelMask out(voxels.dims);
  for (std::size_t i = 0; i < voxels.size(); ++i) out[voxels.index[i]] = votes[i];
  return out;
}

LabelMask fill_holes(const LabelMask& mask, const morph::StructuringElement& se) {
  return morph::close(mask, se);
}

SegmentationResult finalize(const em::Responsibilities& resp, const em::MixtureState& state,
                            const em::BrainVoxels& voxels, const BrainExtract& brain,
                            const PostprocessConfig& cfg) {
  const LabelMask raw = mask_and(hard_label(resp, voxels), brain.brain_mask);
  const LabelMask filled =
      fill_holes(raw, morph::StructuringElement::ball(cfg.close_radius));

  // Closing can drop voxels on the volume border; keep every raw vote.
  SegmentationResult out{mask_and(mask_or(filled, raw), brain.brain_mask), LabelMask(voxels.dims), state};
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    const auto row = resp.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    out.cluster_map[voxels.index[i]] = static_cast<LabelMask::Label>(best);
  }
  return out;
}

}  // namespace hemoseg
