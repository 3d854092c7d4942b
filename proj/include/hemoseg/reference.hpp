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

// Serial reference kernels. They mirror the OpenMP kernels one loop at a time,
// without blocking or early exits, and are kept to cross-check and benchmark them.

#include "hemoseg/mixture.hpp"
#include "hemoseg/morphology.hpp"

namespace hemoseg::reference {

em::EStepResult e_step(const em::BrainVoxels& voxels, const em::MixtureState& state);
em::MixtureState m_step(const em::BrainVoxels& voxels, const em::Responsibilities& resp,
                        const em::EmConfig& cfg);

LabelMask erode(const LabelMask& mask, const morph::StructuringElement& se);
LabelMask dilate(const LabelMask& mask, const morph::StructuringElement& se);

}  // namespace hemoseg::reference
