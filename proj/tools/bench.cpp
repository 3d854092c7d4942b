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

// Times the OpenMP kernels against the serial reference on a scaled phantom.

#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include <CLI11.hpp>

#include "hemoseg/mixture.hpp"
#include "hemoseg/morphology.hpp"
#include "hemoseg/phantom.hpp"
#include "hemoseg/preprocess.hpp"
#include "hemoseg/reference.hpp"

namespace {

using namespace hemoseg;

double best_ms(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-10s %12.3f %12.3f %8.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t size = 64;
  int repeats = 3;
  CLI::App app{"kernel benchmark: serial reference vs OpenMP"};
  app.add_option("--size", size, "edge length of the cubic phantom")->check(CLI::Range(24, 512));
  app.add_option("--repeats", repeats, "runs per kernel, best time reported")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const double s = static_cast<double>(size) / 64.0;
  phantom::PhantomSpec spec = phantom::default_spec();
  spec.dims = {size, size, size};
  for (auto& a : spec.brain_semi_axes) a *= s;
  for (auto& b : spec.blobs) {
    b.center = spec.center() + (b.center - Eigen::Vector3d::Constant(31.5)) * s;
    if (b.voxels) b.voxels = std::max<std::size_t>(50, static_cast<std::size_t>(*b.voxels * s * s * s));
  }
  const auto ph = phantom::generate(spec);
  const BrainExtract brain = preprocess(ph.volume, PreprocessConfig{});
  const em::EmConfig cfg;
  const auto voxels = em::BrainVoxels::from(brain);
  const auto init = em::init_state(brain, voxels, cfg);
  const auto resp = em::e_step(voxels, init.state).resp;
  const auto se = morph::StructuringElement::ball(2);

  std::printf("size=%zu brain_voxels=%zu clusters=%zu threads=%d\n", size, voxels.size(),
              init.state.size(), omp_get_max_threads());
  std::printf("%-10s %12s %12s %9s\n", "kernel", "serial_ms", "parallel_ms", "speedup");
  row("e_step", best_ms(repeats, [&] { reference::e_step(voxels, init.state); }),
      best_ms(repeats, [&] { em::e_step(voxels, init.state); }));
  row("m_step", best_ms(repeats, [&] { reference::m_step(voxels, resp, cfg); }),
      best_ms(repeats, [&] { em::m_step(voxels, resp, cfg); }));
  row("erode", best_ms(repeats, [&] { reference::erode(brain.brain_mask, se); }),
      best_ms(repeats, [&] { morph::erode(brain.brain_mask, se); }));
  row("dilate", best_ms(repeats, [&] { reference::dilate(brain.brain_mask, se); }),
      best_ms(repeats, [&] { morph::dilate(brain.brain_mask, se); }));
  return 0;
}
