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

#include <doctest.h>

#include <cmath>
#include <random>

#include <omp.h>

#include "hemoseg/mixture.hpp"
#include "hemoseg/morphology.hpp"
#include "hemoseg/parallel.hpp"
#include "hemoseg/phantom.hpp"
#include "hemoseg/preprocess.hpp"
#include "hemoseg/reference.hpp"
#include "oracles.hpp"

using namespace hemoseg;
using namespace hemoseg::em;

namespace {

struct Scene {
  BrainExtract brain;
  BrainVoxels voxels;
  MixtureState state;
};

// Large enough to take the parallel paths, with three hemorrhage clusters.
Scene scene() {
  auto spec = phantom::default_spec();
  phantom::BlobSpec b;
  b.center = {20, 26, 30};
  b.voxels = 300;
  b.mean_hu = 62;
  spec.blobs.push_back(b);
  auto brain = preprocess(phantom::generate(spec).volume, {});
  auto voxels = BrainVoxels::from(brain);
  MixtureState s;
  s.n_bv = voxels.size();
  ClusterParams h;
  h.kind = ClusterKind::kHealthy;
  h.weight = 0.97;
  h.intensity_mean = 32;
  h.intensity_var = 20;
  s.clusters.push_back(h);
  const Eigen::Vector3d centers[3] = {{38, 36, 33}, {20, 26, 30}, {30, 30, 30}};
  const double means[3] = {75, 62, 50};
  for (int c = 0; c < 3; ++c) {
    ClusterParams p;
    p.weight = 0.01;
    p.intensity_mean = means[c];
    p.intensity_var = 25 + 5 * c;
    p.location_mean = centers[c];
    Eigen::Matrix3d a;
    a << 4 + c, 0.5, 0.2, 0.5, 3, -0.3, 0.2, -0.3, 5 - c;
    p.location_cov = a;
    s.clusters.push_back(p);
  }
  return {std::move(brain), std::move(voxels), std::move(s)};
}

double max_abs_diff(const Responsibilities& a, const Responsibilities& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.voxels(); ++i)
    for (std::size_t c = 0; c < a.clusters(); ++c) m = std::max(m, std::fabs(a(i, c) - b(i, c)));
  return m;
}

void check_close(const MixtureState& a, const MixtureState& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    const auto& p = a.clusters[c];
    const auto& q = b.clusters[c];
    CHECK(p.kind == q.kind);
    CHECK(std::fabs(p.weight - q.weight) <= tol);
    CHECK(std::fabs(p.intensity_mean - q.intensity_mean) <= tol * 100);
    CHECK(std::fabs(p.intensity_var - q.intensity_var) <= tol * 100);
    CHECK((p.location_mean - q.location_mean).cwiseAbs().maxCoeff() <= tol * 100);
    CHECK((p.location_cov - q.location_cov).cwiseAbs().maxCoeff() <= tol * 100);
  }
}

template <typename F>
auto with_threads(int n, F&& f) {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(n);
  auto r = f();
  omp_set_num_threads(saved);
  return r;
}

}  // namespace

TEST_CASE("e_step agrees with the serial reference") {
  const auto s = scene();
  REQUIRE(s.voxels.size() > kParallelMinVoxels);
  const auto fast = e_step(s.voxels, s.state);
  const auto ref = reference::e_step(s.voxels, s.state);
  CHECK(max_abs_diff(fast.resp, ref.resp) < 1e-12);
  CHECK(fast.log_likelihood == doctest::Approx(ref.log_likelihood).epsilon(1e-12));
  CHECK(log_likelihood(s.voxels, s.state) == doctest::Approx(ref.log_likelihood).epsilon(1e-12));
}

TEST_CASE("m_step agrees with the serial reference") {
  const auto s = scene();
  const EmConfig cfg;
  const auto e = e_step(s.voxels, s.state);
  check_close(m_step(s.voxels, e.resp, cfg), reference::m_step(s.voxels, e.resp, cfg), 1e-12);

  // A cluster with almost no mass is pruned by both.
  auto starved = s.state;
  starved.clusters[3].intensity_mean = 400;
  const auto es = e_step(s.voxels, starved);
  const auto a = m_step(s.voxels, es.resp, cfg);
  const auto b = reference::m_step(s.voxels, es.resp, cfg);
  CHECK(a.size() == 3);
  check_close(a, b, 1e-12);
}

TEST_CASE("erode and dilate agree with the serial reference") {
  const auto s = scene();
  std::mt19937_64 rng(13);
  const auto noise = oracle::random_mask(s.brain.brain_mask.dims(), 0.3, rng);
  const LabelMask masks[] = {s.brain.brain_mask, mask_or(s.brain.brain_mask, noise), noise};
  for (const auto& m : masks) {
    for (const auto& se : {morph::StructuringElement::ball(1), morph::StructuringElement::ball(2),
                           morph::StructuringElement::cube26()}) {
      CHECK(morph::erode(m, se) == reference::erode(m, se));
      CHECK(morph::dilate(m, se) == reference::dilate(m, se));
    }
  }
}

TEST_CASE("kernels are bit-identical across thread counts") {
  const auto s = scene();
  const EmConfig cfg;
  const auto one = with_threads(1, [&] { return e_step(s.voxels, s.state); });
  const auto four = with_threads(4, [&] { return e_step(s.voxels, s.state); });
  CHECK(one.log_likelihood == four.log_likelihood);
  CHECK(max_abs_diff(one.resp, four.resp) == 0.0);

  const auto m1 = with_threads(1, [&] { return m_step(s.voxels, one.resp, cfg); });
  const auto m4 = with_threads(4, [&] { return m_step(s.voxels, one.resp, cfg); });
  check_close(m1, m4, 0.0);

  const auto f1 = with_threads(1, [&] { return fit(s.brain, cfg); });
  const auto f4 = with_threads(4, [&] { return fit(s.brain, cfg); });
  CHECK(f1.state.log_likelihood == f4.state.log_likelihood);
  CHECK(f1.total_iterations == f4.total_iterations);
  CHECK(max_abs_diff(f1.resp, f4.resp) == 0.0);

  const std::size_t n = 5 * kReductionBlock + 17;
  auto sum = [&] {
    return blocked_reduce(
        n, 0.0,
        [](std::size_t b, std::size_t e, double& acc) {
          for (std::size_t i = b; i < e; ++i) acc += 1.0 / (1.0 + static_cast<double>(i));
        },
        [](double& t, double p) { t += p; });
  };
  double serial = 0.0;
  for (std::size_t b = 0; b < n; b += kReductionBlock) {
    double acc = 0.0;
    for (std::size_t i = b; i < std::min(n, b + kReductionBlock); ++i) acc += 1.0 / (1.0 + static_cast<double>(i));
    serial += acc;
  }
  CHECK(with_threads(1, sum) == serial);
  CHECK(with_threads(3, sum) == serial);
}
