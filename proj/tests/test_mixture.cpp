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
#include <numbers>
#include <random>

#include "hemoseg/error.hpp"
#include "hemoseg/mixture.hpp"
#include "hemoseg/phantom.hpp"
#include "hemoseg/preprocess.hpp"

using namespace hemoseg;
using namespace hemoseg::em;

namespace {

BrainVoxels make_voxels(const std::vector<double>& intensity,
                        const std::vector<Eigen::Vector3d>& coord) {
  BrainVoxels v;
  v.dims = {static_cast<std::size_t>(intensity.size()), 1, 1};
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    v.index.push_back(i);
    v.intensity.push_back(intensity[i]);
    v.coord.push_back(i < coord.size() ? coord[i] : Eigen::Vector3d(static_cast<double>(i), 0, 0));
  }
  return v;
}

ClusterParams healthy(double weight, double mean, double var) {
  ClusterParams p;
  p.kind = ClusterKind::kHealthy;
  p.weight = weight;
  p.intensity_mean = mean;
  p.intensity_var = var;
  return p;
}

ClusterParams bleed(double weight, double mean, double var, Eigen::Vector3d loc,
                    Eigen::Matrix3d cov) {
  ClusterParams p;
  p.weight = weight;
  p.intensity_mean = mean;
  p.intensity_var = var;
  p.location_mean = loc;
  p.location_cov = cov;
  return p;
}

phantom::PhantomSpec spec_with(std::vector<phantom::BlobSpec> blobs, double brain_hu = 32.0,
                               std::uint64_t seed = 1) {
  auto s = phantom::default_spec();
  s.blobs = std::move(blobs);
  s.brain_mean_hu = brain_hu;
  s.seed = seed;
  return s;
}

phantom::BlobSpec blob(Eigen::Vector3d center, std::size_t voxels, double hu,
                       Eigen::Vector3d diag = {1, 1, 1}) {
  phantom::BlobSpec b;
  b.center = center;
  b.shape = diag.asDiagonal();
  b.voxels = voxels;
  b.mean_hu = hu;
  return b;
}

double log_normal(double x, double mean, double var) {
  return -0.5 * std::log(2 * std::numbers::pi * var) - (x - mean) * (x - mean) / (2 * var);
}

}  // namespace

TEST_CASE("EmConfig validation") {
  EmConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.healthy_seed_hu = 60;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.var_floor = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.min_region_voxels = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("e_step with a single cluster") {
  const auto vox = make_voxels({10, 30, 50, 90}, {});
  MixtureState s{{healthy(1.0, 30, 16)}, 4};
  const auto e = e_step(vox, s);
  for (std::size_t i = 0; i < 4; ++i) CHECK(e.resp(i, 0) == 1.0);

  // Closed form: log N(x; mu, var) + log(1 / n_bv) per voxel.
  double expected = 0.0;
  for (double x : vox.intensity) expected += log_normal(x, 30, 16) - std::log(4.0);
  CHECK(e.log_likelihood == doctest::Approx(expected).epsilon(1e-12));
  CHECK(log_likelihood(vox, s) == doctest::Approx(expected).epsilon(1e-12));

  const auto flat = make_voxels({30, 30, 30}, {});
  MixtureState f{{healthy(1.0, 30, 4)}, 3};
  CHECK(log_likelihood(flat, f) ==
        doctest::Approx(3 * (log_normal(30, 30, 4) - std::log(3.0))).epsilon(1e-12));
}

TEST_CASE("e_step compares the location Gaussian at its mode with 1/n_bv") {
  const Eigen::Vector3d mu{5, 5, 5};
  const auto vox = make_voxels({70}, {mu});
  for (double scale : {0.5, 10.0}) {
    const Eigen::Matrix3d cov = Eigen::Matrix3d::Identity() * scale;
    const double mode = 1.0 / std::sqrt(std::pow(2 * std::numbers::pi, 3) * cov.determinant());
    for (std::size_t n_bv : {std::size_t{10}, std::size_t{100000}}) {
      MixtureState s{{healthy(0.5, 70, 25), bleed(0.5, 70, 25, mu, cov)}, n_bv};
      const auto e = e_step(vox, s);
      CHECK((e.resp(0, 1) > e.resp(0, 0)) == (mode > 1.0 / static_cast<double>(n_bv)));
      CHECK(e.resp(0, 1) / e.resp(0, 0) ==
            doctest::Approx(mode * static_cast<double>(n_bv)).epsilon(1e-10));
    }
  }
}

TEST_CASE("e_step is symmetric between mirrored clusters") {
  const auto vox = make_voxels({60}, {{0, 0, 0}});
  const Eigen::Matrix3d cov = Eigen::Vector3d(2, 3, 4).asDiagonal();
  MixtureState s{{healthy(0.4, 30, 16), bleed(0.3, 55, 9, {3, 1, -2}, cov),
                  bleed(0.3, 65, 9, {-3, -1, 2}, cov)},
                 50};
  const auto e = e_step(vox, s);
  CHECK(e.resp(0, 1) == doctest::Approx(e.resp(0, 2)).epsilon(1e-14));
  CHECK(e.resp.max_normalization_error() < 1e-12);
}

TEST_CASE("e_step stays finite far in the tails") {
  const auto vox = make_voxels({1e4, -1e4}, {{1e3, 0, 0}, {0, 0, 0}});
  MixtureState s{{healthy(0.9, 30, 1e-4),
                  bleed(0.1, 80, 1e-4, {0, 0, 0}, Eigen::Matrix3d::Identity() * 1e-4)},
                 1000000};
  const auto e = e_step(vox, s);
  CHECK(std::isfinite(e.log_likelihood));
  CHECK(e.resp.max_normalization_error() < 1e-12);
}

TEST_CASE("m_step weighted moments") {
  const auto vox = make_voxels({10, 20, 30}, {});
  Responsibilities r(3, 1);
  for (std::size_t i = 0; i < 3; ++i) r(i, 0) = 1.0;
  const auto s = m_step(vox, r, {});
  REQUIRE(s.size() == 1);
  CHECK(s.clusters[0].intensity_mean == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(s.clusters[0].intensity_var == doctest::Approx(200.0 / 3.0).epsilon(1e-14));
  CHECK(s.clusters[0].weight == 1.0);
  CHECK(s.n_bv == 3);

  // Constant intensities hit the variance floor.
  const auto same = make_voxels({40, 40}, {});
  Responsibilities r2(2, 1);
  r2(0, 0) = r2(1, 0) = 1.0;
  EmConfig cfg;
  cfg.var_floor = 0.25;
  CHECK(m_step(same, r2, cfg).clusters[0].intensity_var == 0.25);
}

TEST_CASE("m_step gives identical parameters to identically weighted clusters") {
  std::mt19937 rng(5);
  std::normal_distribution<double> g(50, 10);
  std::vector<double> in;
  std::vector<Eigen::Vector3d> xs;
  for (int i = 0; i < 200; ++i) {
    in.push_back(g(rng));
    xs.emplace_back(g(rng), g(rng), g(rng));
  }
  const auto vox = make_voxels(in, xs);
  Responsibilities r(vox.size(), 3);
  for (std::size_t i = 0; i < vox.size(); ++i) {
    r(i, 0) = 0.2;
    r(i, 1) = 0.4;
    r(i, 2) = 0.4;
  }
  const auto s = m_step(vox, r, {});
  REQUIRE(s.size() == 3);
  CHECK(s.clusters[1].intensity_mean == s.clusters[2].intensity_mean);
  CHECK(s.clusters[1].intensity_var == s.clusters[2].intensity_var);
  CHECK(s.clusters[1].location_mean == s.clusters[2].location_mean);
  CHECK(s.clusters[1].location_cov == s.clusters[2].location_cov);
  CHECK(s.clusters[1].weight == doctest::Approx(0.4));
  CHECK(s.clusters[0].weight + s.clusters[1].weight + s.clusters[2].weight ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("m_step recovers a sampled location Gaussian") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z(0, 1);
  const Eigen::Vector3d mu{20, 30, 15};
  Eigen::Matrix3d cov;
  cov << 9, 2, 1, 2, 4, 0.5, 1, 0.5, 2;
  const Eigen::Matrix3d l = cov.llt().matrixL();
  const int n = 4000;
  std::vector<double> in(n, 70);
  std::vector<Eigen::Vector3d> xs;
  for (int i = 0; i < n; ++i) xs.push_back(mu + l * Eigen::Vector3d(z(rng), z(rng), z(rng)));
  const auto vox = make_voxels(in, xs);
  Responsibilities r(n, 2);
  for (int i = 0; i < n; ++i) r(static_cast<std::size_t>(i), 1) = 1.0;
  const auto s = m_step(vox, r, {});
  REQUIRE(s.size() == 2);
  for (int a = 0; a < 3; ++a) {
    const double se = std::sqrt(cov(a, a) / n);
    CHECK(std::fabs(s.clusters[1].location_mean[a] - mu[a]) < 3 * se);
  }
  CHECK((s.clusters[1].location_cov - cov).norm() < 0.1 * cov.norm());
}

TEST_CASE("m_step prunes collapsed clusters and floors covariances") {
  const auto vox = make_voxels({30, 31, 70, 71}, {{0, 0, 0}, {1, 0, 0}, {5, 5, 5}, {5, 5, 5}});
  Responsibilities r(4, 3);
  r(0, 0) = r(1, 0) = 1.0;
  r(2, 1) = r(3, 1) = 1.0;
  r(0, 2) = 0.0;
  const auto s = m_step(vox, r, {});
  REQUIRE(s.size() == 2);  // column 2 has no mass
  CHECK(s.clusters[0].weight == doctest::Approx(0.5));
  // Both voxels of cluster 1 share a location: covariance collapses to the floor.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(s.clusters[1].location_cov);
  CHECK(eig.eigenvalues().minCoeff() == doctest::Approx(EmConfig{}.cov_floor));
  CHECK_NOTHROW(check_state(s, {}));
  CHECK(std::isfinite(log_likelihood(vox, s)));
}

TEST_CASE("duplicating a cluster with split weight leaves the likelihood unchanged") {
  const auto vox = make_voxels({20, 40, 60, 80}, {{1, 2, 3}, {2, 2, 2}, {4, 1, 0}, {3, 3, 3}});
  const Eigen::Matrix3d cov = Eigen::Vector3d(2, 1, 3).asDiagonal();
  const auto h = bleed(0.6, 65, 30, {3, 2, 1}, cov);
  MixtureState one{{healthy(0.4, 30, 20), h}, 4};
  auto half = h;
  half.weight = 0.3;
  MixtureState two{{healthy(0.4, 30, 20), half, half}, 4};
  CHECK(log_likelihood(vox, two) == doctest::Approx(log_likelihood(vox, one)).epsilon(1e-12));
}

TEST_CASE("init_state seeds from the largest bright region") {
  const auto ph = phantom::generate(spec_with({blob({38, 36, 33}, 500, 70)}, 30));
  const auto brain = preprocess(ph.volume, {});
  const auto vox = BrainVoxels::from(brain);
  const auto init = init_state(brain, vox, {});
  REQUIRE(init.state.hemorrhage_count() == 1);
  CHECK(std::fabs(init.state.clusters[1].intensity_mean - 70) <= 2.0);
  CHECK(init.seeds.max_normalization_error() < 1e-12);

  const auto flat = phantom::generate(spec_with({}, 30));
  const auto fb = preprocess(flat.volume, {});
  CHECK(init_state(fb, BrainVoxels::from(fb), {}).state.hemorrhage_count() == 0);

  const auto two = phantom::generate(
      spec_with({blob({18, 31, 31}, 400, 60), blob({46, 31, 31}, 250, 60)}, 32));
  const auto tb = preprocess(two.volume, {});
  const auto tv = BrainVoxels::from(tb);
  const auto ti = init_state(tb, tv, {});
  REQUIRE(ti.state.hemorrhage_count() == 1);
  CHECK(std::fabs(ti.state.clusters[1].location_mean[0] - 18) < 1.5);
}

TEST_CASE("run_em converges to the generating parameters") {
  const auto ph = phantom::generate(spec_with({blob({36, 30, 34}, 900, 72, {1.5, 1.0, 0.7})}));
  const auto brain = preprocess(ph.volume, {});
  const auto vox = BrainVoxels::from(brain);
  const EmConfig cfg;
  std::vector<double> lls;
  const auto run = run_em(vox, init_state(brain, vox, cfg).state, cfg, [&](const IterationInfo& it) {
    lls.push_back(it.log_likelihood);
    CHECK(it.resp->max_normalization_error() < 1e-9);
    CHECK_NOTHROW(check_state(*it.state, cfg));
  });
  CHECK(run.state.converged);
  CHECK(run.iterations < cfg.max_em_iters);
  for (std::size_t i = 1; i < lls.size(); ++i)
    CHECK(lls[i] >= lls[i - 1] - 1e-7 * std::fabs(lls[i - 1]));
  REQUIRE(run.state.hemorrhage_count() == 1);
  const auto& c = run.state.clusters[1];
  CHECK(std::fabs(c.intensity_mean - 72) <= 2.0);
  CHECK((c.location_mean - ph.truth_params[0].location_mean).cwiseAbs().maxCoeff() <= 1.0);

  MixtureState only;
  only.clusters = {healthy(1.0, 10, 5)};
  only.n_bv = vox.size();
  const auto h = run_em(vox, only, cfg);
  CHECK(h.iterations <= 2);
  CHECK(h.state.converged);

  EmConfig capped = cfg;
  capped.max_em_iters = 1;
  capped.rel_ll_tol = 1e-300;
  const auto short_run = run_em(vox, init_state(brain, vox, cfg).state, capped);
  CHECK(short_run.iterations == 1);
  CHECK_FALSE(short_run.state.converged);
}

TEST_CASE("grow_clusters adds a region the current clusters miss") {
  const auto ph = phantom::generate(
      spec_with({blob({18, 31, 31}, 400, 60), blob({46, 31, 31}, 250, 60)}));
  const auto brain = preprocess(ph.volume, {});
  const auto vox = BrainVoxels::from(brain);
  const EmConfig cfg;
  const auto run = run_em(vox, init_state(brain, vox, cfg).state, cfg);
  REQUIRE(run.state.hemorrhage_count() == 1);
  const auto g = grow_clusters(brain, vox, run.state, run.resp, cfg);
  CHECK(g.changed);
  CHECK(g.added == 1);
  REQUIRE(g.state.hemorrhage_count() == 2);
  CHECK(std::fabs(g.state.clusters[2].location_mean[0] - 46) < 1.5);
  CHECK_FALSE(g.warning);

  const auto run2 = run_em(vox, g.state, cfg);
  const auto fixpoint = grow_clusters(brain, vox, run2.state, run2.resp, cfg);
  CHECK_FALSE(fixpoint.changed);
  CHECK(fixpoint.added == 0);

  EmConfig tight = cfg;
  tight.max_clusters = 2;
  const auto blocked = grow_clusters(brain, vox, run.state, run.resp, tight);
  CHECK_FALSE(blocked.changed);
  CHECK(blocked.warning.has_value());

  const auto f = fit(brain, cfg);
  CHECK(f.grow_passes == 1);
  CHECK(f.state.hemorrhage_count() == 2);
}

TEST_CASE("grow_clusters splits a V-shaped region covered on one limb") {
  // Hand-built brain: a 30 HU block holding two 70 HU rods that meet at a corner.
  const Dims d{40, 40, 12};
  Volume3D vol(d, {}, 0.0f);
  LabelMask mask(d);
  std::mt19937 rng(2);
  std::normal_distribution<float> noise(0, 3);
  for (std::size_t k = 1; k < 11; ++k)
    for (std::size_t j = 1; j < 39; ++j)
      for (std::size_t i = 1; i < 39; ++i) {
        mask.at(i, j, k) = 1;
        vol.at(i, j, k) = 30 + noise(rng);
      }
  std::vector<std::size_t> limb_a, limb_b;
  for (std::size_t t = 0; t < 25; ++t)
    for (std::size_t w = 0; w < 3; ++w)
      for (std::size_t k = 4; k < 7; ++k) {
        const std::size_t a = index_of({5 + t, 5 + w, k}, d);
        const std::size_t b = index_of({5 + w, 8 + t, k}, d);
        vol[a] = 70 + noise(rng);
        vol[b] = 70 + noise(rng);
        limb_a.push_back(a);
        limb_b.push_back(b);
      }
  const BrainExtract brain{vol, mask, count_nonzero(mask)};
  const auto vox = BrainVoxels::from(brain);
  Responsibilities seeds(vox.size(), 2);
  std::vector<std::uint8_t> in_a(d.count(), 0);
  for (auto a : limb_a) in_a[a] = 1;
  for (std::size_t i = 0; i < vox.size(); ++i) seeds(i, in_a[vox.index[i]] ? 1 : 0) = 1.0;
  const EmConfig cfg;
  const auto state = m_step(vox, seeds, cfg);
  const auto e = e_step(vox, state);
  const auto g = grow_clusters(brain, vox, state, e.resp, cfg);
  CHECK(g.changed);
  REQUIRE(g.state.hemorrhage_count() == 2);
  CHECK(std::fabs(g.state.clusters[2].location_mean[0] - 6) < 1.0);
  // Limb b spans y in [8, 32]; the part next to the corner may stay with limb a.
  CHECK(g.state.clusters[2].location_mean[1] > 15);
  CHECK(g.state.clusters[2].location_mean[1] < 32);
}

TEST_CASE("fit covers every large blob") {
  const auto healthy_ph = phantom::generate(spec_with({}));
  const auto hb = preprocess(healthy_ph.volume, {});
  const auto h = fit(hb, {});
  CHECK(h.no_hemorrhage_found);
  CHECK(h.state.hemorrhage_count() == 0);
  for (auto v : hemorrhage_votes(h.resp)) REQUIRE(v == 0);

  const auto ph = phantom::generate(spec_with({blob({20, 26, 30}, 300, 65),
                                              blob({42, 36, 26}, 600, 80, {1.3, 1, 1}),
                                              blob({30, 44, 38}, 200, 75)}));
  const auto brain = preprocess(ph.volume, {});
  const auto f = fit(brain, {});
  CHECK_FALSE(f.no_hemorrhage_found);
  const auto votes = hemorrhage_votes(f.resp);
  std::vector<std::size_t> hit(4, 0), total(4, 0);
  for (std::size_t i = 0; i < f.voxels.size(); ++i) {
    const auto label = ph.truth_mask[f.voxels.index[i]];
    if (label == 0) continue;
    ++total[label];
    hit[label] += votes[i];
  }
  for (std::size_t b = 1; b <= 3; ++b) {
    CHECK(static_cast<double>(hit[b]) >= 0.9 * static_cast<double>(total[b]));
  }

  const auto again = fit(brain, {});
  CHECK(again.state.log_likelihood == f.state.log_likelihood);
  for (std::size_t c = 0; c < f.state.size(); ++c) {
    CHECK(again.state.clusters[c].intensity_mean == f.state.clusters[c].intensity_mean);
  }
}

TEST_CASE("physical coordinates scale the location model") {
  auto spec = spec_with({blob({38, 36, 33}, 500, 75)});
  spec.spacing = {0.5, 0.5, 2.0};
  const auto ph = phantom::generate(spec);
  const auto brain = preprocess(ph.volume, {});
  EmConfig cfg;
  cfg.physical_coords = true;
  const auto f = fit(brain, cfg);
  REQUIRE(f.state.hemorrhage_count() >= 1);
  const auto& loc = f.state.clusters[1].location_mean;
  CHECK(std::fabs(loc[0] - 38 * 0.5) < 1.0);
  CHECK(std::fabs(loc[2] - 33 * 2.0) < 2.0);
}

TEST_CASE("format_report and check_state") {
  MixtureState s{{healthy(0.9, 32, 16),
                  bleed(0.1, 75, 25, {1, 2, 3}, Eigen::Vector3d(1, 4, 9).asDiagonal())},
                 100};
  const auto text = format_report(s);
  CHECK(text.find("healthy") != std::string::npos);
  CHECK(text.find("hemorrhage 0.100000 75.0000 5.0000 1.0000 2.0000 3.0000 1.0000 4.0000 9.0000") !=
        std::string::npos);
  CHECK_NOTHROW(check_state(s, {}));
  s.clusters[1].weight = 0.2;
  CHECK_THROWS_AS(check_state(s, {}), InvariantViolation);
  s.clusters[1].weight = 0.1;
  s.clusters[1].location_cov(0, 1) = 5;
  CHECK_THROWS_AS(check_state(s, {}), InvariantViolation);
}
