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

#include "hemoseg/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hemoseg/error.hpp"

namespace hemoseg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues KeyValues::parse(std::istream& in, const std::string& source) {
  KeyValues kv;
  kv.source_ = source;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (kv.entries_.count(key)) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv.entries_[key] = {trim(t.substr(eq + 1)), lineno};
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse(in, path.string());
}

void KeyValues::fail(const std::string& key, const std::string& message) const {
  const auto it = entries_.find(key);
  const std::string where =
      it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
  throw ConfigError(where + ": " + key + ": " + message);
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  consumed_.insert(key);
  return it->second.value;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size() || std::isnan(d)) throw std::invalid_argument(*v);
    return d;
  } catch (const std::exception&) {
    fail(key, "expected a number, got '" + *v + "'");
  }
}

long KeyValues::get_int(const std::string& key, long fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const long n = std::stol(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return n;
  } catch (const std::exception&) {
    fail(key, "expected an integer, got '" + *v + "'");
  }
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "on" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "off" || *v == "no") return false;
  fail(key, "expected a boolean, got '" + *v + "'");
}

std::vector<double> KeyValues::get_list(const std::string& key, std::vector<double> fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      fail(key, "malformed list element '" + t + "'");
    }
  }
  return out;
}

std::vector<std::string> KeyValues::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_) {
    if (key.rfind(prefix, 0) == 0) out.push_back(key);
  }
  return out;
}

void KeyValues::require_all_consumed() const {
  const Entry* first = nullptr;
  std::string first_key;
  for (const auto& [key, entry] : entries_) {
    if (consumed_.count(key)) continue;
    if (!first || entry.line < first->line) {
      first = &entry;
      first_key = key;
    }
  }
  if (first) fail(first_key, "unknown key");
}

void RunConfig::apply(const KeyValues& kv) {
  if (const auto a = kv.get("algorithm")) {
    if (*a == "mixture") {
      algorithm = Algorithm::kMixture;
    } else if (*a == "fcm") {
      algorithm = Algorithm::kFcm;
    } else {
      kv.fail("algorithm", "expected mixture or fcm");
    }
  }
  preprocess.window.i_min = kv.get_double("window.min", preprocess.window.i_min);
  preprocess.window.i_max = kv.get_double("window.max", preprocess.window.i_max);
  preprocess.skull_close_radius =
      static_cast<int>(kv.get_int("skull.close_radius", preprocess.skull_close_radius));
  preprocess.brain_erode_radius =
      static_cast<int>(kv.get_int("brain.erode_radius", preprocess.brain_erode_radius));
  preprocess.erode_3d = kv.get_bool("brain.erode_3d", preprocess.erode_3d);
  if (kv.has("brain.connectivity")) {
    try {
      preprocess.connectivity = morph::connectivity_from_int(
          static_cast<int>(kv.get_int("brain.connectivity", 26)));
    } catch (const ConfigError& e) {
      kv.fail("brain.connectivity", e.what());
    }
  }

  em.healthy_seed_hu = kv.get_double("em.healthy_seed_hu", em.healthy_seed_hu);
  em.hemorrhage_seed_hu = kv.get_double("em.hemorrhage_seed_hu", em.hemorrhage_seed_hu);
  em.min_region_voxels = static_cast<std::size_t>(
      kv.get_int("em.min_region_voxels", static_cast<long>(em.min_region_voxels)));
  em.max_em_iters = static_cast<int>(kv.get_int("em.max_iters", em.max_em_iters));
  em.rel_ll_tol = kv.get_double("em.rel_ll_tol", em.rel_ll_tol);
  em.var_floor = kv.get_double("em.var_floor", em.var_floor);
  em.cov_floor = kv.get_double("em.cov_floor", em.cov_floor);
  em.max_clusters =
      static_cast<std::size_t>(kv.get_int("em.max_clusters", static_cast<long>(em.max_clusters)));
  em.prune_below = kv.get_double("em.prune_below", em.prune_below);
  em.physical_coords = kv.get_bool("em.physical_coords", em.physical_coords);
  if (kv.has("em.connectivity")) {
    try {
      em.connectivity =
          morph::connectivity_from_int(static_cast<int>(kv.get_int("em.connectivity", 26)));
    } catch (const ConfigError& e) {
      kv.fail("em.connectivity", e.what());
    }
  }

  post.close_radius = static_cast<int>(kv.get_int("post.close_radius", post.close_radius));

  fcm.n_clusters =
      static_cast<std::size_t>(kv.get_int("fcm.n_clusters", static_cast<long>(fcm.n_clusters)));
  fcm.fuzziness = kv.get_double("fcm.m", fcm.fuzziness);
  fcm.threshold_hu = kv.get_double("fcm.threshold", fcm.threshold_hu);
  fcm.max_iters = static_cast<int>(kv.get_int("fcm.max_iters", fcm.max_iters));
  fcm.tol = kv.get_double("fcm.tol", fcm.tol);
  fcm.open_radius = static_cast<int>(kv.get_int("fcm.open_radius", fcm.open_radius));
  fcm.use_histogram = kv.get_bool("fcm.histogram", fcm.use_histogram);

  detection.min_overlap_voxels = static_cast<std::size_t>(kv.get_int(
      "metrics.min_overlap_voxels", static_cast<long>(detection.min_overlap_voxels)));
  overlays = kv.get_bool("overlays", overlays);
  kv.require_all_consumed();
  validate();
}

void RunConfig::validate() const {
  preprocess.window.validate();
  if (preprocess.skull_close_radius < 0 || preprocess.brain_erode_radius < 0 ||
      post.close_radius < 0) {
    throw ConfigError("morphology radii must be >= 0");
  }
  em.validate();
  fcm.validate();
  if (detection.min_overlap_voxels == 0) throw ConfigError("min_overlap_voxels must be >= 1");
}

std::string RunConfig::describe_defaults() {
  const RunConfig d;
  std::ostringstream out;
  out << "algorithm=mixture\n"
      << "window.min=" << d.preprocess.window.i_min << "\n"
      << "window.max=" << d.preprocess.window.i_max << "\n"
      << "skull.close_radius=" << d.preprocess.skull_close_radius << "\n"
      << "brain.erode_radius=" << d.preprocess.brain_erode_radius << "\n"
      << "brain.erode_3d=" << (d.preprocess.erode_3d ? "true" : "false") << "\n"
      << "brain.connectivity=26\n"
      << "em.healthy_seed_hu=" << d.em.healthy_seed_hu << "\n"
      << "em.hemorrhage_seed_hu=" << d.em.hemorrhage_seed_hu << "\n"
      << "em.min_region_voxels=" << d.em.min_region_voxels << "\n"
      << "em.max_iters=" << d.em.max_em_iters << "\n"
      << "em.rel_ll_tol=" << d.em.rel_ll_tol << "\n"
      << "em.var_floor=" << d.em.var_floor << "\n"
      << "em.cov_floor=" << d.em.cov_floor << "\n"
      << "em.max_clusters=" << d.em.max_clusters << "\n"
      << "em.prune_below=" << d.em.prune_below << "\n"
      << "em.physical_coords=false\n"
      << "em.connectivity=26\n"
      << "post.close_radius=" << d.post.close_radius << "\n"
      << "fcm.n_clusters=" << d.fcm.n_clusters << "\n"
      << "fcm.m=" << d.fcm.fuzziness << "\n"
      << "fcm.threshold=" << d.fcm.threshold_hu << "\n"
      << "fcm.max_iters=" << d.fcm.max_iters << "\n"
      << "fcm.tol=" << d.fcm.tol << "\n"
      << "fcm.open_radius=" << d.fcm.open_radius << "\n"
      << "fcm.histogram=false\n"
      << "metrics.min_overlap_voxels=" << d.detection.min_overlap_voxels << "\n"
      << "overlays=false\n";
  return out.str();
}

}  // namespace hemoseg
