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
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hemoseg/fcm.hpp"
#include "hemoseg/metrics.hpp"
#include "hemoseg/mixture.hpp"
#include "hemoseg/postprocess.hpp"
#include "hemoseg/preprocess.hpp"

namespace hemoseg {

/// Flat `key=value` text, one pair per line, `#` comments. Lookups mark keys as
/// consumed so leftovers can be reported with their line numbers.
class KeyValues {
 public:
  static KeyValues parse(std::istream& in, const std::string& source);
  static KeyValues load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;
  /// Keys starting with `prefix`.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  /// Throws ConfigError naming the first key that was never looked up.
  void require_all_consumed() const;

  /// ConfigError prefixed with the source and line of `key`.
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::string source_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> consumed_;
};

enum class Algorithm { kMixture, kFcm };

/// Every tunable of the pipeline.
struct RunConfig {
  Algorithm algorithm = Algorithm::kMixture;
  PreprocessConfig preprocess;
  em::EmConfig em;
  PostprocessConfig post;
  fcm::FcmConfig fcm;
  metrics::DetectionConfig detection;
  bool overlays = false;

  /// Overrides fields from a config file; unknown keys are errors.
  void apply(const KeyValues& kv);
  void validate() const;
  /// Documented defaults, one `key=value` per line.
  static std::string describe_defaults();
};

}  // namespace hemoseg
