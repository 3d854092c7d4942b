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

#include "hemoseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hemoseg/error.hpp"

namespace hemoseg::metrics {

double dice(const LabelMask& x, const LabelMask& y) {
  if (!(x.dims() == y.dims())) throw DataError("dice: mask dimensions differ");
  std::size_t nx = 0, ny = 0, both = 0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const bool a = x[n] != 0;
    const bool b = y[n] != 0;
    nx += a;
    ny += b;
    both += a && b;
  }
  if (nx + ny == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(nx + ny);
}

namespace {

std::string edge_label(double lo, double hi) {
  auto fmt = [](double v) {
    if (std::isinf(v)) return std::string(v < 0 ? "-inf" : "inf");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };
  return "[" + fmt(lo) + "," + fmt(hi) + ")";
}

std::vector<RateBin> make_bins(const std::vector<double>& edges) {
  std::vector<RateBin> bins;
  for (std::size_t n = 0; n + 1 < edges.size(); ++n) {
    bins.push_back({edge_label(edges[n], edges[n + 1])});
  }
  return bins;
}

void tally(std::vector<RateBin>& bins, const std::vector<double>& edges, double value,
           bool detected) {
  for (std::size_t n = 0; n + 1 < edges.size(); ++n) {
    if (value >= edges[n] && value < edges[n + 1]) {
      bins[n].total += 1;
      bins[n].detected += detected;
      return;
    }
  }
}

std::string rate_text(const RateBin& bin) {
  const auto r = bin.rate();
  if (!r) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *r);
  return buf;
}

}  // namespace

EvalReport detection_rate(const LabelMask& pred, std::span<const BoundingBox> boxes,
                          const DetectionConfig& cfg, const Volume3D* volume) {
  const Dims d = pred.dims();
  if (volume && !(volume->dims() == d)) throw DataError("volume and prediction dims differ");
  EvalReport report;
  report.by_size = make_bins(cfg.size_edges);
  report.by_intensity = make_bins(cfg.intensity_edges);
  std::map<std::string, RateBin> types;

  for (const auto& box : boxes) {
    validate_box(box, d);
    BoxOutcome outcome{box};
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t y = box.y_min; y <= box.y_max; ++y) {
      for (std::size_t x = box.x_min; x <= box.x_max; ++x) {
        outcome.overlap += pred.at(x, y, box.slice_index) != 0;
        if (volume) peak = std::max(peak, static_cast<double>(volume->at(x, y, box.slice_index)));
      }
    }
    outcome.detected = outcome.overlap >= cfg.min_overlap_voxels;
    if (volume) outcome.max_intensity = peak;

    report.overall.total += 1;
    report.overall.detected += outcome.detected;
    tally(report.by_size, cfg.size_edges, static_cast<double>(box.area()), outcome.detected);
    if (outcome.max_intensity) {
      tally(report.by_intensity, cfg.intensity_edges, *outcome.max_intensity, outcome.detected);
    }
    auto& t = types.try_emplace(box.type, RateBin{box.type}).first->second;
    t.total += 1;
    t.detected += outcome.detected;
    report.boxes.push_back(outcome);
  }
  for (auto& [name, bin] : types) report.by_type.push_back(bin);
  return report;
}

std::optional<Summary> summarize(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  Summary s;
  s.n = values.size();
  double total = 0.0;
  s.max = values.front();
  for (double v : values) {
    total += v;
    s.max = std::max(s.max, v);
  }
  s.mean = total / static_cast<double>(s.n);
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(s.n));
  return s;
}

std::vector<BoundingBox> read_boxes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open box file " + path.string());
  std::vector<BoundingBox> boxes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    BoundingBox b;
    long long z, x0, y0, x1, y1;
    if (!(ss >> z)) continue;  // blank line
    if (!(ss >> x0 >> y0 >> x1 >> y1) || z < 0 || x0 < 0 || y0 < 0 || x1 < 0 || y1 < 0) {
      throw DataError("box file line " + std::to_string(lineno) + ": expected 5 non-negative integers");
    }
    std::string tag;
    if (ss >> tag) b.type = tag;
    std::string extra;
    if (ss >> extra) throw DataError("box file line " + std::to_string(lineno) + ": trailing fields");
    b.slice_index = static_cast<std::size_t>(z);
    b.x_min = static_cast<std::size_t>(x0);
    b.y_min = static_cast<std::size_t>(y0);
    b.x_max = static_cast<std::size_t>(x1);
    b.y_max = static_cast<std::size_t>(y1);
    if (b.x_min > b.x_max || b.y_min > b.y_max) {
      throw DataError("box file line " + std::to_string(lineno) + ": min corner above max corner");
    }
    boxes.push_back(b);
  }
  return boxes;
}

void write_boxes(const std::filesystem::path& path, std::span<const BoundingBox> boxes) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# z_index x_min y_min x_max y_max type_tag\n";
  for (const auto& b : boxes) {
    out << b.slice_index << ' ' << b.x_min << ' ' << b.y_min << ' ' << b.x_max << ' ' << b.y_max
        << ' ' << b.type << '\n';
  }
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  char buf[128];
  if (report.dice) {
    std::snprintf(buf, sizeof(buf), "Dice: %.6f\n", *report.dice);
    out << buf;
  }
  auto table = [&](const char* title, const std::vector<RateBin>& bins) {
    if (bins.empty()) return;
    out << title << '\n';
    for (const auto& b : bins) {
      std::snprintf(buf, sizeof(buf), "  %-16s %5zu / %-5zu  %s\n", b.label.c_str(), b.detected,
                    b.total, rate_text(b).c_str());
      out << buf;
    }
  };
  if (report.overall.total > 0) {
    table("Detection rate", {report.overall});
    table("By box size (voxels)", report.by_size);
    table("By max intensity (HU)", report.by_intensity);
    table("By type", report.by_type);
  }
  if (report.dice) {
    std::snprintf(buf, sizeof(buf), "dice=%.6f\n", *report.dice);
    out << buf;
  }
  auto kv = [&](const std::string& prefix, const std::vector<RateBin>& bins) {
    for (const auto& b : bins) {
      out << prefix << b.label << ".detected=" << b.detected << '\n'
          << prefix << b.label << ".total=" << b.total << '\n'
          << prefix << b.label << ".rate=" << rate_text(b) << '\n';
    }
  };
  if (report.overall.total > 0) {
    kv("detection.", {report.overall});
    kv("detection.size", report.by_size);
    kv("detection.intensity", report.by_intensity);
    kv("detection.type.", report.by_type);
  }
  return out.str();
}

}  // namespace hemoseg::metrics
