// Copyright 2026 The MODSM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "modsm/evaluation.hpp"

#include <cstdio>
#include <sstream>

#include "modsm/error.hpp"

namespace modsm {

namespace {

std::string fmt(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

}  // namespace

ConfusionCounts confusion(const ForegroundMask& mask, const ForegroundMask& truth) {
  MODSM_REQUIRE(mask.grid == truth.grid,
                "confusion: mask grid " + to_string(mask.grid) + " differs from truth grid " + to_string(truth.grid));
  MODSM_REQUIRE(mask.values.size() == truth.values.size(), "confusion: length mismatch");
  ConfusionCounts c;
  for (Eigen::Index i = 0; i < mask.values.size(); ++i) {
    const bool predicted = mask.values[i] != 0;
    const bool actual = truth.values[i] != 0;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double precision(const ConfusionCounts& c) {
  return c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const ConfusionCounts& c) {
  return c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f1_score(const ConfusionCounts& c) {
  const double p = precision(c);
  const double r = recall(c);
  if (p + r == 0) return 0.0;
  return 2.0 * p * r / (p + r);
}

RocCurve roc_sweep(std::span<const Eigen::VectorXd> b_sequence, std::span<const ForegroundMask> truth_sequence,
                   int steps) {
  MODSM_REQUIRE(!b_sequence.empty(), "roc_sweep: empty sequence");
  MODSM_REQUIRE(b_sequence.size() == truth_sequence.size(), "roc_sweep: sequences are not aligned");
  MODSM_REQUIRE(steps >= 2, "roc_sweep: need at least two thresholds");

  RocCurve curve;
  curve.points.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps - 1);
    ConfusionCounts total;
    for (std::size_t f = 0; f < b_sequence.size(); ++f) {
      const auto& b = b_sequence[f];
      const auto& truth = truth_sequence[f].values;
      MODSM_REQUIRE(b.size() == truth.size(), "roc_sweep: frame " + std::to_string(f) + " length mismatch");
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        const bool predicted = b[i] < t;
        const bool actual = truth[i] != 0;
        if (predicted && actual) ++total.tp;
        else if (predicted) ++total.fp;
        else if (actual) ++total.fn;
        else ++total.tn;
      }
    }
    const double tpr = total.tp + total.fn == 0 ? 0.0 : double(total.tp) / double(total.tp + total.fn);
    const double fpr = total.fp + total.tn == 0 ? 0.0 : double(total.fp) / double(total.fp + total.tn);
    curve.points.push_back({t, fpr, tpr});
  }
  return curve;
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "t,fpr,tpr\n";
  for (const auto& p : curve.points) out << fmt(p.t) << ',' << fmt(p.fpr) << ',' << fmt(p.tpr) << '\n';
}

Report aggregate_report(const std::map<std::string, double>& per_video) {
  MODSM_REQUIRE(!per_video.empty(), "aggregate_report: no videos");
  Report r;
  r.per_video = per_video;
  double sum = 0;
  for (const auto& [_, f1] : per_video) sum += f1;
  r.mean_f1 = sum / static_cast<double>(per_video.size());
  return r;
}

std::map<std::string, double> per_video_f1(std::span<const FrameScore> frames) {
  std::map<std::string, ConfusionCounts> pooled;
  for (const auto& f : frames) pooled[f.video] += f.counts;
  std::map<std::string, double> out;
  for (const auto& [video, counts] : pooled) out[video] = f1_score(counts);
  return out;
}

std::string report_csv(const Report& report) {
  std::ostringstream out;
  out << "video,f1\n";
  for (const auto& [video, f1] : report.per_video) out << video << ',' << fmt(f1) << '\n';
  out << "mean," << fmt(report.mean_f1) << '\n';
  return out.str();
}

nlohmann::json report_json(const Report& report) {
  nlohmann::json videos = nlohmann::json::object();
  for (const auto& [video, f1] : report.per_video) videos[video] = f1;
  return {{"videos", videos}, {"mean_f1", report.mean_f1}};
}

void write_frame_csv(std::ostream& out, std::span<const FrameScore> frames) {
  out << "video,frame,tp,fp,tn,fn,f1\n";
  std::map<std::string, ConfusionCounts> pooled;
  for (const auto& f : frames) {
    out << f.video << ',' << f.frame << ',' << f.counts.tp << ',' << f.counts.fp << ',' << f.counts.tn << ','
        << f.counts.fn << ',' << fmt(f.f1()) << '\n';
    pooled[f.video] += f.counts;
  }
  if (pooled.empty()) return;
  std::map<std::string, double> per_video;
  for (const auto& [video, c] : pooled) {
    out << video << ",summary," << c.tp << ',' << c.fp << ',' << c.tn << ',' << c.fn << ',' << fmt(f1_score(c))
        << '\n';
    per_video[video] = f1_score(c);
  }
  out << "all,mean,,,,," << fmt(aggregate_report(per_video).mean_f1) << '\n';
}

}  // namespace modsm
