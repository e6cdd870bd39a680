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

#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "modsm/image_io.hpp"

namespace modsm {

/// Pixel counts with foreground as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const ForegroundMask& mask, const ForegroundMask& truth);

/// tp / (tp + fp); 0 when nothing is predicted.
double precision(const ConfusionCounts& c);
/// tp / (tp + fn); 0 when nothing is true.
double recall(const ConfusionCounts& c);
/// Harmonic mean of precision and recall; 0 for degenerate counts.
double f1_score(const ConfusionCounts& c);

struct RocPoint {
  double t = 0;
  double fpr = 0;
  double tpr = 0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending t
};

/**
 * Sweeps `steps` uniform thresholds over [0,1]; at each one a pixel is
 * foreground iff b < t. Counts are pooled over all frames before the rates
 * are taken.
 */
RocCurve roc_sweep(std::span<const Eigen::VectorXd> b_sequence, std::span<const ForegroundMask> truth_sequence,
                   int steps);

void write_roc_csv(std::ostream& out, const RocCurve& curve);

struct FrameScore {
  std::string video;
  std::string frame;
  ConfusionCounts counts;
  double f1() const { return f1_score(counts); }
};

/// Per-video F1 and the unweighted mean over videos.
struct Report {
  std::map<std::string, double> per_video;
  double mean_f1 = 0;
};

Report aggregate_report(const std::map<std::string, double>& per_video);

/// Per-video F1 from pooled counts of that video's frames.
std::map<std::string, double> per_video_f1(std::span<const FrameScore> frames);

std::string report_csv(const Report& report);
nlohmann::json report_json(const Report& report);

/// `video,frame,tp,fp,tn,fn,f1` per frame, then one `summary` row per video
/// and a final `mean` row.
void write_frame_csv(std::ostream& out, std::span<const FrameScore> frames);

}  // namespace modsm
