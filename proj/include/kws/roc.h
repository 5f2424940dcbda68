/* Copyright 2026 The QbeKws Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef KWS_ROC_H_
#define KWS_ROC_H_

#include <ostream>
#include <span>
#include <vector>

namespace kws {

enum class Polarity { kPositive, kNegative };

struct ScoredTrial {
  double score = 0.0;
  Polarity polarity = Polarity::kNegative;
};

// A trial is accepted when score >= threshold.
struct RocPoint {
  double false_accept = 0.0;
  double false_reject = 0.0;
  double threshold = 0.0;
};

struct RocMetrics {
  // One point per distinct score plus a final +inf threshold that rejects
  // everything; ascending threshold.
  std::vector<RocPoint> points;
  double eer = 0.0;
  double auc = 0.0;
  // A threshold inside the interval where the FA and FR curves cross.
  double eer_threshold = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Pools all trials under a single threshold sweep. EER is linearly
// interpolated between the two points bracketing the FA/FR crossing; AUC is
// the trapezoidal area under (FA, 1 - FR). Throws unless both classes are
// present.
RocMetrics compute_roc(std::span<const ScoredTrial> trials);

// Tab-separated: threshold, false accept rate, false reject rate.
void write_roc_points(std::ostream& out, const RocMetrics& metrics);

}  // namespace kws

#endif  // KWS_ROC_H_
