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

#include "kws/roc.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kws/common.h"

namespace kws {

RocMetrics compute_roc(std::span<const ScoredTrial> trials) {
  RocMetrics metrics;
  std::vector<ScoredTrial> sorted(trials.begin(), trials.end());
  for (const auto& t : sorted) {
    if (std::isnan(t.score)) throw Error(ErrorCode::kInvalidArgument, "NaN score");
    if (t.polarity == Polarity::kPositive) {
      ++metrics.positives;
    } else {
      ++metrics.negatives;
    }
  }
  if (metrics.positives == 0 || metrics.negatives == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "ROC needs at least one positive and one negative trial");
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredTrial& a, const ScoredTrial& b) { return a.score < b.score; });

  const double pos = static_cast<double>(metrics.positives);
  const double neg = static_cast<double>(metrics.negatives);
  // Sweep upward: below the current threshold are `rejected_pos` positives
  // and `rejected_neg` negatives.
  std::size_t rejected_pos = 0, rejected_neg = 0;
  // Twice the area under the curve in units of one positive times one
  // negative, accumulated in integers so the division happens once.
  unsigned long long twice_area = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double threshold = sorted[i].score;
    metrics.points.push_back({(neg - rejected_neg) / neg, rejected_pos / pos, threshold});
    const std::size_t pos_before = rejected_pos, neg_before = rejected_neg;
    while (i < sorted.size() && sorted[i].score == threshold) {
      if (sorted[i].polarity == Polarity::kPositive) {
        ++rejected_pos;
      } else {
        ++rejected_neg;
      }
      ++i;
    }
    twice_area += static_cast<unsigned long long>(rejected_neg - neg_before) *
                  (2 * metrics.positives - pos_before - rejected_pos);
  }
  metrics.points.push_back({0.0, 1.0, std::numeric_limits<double>::infinity()});

  const auto& pts = metrics.points;
  metrics.auc = static_cast<double>(twice_area) / (2.0 * pos * neg);

  // FA - FR is non-increasing along the sweep, from 1 to -1.
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double diff = pts[k].false_accept - pts[k].false_reject;
    if (diff > 0.0) continue;
    if (diff == 0.0 || k == 0) {
      metrics.eer = pts[k].false_accept;
    } else {
      const double prev = pts[k - 1].false_accept - pts[k - 1].false_reject;
      const double alpha = prev / (prev - diff);
      metrics.eer = pts[k - 1].false_accept +
                    alpha * (pts[k].false_accept - pts[k - 1].false_accept);
    }
    const double hi = pts[k].threshold;
    const double lo = k > 0 ? pts[k - 1].threshold : hi;
    if (std::isfinite(hi) && std::isfinite(lo)) {
      metrics.eer_threshold = lo + (hi - lo) / 2.0;
    } else if (std::isfinite(hi)) {
      metrics.eer_threshold = hi;
    } else {
      metrics.eer_threshold = lo;
    }
    break;
  }
  return metrics;
}

void write_roc_points(std::ostream& out, const RocMetrics& metrics) {
  out << "threshold\tfalse_accept\tfalse_reject\n";
  for (const auto& p : metrics.points) {
    out << p.threshold << '\t' << p.false_accept << '\t' << p.false_reject << '\n';
  }
}

}  // namespace kws
