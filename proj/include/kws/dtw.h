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

// Dynamic time warping template matching, over raw filterbank frames with an
// l2 frame distance or over posteriorgrams with the smoothed inner-product
// distance d(p, q) = -log((lambda u + (1 - lambda) p) . (lambda u + (1 -
// lambda) q)), u uniform.
//
// Alignment is full sequence to sequence with steps (1,0), (0,1), (1,1) and
// no band. On equal cumulative cost the diagonal predecessor wins, then
// (i-1, j), then (i, j-1).

#ifndef KWS_DTW_H_
#define KWS_DTW_H_

#include <span>
#include <string>
#include <vector>

#include "kws/features.h"
#include "kws/label_model.h"

namespace kws {

enum class FeatureSpace { kFbank, kPosteriorgram };
enum class DtwNormalization { kNone, kPathLength };
enum class SupportAggregation { kMax, kMean };

struct DtwConfig {
  FeatureSpace space = FeatureSpace::kFbank;
  double lambda = 1e-5;
  DtwNormalization normalization = DtwNormalization::kPathLength;
  SupportAggregation aggregation = SupportAggregation::kMax;

  void validate() const;
};

double frame_distance_l2(std::span<const double> a, std::span<const double> b);
double frame_distance_post(std::span<const double> p, std::span<const double> q,
                           double lambda);

// Row-major query x test matrix of frame distances.
struct DistanceMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

DistanceMatrix distance_matrix(const FeatureSequence& query,
                               const FeatureSequence& test);
DistanceMatrix distance_matrix(const Posteriorgram& query,
                               const Posteriorgram& test, double lambda);

struct DtwAlignment {
  double cost = 0.0;
  std::size_t path_length = 0;  // cells on the optimal path
};

DtwAlignment dtw_align(const DistanceMatrix& distances);

// Negated alignment cost (optionally divided by path length); higher means
// more similar. Throws kInvalidArgument on empty input or when the config's
// feature space does not match the argument type.
double dtw_score(const FeatureSequence& query, const FeatureSequence& test,
                 const DtwConfig& config);
double dtw_score(const Posteriorgram& query, const Posteriorgram& test,
                 const DtwConfig& config);

// Aggregated over the enrollment templates (max by default).
double dtw_detect(std::span<const FeatureSequence> supports,
                  const FeatureSequence& test, const DtwConfig& config);
double dtw_detect(std::span<const Posteriorgram> supports,
                  const Posteriorgram& test, const DtwConfig& config);

namespace reference {
// Single-threaded distance matrices, element-for-element identical to the
// parallel ones.
DistanceMatrix distance_matrix(const FeatureSequence& query,
                               const FeatureSequence& test);
DistanceMatrix distance_matrix(const Posteriorgram& query,
                               const Posteriorgram& test, double lambda);
}  // namespace reference

const char* to_string(FeatureSpace space);
FeatureSpace parse_feature_space(const std::string& name);
SupportAggregation parse_support_aggregation(const std::string& name);

}  // namespace kws

#endif  // KWS_DTW_H_
