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

#include "kws/dtw.h"

#include <algorithm>
#include <cmath>

#include "kws/common.h"

namespace kws {

void DtwConfig::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "DTW lambda must be in (0, 1)");
  }
}

double frame_distance_l2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "frame dimensions differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double frame_distance_post(std::span<const double> p, std::span<const double> q,
                           double lambda) {
  if (p.size() != q.size() || p.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "posterior dimensions differ");
  }
  const double u = lambda / static_cast<double>(p.size());
  double dot = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    dot += (u + (1.0 - lambda) * p[i]) * (u + (1.0 - lambda) * q[i]);
  }
  return -std::log(dot);
}

namespace {

void require_nonempty(std::size_t a, std::size_t b) {
  if (a == 0 || b == 0) {
    throw Error(ErrorCode::kInvalidArgument, "DTW needs non-empty sequences");
  }
}

template <typename RowFn>
DistanceMatrix fill_parallel(std::size_t rows, std::size_t cols, RowFn&& fn) {
  DistanceMatrix m{rows, cols, std::vector<double>(rows * cols)};
#pragma omp parallel for schedule(static) if (rows * cols >= 4096)
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m.values[i * cols + j] = fn(i, j);
  }
  return m;
}

template <typename RowFn>
DistanceMatrix fill_serial(std::size_t rows, std::size_t cols, RowFn&& fn) {
  DistanceMatrix m{rows, cols, std::vector<double>(rows * cols)};
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m.values[i * cols + j] = fn(i, j);
  }
  return m;
}

void check_dims(const FeatureSequence& a, const FeatureSequence& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature dimensions differ");
  }
}

void check_dims(const Posteriorgram& a, const Posteriorgram& b) {
  if (a.num_labels() != b.num_labels()) {
    throw Error(ErrorCode::kDimensionMismatch, "posteriorgram alphabets differ");
  }
}

}  // namespace

DistanceMatrix distance_matrix(const FeatureSequence& query,
                               const FeatureSequence& test) {
  check_dims(query, test);
  return fill_parallel(query.num_frames(), test.num_frames(),
                       [&](std::size_t i, std::size_t j) {
                         return frame_distance_l2(query.row(i), test.row(j));
                       });
}

DistanceMatrix distance_matrix(const Posteriorgram& query,
                               const Posteriorgram& test, double lambda) {
  check_dims(query, test);
  return fill_parallel(query.num_frames(), test.num_frames(),
                       [&](std::size_t i, std::size_t j) {
                         return frame_distance_post(query.row(i), test.row(j),
                                                    lambda);
                       });
}

namespace reference {

DistanceMatrix distance_matrix(const FeatureSequence& query,
                               const FeatureSequence& test) {
  check_dims(query, test);
  return fill_serial(query.num_frames(), test.num_frames(),
                     [&](std::size_t i, std::size_t j) {
                       return frame_distance_l2(query.row(i), test.row(j));
                     });
}

DistanceMatrix distance_matrix(const Posteriorgram& query,
                               const Posteriorgram& test, double lambda) {
  check_dims(query, test);
  return fill_serial(query.num_frames(), test.num_frames(),
                     [&](std::size_t i, std::size_t j) {
                       return frame_distance_post(query.row(i), test.row(j),
                                                  lambda);
                     });
}

}  // namespace reference

DtwAlignment dtw_align(const DistanceMatrix& d) {
  require_nonempty(d.rows, d.cols);
  const std::size_t n = d.rows, m = d.cols;
  // Two rolling rows of (cost, path length).
  std::vector<double> prev_cost(m), cur_cost(m);
  std::vector<std::size_t> prev_len(m), cur_len(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double best;
      std::size_t len;
      if (i == 0 && j == 0) {
        best = 0.0;
        len = 0;
      } else {
        best = std::numeric_limits<double>::infinity();
        len = 0;
        if (i > 0 && j > 0) {
          best = prev_cost[j - 1];
          len = prev_len[j - 1];
        }
        if (i > 0 && prev_cost[j] < best) {
          best = prev_cost[j];
          len = prev_len[j];
        }
        if (j > 0 && cur_cost[j - 1] < best) {
          best = cur_cost[j - 1];
          len = cur_len[j - 1];
        }
      }
      cur_cost[j] = best + d.at(i, j);
      cur_len[j] = len + 1;
    }
    std::swap(prev_cost, cur_cost);
    std::swap(prev_len, cur_len);
  }
  return {prev_cost[m - 1], prev_len[m - 1]};
}

namespace {

double finish_score(const DtwAlignment& a, const DtwConfig& config) {
  if (config.normalization == DtwNormalization::kPathLength) {
    return -a.cost / static_cast<double>(a.path_length);
  }
  return -a.cost;
}

template <typename Seq>
double aggregate_supports(std::span<const Seq> supports, const Seq& test,
                          const DtwConfig& config) {
  if (supports.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "DTW detection needs templates");
  }
  double best = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& support : supports) {
    const double s = dtw_score(support, test, config);
    best = std::max(best, s);
    sum += s;
  }
  return config.aggregation == SupportAggregation::kMax
             ? best
             : sum / static_cast<double>(supports.size());
}

}  // namespace

double dtw_score(const FeatureSequence& query, const FeatureSequence& test,
                 const DtwConfig& config) {
  config.validate();
  if (config.space != FeatureSpace::kFbank) {
    throw Error(ErrorCode::kInvalidArgument,
                "posteriorgram DTW configured but filterbank features given");
  }
  require_nonempty(query.num_frames(), test.num_frames());
  return finish_score(dtw_align(distance_matrix(query, test)), config);
}

double dtw_score(const Posteriorgram& query, const Posteriorgram& test,
                 const DtwConfig& config) {
  config.validate();
  if (config.space != FeatureSpace::kPosteriorgram) {
    throw Error(ErrorCode::kInvalidArgument,
                "filterbank DTW configured but posteriorgrams given");
  }
  require_nonempty(query.num_frames(), test.num_frames());
  return finish_score(dtw_align(distance_matrix(query, test, config.lambda)),
                      config);
}

double dtw_detect(std::span<const FeatureSequence> supports,
                  const FeatureSequence& test, const DtwConfig& config) {
  return aggregate_supports(supports, test, config);
}

double dtw_detect(std::span<const Posteriorgram> supports,
                  const Posteriorgram& test, const DtwConfig& config) {
  return aggregate_supports(supports, test, config);
}

const char* to_string(FeatureSpace space) {
  return space == FeatureSpace::kFbank ? "fbank" : "post";
}

FeatureSpace parse_feature_space(const std::string& name) {
  if (name == "fbank") return FeatureSpace::kFbank;
  if (name == "post" || name == "posteriorgram") return FeatureSpace::kPosteriorgram;
  throw Error(ErrorCode::kInvalidArgument, "unknown feature space '" + name + "'");
}

SupportAggregation parse_support_aggregation(const std::string& name) {
  if (name == "max") return SupportAggregation::kMax;
  if (name == "mean") return SupportAggregation::kMean;
  throw Error(ErrorCode::kInvalidArgument, "unknown aggregation '" + name + "'");
}

}  // namespace kws
