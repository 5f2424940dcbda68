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

#include "kws/ctc.h"

#include <algorithm>
#include <unordered_map>

#include "kws/common.h"

namespace kws {

void validate_sequence(const LabelSequence& labels, int num_labels) {
  for (int label : labels) {
    if (label == kBlankIndex || label < 0 || label >= num_labels) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label index " + std::to_string(label) +
                      " is not a valid non-blank index for K=" +
                      std::to_string(num_labels));
    }
  }
}

ForwardState::ForwardState(LabelSequence labels, int num_labels)
    : labels_(std::move(labels)), num_labels_(num_labels) {
  validate_sequence(labels_, num_labels_);
  alpha_.assign(2 * labels_.size() + 1, kLogZero);
  scratch_.assign(alpha_.size(), kLogZero);
}

void ForwardState::reset() {
  frames_ = 0;
  std::fill(alpha_.begin(), alpha_.end(), kLogZero);
}

// Position s of the extended sequence is blank for even s and labels_[s/2]
// for odd s.
void ForwardState::step(std::span<const double> log_row,
                        CtcOpCounter* counter) {
  if (static_cast<int>(log_row.size()) != num_labels_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "posterior row has " + std::to_string(log_row.size()) +
                    " entries, expected " + std::to_string(num_labels_));
  }
  const std::size_t positions = alpha_.size();
  auto emit = [&](std::size_t s) {
    return s % 2 == 0 ? log_row[kBlankIndex] : log_row[labels_[s / 2]];
  };
  if (frames_ == 0) {
    alpha_[0] = emit(0);
    if (positions > 1) alpha_[1] = emit(1);
    if (counter) counter->cells += positions;
  } else {
    for (std::size_t s = 0; s < positions; ++s) {
      double acc = alpha_[s];
      if (s >= 1) acc = log_add(acc, alpha_[s - 1]);
      // Skipping the blank between two labels is only allowed when the labels
      // differ.
      if (s >= 2 && s % 2 == 1 && labels_[s / 2] != labels_[s / 2 - 1]) {
        acc = log_add(acc, alpha_[s - 2]);
      }
      scratch_[s] = acc == kLogZero ? kLogZero : acc + emit(s);
    }
    std::swap(alpha_, scratch_);
    if (counter) counter->cells += positions;
  }
  ++frames_;
}

double ForwardState::finalize() const {
  if (frames_ == 0) return labels_.empty() ? 0.0 : kLogZero;
  const std::size_t last = alpha_.size() - 1;
  return last == 0 ? alpha_[0] : log_add(alpha_[last], alpha_[last - 1]);
}

double forward_logprob(const Posteriorgram& post, const LabelSequence& labels,
                       CtcOpCounter* counter) {
  ForwardState state(labels, post.num_labels());
  for (std::size_t t = 0; t < post.num_frames(); ++t) {
    state.step(post.log_row(t), counter);
  }
  return state.finalize();
}

bool nbest_before(const NBestEntry& a, const NBestEntry& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.labels.size() != b.labels.size()) return a.labels.size() < b.labels.size();
  return a.labels < b.labels;
}

namespace {

struct SequenceHash {
  std::size_t operator()(const LabelSequence& s) const {
    std::size_t h = 0xcbf29ce484222325ull;
    for (int v : s) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

struct PrefixScore {
  double blank = kLogZero;     // alignments ending in blank
  double non_blank = kLogZero;  // alignments ending in the last label
  double total() const { return log_add(blank, non_blank); }
};

using PrefixMap = std::unordered_map<LabelSequence, PrefixScore, SequenceHash>;

}  // namespace

NBestList beam_search(const Posteriorgram& post, int beam_width) {
  if (beam_width < 1) {
    throw Error(ErrorCode::kInvalidArgument, "beam width must be >= 1");
  }
  const int k = post.num_labels();
  std::vector<std::pair<LabelSequence, PrefixScore>> beam;
  beam.push_back({LabelSequence{}, PrefixScore{0.0, kLogZero}});

  for (std::size_t t = 0; t < post.num_frames(); ++t) {
    const auto lp = post.log_row(t);
    PrefixMap next;
    next.reserve(beam.size() * 4);
    for (const auto& [prefix, score] : beam) {
      const double total = score.total();
      if (lp[kBlankIndex] != kLogZero) {
        auto& same = next[prefix];
        same.blank = log_add(same.blank, total + lp[kBlankIndex]);
      }
      const int last = prefix.empty() ? -1 : prefix.back();
      if (last >= 0 && lp[last] != kLogZero && score.non_blank != kLogZero) {
        auto& same = next[prefix];
        same.non_blank = log_add(same.non_blank, score.non_blank + lp[last]);
      }
      for (int c = 1; c < k; ++c) {
        if (lp[c] == kLogZero) continue;
        // A repeated label only starts a new symbol after a blank.
        const double from = c == last ? score.blank : total;
        if (from == kLogZero) continue;
        LabelSequence extended = prefix;
        extended.push_back(c);
        auto& ext = next[extended];
        ext.non_blank = log_add(ext.non_blank, from + lp[c]);
      }
    }

    std::vector<NBestEntry> ranked;
    ranked.reserve(next.size());
    for (const auto& [prefix, score] : next) {
      ranked.push_back({prefix, score.total()});
    }
    const std::size_t keep = std::min<std::size_t>(beam_width, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + keep, ranked.end(),
                      nbest_before);
    beam.clear();
    for (std::size_t i = 0; i < keep; ++i) {
      beam.push_back({ranked[i].labels, next[ranked[i].labels]});
    }
  }

  // Pruning can drop alignment mass from surviving prefixes, so the final
  // hypotheses are rescored with the exact forward probability.
  NBestList result;
  result.reserve(beam.size());
  for (const auto& [prefix, score] : beam) {
    double log_prob = post.empty() ? score.total() : forward_logprob(post, prefix);
    if (log_prob == kLogZero) continue;
    result.push_back({prefix, log_prob});
  }
  std::sort(result.begin(), result.end(), nbest_before);
  return result;
}

LabelSequence greedy_decode(const Posteriorgram& post) {
  LabelSequence out;
  int prev = kBlankIndex;
  for (std::size_t t = 0; t < post.num_frames(); ++t) {
    const auto row = post.row(t);
    const int best =
        static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best != kBlankIndex && best != prev) out.push_back(best);
    prev = best;
  }
  return out;
}

}  // namespace kws
