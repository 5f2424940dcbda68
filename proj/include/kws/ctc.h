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

// CTC scoring and decoding over posteriorgrams. All arithmetic is in natural
// log space; -inf stands for probability zero.

#ifndef KWS_CTC_H_
#define KWS_CTC_H_

#include <cstdint>
#include <span>
#include <vector>

#include "kws/common.h"
#include "kws/label_model.h"

namespace kws {

// Alphabet indices, blank excluded.
using LabelSequence = std::vector<int>;

// Throws kInvalidArgument if any index is blank or >= num_labels.
void validate_sequence(const LabelSequence& labels, int num_labels);

// Counts forward-recursion cell updates, for complexity checks.
struct CtcOpCounter {
  std::uint64_t cells = 0;
};

// Forward variables of one label sequence at the latest frame, over the
// 2U+1 positions of the blank-interleaved sequence. Memory is O(U) and does
// not grow with the number of frames consumed.
class ForwardState {
 public:
  ForwardState(LabelSequence labels, int num_labels);

  const LabelSequence& labels() const { return labels_; }
  int num_labels() const { return num_labels_; }
  std::size_t frames() const { return frames_; }
  std::span<const double> log_alpha() const { return alpha_; }

  // Consumes one frame given as log-posteriors over the K outputs.
  void step(std::span<const double> log_row, CtcOpCounter* counter = nullptr);

  // log p(labels | frames so far). With no frames consumed this is 0 for the
  // empty sequence and -inf otherwise.
  double finalize() const;

  void reset();

 private:
  LabelSequence labels_;
  int num_labels_;
  std::size_t frames_ = 0;
  std::vector<double> alpha_;
  std::vector<double> scratch_;
};

inline void forward_step(ForwardState& state, std::span<const double> log_row,
                         CtcOpCounter* counter = nullptr) {
  state.step(log_row, counter);
}

// log p(labels | posteriorgram), summed over every alignment that collapses
// to `labels`. O(UT) time.
double forward_logprob(const Posteriorgram& post, const LabelSequence& labels,
                       CtcOpCounter* counter = nullptr);

struct NBestEntry {
  LabelSequence labels;
  double log_prob = kLogZero;
};
using NBestList = std::vector<NBestEntry>;

// Descending log-probability; ties go to the shorter sequence, then to the
// lexicographically smaller one.
bool nbest_before(const NBestEntry& a, const NBestEntry& b);

// CTC prefix beam search without any language model. Keeps the `beam_width`
// best prefixes per frame; the returned entries (at most beam_width) carry
// their exact forward log-probability, and are ordered by nbest_before.
NBestList beam_search(const Posteriorgram& post, int beam_width);

// Per-frame argmax, repeats merged, blanks removed.
LabelSequence greedy_decode(const Posteriorgram& post);

}  // namespace kws

#endif  // KWS_CTC_H_
