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

// Query-by-example wakeword model.
//
// Enrollment decodes each recording with a CTC beam search and keeps the top
// N label sequences together with a confidence w = -1 / log p(sequence |
// recording). Detection scores new audio as sum_i w_i * log p(sequence_i |
// audio). Scores are raw log-space sums; one global threshold applies.
//
// Model text format (UTF-8, one record per line):
//   # free-form comment
//   #alphabet_hash <16 hex digits>
//   #nbest <N>
//   #beam <B>
//   #threshold <value | none>
//   <space-separated labels>\t<weight>\t<enroll log-probability>
// Numbers are written with 17 significant digits, so a save/load round trip
// is exact. The empty sequence is written as an empty label field.

#ifndef KWS_WAKEWORD_H_
#define KWS_WAKEWORD_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kws/ctc.h"
#include "kws/label_model.h"

namespace kws {

// log-probabilities above this are clamped before taking the reciprocal.
inline constexpr double kMaxEnrollLogProb = -1e-6;

// w = -1 / log p, with log p clamped to kMaxEnrollLogProb.
double confidence_weight(double enroll_log_prob);

struct Hypothesis {
  LabelSequence labels;
  double enroll_log_prob = kLogZero;
  double weight = 0.0;
  // Index of the enrollment recording that produced it; -1 when unknown
  // (loaded from file or built from a label string).
  int source = -1;
};

struct WakewordModel {
  std::vector<Hypothesis> hypotheses;
  std::optional<double> threshold;
  LabelAlphabet alphabet;
  int nbest = 0;
  int beam = 0;

  // Non-empty, finite positive weights, valid label indices, and at most
  // nbest distinct sequences per enrollment recording.
  void validate() const;
};

struct LearnResult {
  WakewordModel model;
  std::vector<std::string> warnings;
};

// Enrollment from per-recording N-best lists (the beam search step already
// done). Keeps the top `nbest` entries of each list.
LearnResult learn_from_nbest(std::span<const NBestList> nbest_lists, int nbest,
                             const LabelAlphabet& alphabet, int beam_width = 0);

// Enrollment from one to three posteriorgrams (three in normal use).
LearnResult learn(std::span<const Posteriorgram> posts, int beam_width,
                  int nbest);

// Query-by-string model: a single known sequence with weight 1.
WakewordModel model_from_sequence(const LabelSequence& labels,
                                  const LabelAlphabet& alphabet);

enum class Aggregation { kWeightedSum, kLogSumExpPrior };

// log p(hypothesis_i | post) for every hypothesis. Hypotheses are scored in
// parallel; the result does not depend on the thread count.
std::vector<double> hypothesis_log_probs(const WakewordModel& model,
                                         const Posteriorgram& post,
                                         CtcOpCounter* counter = nullptr);

double aggregate(const WakewordModel& model, std::span<const double> log_probs,
                 Aggregation aggregation);

// sum_i w_i log p_i; -inf if any hypothesis cannot be aligned.
double score(const WakewordModel& model, const Posteriorgram& post);

// logsumexp_i(enroll_log_prob_i + log p_i).
double score_logsumexp_prior(const WakewordModel& model,
                             const Posteriorgram& post);

double score_with(const WakewordModel& model, const Posteriorgram& post,
                  Aggregation aggregation);

namespace reference {
// Single-threaded scoring in hypothesis order; used to check score().
double score(const WakewordModel& model, const Posteriorgram& post);
}  // namespace reference

std::string format_model(const WakewordModel& model);
// Labels are resolved against `alphabet`; a hash mismatch is an error.
WakewordModel parse_model(const std::string& text, const LabelAlphabet& alphabet);
void save_model(const std::string& path, const WakewordModel& model);
WakewordModel load_model(const std::string& path, const LabelAlphabet& alphabet);

std::string format_sequence(const LabelSequence& labels,
                            const LabelAlphabet& alphabet);
LabelSequence parse_sequence(const std::string& text,
                             const LabelAlphabet& alphabet);

}  // namespace kws

#endif  // KWS_WAKEWORD_H_
