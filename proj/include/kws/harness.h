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

// Few-shot detector comparison. Every episode enrolls its three supports,
// scores every test recording, and all (score, polarity) pairs from all
// episodes are pooled under one threshold sweep.

#ifndef KWS_HARNESS_H_
#define KWS_HARNESS_H_

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kws/dtw.h"
#include "kws/episode.h"
#include "kws/label_model.h"
#include "kws/roc.h"
#include "kws/vad.h"

namespace kws {

enum class DetectorKind {
  kDonut,             // N-best enrollment, weighted-sum scoring
  kDonutLogSumExp,    // N-best enrollment, log-sum-exp with prior
  kQueryByString,     // the episode's target transcript as a single hypothesis
  kDtwFbank,
  kDtwPost,
};

const char* to_string(DetectorKind kind);
DetectorKind parse_detector_kind(const std::string& name);

struct HarnessParams {
  int beam = 100;
  int nbest = 10;
  VadConfig vad;
  // Trim every recording to its VAD speech extent (whole recording if the
  // VAD finds nothing).
  bool trim = true;
  DtwConfig dtw;
  void validate() const;
};

// Front-end output of one recording, computed once and shared by detectors.
struct PreparedRecording {
  FeatureSequence fbank;  // 41-dim, 100 Hz
  Posteriorgram post;     // 50 Hz
};

struct PreparedEpisode {
  const Episode* episode = nullptr;  // not owned
  std::array<PreparedRecording, 3> support;
  std::vector<PreparedRecording> tests;
};

PreparedRecording prepare_recording(const AudioBuffer& audio,
                                    const GruWeights& weights,
                                    const HarnessParams& params);
std::vector<PreparedEpisode> prepare_episodes(const std::vector<Episode>& episodes,
                                              const GruWeights& weights,
                                              const HarnessParams& params);

struct EpisodeReport {
  std::string id;
  bool skipped = false;
  std::string reason;           // set when skipped
  std::vector<double> scores;   // parallel to Episode::tests
};

struct SplitReport {
  std::string name;
  std::optional<RocMetrics> metrics;  // empty if the split has no negatives
};

struct HarnessReport {
  DetectorKind detector = DetectorKind::kDonut;
  RocMetrics overall;
  // "confusing", "non_confusing_same", "non_confusing_different"; each pools
  // all positives with the negatives of that kind.
  std::vector<SplitReport> splits;
  std::vector<EpisodeReport> episodes;
  std::size_t skipped = 0;

  const RocMetrics& split(const std::string& name) const;
};

// Scores episodes concurrently. Throws kInvalidArgument for an empty episode
// list or when every episode was skipped.
HarnessReport evaluate(DetectorKind detector,
                       const std::vector<PreparedEpisode>& episodes,
                       const HarnessParams& params);

HarnessReport run_harness(DetectorKind detector, const std::vector<Episode>& episodes,
                          const GruWeights& weights, const HarnessParams& params);

// key/value text report.
void write_report(std::ostream& out, const HarnessReport& report);

namespace reference {
// Serial episode loop; identical results to kws::evaluate.
HarnessReport evaluate(DetectorKind detector,
                       const std::vector<PreparedEpisode>& episodes,
                       const HarnessParams& params);
}  // namespace reference

}  // namespace kws

#endif  // KWS_HARNESS_H_
