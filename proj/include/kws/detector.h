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

// Streaming wakeword detection. Audio arrives in 10 ms hops; each completed
// 25 ms frame is classified by the VAD and only speech frames reach the
// front end and label model. Within a VAD segment the GRU state and one CTC
// forward state per hypothesis advance frame by frame, so memory is
// O(hypotheses x sequence length) regardless of segment duration. When the
// segment closes its score is finalized and compared with the threshold.

#ifndef KWS_DETECTOR_H_
#define KWS_DETECTOR_H_

#include <cstdint>
#include <span>
#include <vector>

#include "kws/vad.h"
#include "kws/wakeword.h"

namespace kws {

struct DetectionEvent {
  FrameSpan frames;
  double start_seconds = 0.0;
  double end_seconds = 0.0;
  double score = 0.0;
};

struct SegmentResult {
  FrameSpan frames;
  bool scored = false;  // false if shorter than min_speech_frames
  double score = kLogZero;
  bool detected = false;
};

struct StreamStats {
  std::uint64_t frames = 0;
  std::uint64_t speech_frames = 0;
  std::uint64_t label_model_invocations = 0;
  std::uint64_t skipped_hops = 0;
  std::uint64_t segments = 0;
};

class StreamingDetector {
 public:
  // `model` and `weights` must outlive the detector.
  StreamingDetector(const WakewordModel& model, const GruWeights& weights,
                    VadConfig vad, double threshold,
                    Aggregation aggregation = Aggregation::kWeightedSum);

  // Exactly kHopSamples samples; other sizes are skipped and counted.
  std::vector<DetectionEvent> push_hop(std::span<const std::int16_t> hop);
  // Any number of samples; split into hops internally.
  std::vector<DetectionEvent> push(std::span<const std::int16_t> samples);
  // Closes an open segment at end of stream.
  std::vector<DetectionEvent> finish();

  const StreamStats& stats() const { return stats_; }
  const std::vector<SegmentResult>& segments() const { return segments_; }

  // Forward states currently held, one per hypothesis.
  const std::vector<ForwardState>& forward_states() const { return forward_; }

 private:
  void process_frame(std::span<const std::int16_t> window,
                     std::vector<DetectionEvent>& events);
  void open_segment();
  void close_segment(std::vector<DetectionEvent>& events);

  const WakewordModel& model_;
  const GruWeights& weights_;
  StreamingVad vad_;
  double threshold_;
  Aggregation aggregation_;

  std::vector<std::int16_t> pending_;  // samples from the next frame start
  std::vector<std::int16_t> partial_hop_;
  std::uint64_t next_frame_ = 0;

  bool in_segment_ = false;
  FrameSpan current_;
  GruState gru_;
  std::vector<double> half_frame_;  // first frame of an incomplete pair
  bool have_half_ = false;
  std::vector<ForwardState> forward_;

  StreamStats stats_;
  std::vector<SegmentResult> segments_;
};

std::vector<DetectionEvent> detect_stream(
    const WakewordModel& model, const GruWeights& weights, const VadConfig& vad,
    const AudioBuffer& audio, double threshold,
    Aggregation aggregation = Aggregation::kWeightedSum,
    StreamStats* stats = nullptr, std::vector<SegmentResult>* segments = nullptr);

// Batch equivalent of one streamed segment: features of the span, stacked,
// through the label model.
Posteriorgram segment_posteriorgram(const GruWeights& weights,
                                    const AudioBuffer& audio, FrameSpan span);

}  // namespace kws

#endif  // KWS_DETECTOR_H_
