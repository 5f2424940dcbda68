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

#include "kws/detector.h"

#include <algorithm>
#include <cmath>

#include "kws/common.h"
#include "kws/features.h"

namespace kws {

StreamingDetector::StreamingDetector(const WakewordModel& model,
                                     const GruWeights& weights, VadConfig vad,
                                     double threshold, Aggregation aggregation)
    : model_(model),
      weights_(weights),
      vad_(vad),
      threshold_(threshold),
      aggregation_(aggregation) {
  model_.validate();
  if (weights_.input_dim() != kStackedDim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "streaming detection expects a label model over stacked frames");
  }
  if (!(weights_.alphabet == model_.alphabet)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "wakeword model and label model alphabets differ");
  }
  if (std::isnan(threshold_)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold is NaN");
  }
  half_frame_.resize(kNumMelBins);
  forward_.reserve(model_.hypotheses.size());
  for (const auto& h : model_.hypotheses) {
    forward_.emplace_back(h.labels, model_.alphabet.size());
  }
}

std::vector<DetectionEvent> StreamingDetector::push_hop(
    std::span<const std::int16_t> hop) {
  std::vector<DetectionEvent> events;
  if (hop.size() != static_cast<std::size_t>(kHopSamples)) {
    ++stats_.skipped_hops;
    return events;
  }
  pending_.insert(pending_.end(), hop.begin(), hop.end());
  while (pending_.size() >= static_cast<std::size_t>(kWindowSamples)) {
    process_frame(std::span<const std::int16_t>(pending_).first(kWindowSamples),
                  events);
    pending_.erase(pending_.begin(), pending_.begin() + kHopSamples);
  }
  return events;
}

std::vector<DetectionEvent> StreamingDetector::push(
    std::span<const std::int16_t> samples) {
  std::vector<DetectionEvent> events;
  for (std::int16_t s : samples) {
    partial_hop_.push_back(s);
    if (partial_hop_.size() == static_cast<std::size_t>(kHopSamples)) {
      auto more = push_hop(partial_hop_);
      events.insert(events.end(), more.begin(), more.end());
      partial_hop_.clear();
    }
  }
  return events;
}

std::vector<DetectionEvent> StreamingDetector::finish() {
  std::vector<DetectionEvent> events;
  // A trailing partial hop can still complete one last window.
  pending_.insert(pending_.end(), partial_hop_.begin(), partial_hop_.end());
  partial_hop_.clear();
  if (pending_.size() >= static_cast<std::size_t>(kWindowSamples)) {
    process_frame(std::span<const std::int16_t>(pending_).first(kWindowSamples),
                  events);
  }
  pending_.clear();
  if (in_segment_) close_segment(events);
  return events;
}

void StreamingDetector::open_segment() {
  in_segment_ = true;
  current_ = FrameSpan{next_frame_, next_frame_};
  gru_ = initial_state(weights_);
  have_half_ = false;
  for (auto& state : forward_) state.reset();
}

void StreamingDetector::process_frame(std::span<const std::int16_t> window,
                                      std::vector<DetectionEvent>& events) {
  ++stats_.frames;
  const bool speech = vad_.classify(window);
  if (!speech) {
    if (in_segment_) close_segment(events);
    ++next_frame_;
    return;
  }
  if (!in_segment_) open_segment();
  ++stats_.speech_frames;
  current_.end = next_frame_ + 1;

  std::vector<double> fbank(kNumMelBins);
  FbankExtractor::instance().compute_frame(window, fbank);
  if (!have_half_) {
    std::copy(fbank.begin(), fbank.end(), half_frame_.begin());
    have_half_ = true;
  } else {
    std::vector<double> stacked(kStackedDim);
    std::copy(half_frame_.begin(), half_frame_.end(), stacked.begin());
    std::copy(fbank.begin(), fbank.end(), stacked.begin() + kNumMelBins);
    have_half_ = false;
    const auto probs = run_streaming(weights_, gru_, stacked);
    ++stats_.label_model_invocations;
    std::vector<double> log_row(probs.size());
    for (std::size_t k = 0; k < probs.size(); ++k) {
      log_row[k] = probs[k] > 0.0 ? std::log(probs[k]) : kLogZero;
    }
    for (auto& state : forward_) state.step(log_row);
  }
  ++next_frame_;
}

void StreamingDetector::close_segment(std::vector<DetectionEvent>& events) {
  in_segment_ = false;
  ++stats_.segments;
  SegmentResult result;
  result.frames = current_;
  if (current_.length() >= static_cast<std::size_t>(vad_.config().min_speech_frames)) {
    std::vector<double> log_probs;
    log_probs.reserve(forward_.size());
    for (const auto& state : forward_) log_probs.push_back(state.finalize());
    result.scored = true;
    result.score = aggregate(model_, log_probs, aggregation_);
    result.detected = result.score >= threshold_;
  }
  if (result.detected) {
    DetectionEvent event;
    event.frames = current_;
    event.start_seconds = static_cast<double>(current_.start) * kHopSamples / kSampleRate;
    event.end_seconds = (static_cast<double>(current_.end - 1) * kHopSamples +
                         kWindowSamples) / kSampleRate;
    event.score = result.score;
    events.push_back(event);
  }
  segments_.push_back(result);
}

std::vector<DetectionEvent> detect_stream(
    const WakewordModel& model, const GruWeights& weights, const VadConfig& vad,
    const AudioBuffer& audio, double threshold, Aggregation aggregation,
    StreamStats* stats, std::vector<SegmentResult>* segments) {
  validate_audio(audio);
  StreamingDetector detector(model, weights, vad, threshold, aggregation);
  auto events = detector.push(audio.samples);
  auto tail = detector.finish();
  events.insert(events.end(), tail.begin(), tail.end());
  if (stats) *stats = detector.stats();
  if (segments) *segments = detector.segments();
  return events;
}

Posteriorgram segment_posteriorgram(const GruWeights& weights,
                                    const AudioBuffer& audio, FrameSpan span) {
  const auto features = extract_fbank(audio).slice(span.start, span.end);
  return run(weights, stack_frames(features));
}

}  // namespace kws
