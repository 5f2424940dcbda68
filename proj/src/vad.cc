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

#include "kws/vad.h"

#include <cmath>

#include "kws/common.h"

namespace kws {

void VadConfig::validate() const {
  if (hangover_frames < 0) {
    throw Error(ErrorCode::kInvalidArgument, "VAD hangover must be >= 0");
  }
  if (min_speech_frames < 1) {
    throw Error(ErrorCode::kInvalidArgument, "VAD minimum speech must be >= 1");
  }
  if (std::isnan(energy_threshold_db)) {
    throw Error(ErrorCode::kInvalidArgument, "VAD threshold is NaN");
  }
}

double frame_dbfs(std::span<const std::int16_t> frame) {
  if (frame.empty()) return kLogZero;
  double energy = 0.0;
  for (std::int16_t s : frame) {
    const double x = s / 32768.0;
    energy += x * x;
  }
  if (energy == 0.0) return kLogZero;
  return 10.0 * std::log10(energy / static_cast<double>(frame.size()));
}

bool is_loud(const VadConfig& config, std::span<const std::int16_t> frame) {
  return frame_dbfs(frame) >= config.energy_threshold_db;
}

StreamingVad::StreamingVad(VadConfig config) : config_(config) {
  config_.validate();
}

bool StreamingVad::classify(std::span<const std::int16_t> frame) {
  if (is_loud(config_, frame)) {
    hang_ = config_.hangover_frames;
    return true;
  }
  if (hang_ > 0) {
    --hang_;
    return true;
  }
  return false;
}

bool classify_frame(StreamingVad& vad, std::span<const std::int16_t> frame) {
  return vad.classify(frame);
}

std::vector<bool> classify_frames(const VadConfig& config,
                                  const AudioBuffer& audio) {
  validate_audio(audio);
  StreamingVad vad(config);
  const std::size_t frames = num_frames(audio.size());
  std::vector<bool> speech(frames);
  std::span<const std::int16_t> samples(audio.samples);
  for (std::size_t t = 0; t < frames; ++t) {
    speech[t] = vad.classify(samples.subspan(t * kHopSamples, kWindowSamples));
  }
  return speech;
}

std::vector<FrameSpan> segment(const VadConfig& config,
                               const AudioBuffer& audio) {
  const auto speech = classify_frames(config, audio);
  std::vector<FrameSpan> spans;
  std::size_t t = 0;
  while (t < speech.size()) {
    if (!speech[t]) {
      ++t;
      continue;
    }
    FrameSpan span{t, t};
    while (t < speech.size() && speech[t]) ++t;
    span.end = t;
    if (span.length() >= static_cast<std::size_t>(config.min_speech_frames)) {
      spans.push_back(span);
    }
  }
  return spans;
}

std::optional<FrameSpan> speech_extent(const VadConfig& config,
                                       const AudioBuffer& audio) {
  const auto spans = segment(config, audio);
  if (spans.empty()) return std::nullopt;
  return FrameSpan{spans.front().start, spans.back().end};
}

}  // namespace kws
