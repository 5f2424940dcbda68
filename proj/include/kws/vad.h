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

// Energy voice activity detector with hangover. Frames are the same
// 25 ms / 10 ms grid used by the filterbank, so VAD decisions line up with
// feature frames one to one.

#ifndef KWS_VAD_H_
#define KWS_VAD_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kws/audio.h"

namespace kws {

struct VadConfig {
  double energy_threshold_db = -40.0;  // dBFS
  int hangover_frames = 20;
  int min_speech_frames = 10;

  void validate() const;
};

// RMS level of a frame relative to full scale; -inf for digital silence.
double frame_dbfs(std::span<const std::int16_t> frame);

// Raw energy decision, without hangover.
bool is_loud(const VadConfig& config, std::span<const std::int16_t> frame);

// Per-stream classifier: a frame is speech if it is loud, or if it falls
// within `hangover_frames` frames after the last loud frame.
class StreamingVad {
 public:
  explicit StreamingVad(VadConfig config);

  bool classify(std::span<const std::int16_t> frame);
  void reset() { hang_ = 0; }
  const VadConfig& config() const { return config_; }

 private:
  VadConfig config_;
  int hang_ = 0;
};

bool classify_frame(StreamingVad& vad, std::span<const std::int16_t> frame);

// Post-hangover speech decision for every frame of the audio.
std::vector<bool> classify_frames(const VadConfig& config,
                                  const AudioBuffer& audio);

// Frame span [start, end).
struct FrameSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - start; }
  bool operator==(const FrameSpan&) const = default;
};

// Maximal runs of speech frames at least min_speech_frames long, sorted and
// disjoint.
std::vector<FrameSpan> segment(const VadConfig& config, const AudioBuffer& audio);

// From the start of the first span to the end of the last one.
std::optional<FrameSpan> speech_extent(const VadConfig& config,
                                       const AudioBuffer& audio);

}  // namespace kws

#endif  // KWS_VAD_H_
