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

#ifndef KWS_AUDIO_H_
#define KWS_AUDIO_H_

#include <cstdint>
#include <string>
#include <vector>

namespace kws {

inline constexpr int kSampleRate = 16000;
inline constexpr int kWindowSamples = 400;  // 25 ms
inline constexpr int kHopSamples = 160;     // 10 ms

// Mono 16-bit PCM at kSampleRate.
struct AudioBuffer {
  std::vector<std::int16_t> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Throws kUnsupportedAudio unless sample_rate == kSampleRate.
void validate_audio(const AudioBuffer& audio);

// Number of 25 ms / 10 ms frames in `num_samples` samples (0 if shorter than
// one window).
std::size_t num_frames(std::size_t num_samples);

// RIFF/WAVE, PCM16, mono, 16 kHz only. Anything else is rejected with
// kUnsupportedAudio.
AudioBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioBuffer& audio);

// Exposed for tests; `bytes` is a complete WAV file image.
AudioBuffer parse_wav(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio);

}  // namespace kws

#endif  // KWS_AUDIO_H_
