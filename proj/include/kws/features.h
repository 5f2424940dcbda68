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

// Log-Mel filterbank front end.
//
// Fixed contract (any implementation reading or producing feature files must
// match it): 25 ms Hamming window, 10 ms hop, per-window pre-emphasis 0.97,
// 512-point FFT power spectrum, 41 triangular filters equally spaced on the
// HTK Mel scale mel(f) = 1127 ln(1 + f/700) between 0 and 8000 Hz, natural
// log with energies floored at 1e-10. Samples are scaled to [-1, 1) before
// analysis. No mean or variance normalization.

#ifndef KWS_FEATURES_H_
#define KWS_FEATURES_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kws/audio.h"

namespace kws {

inline constexpr int kNumMelBins = 41;
inline constexpr int kStackedDim = 2 * kNumMelBins;
inline constexpr int kFftSize = 512;
inline constexpr double kPreemphasis = 0.97;
inline constexpr double kEnergyFloor = 1e-10;
inline const double kLogFloor = std::log(kEnergyFloor);

// Row-major T x dim matrix of features.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  FeatureSequence(int dim, int frame_rate) : dim_(dim), frame_rate_(frame_rate) {}

  int dim() const { return dim_; }
  int frame_rate() const { return frame_rate_; }
  std::size_t num_frames() const { return dim_ ? data_.size() / dim_ : 0; }
  bool empty() const { return data_.empty(); }

  std::span<const double> row(std::size_t t) const {
    return {data_.data() + t * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<double> row(std::size_t t) {
    return {data_.data() + t * dim_, static_cast<std::size_t>(dim_)};
  }
  void append_row(std::span<const double> values);
  void resize(std::size_t frames) { data_.resize(frames * dim_); }

  // Rows [begin, end).
  FeatureSequence slice(std::size_t begin, std::size_t end) const;

  const std::vector<double>& data() const { return data_; }

  // Checks the dim / frame-rate pairing and finiteness.
  void validate() const;

 private:
  int dim_ = kNumMelBins;
  int frame_rate_ = 100;
  std::vector<double> data_;
};

// Shared analysis tables. Stateless after construction and safe to use from
// many threads.
class FbankExtractor {
 public:
  static const FbankExtractor& instance();

  // One 400-sample window to 41 log-Mel energies.
  void compute_frame(std::span<const std::int16_t> window,
                     std::span<double> out) const;

  // Mel filter weights over the 257 power-spectrum bins, row per filter.
  const std::vector<std::array<double, kFftSize / 2 + 1>>& filters() const {
    return filters_;
  }

 private:
  FbankExtractor();

  std::array<double, kWindowSamples> window_{};
  std::vector<std::array<double, kFftSize / 2 + 1>> filters_;
  // Nonzero span of each filter.
  std::vector<std::pair<int, int>> bin_range_;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Throws kAudioTooShort when the audio is shorter than one window.
FeatureSequence extract_fbank(const AudioBuffer& audio);

// Pairs frames (2k, 2k+1) into one 82-dim frame at 50 Hz; a trailing
// unpaired frame is dropped.
FeatureSequence stack_frames(const FeatureSequence& features);

// Container: "KWSF", u32 version (1), u32 T, u32 dim, u32 frame_rate, then
// T*dim little-endian float32 row-major.
void save_features(const std::string& path, const FeatureSequence& features);
FeatureSequence load_features(const std::string& path);

}  // namespace kws

#endif  // KWS_FEATURES_H_
