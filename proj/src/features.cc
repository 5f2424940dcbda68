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

#include "kws/features.h"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <numbers>

#include "binary_io.h"
#include "kws/common.h"

namespace kws {

namespace {

constexpr int kNumBins = kFftSize / 2 + 1;
constexpr std::uint32_t kFeatureFormatVersion = 1;

// The FFTW planner is not thread-safe; execution with the new-array interface
// is. The plan is created once and shared.
fftw_plan shared_plan() {
  static std::once_flag once;
  static fftw_plan plan = nullptr;
  std::call_once(once, [] {
    double* in = fftw_alloc_real(kFftSize);
    fftw_complex* out = fftw_alloc_complex(kNumBins);
    plan = fftw_plan_dft_r2c_1d(kFftSize, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
  });
  return plan;
}

struct FftScratch {
  FftScratch()
      : in(fftw_alloc_real(kFftSize)), out(fftw_alloc_complex(kNumBins)) {}
  ~FftScratch() {
    fftw_free(in);
    fftw_free(out);
  }
  FftScratch(const FftScratch&) = delete;
  FftScratch& operator=(const FftScratch&) = delete;

  double* in;
  fftw_complex* out;
};

}  // namespace

void FeatureSequence::append_row(std::span<const double> values) {
  if (static_cast<int>(values.size()) != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature row has " + std::to_string(values.size()) +
                    " values, expected " + std::to_string(dim_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

FeatureSequence FeatureSequence::slice(std::size_t begin,
                                       std::size_t end) const {
  end = std::min(end, num_frames());
  FeatureSequence out(dim_, frame_rate_);
  if (begin < end) {
    out.data_.assign(data_.begin() + begin * dim_, data_.begin() + end * dim_);
  }
  return out;
}

void FeatureSequence::validate() const {
  bool base = dim_ == kNumMelBins && frame_rate_ == 100;
  bool stacked = dim_ == kStackedDim && frame_rate_ == 50;
  if (!base && !stacked) {
    throw Error(ErrorCode::kDimensionMismatch,
                "features must be 41-dim at 100 Hz or 82-dim at 50 Hz");
  }
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFinite, "non-finite feature value");
    }
  }
}

double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

const FbankExtractor& FbankExtractor::instance() {
  static const FbankExtractor extractor;
  return extractor;
}

FbankExtractor::FbankExtractor() {
  for (int i = 0; i < kWindowSamples; ++i) {
    window_[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i /
                                        (kWindowSamples - 1));
  }
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(kSampleRate / 2.0);
  const double step = (mel_hi - mel_lo) / (kNumMelBins + 1);
  filters_.resize(kNumMelBins);
  bin_range_.resize(kNumMelBins);
  for (int m = 0; m < kNumMelBins; ++m) {
    const double left = mel_lo + m * step;
    const double center = left + step;
    const double right = center + step;
    auto& f = filters_[m];
    f.fill(0.0);
    int first = kNumBins, last = -1;
    for (int k = 0; k < kNumBins; ++k) {
      const double mel = hz_to_mel(k * static_cast<double>(kSampleRate) / kFftSize);
      double w = 0.0;
      if (mel > left && mel <= center) {
        w = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        w = (right - mel) / (right - center);
      }
      if (w > 0.0) {
        f[k] = w;
        first = std::min(first, k);
        last = std::max(last, k);
      }
    }
    bin_range_[m] = {first, last + 1};
  }
  shared_plan();
}

void FbankExtractor::compute_frame(std::span<const std::int16_t> window,
                                   std::span<double> out) const {
  if (window.size() != static_cast<std::size_t>(kWindowSamples) ||
      out.size() != static_cast<std::size_t>(kNumMelBins)) {
    throw Error(ErrorCode::kDimensionMismatch, "fbank frame size mismatch");
  }
  thread_local FftScratch scratch;
  double* in = scratch.in;
  constexpr double kScale = 1.0 / 32768.0;
  // Pre-emphasis within the window; the first sample is emphasized against
  // itself so that every frame is self-contained.
  double prev = window[0] * kScale;
  for (int i = 0; i < kWindowSamples; ++i) {
    const double x = window[i] * kScale;
    in[i] = (x - kPreemphasis * prev) * window_[i];
    prev = x;
  }
  std::fill(in + kWindowSamples, in + kFftSize, 0.0);
  fftw_execute_dft_r2c(shared_plan(), in, scratch.out);

  std::array<double, kNumBins> power;
  for (int k = 0; k < kNumBins; ++k) {
    const double re = scratch.out[k][0], im = scratch.out[k][1];
    power[k] = re * re + im * im;
  }
  for (int m = 0; m < kNumMelBins; ++m) {
    double e = 0.0;
    for (int k = bin_range_[m].first; k < bin_range_[m].second; ++k) {
      e += filters_[m][k] * power[k];
    }
    out[m] = std::log(std::max(e, kEnergyFloor));
  }
}

FeatureSequence extract_fbank(const AudioBuffer& audio) {
  validate_audio(audio);
  const std::size_t frames = num_frames(audio.size());
  if (frames == 0) {
    throw Error(ErrorCode::kAudioTooShort,
                "audio too short: " + std::to_string(audio.size()) +
                    " samples, need at least " +
                    std::to_string(kWindowSamples));
  }
  const auto& extractor = FbankExtractor::instance();
  FeatureSequence features(kNumMelBins, 100);
  features.resize(frames);
  std::span<const std::int16_t> samples(audio.samples);
  for (std::size_t t = 0; t < frames; ++t) {
    extractor.compute_frame(samples.subspan(t * kHopSamples, kWindowSamples),
                            features.row(t));
  }
  return features;
}

FeatureSequence stack_frames(const FeatureSequence& features) {
  if (features.dim() != kNumMelBins || features.frame_rate() != 100) {
    throw Error(ErrorCode::kInvalidArgument,
                "stack_frames expects unstacked 41-dim 100 Hz features");
  }
  const std::size_t pairs = features.num_frames() / 2;
  FeatureSequence out(kStackedDim, 50);
  out.resize(pairs);
  for (std::size_t k = 0; k < pairs; ++k) {
    auto dst = out.row(k);
    auto a = features.row(2 * k);
    auto b = features.row(2 * k + 1);
    std::copy(a.begin(), a.end(), dst.begin());
    std::copy(b.begin(), b.end(), dst.begin() + kNumMelBins);
  }
  return out;
}

void save_features(const std::string& path, const FeatureSequence& features) {
  features.validate();
  internal::ByteWriter w;
  w.magic("KWSF");
  w.u32(kFeatureFormatVersion);
  w.u32(static_cast<std::uint32_t>(features.num_frames()));
  w.u32(static_cast<std::uint32_t>(features.dim()));
  w.u32(static_cast<std::uint32_t>(features.frame_rate()));
  for (double v : features.data()) w.f32(static_cast<float>(v));
  w.save(path);
}

FeatureSequence load_features(const std::string& path) {
  auto r = internal::ByteReader::from_file(path);
  r.expect_magic("KWSF");
  if (std::uint32_t version = r.u32(); version != kFeatureFormatVersion) {
    throw Error(ErrorCode::kUnknownVersion,
                path + ": feature format version " + std::to_string(version));
  }
  const std::uint32_t frames = r.u32();
  const std::uint32_t dim = r.u32();
  const std::uint32_t rate = r.u32();
  FeatureSequence features(static_cast<int>(dim), static_cast<int>(rate));
  std::vector<double> row(dim);
  for (std::uint32_t t = 0; t < frames; ++t) {
    for (auto& v : row) v = r.f32();
    features.append_row(row);
  }
  if (!r.at_end()) throw Error(ErrorCode::kParse, path + ": trailing bytes");
  features.validate();
  return features;
}

}  // namespace kws
