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

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "kws/audio.h"
#include "kws/common.h"
#include "kws/features.h"
#include "oracles.h"

namespace kws {
namespace {

AudioBuffer noise(std::size_t n, std::uint64_t seed, double amplitude = 3000.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, amplitude);
  AudioBuffer a;
  for (std::size_t i = 0; i < n; ++i) {
    a.samples.push_back(static_cast<std::int16_t>(std::clamp(g(rng), -32768.0, 32767.0)));
  }
  return a;
}

TEST(Audio, FrameCount) {
  EXPECT_EQ(num_frames(0), 0u);
  EXPECT_EQ(num_frames(399), 0u);
  EXPECT_EQ(num_frames(400), 1u);
  EXPECT_EQ(num_frames(559), 1u);
  EXPECT_EQ(num_frames(560), 2u);
  EXPECT_EQ(num_frames(16000), 98u);
}

TEST(Audio, WavRoundTrip) {
  const AudioBuffer a = noise(1234, 1);
  const AudioBuffer b = parse_wav(encode_wav(a));
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(b.sample_rate, kSampleRate);

  const auto path = std::filesystem::temp_directory_path() / "kws_audio_roundtrip.wav";
  write_wav(path.string(), a);
  EXPECT_EQ(read_wav(path.string()).samples, a.samples);
  std::filesystem::remove(path);
}

TEST(Audio, RejectsWrongRate) {
  auto bytes = encode_wav(noise(800, 2));
  // Rewrite the sample-rate and byte-rate header fields for 8 kHz.
  const std::uint32_t rate = 8000, byte_rate = 16000;
  for (int i = 0; i < 4; ++i) {
    bytes[24 + i] = static_cast<std::uint8_t>(rate >> (8 * i));
    bytes[28 + i] = static_cast<std::uint8_t>(byte_rate >> (8 * i));
  }
  try {
    parse_wav(bytes);
    FAIL() << "8 kHz audio accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedAudio);
  }
}

TEST(Audio, RejectsStereoAndGarbage) {
  auto bytes = encode_wav(noise(800, 3));
  auto stereo = bytes;
  stereo[22] = 2;  // channel count field
  EXPECT_THROW(parse_wav(stereo), Error);
  std::vector<std::uint8_t> junk(64, 'x');
  EXPECT_THROW(parse_wav(junk), Error);
  EXPECT_THROW(read_wav("/nonexistent/file.wav"), Error);
}

TEST(Features, MatchesDirectComputation) {
  const AudioBuffer a = noise(400 + 160 * 4, 4);
  const FeatureSequence f = extract_fbank(a);
  ASSERT_EQ(f.num_frames(), 5u);
  ASSERT_EQ(f.dim(), kNumMelBins);
  EXPECT_EQ(f.frame_rate(), 100);
  for (std::size_t t = 0; t < f.num_frames(); ++t) {
    std::vector<std::int16_t> w(a.samples.begin() + t * 160, a.samples.begin() + t * 160 + 400);
    const auto expected = testing::naive_fbank_frame(w);
    for (int m = 0; m < kNumMelBins; ++m) {
      EXPECT_NEAR(f.row(t)[m], expected[m], 1e-8) << "frame " << t << " bin " << m;
    }
  }
}

TEST(Features, SilenceHitsTheFloor) {
  AudioBuffer a;
  a.samples.assign(4000, 0);
  const FeatureSequence f = extract_fbank(a);
  for (double v : f.data()) EXPECT_DOUBLE_EQ(v, std::log(1e-10));
}

TEST(Features, TooShortIsAnError) {
  AudioBuffer a = noise(399, 5);
  try {
    extract_fbank(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAudioTooShort);
  }
}

TEST(Features, FramesAreSelfContained) {
  // Each frame depends only on its own 400 samples.
  const AudioBuffer a = noise(4000, 6);
  AudioBuffer b = a;
  for (std::size_t i = 0; i < 160; ++i) b.samples[i] = 0;
  const auto fa = extract_fbank(a), fb = extract_fbank(b);
  for (std::size_t t = 1; t < fa.num_frames(); ++t) {
    for (int m = 0; m < kNumMelBins; ++m) EXPECT_EQ(fa.row(t)[m], fb.row(t)[m]);
  }
}

TEST(Features, StackingPairsFramesAndDropsOddTail) {
  const FeatureSequence f = extract_fbank(noise(400 + 160 * 6, 7));  // 7 frames
  const FeatureSequence s = stack_frames(f);
  ASSERT_EQ(s.num_frames(), 3u);
  EXPECT_EQ(s.dim(), kStackedDim);
  EXPECT_EQ(s.frame_rate(), 50);
  for (std::size_t k = 0; k < 3; ++k) {
    for (int m = 0; m < kNumMelBins; ++m) {
      EXPECT_EQ(s.row(k)[m], f.row(2 * k)[m]);
      EXPECT_EQ(s.row(k)[kNumMelBins + m], f.row(2 * k + 1)[m]);
    }
  }
  EXPECT_THROW(stack_frames(s), Error);
}

TEST(Features, FileRoundTripIsFloatRounded) {
  const FeatureSequence f = extract_fbank(noise(2000, 8));
  const auto path = std::filesystem::temp_directory_path() / "kws_features.bin";
  save_features(path.string(), f);
  const FeatureSequence g = load_features(path.string());
  ASSERT_EQ(g.num_frames(), f.num_frames());
  for (std::size_t i = 0; i < f.data().size(); ++i) {
    EXPECT_EQ(g.data()[i], static_cast<double>(static_cast<float>(f.data()[i])));
  }
  std::filesystem::remove(path);
}

TEST(Features, MelScale) {
  EXPECT_DOUBLE_EQ(hz_to_mel(0.0), 0.0);
  EXPECT_NEAR(hz_to_mel(700.0), 1127.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(mel_to_hz(hz_to_mel(1234.5)), 1234.5, 1e-9);
}

}  // namespace
}  // namespace kws
