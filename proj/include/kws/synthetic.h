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

// Synthetic speech for few-shot episodes.
//
// Each pseudo-phoneme is a steady two-formant spectrum excited by a harmonic
// source. A phrase is a sequence of such phones with crossfaded boundaries,
// rendered for a speaker (pitch, vocal-tract scale, speaking rate, level)
// plus per-utterance jitter and additive white noise. Episodes and the
// matching oracle label model are reproducible from a seed within one build.

#ifndef KWS_SYNTHETIC_H_
#define KWS_SYNTHETIC_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kws/episode.h"
#include "kws/label_model.h"

namespace kws {

struct Phone {
  std::string name;
  double f1_hz = 0.0;
  double f2_hz = 0.0;
};

// Twelve phones on a 3 x 4 grid of (F1, F2).
const std::vector<Phone>& phone_inventory();
// The phone names, in inventory order (label index = inventory index + 1).
LabelAlphabet synthetic_alphabet();

struct SyntheticConfig {
  int min_phones = 4;
  int max_phones = 6;
  double phone_ms = 90.0;
  double formant_scale_range = 0.10;  // speaker vocal-tract scale, +/-
  double accent = 0.13;               // speaker per-phone formant shift, +/-
  double duration_jitter = 0.30;    // relative, per phone
  double f0_jitter = 0.08;          // relative, per phone
  double formant_jitter = 0.03;     // relative, per phone
  double level_jitter_db = 6.0;     // per utterance
  double tilt_jitter = 0.5;         // spectral slope exponent, per utterance
  // Peak dB of a smooth random ripple on the Mel axis, per utterance,
  // standing in for microphone and room colouration.
  double channel_db = 7.0;
  double noise_dbfs = -42.0;
  double noise_jitter_db = 4.0;     // per utterance, downward only
  double silence_min_ms = 150.0;
  double silence_max_ms = 300.0;
  double crossfade_ms = 15.0;

  int positives = 4;
  int confusing = 6;
  int non_confusing_same = 3;
  int non_confusing_different = 3;

  void validate() const;
};

using Rng = std::mt19937_64;

SpeakerProfile random_speaker(Rng& rng, int id, const SyntheticConfig& config = {});

struct RenderedPhrase {
  AudioBuffer audio;
  // Sample range [first, second) of each phone's steady part.
  std::vector<std::pair<std::size_t, std::size_t>> phone_spans;
};

// `phones` are inventory indices. Draws per-utterance jitter from `rng`.
RenderedPhrase render_phrase(std::span<const int> phones,
                             const SpeakerProfile& speaker,
                             const SyntheticConfig& config, Rng& rng);

// Inventory indices, no phone repeated back to back.
std::vector<int> random_phrase(Rng& rng, int length);
// Replaces one or two positions with a phone that shares a formant with the
// original.
std::vector<int> confusable_phrase(Rng& rng, std::span<const int> target);
// Same length as the target, using only phones absent from it.
std::vector<int> unrelated_phrase(Rng& rng, std::span<const int> target);

int edit_distance(std::span<const int> a, std::span<const int> b);

// Episode i is drawn from an engine seeded with (seed, i), so episodes do not
// depend on how many were requested.
std::vector<Episode> generate_synthetic_episodes(std::uint64_t seed, int count,
                                                 const SyntheticConfig& config = {});

// A one-layer GRU whose hidden units are fixed template matchers, one per
// phone plus one for background noise (which drives the blank). The update
// gate is pinned shut so each frame is classified independently. The output
// temperature and blank offset maximize the CTC likelihood of transcribed
// phrases drawn from a fixed calibration seed. Weights are float-rounded.
GruWeights build_oracle_label_model(const SyntheticConfig& config = {});

}  // namespace kws

#endif  // KWS_SYNTHETIC_H_
