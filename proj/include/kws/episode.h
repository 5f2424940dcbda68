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

// Few-shot episodes and the line-oriented manifest that lists them.
//
// Manifest grammar (blank lines and lines starting with '#' are ignored;
// paths are relative to the manifest's directory unless absolute; paths must
// not contain whitespace):
//   episode <id>
//   target <label> <label> ...          optional, for query-by-string
//   support <wav>                       exactly three per episode
//   test <wav> <positive|negative> <confusing|non_confusing> <same|different>
//   end

#ifndef KWS_EPISODE_H_
#define KWS_EPISODE_H_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "kws/audio.h"
#include "kws/roc.h"

namespace kws {

enum class NegativeTag { kConfusing, kNonConfusing };
enum class SpeakerMatch { kSame, kDifferent };

const char* to_string(Polarity p);
const char* to_string(NegativeTag t);
const char* to_string(SpeakerMatch s);

// Generator-side description of how a recording was rendered.
struct SpeakerProfile {
  int id = 0;
  double f0_hz = 120.0;
  double formant_scale = 1.0;
  double rate = 1.0;
  double level_db = -20.0;
  // Per-phone relative formant shifts, (F1, F2) interleaved; empty for none.
  std::vector<double> accent;
  bool operator==(const SpeakerProfile&) const = default;
};

struct Recording {
  AudioBuffer audio;
  std::string path;                      // empty when held in memory only
  std::vector<std::string> transcript;   // label symbols, when known
  std::optional<SpeakerProfile> speaker;
};

struct TestCase {
  Recording recording;
  Polarity polarity = Polarity::kNegative;
  // Positives are tagged non_confusing / same; they enter every split.
  NegativeTag tag = NegativeTag::kNonConfusing;
  SpeakerMatch speaker = SpeakerMatch::kSame;
};

struct Episode {
  std::string id;
  std::array<Recording, 3> support;
  std::vector<TestCase> tests;
  std::vector<std::string> target;  // label symbols; empty if unknown

  // Exactly three supports (by type), at least one test, audio present.
  void validate() const;
};

// Writes every recording to `<dir>/<episode id>/...wav` and the manifest to
// `<dir>/manifest.txt`; returns the manifest path.
std::string write_episodes(const std::string& dir,
                           const std::vector<Episode>& episodes);

void write_manifest(const std::string& path, const std::vector<Episode>& episodes);
// Loads the referenced audio.
std::vector<Episode> read_manifest(const std::string& path);

}  // namespace kws

#endif  // KWS_EPISODE_H_
