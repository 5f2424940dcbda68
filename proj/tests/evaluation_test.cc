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
#include <fstream>
#include <random>
#include <sstream>

#include "kws/common.h"
#include "kws/ctc.h"
#include "kws/episode.h"
#include "kws/features.h"
#include "kws/harness.h"
#include "kws/roc.h"
#include "kws/synthetic.h"
#include "kws/vad.h"
#include "kws/wakeword.h"
#include "oracles.h"

namespace kws {
namespace {

std::vector<ScoredTrial> trials_of(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<ScoredTrial> t;
  for (double s : pos) t.push_back({s, Polarity::kPositive});
  for (double s : neg) t.push_back({s, Polarity::kNegative});
  return t;
}

std::vector<int> phones_of(const std::vector<std::string>& symbols) {
  const LabelAlphabet a = synthetic_alphabet();
  std::vector<int> out;
  for (const auto& s : symbols) out.push_back(a.index_of(s) - 1);
  return out;
}

// Cached because building the oracle and rendering audio take a moment.
const GruWeights& oracle() {
  static const GruWeights w = build_oracle_label_model();
  return w;
}

const std::vector<Episode>& small_suite() {
  static const std::vector<Episode> e = generate_synthetic_episodes(77, 4);
  return e;
}

TEST(Roc, HandCase) {
  const RocMetrics m = compute_roc(trials_of({0.9, 0.4}, {0.6, 0.1}));
  EXPECT_DOUBLE_EQ(m.auc, 0.75);
  EXPECT_DOUBLE_EQ(m.eer, 0.5);
  EXPECT_EQ(m.positives, 2u);
  EXPECT_EQ(m.negatives, 2u);
}

TEST(Roc, PerfectSeparation) {
  const RocMetrics m = compute_roc(trials_of({3, 4, 5}, {-1, 0, 1, 2}));
  EXPECT_EQ(m.eer, 0.0);
  EXPECT_EQ(m.auc, 1.0);
  EXPECT_GT(m.eer_threshold, 2.0);
  EXPECT_LE(m.eer_threshold, 3.0);
}

TEST(Roc, FullyInvertedScores) {
  const RocMetrics m = compute_roc(trials_of({-1, -2}, {1, 2, 3}));
  EXPECT_EQ(m.auc, 0.0);
  EXPECT_EQ(m.eer, 1.0);
}

TEST(Roc, AllTiedIsChance) {
  const RocMetrics m = compute_roc(trials_of({1, 1, 1}, {1, 1}));
  EXPECT_DOUBLE_EQ(m.auc, 0.5);
  EXPECT_DOUBLE_EQ(m.eer, 0.5);
}

TEST(Roc, AucEqualsMannWhitneyWithTies) {
  std::mt19937_64 rng(501);
  std::uniform_int_distribution<int> coarse(0, 6), count(1, 25);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pos(count(rng)), neg(count(rng));
    for (auto& v : pos) v = coarse(rng) + 1;
    for (auto& v : neg) v = coarse(rng);
    EXPECT_NEAR(compute_roc(trials_of(pos, neg)).auc, testing::mann_whitney_auc(pos, neg), 1e-12);
  }
}

TEST(Roc, CurveIsMonotoneAndEndsAtTheCorners) {
  std::mt19937_64 rng(502);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> pos(40), neg(60);
  for (auto& v : pos) v = g(rng) + 1.0;
  for (auto& v : neg) v = g(rng);
  const RocMetrics m = compute_roc(trials_of(pos, neg));
  ASSERT_GE(m.points.size(), 2u);
  EXPECT_EQ(m.points.front().false_accept, 1.0);
  EXPECT_EQ(m.points.front().false_reject, 0.0);
  EXPECT_EQ(m.points.back().false_accept, 0.0);
  EXPECT_EQ(m.points.back().false_reject, 1.0);
  for (std::size_t i = 1; i < m.points.size(); ++i) {
    EXPECT_LE(m.points[i].false_accept, m.points[i - 1].false_accept);
    EXPECT_GE(m.points[i].false_reject, m.points[i - 1].false_reject);
    EXPECT_GT(m.points[i].threshold, m.points[i - 1].threshold);
  }
  EXPECT_GT(m.eer, 0.0);
  EXPECT_LT(m.eer, 0.5);
}

TEST(Roc, MinusInfinityScoresAreAllowed) {
  const RocMetrics m = compute_roc(trials_of({-1.0}, {kLogZero, kLogZero}));
  EXPECT_EQ(m.auc, 1.0);
  EXPECT_EQ(m.eer, 0.0);
}

TEST(Roc, Rejections) {
  EXPECT_THROW(compute_roc(trials_of({1.0}, {})), Error);
  EXPECT_THROW(compute_roc(trials_of({}, {1.0})), Error);
  EXPECT_THROW(compute_roc(trials_of({std::nan("")}, {1.0})), Error);
}

TEST(Roc, PointsFileHasOneLinePerPoint) {
  const RocMetrics m = compute_roc(trials_of({0.9, 0.4}, {0.6, 0.1}));
  std::ostringstream out;
  write_roc_points(out, m);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "threshold\tfalse_accept\tfalse_reject");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, static_cast<int>(m.points.size()));
}

TEST(Synthetic, InventoryIsTwelvePhonesOnAGrid) {
  const auto& inv = phone_inventory();
  ASSERT_EQ(inv.size(), 12u);
  EXPECT_EQ(synthetic_alphabet().size(), 13);
  for (std::size_t i = 0; i < inv.size(); ++i) {
    for (std::size_t j = i + 1; j < inv.size(); ++j) {
      EXPECT_FALSE(inv[i].f1_hz == inv[j].f1_hz && inv[i].f2_hz == inv[j].f2_hz);
    }
  }
}

TEST(Synthetic, EditDistance) {
  const std::vector<int> a{1, 2, 3}, b{1, 3}, c{4, 5, 6}, empty;
  EXPECT_EQ(edit_distance(a, a), 0);
  EXPECT_EQ(edit_distance(a, b), 1);
  EXPECT_EQ(edit_distance(a, c), 3);
  EXPECT_EQ(edit_distance(a, empty), 3);
  EXPECT_EQ(edit_distance(empty, empty), 0);
}

TEST(Synthetic, PhraseGenerators) {
  Rng rng(503);
  for (int trial = 0; trial < 200; ++trial) {
    const auto target = random_phrase(rng, 4 + trial % 3);
    for (std::size_t i = 1; i < target.size(); ++i) EXPECT_NE(target[i], target[i - 1]);
    const auto conf = confusable_phrase(rng, target);
    EXPECT_GE(edit_distance(conf, target), 1);
    EXPECT_LE(edit_distance(conf, target), 2);
    const auto other = unrelated_phrase(rng, target);
    EXPECT_GE(edit_distance(other, target), static_cast<int>(target.size()));
  }
}

TEST(Synthetic, SameSeedSameEpisodes) {
  const auto a = generate_synthetic_episodes(91, 2);
  const auto b = generate_synthetic_episodes(91, 2);
  const auto c = generate_synthetic_episodes(92, 2);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].target, b[i].target);
    for (int s = 0; s < 3; ++s) EXPECT_EQ(a[i].support[s].audio.samples, b[i].support[s].audio.samples);
    for (std::size_t t = 0; t < a[i].tests.size(); ++t) {
      EXPECT_EQ(a[i].tests[t].recording.audio.samples, b[i].tests[t].recording.audio.samples);
    }
  }
  EXPECT_NE(a[0].support[0].audio.samples, c[0].support[0].audio.samples);
  // Episode i does not depend on how many episodes were requested.
  EXPECT_EQ(generate_synthetic_episodes(91, 1)[0].tests[3].recording.audio.samples,
            a[0].tests[3].recording.audio.samples);
}

TEST(Synthetic, EpisodeStructureAndTags) {
  const SyntheticConfig cfg;
  for (const auto& e : small_suite()) {
    EXPECT_NO_THROW(e.validate());
    const auto target = phones_of(e.target);
    ASSERT_EQ(static_cast<int>(e.tests.size()),
              cfg.positives + cfg.confusing + cfg.non_confusing_same + cfg.non_confusing_different);
    ASSERT_TRUE(e.support[0].speaker);
    const SpeakerProfile& enrolled = *e.support[0].speaker;
    for (const auto& s : e.support) {
      EXPECT_EQ(s.transcript, e.target);
      EXPECT_EQ(*s.speaker, enrolled);
    }
    int positives = 0, confusing = 0, same = 0, different = 0;
    for (const auto& t : e.tests) {
      const auto phones = phones_of(t.recording.transcript);
      ASSERT_TRUE(t.recording.speaker);
      const bool same_speaker = *t.recording.speaker == enrolled;
      EXPECT_EQ(same_speaker, t.speaker == SpeakerMatch::kSame);
      if (t.polarity == Polarity::kPositive) {
        ++positives;
        EXPECT_EQ(phones, target);
      } else if (t.tag == NegativeTag::kConfusing) {
        ++confusing;
        EXPECT_LE(edit_distance(phones, target), 2);
        EXPECT_GE(edit_distance(phones, target), 1);
      } else {
        ++(same_speaker ? same : different);
        EXPECT_GE(edit_distance(phones, target), static_cast<int>(target.size()));
      }
    }
    EXPECT_EQ(positives, cfg.positives);
    EXPECT_EQ(confusing, cfg.confusing);
    EXPECT_EQ(same, cfg.non_confusing_same);
    EXPECT_EQ(different, cfg.non_confusing_different);
  }
}

TEST(Synthetic, RenderedAudioIsSpeechLike) {
  Rng rng(504);
  const SpeakerProfile spk = random_speaker(rng, 0);
  const std::vector<int> phones{0, 5, 11, 3};
  const RenderedPhrase r = render_phrase(phones, spk, SyntheticConfig{}, rng);
  ASSERT_EQ(r.phone_spans.size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_LE(r.phone_spans[i - 1].second, r.phone_spans[i].second);
  const auto extent = speech_extent(VadConfig{}, r.audio);
  ASSERT_TRUE(extent);
  // The VAD finds the phrase and not the surrounding noise floor.
  const double start_s = extent->start * 0.01, end_s = extent->end * 0.01;
  EXPECT_NEAR(start_s, r.phone_spans.front().first / 16000.0, 0.05);
  EXPECT_NEAR(end_s, r.phone_spans.back().second / 16000.0, 0.3);
}

TEST(Synthetic, OracleDecodesCleanPhrases) {
  // The oracle should mostly recover what was rendered.
  Rng rng(505);
  int errors = 0, length = 0;
  for (int u = 0; u < 20; ++u) {
    const SpeakerProfile spk = random_speaker(rng, u);
    const auto phones = random_phrase(rng, 5);
    const auto r = render_phrase(phones, spk, SyntheticConfig{}, rng);
    const Posteriorgram post = run(oracle(), stack_frames(extract_fbank(r.audio)));
    std::vector<int> decoded;
    for (int l : greedy_decode(post)) decoded.push_back(l - 1);
    errors += edit_distance(decoded, phones);
    length += 5;
  }
  EXPECT_LT(static_cast<double>(errors) / length, 0.35);
}

TEST(Synthetic, ConfigValidation) {
  SyntheticConfig c;
  c.min_phones = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.positives = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_THROW(generate_synthetic_episodes(1, -1), Error);
}

TEST(Manifest, WriteReadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "kws_manifest_test";
  std::filesystem::remove_all(dir);
  const auto& episodes = small_suite();
  const std::string manifest = write_episodes(dir.string(), {episodes[0], episodes[1]});
  const auto back = read_manifest(manifest);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].id, episodes[i].id);
    EXPECT_EQ(back[i].target, episodes[i].target);
    ASSERT_EQ(back[i].tests.size(), episodes[i].tests.size());
    for (int s = 0; s < 3; ++s) {
      EXPECT_EQ(back[i].support[s].audio.samples, episodes[i].support[s].audio.samples);
    }
    for (std::size_t t = 0; t < back[i].tests.size(); ++t) {
      EXPECT_EQ(back[i].tests[t].polarity, episodes[i].tests[t].polarity);
      EXPECT_EQ(back[i].tests[t].tag, episodes[i].tests[t].tag);
      EXPECT_EQ(back[i].tests[t].speaker, episodes[i].tests[t].speaker);
      EXPECT_EQ(back[i].tests[t].recording.audio.samples,
                episodes[i].tests[t].recording.audio.samples);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(Manifest, SyntaxErrorsNameTheLine) {
  const auto dir = std::filesystem::temp_directory_path() / "kws_manifest_bad";
  std::filesystem::create_directories(dir);
  const auto path = dir / "manifest.txt";
  AudioBuffer tiny;
  tiny.samples.assign(1600, 100);
  write_wav((dir / "x.wav").string(), tiny);
  write_wav((dir / "t.wav").string(), tiny);
  auto expect_parse_error = [&](const std::string& text, const std::string& where) {
    std::ofstream(path) << text;
    try {
      read_manifest(path.string());
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
    }
  };
  expect_parse_error("episode a\nsupport x.wav\nbogus line\n", ":3");
  expect_parse_error("# only a comment\nsupport x.wav\n", ":2");
  expect_parse_error("episode a\ntest t.wav maybe confusing same\nend\n", ":2");
  expect_parse_error("episode a\nsupport x.wav\nsupport x.wav\ntest t.wav positive non_confusing same\nend\n", ":5");
  std::filesystem::remove_all(dir);
}

TEST(Harness, ZeroEpisodesIsAnError) {
  EXPECT_THROW(run_harness(DetectorKind::kDonut, {}, oracle(), HarnessParams{}), Error);
}

TEST(Harness, ParamsValidation) {
  HarnessParams p;
  p.nbest = 101;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.beam = 0;
  EXPECT_THROW(p.validate(), Error);
  EXPECT_EQ(parse_detector_kind("dtw_post"), DetectorKind::kDtwPost);
  EXPECT_THROW(parse_detector_kind("hmm"), Error);
}

TEST(Harness, DeterministicAndParallelMatchesSerial) {
  const HarnessParams params;
  const auto prepared = prepare_episodes(small_suite(), oracle(), params);
  for (auto kind : {DetectorKind::kDonut, DetectorKind::kDonutLogSumExp,
                    DetectorKind::kQueryByString, DetectorKind::kDtwFbank,
                    DetectorKind::kDtwPost}) {
    const HarnessReport a = evaluate(kind, prepared, params);
    const HarnessReport b = reference::evaluate(kind, prepared, params);
    const HarnessReport c = run_harness(kind, small_suite(), oracle(), params);
    EXPECT_EQ(a.skipped, 0u);
    EXPECT_EQ(a.overall.eer, b.overall.eer);
    EXPECT_EQ(a.overall.auc, b.overall.auc);
    EXPECT_EQ(a.overall.eer, c.overall.eer);
    ASSERT_EQ(a.episodes.size(), b.episodes.size());
    for (std::size_t i = 0; i < a.episodes.size(); ++i) {
      EXPECT_EQ(a.episodes[i].scores, b.episodes[i].scores);
    }
    EXPECT_EQ(a.splits.size(), 3u);
    for (const auto& s : a.splits) {
      ASSERT_TRUE(s.metrics) << s.name;
      EXPECT_EQ(s.metrics->positives, 16u);
    }
  }
}

TEST(Harness, PoolsScoresExactlyAsComputedPerEpisode) {
  const HarnessParams params;
  const auto prepared = prepare_episodes(small_suite(), oracle(), params);
  const HarnessReport r = evaluate(DetectorKind::kDonut, prepared, params);
  std::vector<ScoredTrial> pooled, confusing;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    std::vector<Posteriorgram> posts;
    for (const auto& s : prepared[i].support) posts.push_back(s.post);
    const WakewordModel m = learn(posts, 100, 10).model;
    const auto& tests = small_suite()[i].tests;
    for (std::size_t t = 0; t < tests.size(); ++t) {
      const double s = score(m, prepared[i].tests[t].post);
      EXPECT_EQ(s, r.episodes[i].scores[t]);
      pooled.push_back({s, tests[t].polarity});
      if (tests[t].polarity == Polarity::kPositive || tests[t].tag == NegativeTag::kConfusing) {
        confusing.push_back({s, tests[t].polarity});
      }
    }
  }
  EXPECT_EQ(r.overall.eer, compute_roc(pooled).eer);
  EXPECT_EQ(r.overall.auc, compute_roc(pooled).auc);
  EXPECT_EQ(r.split("confusing").eer, compute_roc(confusing).eer);
}

TEST(Harness, ReportFormat) {
  const HarnessReport r = run_harness(DetectorKind::kDtwFbank, small_suite(), oracle(), {});
  std::ostringstream out;
  write_report(out, r);
  const std::string text = out.str();
  EXPECT_EQ(text.rfind("detector dtw_fbank\nepisodes 4\nskipped 0\n", 0), 0u) << text;
  for (const char* split : {"split all ", "split confusing ", "split non_confusing_same ",
                            "split non_confusing_different "}) {
    EXPECT_NE(text.find(split), std::string::npos) << split;
  }
}

}  // namespace
}  // namespace kws
