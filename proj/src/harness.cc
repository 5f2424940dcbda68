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

#include "kws/harness.h"

#include <iomanip>

#include "kws/common.h"
#include "kws/features.h"
#include "kws/wakeword.h"

namespace kws {

const char* to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kDonut: return "donut";
    case DetectorKind::kDonutLogSumExp: return "donut_logsumexp";
    case DetectorKind::kQueryByString: return "query_by_string";
    case DetectorKind::kDtwFbank: return "dtw_fbank";
    case DetectorKind::kDtwPost: return "dtw_post";
  }
  return "?";
}

DetectorKind parse_detector_kind(const std::string& name) {
  for (auto k : {DetectorKind::kDonut, DetectorKind::kDonutLogSumExp,
                 DetectorKind::kQueryByString, DetectorKind::kDtwFbank,
                 DetectorKind::kDtwPost}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown detector '" + name + "'");
}

void HarnessParams::validate() const {
  if (beam < 1 || nbest < 1 || nbest > beam) {
    throw Error(ErrorCode::kInvalidArgument, "need 1 <= nbest <= beam");
  }
  vad.validate();
  dtw.validate();
}

const RocMetrics& HarnessReport::split(const std::string& name) const {
  for (const auto& s : splits) {
    if (s.name == name && s.metrics) return *s.metrics;
  }
  throw Error(ErrorCode::kInvalidArgument, "no metrics for split '" + name + "'");
}

PreparedRecording prepare_recording(const AudioBuffer& audio,
                                    const GruWeights& weights,
                                    const HarnessParams& params) {
  PreparedRecording r;
  r.fbank = extract_fbank(audio);
  if (params.trim) {
    const auto extent = speech_extent(params.vad, audio);
    if (extent && extent->length() >= 2) {
      r.fbank = r.fbank.slice(extent->start, std::min(extent->end, r.fbank.num_frames()));
    }
  }
  r.post = run(weights, stack_frames(r.fbank));
  return r;
}

std::vector<PreparedEpisode> prepare_episodes(const std::vector<Episode>& episodes,
                                              const GruWeights& weights,
                                              const HarnessParams& params) {
  params.validate();
  std::vector<PreparedEpisode> out(episodes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const Episode& e = episodes[i];
    out[i].episode = &e;
    for (std::size_t s = 0; s < 3; ++s) {
      out[i].support[s] = prepare_recording(e.support[s].audio, weights, params);
    }
    for (const auto& t : e.tests) {
      out[i].tests.push_back(prepare_recording(t.recording.audio, weights, params));
    }
  }
  return out;
}

namespace {

EpisodeReport score_episode(DetectorKind detector, const PreparedEpisode& pe,
                            const HarnessParams& params) {
  EpisodeReport report;
  report.id = pe.episode->id;
  try {
    switch (detector) {
      case DetectorKind::kDonut:
      case DetectorKind::kDonutLogSumExp:
      case DetectorKind::kQueryByString: {
        WakewordModel model;
        if (detector == DetectorKind::kQueryByString) {
          const LabelAlphabet& alphabet = pe.support[0].post.alphabet();
          LabelSequence target;
          for (const auto& symbol : pe.episode->target) {
            const int idx = alphabet.index_of(symbol);
            if (idx < 0) throw Error(ErrorCode::kInvalidArgument, "unknown label " + symbol);
            target.push_back(idx);
          }
          if (target.empty()) throw Error(ErrorCode::kInvalidArgument, "no target transcript");
          model = model_from_sequence(target, alphabet);
        } else {
          std::vector<Posteriorgram> posts;
          for (const auto& s : pe.support) posts.push_back(s.post);
          model = learn(posts, params.beam, params.nbest).model;
        }
        const Aggregation agg = detector == DetectorKind::kDonutLogSumExp
                                    ? Aggregation::kLogSumExpPrior
                                    : Aggregation::kWeightedSum;
        for (const auto& t : pe.tests) report.scores.push_back(score_with(model, t.post, agg));
        break;
      }
      case DetectorKind::kDtwFbank: {
        DtwConfig config = params.dtw;
        config.space = FeatureSpace::kFbank;
        std::vector<FeatureSequence> supports;
        for (const auto& s : pe.support) supports.push_back(s.fbank);
        for (const auto& t : pe.tests) {
          report.scores.push_back(dtw_detect(supports, t.fbank, config));
        }
        break;
      }
      case DetectorKind::kDtwPost: {
        DtwConfig config = params.dtw;
        config.space = FeatureSpace::kPosteriorgram;
        std::vector<Posteriorgram> supports;
        for (const auto& s : pe.support) supports.push_back(s.post);
        for (const auto& t : pe.tests) {
          report.scores.push_back(dtw_detect(supports, t.post, config));
        }
        break;
      }
    }
  } catch (const Error& e) {
    report.skipped = true;
    report.reason = e.what();
    report.scores.clear();
  }
  return report;
}

HarnessReport pool(DetectorKind detector, const std::vector<PreparedEpisode>& episodes,
                   std::vector<EpisodeReport> reports) {
  HarnessReport out;
  out.detector = detector;
  std::vector<ScoredTrial> all, positives;
  std::vector<ScoredTrial> by_kind[3];  // confusing, non-confusing same, different
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    if (reports[i].skipped) {
      ++out.skipped;
      continue;
    }
    const auto& tests = episodes[i].episode->tests;
    for (std::size_t t = 0; t < tests.size(); ++t) {
      const ScoredTrial trial{reports[i].scores[t], tests[t].polarity};
      all.push_back(trial);
      if (trial.polarity == Polarity::kPositive) {
        positives.push_back(trial);
      } else if (tests[t].tag == NegativeTag::kConfusing) {
        by_kind[0].push_back(trial);
      } else {
        by_kind[tests[t].speaker == SpeakerMatch::kSame ? 1 : 2].push_back(trial);
      }
    }
  }
  out.episodes = std::move(reports);
  if (out.skipped == episodes.size()) {
    throw Error(ErrorCode::kInvalidArgument, "every episode was skipped");
  }
  out.overall = compute_roc(all);
  const char* names[3] = {"confusing", "non_confusing_same", "non_confusing_different"};
  for (int k = 0; k < 3; ++k) {
    SplitReport split{names[k], std::nullopt};
    if (!by_kind[k].empty() && !positives.empty()) {
      std::vector<ScoredTrial> trials = positives;
      trials.insert(trials.end(), by_kind[k].begin(), by_kind[k].end());
      split.metrics = compute_roc(trials);
    }
    out.splits.push_back(std::move(split));
  }
  return out;
}

void require_episodes(const std::vector<PreparedEpisode>& episodes,
                      const HarnessParams& params) {
  if (episodes.empty()) throw Error(ErrorCode::kInvalidArgument, "no episodes");
  params.validate();
}

}  // namespace

HarnessReport evaluate(DetectorKind detector,
                       const std::vector<PreparedEpisode>& episodes,
                       const HarnessParams& params) {
  require_episodes(episodes, params);
  std::vector<EpisodeReport> reports(episodes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    reports[i] = score_episode(detector, episodes[i], params);
  }
  return pool(detector, episodes, std::move(reports));
}

namespace reference {

HarnessReport evaluate(DetectorKind detector,
                       const std::vector<PreparedEpisode>& episodes,
                       const HarnessParams& params) {
  require_episodes(episodes, params);
  std::vector<EpisodeReport> reports;
  for (const auto& e : episodes) reports.push_back(score_episode(detector, e, params));
  return pool(detector, episodes, std::move(reports));
}

}  // namespace reference

HarnessReport run_harness(DetectorKind detector, const std::vector<Episode>& episodes,
                          const GruWeights& weights, const HarnessParams& params) {
  if (episodes.empty()) throw Error(ErrorCode::kInvalidArgument, "no episodes");
  return evaluate(detector, prepare_episodes(episodes, weights, params), params);
}

namespace {

void write_metrics(std::ostream& out, const std::string& name, const RocMetrics& m) {
  out << "split " << name << " eer " << m.eer << " auc " << m.auc << " positives "
      << m.positives << " negatives " << m.negatives << " eer_threshold "
      << m.eer_threshold << "\n";
}

}  // namespace

void write_report(std::ostream& out, const HarnessReport& report) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(10);
  out << "detector " << to_string(report.detector) << "\n";
  out << "episodes " << report.episodes.size() << "\n";
  out << "skipped " << report.skipped << "\n";
  write_metrics(out, "all", report.overall);
  for (const auto& s : report.splits) {
    if (s.metrics) write_metrics(out, s.name, *s.metrics);
  }
  for (const auto& e : report.episodes) {
    if (e.skipped) out << "episode " << e.id << " skipped " << e.reason << "\n";
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace kws
