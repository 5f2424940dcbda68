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

#include "kws/cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>

#include "CLI11.hpp"
#include "kws/common.h"
#include "kws/detector.h"
#include "kws/dtw.h"
#include "kws/features.h"
#include "kws/harness.h"
#include "kws/synthetic.h"
#include "kws/wakeword.h"

namespace kws::cli {

namespace {

// Flag combinations that parse but make no sense.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VadFlags {
  double threshold_db = VadConfig{}.energy_threshold_db;
  int hangover = VadConfig{}.hangover_frames;
  int min_speech = VadConfig{}.min_speech_frames;

  void attach(CLI::App* cmd) {
    cmd->add_option("--vad-threshold-db", threshold_db, "Speech energy threshold (dBFS)")
        ->capture_default_str();
    cmd->add_option("--vad-hangover", hangover, "Frames kept after the last loud frame")
        ->capture_default_str();
    cmd->add_option("--vad-min-speech", min_speech, "Shortest scored segment (frames)")
        ->capture_default_str();
  }
  VadConfig config() const {
    VadConfig c{threshold_db, hangover, min_speech};
    try {
      c.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

struct SearchFlags {
  int beam = 100;
  int nbest = 10;
  void attach(CLI::App* cmd) {
    cmd->add_option("--beam,-B", beam, "Beam width")->capture_default_str();
    cmd->add_option("--nbest,-N", nbest, "Hypotheses kept per recording")
        ->capture_default_str();
  }
  void validate() const {
    if (beam < 1 || nbest < 1) throw UsageError("--beam and --nbest must be positive");
    if (nbest > beam) throw UsageError("--nbest must not exceed --beam");
  }
};

Aggregation parse_aggregation(const std::string& name) {
  if (name == "weighted" || name == "weighted-sum") return Aggregation::kWeightedSum;
  if (name == "logsumexp" || name == "logsumexp-prior") return Aggregation::kLogSumExpPrior;
  throw UsageError("unknown aggregation '" + name + "'");
}

HarnessParams front_end_params(const VadConfig& vad, bool trim) {
  HarnessParams p;
  p.vad = vad;
  p.trim = trim;
  return p;
}

std::string fmt_score(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

void print_hypotheses(std::ostream& out, const WakewordModel& model,
                      std::span<const double> log_probs) {
  for (std::size_t i = 0; i < model.hypotheses.size(); ++i) {
    const auto& h = model.hypotheses[i];
    out << "hyp\t" << i << '\t' << format_sequence(h.labels, model.alphabet)
        << "\tweight " << fmt_score(h.weight) << "\tlogp " << fmt_score(log_probs[i])
        << '\n';
  }
}

int exit_code_for(ErrorCode code) {
  return code == ErrorCode::kInvariant ? kExitInternal : kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Query-by-example wakeword enrollment, detection and evaluation", "kws"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  std::function<void()> action;

  // featurize
  std::string wav_in, out_path;
  bool stacked = false;
  auto* featurize = app.add_subcommand("featurize", "WAV to log-Mel filterbank features");
  featurize->add_option("wav", wav_in, "Input WAV")->required();
  featurize->add_option("-o,--output", out_path, "Feature file")->required();
  featurize->add_flag("--stacked", stacked, "Pair frames into 82-dim 50 Hz rows");
  featurize->callback([&] {
    action = [&] {
      FeatureSequence f = extract_fbank(read_wav(wav_in));
      if (stacked) f = stack_frames(f);
      save_features(out_path, f);
      out << "frames " << f.num_frames() << " dim " << f.dim() << '\n';
    };
  });

  // posteriors
  std::string weights_path;
  auto* posteriors = app.add_subcommand("posteriors", "WAV to label posteriorgram");
  posteriors->add_option("wav", wav_in, "Input WAV")->required();
  posteriors->add_option("--weights,-w", weights_path, "Label model weights")->required();
  posteriors->add_option("-o,--output", out_path, "Posteriorgram file")->required();
  posteriors->callback([&] {
    action = [&] {
      const GruWeights weights = load_weights(weights_path);
      const Posteriorgram post =
          kws::run(weights, stack_frames(extract_fbank(read_wav(wav_in))));
      save_posteriorgram(out_path, post);
      out << "frames " << post.num_frames() << " labels " << post.num_labels() << '\n';
      out << "greedy " << format_sequence(greedy_decode(post), post.alphabet()) << '\n';
    };
  });

  // enroll
  std::vector<std::string> wavs;
  SearchFlags search;
  VadFlags vad_flags;
  bool no_trim = false;
  std::optional<double> threshold;
  auto* enroll = app.add_subcommand("enroll", "Learn a wakeword model from three recordings");
  enroll->add_option("wavs", wavs, "Enrollment WAVs")->required()->expected(3);
  enroll->add_option("--weights,-w", weights_path, "Label model weights")->required();
  enroll->add_option("-o,--output", out_path, "Model file")->required();
  enroll->add_option("--threshold", threshold, "Detection threshold stored in the model");
  search.attach(enroll);
  vad_flags.attach(enroll);
  enroll->add_flag("--no-trim", no_trim, "Do not trim recordings to VAD speech");
  enroll->callback([&] {
    action = [&] {
      search.validate();
      if (threshold && !std::isfinite(*threshold)) throw UsageError("threshold must be finite");
      const GruWeights weights = load_weights(weights_path);
      const HarnessParams p = front_end_params(vad_flags.config(), !no_trim);
      std::vector<Posteriorgram> posts;
      for (const auto& w : wavs) posts.push_back(prepare_recording(read_wav(w), weights, p).post);
      LearnResult result = learn(posts, search.beam, search.nbest);
      result.model.threshold = threshold;
      for (const auto& warning : result.warnings) err << "warning: " << warning << '\n';
      for (const auto& h : result.model.hypotheses) {
        out << "example " << h.source << '\t' << format_sequence(h.labels, weights.alphabet)
            << "\tlogp " << fmt_score(h.enroll_log_prob) << "\tweight "
            << fmt_score(h.weight) << '\n';
      }
      save_model(out_path, result.model);
    };
  });

  // score
  std::string model_path, agg_name = "weighted";
  auto* score_cmd = app.add_subcommand("score", "Score one recording against a model");
  score_cmd->add_option("wav", wav_in, "Test WAV")->required();
  score_cmd->add_option("--model,-m", model_path, "Model file")->required();
  score_cmd->add_option("--weights,-w", weights_path, "Label model weights")->required();
  score_cmd->add_option("--agg", agg_name, "weighted | logsumexp")->capture_default_str();
  vad_flags.attach(score_cmd);
  score_cmd->add_flag("--no-trim", no_trim, "Do not trim the recording to VAD speech");
  score_cmd->callback([&] {
    action = [&] {
      const Aggregation agg = parse_aggregation(agg_name);
      const GruWeights weights = load_weights(weights_path);
      const WakewordModel model = load_model(model_path, weights.alphabet);
      const HarnessParams p = front_end_params(vad_flags.config(), !no_trim);
      const Posteriorgram post = prepare_recording(read_wav(wav_in), weights, p).post;
      const auto log_probs = hypothesis_log_probs(model, post);
      print_hypotheses(out, model, log_probs);
      const double s = aggregate(model, log_probs, agg);
      out << "score " << fmt_score(s) << '\n';
      if (model.threshold) out << "detected " << (s >= *model.threshold ? 1 : 0) << '\n';
    };
  });

  // listen
  auto* listen = app.add_subcommand("listen", "Stream a WAV through the detector");
  listen->add_option("wav", wav_in, "Audio stream (WAV)")->required();
  listen->add_option("--model,-m", model_path, "Model file")->required();
  listen->add_option("--weights,-w", weights_path, "Label model weights")->required();
  listen->add_option("--threshold", threshold, "Detection threshold (default: model's)");
  listen->add_option("--agg", agg_name, "weighted | logsumexp")->capture_default_str();
  vad_flags.attach(listen);
  listen->callback([&] {
    action = [&] {
      const Aggregation agg = parse_aggregation(agg_name);
      const GruWeights weights = load_weights(weights_path);
      const WakewordModel model = load_model(model_path, weights.alphabet);
      const std::optional<double> t = threshold ? threshold : model.threshold;
      if (!t || !std::isfinite(*t)) {
        throw UsageError("a finite --threshold is required (model has none)");
      }
      const AudioBuffer audio = read_wav(wav_in);
      StreamingDetector detector(model, weights, vad_flags.config(), *t, agg);
      auto emit = [&](const std::vector<DetectionEvent>& events) {
        for (const auto& e : events) {
          out << std::fixed << std::setprecision(2) << "detect\t" << e.start_seconds
              << '\t' << e.end_seconds << '\t' << std::defaultfloat
              << std::setprecision(10) << e.score << '\n';
        }
      };
      // Feed in 100 ms blocks, as an audio device would.
      const std::size_t block = 10 * kHopSamples;
      for (std::size_t i = 0; i < audio.samples.size(); i += block) {
        const std::size_t n = std::min(block, audio.samples.size() - i);
        emit(detector.push(std::span(audio.samples).subspan(i, n)));
      }
      emit(detector.finish());
      const StreamStats& st = detector.stats();
      out << "# frames " << st.frames << " speech_frames " << st.speech_frames
          << " segments " << st.segments << " label_model_invocations "
          << st.label_model_invocations << '\n';
    };
  });

  // baseline
  std::string space_name = "fbank", norm_name = "path", support_agg = "max";
  double lambda = 1e-5;
  std::vector<std::string> supports, tests;
  auto* baseline = app.add_subcommand("baseline", "DTW template-matching scores");
  baseline->add_option("--support", supports, "Template WAVs")->required()->expected(1, 3);
  baseline->add_option("tests", tests, "Test WAVs")->required();
  baseline->add_option("--space", space_name, "fbank | post")->capture_default_str();
  baseline->add_option("--lambda", lambda, "Posterior smoothing")->capture_default_str();
  baseline->add_option("--agg", support_agg, "max | mean over templates")
      ->capture_default_str();
  baseline->add_option("--norm", norm_name, "path | none")->capture_default_str();
  baseline->add_option("--weights,-w", weights_path, "Label model weights (for post)");
  vad_flags.attach(baseline);
  baseline->add_flag("--no-trim", no_trim, "Do not trim recordings to VAD speech");
  baseline->callback([&] {
    action = [&] {
      DtwConfig config;
      try {
        config.space = parse_feature_space(space_name);
        config.aggregation = parse_support_aggregation(support_agg);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      if (norm_name == "path") {
        config.normalization = DtwNormalization::kPathLength;
      } else if (norm_name == "none") {
        config.normalization = DtwNormalization::kNone;
      } else {
        throw UsageError("unknown normalization '" + norm_name + "'");
      }
      config.lambda = lambda;
      if (!(lambda > 0.0 && lambda < 1.0)) throw UsageError("--lambda must be in (0, 1)");
      const bool post = config.space == FeatureSpace::kPosteriorgram;
      if (post && weights_path.empty()) throw UsageError("--space post needs --weights");
      const GruWeights weights = post ? load_weights(weights_path)
                                      : make_zero_weights(1, 1, kStackedDim, LabelAlphabet({"x"}));
      const HarnessParams p = front_end_params(vad_flags.config(), !no_trim);
      std::vector<PreparedRecording> refs;
      for (const auto& s : supports) refs.push_back(prepare_recording(read_wav(s), weights, p));
      for (const auto& t : tests) {
        const PreparedRecording r = prepare_recording(read_wav(t), weights, p);
        double s;
        if (post) {
          std::vector<Posteriorgram> templates;
          for (const auto& ref : refs) templates.push_back(ref.post);
          s = dtw_detect(templates, r.post, config);
        } else {
          std::vector<FeatureSequence> templates;
          for (const auto& ref : refs) templates.push_back(ref.fbank);
          s = dtw_detect(templates, r.fbank, config);
        }
        out << t << '\t' << fmt_score(s) << '\n';
      }
    };
  });

  // eval
  std::string manifest_path, detector_name = "donut", roc_path;
  auto* eval = app.add_subcommand("eval", "Few-shot evaluation over an episode manifest");
  eval->add_option("manifest", manifest_path, "Episode manifest")->required();
  eval->add_option("--detector,-d", detector_name,
                   "donut | donut_logsumexp | query_by_string | dtw_fbank | dtw_post")
      ->capture_default_str();
  eval->add_option("--weights,-w", weights_path, "Label model weights")->required();
  eval->add_option("--roc", roc_path, "Write pooled ROC points here");
  eval->add_option("-o,--output", out_path, "Write the report here instead of stdout");
  eval->add_option("--lambda", lambda, "DTW posterior smoothing")->capture_default_str();
  eval->add_option("--norm", norm_name, "DTW normalization: path | none")
      ->capture_default_str();
  eval->add_option("--dtw-agg", support_agg, "DTW template aggregation: max | mean")
      ->capture_default_str();
  search.attach(eval);
  vad_flags.attach(eval);
  eval->add_flag("--no-trim", no_trim, "Do not trim recordings to VAD speech");
  eval->callback([&] {
    action = [&] {
      search.validate();
      DetectorKind kind;
      HarnessParams params = front_end_params(vad_flags.config(), !no_trim);
      try {
        kind = parse_detector_kind(detector_name);
        params.dtw.aggregation = parse_support_aggregation(support_agg);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      if (norm_name != "path" && norm_name != "none") {
        throw UsageError("unknown normalization '" + norm_name + "'");
      }
      params.dtw.normalization =
          norm_name == "path" ? DtwNormalization::kPathLength : DtwNormalization::kNone;
      params.dtw.lambda = lambda;
      params.beam = search.beam;
      params.nbest = search.nbest;
      try {
        params.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      const GruWeights weights = load_weights(weights_path);
      const auto episodes = read_manifest(manifest_path);
      const HarnessReport report = run_harness(kind, episodes, weights, params);
      if (out_path.empty()) {
        write_report(out, report);
      } else {
        std::ofstream f(out_path);
        write_report(f, report);
        if (!f) throw Error(ErrorCode::kIo, "cannot write " + out_path);
      }
      if (!roc_path.empty()) {
        std::ofstream f(roc_path);
        write_roc_points(f, report.overall);
        if (!f) throw Error(ErrorCode::kIo, "cannot write " + roc_path);
      }
    };
  });

  // gen-episodes
  std::uint64_t seed = 1;
  int count = 50;
  std::string out_dir, oracle_path;
  auto* gen = app.add_subcommand("gen-episodes", "Write a synthetic episode suite");
  gen->add_option("-o,--output", out_dir, "Output directory")->required();
  gen->add_option("--seed", seed, "Generator seed")->capture_default_str();
  gen->add_option("--count", count, "Number of episodes")->capture_default_str();
  gen->add_option("--oracle", oracle_path,
                  "Where to write the matching oracle label model (default <dir>/oracle.bin)");
  gen->callback([&] {
    action = [&] {
      if (count < 1) throw UsageError("--count must be positive");
      const SyntheticConfig config;
      const auto episodes = generate_synthetic_episodes(seed, count, config);
      const std::string manifest = write_episodes(out_dir, episodes);
      const std::string oracle = oracle_path.empty()
                                     ? (std::filesystem::path(out_dir) / "oracle.bin").string()
                                     : oracle_path;
      save_weights(oracle, build_oracle_label_model(config));
      out << "manifest " << manifest << '\n' << "weights " << oracle << '\n';
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << error_code_name(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace kws::cli
