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

#include "kws/synthetic.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>

#include <Eigen/Dense>

#include "kws/common.h"
#include "kws/ctc.h"
#include "kws/features.h"

namespace kws {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxHarmonicHz = 4500.0;
constexpr double kF2Gain = 0.7;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::size_t ms_to_samples(double ms) {
  return static_cast<std::size_t>(std::lround(ms * kSampleRate / 1000.0));
}

double formant_bandwidth(double f) { return 70.0 + 0.04 * f; }

// Harmonic amplitudes for one steady phone, unit total power.
struct Channel {
  double tilt = 0.0;
  double ripple_db = 0.0;
  double ripple_period_mel = 1000.0;
  double ripple_phase = 0.0;
  double gain(double f) const {
    const double mel = 1127.0 * std::log1p(f / 700.0);
    const double db =
        ripple_db * std::sin(kTwoPi * mel / ripple_period_mel + ripple_phase);
    return std::pow(f / 1000.0, tilt) * std::pow(10.0, db / 20.0);
  }
};

std::vector<std::pair<int, double>> harmonic_amplitudes(double f0, double f1,
                                                        double f2,
                                                        const Channel& channel) {
  std::vector<std::pair<int, double>> out;
  double power = 0.0;
  for (int k = 1; k * f0 < kMaxHarmonicHz; ++k) {
    const double f = k * f0;
    const double b1 = formant_bandwidth(f1), b2 = formant_bandwidth(f2);
    double g = std::exp(-(f - f1) * (f - f1) / (2.0 * b1 * b1)) +
               kF2Gain * std::exp(-(f - f2) * (f - f2) / (2.0 * b2 * b2));
    if (g < 1e-3) continue;
    g *= channel.gain(f);
    out.emplace_back(k, g);
    power += g * g;
  }
  const double norm = power > 0.0 ? 1.0 / std::sqrt(power) : 0.0;
  for (auto& [k, a] : out) a *= norm;
  return out;
}

}  // namespace

const std::vector<Phone>& phone_inventory() {
  static const std::vector<Phone> inventory = {
      {"UW", 300, 1100}, {"UH", 300, 1600}, {"IH", 300, 2200}, {"IY", 300, 2900},
      {"OW", 500, 1100}, {"ER", 500, 1600}, {"EH", 500, 2200}, {"EY", 500, 2900},
      {"AA", 750, 1100}, {"AH", 750, 1600}, {"AE", 750, 2200}, {"AY", 750, 2900},
  };
  return inventory;
}

LabelAlphabet synthetic_alphabet() {
  std::vector<std::string> names;
  for (const auto& p : phone_inventory()) names.push_back(p.name);
  return LabelAlphabet(std::move(names));
}

void SyntheticConfig::validate() const {
  const int inventory = static_cast<int>(phone_inventory().size());
  if (min_phones < 2 || max_phones < min_phones || 2 * max_phones > inventory) {
    throw Error(ErrorCode::kInvalidArgument,
                "phrase length range must satisfy 2 <= min <= max <= inventory / 2");
  }
  if (!(phone_ms > 2.0 * crossfade_ms) || crossfade_ms <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "phone must outlast its crossfades");
  }
  if (formant_scale_range < 0.0 || formant_scale_range >= 0.5 || accent < 0.0 ||
      accent >= 0.5) {
    throw Error(ErrorCode::kInvalidArgument, "speaker formant range out of bounds");
  }
  if (duration_jitter < 0.0 || duration_jitter >= 0.5 || f0_jitter < 0.0 ||
      formant_jitter < 0.0 || level_jitter_db < 0.0 || tilt_jitter < 0.0 ||
      channel_db < 0.0 || noise_jitter_db < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "jitter out of range");
  }
  if (silence_min_ms < 0.0 || silence_max_ms < silence_min_ms) {
    throw Error(ErrorCode::kInvalidArgument, "bad silence range");
  }
  if (positives < 1 || confusing < 0 || non_confusing_same < 0 ||
      non_confusing_different < 0 ||
      confusing + non_confusing_same + non_confusing_different < 1) {
    throw Error(ErrorCode::kInvalidArgument, "episode needs positives and negatives");
  }
}

SpeakerProfile random_speaker(Rng& rng, int id, const SyntheticConfig& config) {
  SpeakerProfile s;
  s.id = id;
  s.f0_hz = uniform(rng, 100.0, 220.0);
  s.formant_scale = 1.0 + uniform(rng, -config.formant_scale_range,
                                  config.formant_scale_range);
  s.rate = uniform(rng, 0.8, 1.25);
  s.level_db = uniform(rng, -26.0, -16.0);
  if (config.accent > 0.0) {
    for (std::size_t i = 0; i < 2 * phone_inventory().size(); ++i) {
      s.accent.push_back(uniform(rng, -config.accent, config.accent));
    }
  }
  return s;
}

RenderedPhrase render_phrase(std::span<const int> phones,
                             const SpeakerProfile& speaker,
                             const SyntheticConfig& config, Rng& rng) {
  const auto& inventory = phone_inventory();
  for (int p : phones) {
    if (p < 0 || p >= static_cast<int>(inventory.size())) {
      throw Error(ErrorCode::kInvalidArgument, "phone index out of range");
    }
  }
  const double level_db =
      speaker.level_db + uniform(rng, -config.level_jitter_db, config.level_jitter_db);
  Channel channel;
  channel.tilt = uniform(rng, -config.tilt_jitter, config.tilt_jitter);
  channel.ripple_db = uniform(rng, 0.0, config.channel_db);
  channel.ripple_period_mel = uniform(rng, 600.0, 1600.0);
  channel.ripple_phase = uniform(rng, 0.0, kTwoPi);
  const double noise_db = config.noise_dbfs - uniform(rng, 0.0, config.noise_jitter_db);
  const std::size_t lead =
      ms_to_samples(uniform(rng, config.silence_min_ms, config.silence_max_ms));
  const std::size_t trail =
      ms_to_samples(uniform(rng, config.silence_min_ms, config.silence_max_ms));
  const std::size_t fade = ms_to_samples(config.crossfade_ms);

  RenderedPhrase out;
  std::vector<std::size_t> bounds = {lead};
  for (std::size_t i = 0; i < phones.size(); ++i) {
    const double ms = config.phone_ms / speaker.rate *
                      (1.0 + uniform(rng, -config.duration_jitter, config.duration_jitter));
    bounds.push_back(bounds.back() + ms_to_samples(ms));
  }
  const std::size_t total = bounds.back() + trail;
  std::vector<double> signal(total, 0.0);

  double phase = uniform(rng, 0.0, kTwoPi);
  for (std::size_t i = 0; i < phones.size(); ++i) {
    const Phone& ph = inventory[phones[i]];
    const double f0 = speaker.f0_hz * (1.0 + uniform(rng, -config.f0_jitter, config.f0_jitter));
    const double scale =
        speaker.formant_scale *
        (1.0 + uniform(rng, -config.formant_jitter, config.formant_jitter));
    const bool accented = speaker.accent.size() == 2 * inventory.size();
    const double f1 = ph.f1_hz * scale * (accented ? 1.0 + speaker.accent[2 * phones[i]] : 1.0);
    const double f2 =
        ph.f2_hz * scale * (accented ? 1.0 + speaker.accent[2 * phones[i] + 1] : 1.0);
    const auto amps = harmonic_amplitudes(f0, f1, f2, channel);
    const double omega = kTwoPi * f0 / kSampleRate;

    // The phone sounds over [start - fade/2, end + fade/2) with linear ramps
    // of length `fade` centred on its nominal boundaries.
    const std::size_t start = bounds[i], end = bounds[i + 1];
    const std::size_t from = start >= fade / 2 ? start - fade / 2 : 0;
    const std::size_t to = std::min(total, end + fade / 2);
    const double phase0 = phase - omega * static_cast<double>(start - from);
    for (const auto& [k, a] : amps) {
      std::complex<double> z = std::polar(1.0, k * phase0);
      const std::complex<double> rot = std::polar(1.0, k * omega);
      for (std::size_t n = from; n < to; ++n) {
        double ramp = 1.0;
        if (n < from + fade) ramp = static_cast<double>(n - from) / fade;
        if (n + fade >= to) ramp = std::min(ramp, static_cast<double>(to - n) / fade);
        signal[n] += a * ramp * z.imag();
        z *= rot;
      }
    }
    phase = std::fmod(phase + omega * static_cast<double>(end - start), kTwoPi);
    out.phone_spans.emplace_back(start + fade / 2, end - fade / 2);
  }

  // Each phone has unit power (amplitude sum of squares 1, i.e. RMS 1/sqrt 2).
  const double gain = std::pow(10.0, level_db / 20.0) * 32768.0 * std::sqrt(2.0);
  const double noise_rms = std::pow(10.0, noise_db / 20.0) * 32768.0;
  std::normal_distribution<double> noise(0.0, noise_rms);
  out.audio.samples.resize(total);
  for (std::size_t n = 0; n < total; ++n) {
    const double v = std::round(gain * signal[n] + noise(rng));
    out.audio.samples[n] = static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0));
  }
  return out;
}

std::vector<int> random_phrase(Rng& rng, int length) {
  const int n = static_cast<int>(phone_inventory().size());
  std::vector<int> phrase;
  while (static_cast<int>(phrase.size()) < length) {
    const int p = uniform_int(rng, 0, n - 1);
    if (!phrase.empty() && phrase.back() == p) continue;
    phrase.push_back(p);
  }
  return phrase;
}

std::vector<int> confusable_phrase(Rng& rng, std::span<const int> target) {
  const auto& inv = phone_inventory();
  const int n = static_cast<int>(inv.size());
  const int len = static_cast<int>(target.size());
  std::vector<int> out(target.begin(), target.end());
  const int changes = std::min(len, uniform_int(rng, 1, 2));
  std::vector<int> positions(len);
  for (int i = 0; i < len; ++i) positions[i] = i;
  std::shuffle(positions.begin(), positions.end(), rng);
  for (int c = 0; c < changes; ++c) {
    const int pos = positions[c];
    std::vector<int> options;
    for (int p = 0; p < n; ++p) {
      if (p == target[pos]) continue;
      const bool shares = inv[p].f1_hz == inv[target[pos]].f1_hz ||
                          inv[p].f2_hz == inv[target[pos]].f2_hz;
      if (!shares) continue;
      if (pos > 0 && out[pos - 1] == p) continue;
      if (pos + 1 < len && out[pos + 1] == p) continue;
      options.push_back(p);
    }
    out[pos] = options[uniform_int(rng, 0, static_cast<int>(options.size()) - 1)];
  }
  return out;
}

std::vector<int> unrelated_phrase(Rng& rng, std::span<const int> target) {
  const int n = static_cast<int>(phone_inventory().size());
  std::vector<int> pool;
  for (int p = 0; p < n; ++p) {
    if (std::find(target.begin(), target.end(), p) == target.end()) pool.push_back(p);
  }
  if (pool.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "target uses too many phones");
  }
  std::vector<int> out;
  while (out.size() < target.size()) {
    const int p = pool[uniform_int(rng, 0, static_cast<int>(pool.size()) - 1)];
    if (!out.empty() && out.back() == p) continue;
    out.push_back(p);
  }
  return out;
}

int edit_distance(std::span<const int> a, std::span<const int> b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

std::vector<std::string> names_of(std::span<const int> phones) {
  std::vector<std::string> names;
  for (int p : phones) names.push_back(phone_inventory()[p].name);
  return names;
}

Recording make_recording(std::span<const int> phones, const SpeakerProfile& speaker,
                         const SyntheticConfig& config, Rng& rng) {
  Recording r;
  r.audio = render_phrase(phones, speaker, config, rng).audio;
  r.transcript = names_of(phones);
  r.speaker = speaker;
  return r;
}

Episode make_episode(std::uint64_t seed, int index, const SyntheticConfig& config) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  Rng rng(seq);
  Episode e;
  char id[32];
  std::snprintf(id, sizeof(id), "ep%04d", index);
  e.id = id;

  const SpeakerProfile speaker = random_speaker(rng, 0, config);
  const auto target =
      random_phrase(rng, uniform_int(rng, config.min_phones, config.max_phones));
  e.target = names_of(target);
  for (auto& s : e.support) s = make_recording(target, speaker, config, rng);

  auto add = [&](std::span<const int> phones, const SpeakerProfile& spk,
                 Polarity pol, NegativeTag tag, SpeakerMatch match) {
    TestCase t;
    t.recording = make_recording(phones, spk, config, rng);
    t.polarity = pol;
    t.tag = tag;
    t.speaker = match;
    e.tests.push_back(std::move(t));
  };
  for (int i = 0; i < config.positives; ++i) {
    add(target, speaker, Polarity::kPositive, NegativeTag::kNonConfusing,
        SpeakerMatch::kSame);
  }
  for (int i = 0; i < config.confusing; ++i) {
    add(confusable_phrase(rng, target), speaker, Polarity::kNegative,
        NegativeTag::kConfusing, SpeakerMatch::kSame);
  }
  for (int i = 0; i < config.non_confusing_same; ++i) {
    add(unrelated_phrase(rng, target), speaker, Polarity::kNegative,
        NegativeTag::kNonConfusing, SpeakerMatch::kSame);
  }
  for (int i = 0; i < config.non_confusing_different; ++i) {
    const SpeakerProfile other = random_speaker(rng, i + 1, config);
    add(unrelated_phrase(rng, target), other, Polarity::kNegative,
        NegativeTag::kNonConfusing, SpeakerMatch::kDifferent);
  }
  return e;
}

}  // namespace

std::vector<Episode> generate_synthetic_episodes(std::uint64_t seed, int count,
                                                 const SyntheticConfig& config) {
  config.validate();
  if (count < 0) throw Error(ErrorCode::kInvalidArgument, "negative episode count");
  std::vector<Episode> episodes(count);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) episodes[i] = make_episode(seed, i, config);
  return episodes;
}

namespace {

struct CalibrationPhrase {
  FeatureSequence stacked;
  LabelSequence labels;
  // Per stacked frame: class (0 background, j > 0 phone j - 1) when the
  // frame centre lies well inside a phone or inside the outer silence, -1
  // near boundaries.
  std::vector<int> frame_class;
};

std::vector<CalibrationPhrase> calibration_phrases(const SyntheticConfig& config,
                                                   std::uint64_t seed, int count) {
  Rng rng(seed);
  std::vector<CalibrationPhrase> phrases;
  const std::size_t margin = 2 * kHopSamples;
  for (int u = 0; u < count; ++u) {
    const SpeakerProfile spk = random_speaker(rng, u, config);
    const auto phrase =
        random_phrase(rng, uniform_int(rng, config.min_phones, config.max_phones));
    const auto r = render_phrase(phrase, spk, config, rng);
    CalibrationPhrase c{stack_frames(extract_fbank(r.audio)), {}, {}};
    for (int p : phrase) c.labels.push_back(p + 1);
    for (std::size_t t = 0; t < c.stacked.num_frames(); ++t) {
      const std::size_t centre =
          2 * kHopSamples * t + (kHopSamples + kWindowSamples) / 2;
      int label = -1;
      if (centre + 3 * margin < r.phone_spans.front().first ||
          centre > r.phone_spans.back().second + 3 * margin) {
        label = 0;
      }
      for (std::size_t i = 0; i < phrase.size(); ++i) {
        const auto [s, e] = r.phone_spans[i];
        if (centre >= s + margin && centre + margin <= e) label = phrase[i] + 1;
      }
      c.frame_class.push_back(label);
    }
    phrases.push_back(std::move(c));
  }
  return phrases;
}

Eigen::VectorXd pair_mean(std::span<const double> stacked) {
  Eigen::VectorXd z(kNumMelBins);
  for (int b = 0; b < kNumMelBins; ++b) {
    z[b] = 0.5 * (stacked[b] + stacked[kNumMelBins + b]);
  }
  return z;
}

// Linear discriminant with a pooled within-class covariance: returns, per
// class, the weight vector Sigma^-1 mu_j and offset -mu_j' Sigma^-1 mu_j / 2.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> fit_discriminant(
    const std::vector<CalibrationPhrase>& phrases, int num_classes) {
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(kNumMelBins, num_classes);
  std::vector<int> counts(num_classes, 0);
  for (const auto& c : phrases) {
    for (std::size_t t = 0; t < c.stacked.num_frames(); ++t) {
      const int y = c.frame_class[t];
      if (y < 0) continue;
      means.col(y) += pair_mean(c.stacked.row(t));
      ++counts[y];
    }
  }
  for (int j = 0; j < num_classes; ++j) {
    if (counts[j] == 0) {
      throw Error(ErrorCode::kInvariant, "calibration set misses a class");
    }
    means.col(j) /= counts[j];
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(kNumMelBins, kNumMelBins);
  int n = 0;
  for (const auto& c : phrases) {
    for (std::size_t t = 0; t < c.stacked.num_frames(); ++t) {
      const int y = c.frame_class[t];
      if (y < 0) continue;
      const Eigen::VectorXd d = pair_mean(c.stacked.row(t)) - means.col(y);
      cov += d * d.transpose();
      ++n;
    }
  }
  cov /= static_cast<double>(n - num_classes);
  cov.diagonal().array() += 1e-3 * cov.diagonal().mean();
  const Eigen::MatrixXd w = cov.ldlt().solve(means);
  Eigen::VectorXd offset(num_classes);
  for (int j = 0; j < num_classes; ++j) offset[j] = -0.5 * means.col(j).dot(w.col(j));
  return {w, offset};
}

}  // namespace

GruWeights build_oracle_label_model(const SyntheticConfig& config) {
  config.validate();
  const LabelAlphabet alphabet = synthetic_alphabet();
  const int k = alphabet.size();
  const auto fit_set = calibration_phrases(config, 0x1da5eedULL, 300);
  const auto calib_set = calibration_phrases(config, 0xca1b4a7eULL, 60);
  const auto [disc_w, disc_b] = fit_discriminant(fit_set, k);

  // Hidden unit j holds tanh(scale * discriminant_j(frame pair mean)); the
  // scale keeps calibration frames inside tanh's range.
  double max_abs = 0.0;
  for (const auto& c : calib_set) {
    for (std::size_t t = 0; t < c.stacked.num_frames(); ++t) {
      const Eigen::VectorXd g = disc_w.transpose() * pair_mean(c.stacked.row(t)) + disc_b;
      max_abs = std::max(max_abs, g.cwiseAbs().maxCoeff());
    }
  }
  const double scale = 1.0 / max_abs;

  GruWeights w = make_zero_weights(1, k, kStackedDim, alphabet);
  GruLayer& layer = w.layers.front();
  for (int j = 0; j < k; ++j) {
    const int n_row = 2 * k + j;
    for (int b = 0; b < kNumMelBins; ++b) {
      const double v = static_cast<float>(0.5 * scale * disc_w(b, j));
      layer.w_ih[n_row * kStackedDim + b] = v;
      layer.w_ih[n_row * kStackedDim + kNumMelBins + b] = v;
    }
    layer.b_ih[n_row] = static_cast<float>(scale * disc_b[j]);
    layer.b_ih[j] = -30.0;  // update gate closed: h_t depends on x_t only
  }

  std::vector<std::vector<double>> act;
  for (const auto& c : calib_set) {
    GruState state = initial_state(w);
    for (std::size_t t = 0; t < c.stacked.num_frames(); ++t) {
      run_streaming(w, state, c.stacked.row(t));
      act.push_back(state.hidden.front());
    }
  }

  // Output gain and blank offset maximize the CTC likelihood of the held-out
  // calibration transcripts.
  auto likelihood = [&](double gain, double blank_bias) {
    double total = 0.0;
    std::size_t f = 0;
    std::vector<double> logits(k), probs(k);
    for (const auto& c : calib_set) {
      Posteriorgram post(alphabet);
      for (std::size_t t = 0; t < c.stacked.num_frames(); ++t, ++f) {
        for (int j = 0; j < k; ++j) {
          logits[j] = gain * act[f][j] + (j == kBlankIndex ? blank_bias : 0.0);
        }
        const double mx = *std::max_element(logits.begin(), logits.end());
        double norm = 0.0;
        for (int j = 0; j < k; ++j) norm += probs[j] = std::exp(logits[j] - mx);
        for (auto& p : probs) p /= norm;
        post.append_row(probs);
      }
      total += forward_logprob(post, c.labels);
    }
    return total;
  };
  double best_gain = 1.0, best_bias = 0.0, best_ll = kLogZero;
  for (double gain = 1.0; gain <= 1024.0; gain *= 1.25) {
    for (double bias = -4.0; bias <= 8.0; bias += 0.5) {
      const double ll = likelihood(gain, bias);
      if (ll > best_ll) {
        best_ll = ll;
        best_gain = gain;
        best_bias = bias;
      }
    }
  }

  for (int j = 0; j < k; ++j) w.w_out[j * k + j] = static_cast<float>(best_gain);
  w.b_out[kBlankIndex] = best_bias;
  w.validate();
  return w;
}

}  // namespace kws
