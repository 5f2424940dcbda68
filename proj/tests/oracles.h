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

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library's algorithms; they enumerate or
// compute directly from definitions.

#ifndef KWS_TESTS_ORACLES_H_
#define KWS_TESTS_ORACLES_H_

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "kws/label_model.h"

namespace kws::testing {

inline LabelAlphabet letters_alphabet(int num_outputs) {
  std::vector<std::string> labels;
  for (int i = 1; i < num_outputs; ++i) labels.push_back(std::string(1, char('a' + i - 1)));
  return LabelAlphabet(labels);
}

// Rows drawn from a symmetric Dirichlet(alpha).
inline Posteriorgram random_posteriorgram(std::mt19937_64& rng, int frames, int outputs,
                                          double alpha = 1.0) {
  Posteriorgram post(letters_alphabet(outputs));
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> row(outputs);
  for (int t = 0; t < frames; ++t) {
    double sum = 0.0;
    for (auto& v : row) {
      v = gamma(rng) + 1e-12;
      sum += v;
    }
    for (auto& v : row) v /= sum;
    post.append_row(row);
  }
  return post;
}

// Blank is index 0: merge repeats, then drop blanks.
inline std::vector<int> collapse(const std::vector<int>& path) {
  std::vector<int> out;
  int prev = -1;
  for (int c : path) {
    if (c != 0 && c != prev) out.push_back(c);
    prev = c;
  }
  return out;
}

// Probability of every label sequence, by enumerating all K^T frame paths.
inline std::map<std::vector<int>, double> enumerate_sequences(const Posteriorgram& post) {
  const int k = post.num_labels();
  const int t_max = static_cast<int>(post.num_frames());
  std::map<std::vector<int>, double> out;
  std::vector<int> path(t_max, 0);
  while (true) {
    double p = 1.0;
    for (int t = 0; t < t_max; ++t) p *= post.row(t)[path[t]];
    out[collapse(path)] += p;
    int t = 0;
    while (t < t_max && ++path[t] == k) path[t++] = 0;
    if (t == t_max) break;
  }
  return out;
}

inline double brute_force_log_prob(const Posteriorgram& post, const std::vector<int>& labels) {
  const auto all = enumerate_sequences(post);
  const auto it = all.find(labels);
  return it == all.end() || it->second == 0.0 ? -std::numeric_limits<double>::infinity()
                                              : std::log(it->second);
}

// Minimum DTW cost over every monotone path from (0,0) to (n-1,m-1) with steps
// (1,0), (0,1), (1,1). Costs accumulate from the start of the path.
inline double exhaustive_dtw(const std::vector<std::vector<double>>& d) {
  const std::size_t n = d.size(), m = d[0].size();
  double best = std::numeric_limits<double>::infinity();
  auto walk = [&](auto&& self, std::size_t i, std::size_t j, double acc) -> void {
    acc += d[i][j];
    if (i == n - 1 && j == m - 1) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < n && j + 1 < m) self(self, i + 1, j + 1, acc);
    if (i + 1 < n) self(self, i + 1, j, acc);
    if (j + 1 < m) self(self, i, j + 1, acc);
  };
  walk(walk, 0, 0, 0.0);
  return best;
}

// -log of the inner product of the two posteriors after mixing each with the
// uniform distribution at weight lambda.
inline double smoothed_inner_product_distance(const std::vector<double>& p,
                                              const std::vector<double>& q, double lambda) {
  const double u = 1.0 / static_cast<double>(p.size());
  double dot = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    dot += (lambda * u + (1.0 - lambda) * p[k]) * (lambda * u + (1.0 - lambda) * q[k]);
  }
  return -std::log(dot);
}

// Probability that a random positive outscores a random negative, ties 1/2.
inline double mann_whitney_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0.0;
  for (double p : pos) {
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

// Textbook GRU cell with gates ordered (update, reset, candidate) and the
// reset gate applied to the recurrent candidate term, followed by a softmax
// readout. Written from the definitions, one layer at a time.
inline std::vector<double> naive_gru_step(const GruWeights& w,
                                          std::vector<std::vector<double>>& h,
                                          const std::vector<double>& x_in) {
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<double> x = x_in;
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& L = w.layers[l];
    const int H = L.hidden, D = L.input_dim;
    std::vector<double> next(H);
    for (int i = 0; i < H; ++i) {
      double a[3], b[3];
      for (int g = 0; g < 3; ++g) {
        const int row = g * H + i;
        a[g] = L.b_ih[row];
        for (int d = 0; d < D; ++d) a[g] += L.w_ih[row * D + d] * x[d];
        b[g] = L.b_hh[row];
        for (int d = 0; d < H; ++d) b[g] += L.w_hh[row * H + d] * h[l][d];
      }
      const double z = sig(a[0] + b[0]);
      const double r = sig(a[1] + b[1]);
      const double n = std::tanh(a[2] + r * b[2]);
      next[i] = (1.0 - z) * n + z * h[l][i];
    }
    h[l] = next;
    x = next;
  }
  const int K = w.num_outputs(), H = static_cast<int>(x.size());
  std::vector<double> logits(K);
  double mx = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    logits[k] = w.b_out[k];
    for (int d = 0; d < H; ++d) logits[k] += w.w_out[k * H + d] * x[d];
    mx = std::max(mx, logits[k]);
  }
  double sum = 0.0;
  for (auto& v : logits) sum += (v = std::exp(v - mx));
  for (auto& v : logits) v /= sum;
  return logits;
}

inline double hz_to_mel_oracle(double hz) { return 1127.0 * std::log1p(hz / 700.0); }

// One log-Mel frame from the definition: in-window pre-emphasis (first
// sample against itself), Hamming window, zero-pad to 512, direct DFT power
// spectrum, 41 triangular filters evenly spaced on the Mel scale over
// [0, 8000] Hz, log with a 1e-10 energy floor.
inline std::vector<double> naive_fbank_frame(const std::vector<std::int16_t>& window) {
  const int n = 400, nfft = 512, bins = 41;
  std::vector<double> x(nfft, 0.0);
  double prev = window[0] / 32768.0;
  for (int i = 0; i < n; ++i) {
    const double s = window[i] / 32768.0;
    const double ham = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
    x[i] = (s - 0.97 * prev) * ham;
    prev = s;
  }
  std::vector<double> power(nfft / 2 + 1);
  for (int k = 0; k <= nfft / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < nfft; ++i) {
      acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / nfft);
    }
    power[k] = std::norm(acc);
  }
  const double top = hz_to_mel_oracle(8000.0);
  std::vector<double> out(bins);
  for (int m = 0; m < bins; ++m) {
    const double left = top * m / (bins + 1);
    const double centre = top * (m + 1) / (bins + 1);
    const double right = top * (m + 2) / (bins + 1);
    double e = 0.0;
    for (int k = 0; k <= nfft / 2; ++k) {
      const double mel = hz_to_mel_oracle(k * 16000.0 / nfft);
      double w = 0.0;
      if (mel > left && mel <= centre) w = (mel - left) / (centre - left);
      if (mel > centre && mel < right) w = (right - mel) / (right - centre);
      e += w * power[k];
    }
    out[m] = std::log(std::max(e, 1e-10));
  }
  return out;
}

}  // namespace kws::testing

#endif  // KWS_TESTS_ORACLES_H_
