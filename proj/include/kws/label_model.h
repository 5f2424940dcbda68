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

// Label model: a unidirectional multi-layer GRU with an affine + softmax
// output layer, mapping stacked features to CTC posteriorgrams.
//
// GRU cell (gate order in all matrices: update z, reset r, candidate n):
//   z  = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//   r  = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//   n  = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//   h' = (1 - z) * n + z * h
//
// Weight file ("KWSG"), all integers u32 and all values float32 little-endian:
//   magic "KWSG", version (1), num_layers, hidden, input_dim, K
//   for each layer l (in_l = input_dim for l == 0, else hidden):
//     W_ih [3*hidden x in_l], W_hh [3*hidden x hidden], b_ih [3*hidden],
//     b_hh [3*hidden], all row-major, gate blocks stacked z, r, n
//   W_out [K x hidden], b_out [K]
//   label count (K - 1), then each label as u32 byte length + UTF-8 bytes
//
// Posteriorgram file ("KWSP"):
//   magic "KWSP", version (1), T, K, K - 1 length-prefixed labels,
//   then T*K float32 probabilities row-major.

#ifndef KWS_LABEL_MODEL_H_
#define KWS_LABEL_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kws/features.h"

namespace kws {

inline constexpr const char* kBlankSymbol = "<b>";
inline constexpr int kBlankIndex = 0;

// Index 0 is the CTC blank; label i (0-based in `labels()`) has index i + 1.
class LabelAlphabet {
 public:
  LabelAlphabet() = default;
  explicit LabelAlphabet(std::vector<std::string> labels);

  int size() const { return static_cast<int>(labels_.size()) + 1; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& symbol(int index) const;
  // -1 if unknown.
  int index_of(const std::string& symbol) const;
  // FNV-1a over the newline-joined labels.
  std::uint64_t hash() const;

  bool operator==(const LabelAlphabet& other) const = default;

 private:
  std::vector<std::string> labels_;
};

// The 39 ARPAbet phonemes without stress markers.
LabelAlphabet arpabet_alphabet();

struct GruLayer {
  int input_dim = 0;
  int hidden = 0;
  std::vector<double> w_ih;  // 3*hidden x input_dim
  std::vector<double> w_hh;  // 3*hidden x hidden
  std::vector<double> b_ih;  // 3*hidden
  std::vector<double> b_hh;  // 3*hidden
};

struct GruWeights {
  std::vector<GruLayer> layers;
  std::vector<double> w_out;  // K x hidden
  std::vector<double> b_out;  // K
  LabelAlphabet alphabet;

  int num_layers() const { return static_cast<int>(layers.size()); }
  int input_dim() const { return layers.empty() ? 0 : layers.front().input_dim; }
  int hidden_size() const { return layers.empty() ? 0 : layers.front().hidden; }
  int num_outputs() const { return alphabet.size(); }
  std::size_t parameter_count() const;

  // Throws kDimensionMismatch or kNonFinite.
  void validate() const;
};

GruWeights make_zero_weights(int num_layers, int hidden, int input_dim,
                             const LabelAlphabet& alphabet);
// Uniform in [-scale, scale], deterministic in `seed`.
GruWeights make_random_weights(std::uint64_t seed, int num_layers, int hidden,
                               int input_dim, const LabelAlphabet& alphabet,
                               double scale = 0.3);

GruWeights load_weights(const std::string& path);
void save_weights(const std::string& path, const GruWeights& weights);

// T x K per-frame posteriors. Log-probabilities are cached alongside.
class Posteriorgram {
 public:
  Posteriorgram() = default;
  explicit Posteriorgram(LabelAlphabet alphabet) : alphabet_(std::move(alphabet)) {}

  const LabelAlphabet& alphabet() const { return alphabet_; }
  int num_labels() const { return alphabet_.size(); }
  std::size_t num_frames() const {
    return num_labels() ? probs_.size() / num_labels() : 0;
  }
  bool empty() const { return probs_.empty(); }

  std::span<const double> row(std::size_t t) const {
    return {probs_.data() + t * num_labels(), static_cast<std::size_t>(num_labels())};
  }
  std::span<const double> log_row(std::size_t t) const {
    return {log_probs_.data() + t * num_labels(),
            static_cast<std::size_t>(num_labels())};
  }
  void append_row(std::span<const double> probs);
  Posteriorgram slice(std::size_t begin, std::size_t end) const;

  // Every entry in [0, 1] and every row sum within `tolerance` of 1.
  void validate(double tolerance) const;

 private:
  LabelAlphabet alphabet_;
  std::vector<double> probs_;
  std::vector<double> log_probs_;
};

Posteriorgram load_posteriorgram(const std::string& path);
void save_posteriorgram(const std::string& path, const Posteriorgram& post);

// Recurrent state for one stream; reset by default construction.
struct GruState {
  std::vector<std::vector<double>> hidden;  // per layer
};

GruState initial_state(const GruWeights& weights);

// One frame through the network; returns the softmax row and advances
// `state`. Running all frames through this from initial_state() is exactly
// what run() does.
std::vector<double> run_streaming(const GruWeights& weights, GruState& state,
                                  std::span<const double> frame);

Posteriorgram run(const GruWeights& weights, const FeatureSequence& features);

}  // namespace kws

#endif  // KWS_LABEL_MODEL_H_
