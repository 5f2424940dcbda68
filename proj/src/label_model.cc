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

#include "kws/label_model.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "binary_io.h"
#include "kws/common.h"

namespace kws {

namespace {

constexpr std::uint32_t kWeightFormatVersion = 1;
constexpr std::uint32_t kPosteriorFormatVersion = 1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y = W x + b for a row-major rows x cols matrix. Rows are independent so
// large layers are split across threads.
void affine(std::span<const double> w, std::span<const double> b,
            std::span<const double> x, std::span<double> y) {
  const std::size_t rows = y.size();
  const std::size_t cols = x.size();
#pragma omp parallel for if (rows * cols >= (1u << 16)) schedule(static)
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wi = w.data() + i * cols;
    double acc = b[i];
    for (std::size_t j = 0; j < cols; ++j) acc += wi[j] * x[j];
    y[i] = acc;
  }
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kNonFinite,
                  std::string("non-finite value in ") + what);
    }
  }
}

void check_size(const std::vector<double>& v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " has " + std::to_string(v.size()) +
                    " values, expected " + std::to_string(n));
  }
}

void write_alphabet(internal::ByteWriter& w, const LabelAlphabet& alphabet) {
  w.u32(static_cast<std::uint32_t>(alphabet.labels().size()));
  for (const auto& label : alphabet.labels()) w.str(label);
}

LabelAlphabet read_alphabet(internal::ByteReader& r) {
  std::uint32_t n = r.u32();
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) labels.push_back(r.str());
  return LabelAlphabet(std::move(labels));
}

}  // namespace

LabelAlphabet::LabelAlphabet(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  std::unordered_set<std::string> seen;
  for (const auto& label : labels_) {
    if (label.empty() || label == kBlankSymbol || label[0] == '#') {
      throw Error(ErrorCode::kInvalidArgument,
                  "label must be non-empty, differ from <b> and not start with #");
    }
    if (label.find_first_of(" \t\r\n") != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label '" + label + "' contains whitespace");
    }
    if (!seen.insert(label).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate label " + label);
    }
  }
}

const std::string& LabelAlphabet::symbol(int index) const {
  static const std::string blank = kBlankSymbol;
  if (index == kBlankIndex) return blank;
  if (index < 0 || index >= size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "label index " + std::to_string(index) + " out of range");
  }
  return labels_[index - 1];
}

int LabelAlphabet::index_of(const std::string& symbol) const {
  if (symbol == kBlankSymbol) return kBlankIndex;
  auto it = std::find(labels_.begin(), labels_.end(), symbol);
  return it == labels_.end() ? -1 : static_cast<int>(it - labels_.begin()) + 1;
}

std::uint64_t LabelAlphabet::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  bool first = true;
  for (const auto& label : labels_) {
    if (!first) {
      h ^= static_cast<unsigned char>('\n');
      h *= 1099511628211ull;
    }
    first = false;
    for (unsigned char c : label) {
      h ^= c;
      h *= 1099511628211ull;
    }
  }
  return h;
}

LabelAlphabet arpabet_alphabet() {
  return LabelAlphabet({"AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH",
                        "D",  "DH", "EH", "ER", "EY", "F",  "G",  "HH",
                        "IH", "IY", "JH", "K",  "L",  "M",  "N",  "NG",
                        "OW", "OY", "P",  "R",  "S",  "SH", "T",  "TH",
                        "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"});
}

std::size_t GruWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    n += layer.w_ih.size() + layer.w_hh.size() + layer.b_ih.size() +
         layer.b_hh.size();
  }
  return n + w_out.size() + b_out.size();
}

void GruWeights::validate() const {
  if (layers.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "GRU has no layers");
  }
  const int hidden = layers.front().hidden;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.hidden != hidden || hidden <= 0) {
      throw Error(ErrorCode::kDimensionMismatch, "inconsistent hidden size");
    }
    if (l > 0 && layer.input_dim != hidden) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "layer " + std::to_string(l) + " input must equal hidden size");
    }
    const std::size_t h3 = 3 * static_cast<std::size_t>(hidden);
    check_size(layer.w_ih, h3 * layer.input_dim, "W_ih");
    check_size(layer.w_hh, h3 * hidden, "W_hh");
    check_size(layer.b_ih, h3, "b_ih");
    check_size(layer.b_hh, h3, "b_hh");
    check_finite(layer.w_ih, "W_ih");
    check_finite(layer.w_hh, "W_hh");
    check_finite(layer.b_ih, "b_ih");
    check_finite(layer.b_hh, "b_hh");
  }
  const std::size_t k = static_cast<std::size_t>(alphabet.size());
  if (b_out.size() != k) {
    throw Error(ErrorCode::kDimensionMismatch,
                "output layer has " + std::to_string(b_out.size()) +
                    " outputs but the alphabet has " + std::to_string(k));
  }
  check_size(w_out, k * hidden, "W_out");
  check_finite(w_out, "W_out");
  check_finite(b_out, "b_out");
}

GruWeights make_zero_weights(int num_layers, int hidden, int input_dim,
                             const LabelAlphabet& alphabet) {
  GruWeights w;
  w.alphabet = alphabet;
  for (int l = 0; l < num_layers; ++l) {
    GruLayer layer;
    layer.input_dim = l == 0 ? input_dim : hidden;
    layer.hidden = hidden;
    layer.w_ih.assign(3 * hidden * layer.input_dim, 0.0);
    layer.w_hh.assign(3 * hidden * hidden, 0.0);
    layer.b_ih.assign(3 * hidden, 0.0);
    layer.b_hh.assign(3 * hidden, 0.0);
    w.layers.push_back(std::move(layer));
  }
  w.w_out.assign(static_cast<std::size_t>(alphabet.size()) * hidden, 0.0);
  w.b_out.assign(alphabet.size(), 0.0);
  return w;
}

GruWeights make_random_weights(std::uint64_t seed, int num_layers, int hidden,
                               int input_dim, const LabelAlphabet& alphabet,
                               double scale) {
  GruWeights w = make_zero_weights(num_layers, hidden, input_dim, alphabet);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  // Values are rounded to float so that a save/load round trip is exact.
  auto fill = [&](std::vector<double>& v) {
    for (auto& x : v) x = static_cast<float>(dist(rng));
  };
  for (auto& layer : w.layers) {
    fill(layer.w_ih);
    fill(layer.w_hh);
    fill(layer.b_ih);
    fill(layer.b_hh);
  }
  fill(w.w_out);
  fill(w.b_out);
  return w;
}

void save_weights(const std::string& path, const GruWeights& weights) {
  weights.validate();
  internal::ByteWriter w;
  w.magic("KWSG");
  w.u32(kWeightFormatVersion);
  w.u32(static_cast<std::uint32_t>(weights.num_layers()));
  w.u32(static_cast<std::uint32_t>(weights.hidden_size()));
  w.u32(static_cast<std::uint32_t>(weights.input_dim()));
  w.u32(static_cast<std::uint32_t>(weights.num_outputs()));
  auto put = [&](const std::vector<double>& v) {
    for (double x : v) w.f32(static_cast<float>(x));
  };
  for (const auto& layer : weights.layers) {
    put(layer.w_ih);
    put(layer.w_hh);
    put(layer.b_ih);
    put(layer.b_hh);
  }
  put(weights.w_out);
  put(weights.b_out);
  write_alphabet(w, weights.alphabet);
  w.save(path);
}

GruWeights load_weights(const std::string& path) {
  auto r = internal::ByteReader::from_file(path);
  r.expect_magic("KWSG");
  if (std::uint32_t version = r.u32(); version != kWeightFormatVersion) {
    throw Error(ErrorCode::kUnknownVersion,
                path + ": weight format version " + std::to_string(version));
  }
  const std::uint32_t num_layers = r.u32();
  const std::uint32_t hidden = r.u32();
  const std::uint32_t input_dim = r.u32();
  const std::uint32_t k = r.u32();
  if (num_layers == 0 || hidden == 0 || input_dim == 0 || k < 2 ||
      num_layers > 64 || hidden > 65536 || input_dim > 65536 || k > 65536) {
    throw Error(ErrorCode::kDimensionMismatch, path + ": implausible header");
  }
  auto get = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v) x = r.f32();
  };
  GruWeights weights;
  for (std::uint32_t l = 0; l < num_layers; ++l) {
    GruLayer layer;
    layer.input_dim = static_cast<int>(l == 0 ? input_dim : hidden);
    layer.hidden = static_cast<int>(hidden);
    get(layer.w_ih, 3ull * hidden * layer.input_dim);
    get(layer.w_hh, 3ull * hidden * hidden);
    get(layer.b_ih, 3ull * hidden);
    get(layer.b_hh, 3ull * hidden);
    weights.layers.push_back(std::move(layer));
  }
  get(weights.w_out, static_cast<std::size_t>(k) * hidden);
  get(weights.b_out, k);
  weights.alphabet = read_alphabet(r);
  if (!r.at_end()) throw Error(ErrorCode::kParse, path + ": trailing bytes");
  weights.validate();
  return weights;
}

void Posteriorgram::append_row(std::span<const double> probs) {
  if (static_cast<int>(probs.size()) != num_labels()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "posterior row has " + std::to_string(probs.size()) +
                    " entries, alphabet has " + std::to_string(num_labels()));
  }
  probs_.insert(probs_.end(), probs.begin(), probs.end());
  for (double p : probs) log_probs_.push_back(p > 0.0 ? std::log(p) : kLogZero);
}

Posteriorgram Posteriorgram::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, num_frames());
  Posteriorgram out(alphabet_);
  const std::size_t k = num_labels();
  if (begin < end) {
    out.probs_.assign(probs_.begin() + begin * k, probs_.begin() + end * k);
    out.log_probs_.assign(log_probs_.begin() + begin * k,
                          log_probs_.begin() + end * k);
  }
  return out;
}

void Posteriorgram::validate(double tolerance) const {
  for (std::size_t t = 0; t < num_frames(); ++t) {
    double sum = 0.0;
    for (double p : row(t)) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        throw Error(ErrorCode::kRowSum, "posterior entry outside [0, 1] at frame " +
                                            std::to_string(t));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw Error(ErrorCode::kRowSum, "posterior row " + std::to_string(t) +
                                          " sums to " + std::to_string(sum));
    }
  }
}

void save_posteriorgram(const std::string& path, const Posteriorgram& post) {
  internal::ByteWriter w;
  w.magic("KWSP");
  w.u32(kPosteriorFormatVersion);
  w.u32(static_cast<std::uint32_t>(post.num_frames()));
  w.u32(static_cast<std::uint32_t>(post.num_labels()));
  write_alphabet(w, post.alphabet());
  for (std::size_t t = 0; t < post.num_frames(); ++t) {
    for (double p : post.row(t)) w.f32(static_cast<float>(p));
  }
  w.save(path);
}

Posteriorgram load_posteriorgram(const std::string& path) {
  auto r = internal::ByteReader::from_file(path);
  r.expect_magic("KWSP");
  if (std::uint32_t version = r.u32(); version != kPosteriorFormatVersion) {
    throw Error(ErrorCode::kUnknownVersion,
                path + ": posteriorgram format version " + std::to_string(version));
  }
  const std::uint32_t frames = r.u32();
  const std::uint32_t k = r.u32();
  LabelAlphabet alphabet = read_alphabet(r);
  if (static_cast<std::uint32_t>(alphabet.size()) != k) {
    throw Error(ErrorCode::kDimensionMismatch,
                path + ": K does not match the alphabet size");
  }
  Posteriorgram post(std::move(alphabet));
  std::vector<double> row(k);
  for (std::uint32_t t = 0; t < frames; ++t) {
    for (auto& p : row) p = r.f32();
    post.append_row(row);
  }
  if (!r.at_end()) throw Error(ErrorCode::kParse, path + ": trailing bytes");
  post.validate(1e-4);
  return post;
}

GruState initial_state(const GruWeights& weights) {
  GruState state;
  state.hidden.assign(weights.layers.size(),
                      std::vector<double>(weights.hidden_size(), 0.0));
  return state;
}

std::vector<double> run_streaming(const GruWeights& weights, GruState& state,
                                  std::span<const double> frame) {
  if (static_cast<int>(frame.size()) != weights.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "frame has " + std::to_string(frame.size()) +
                    " features, label model expects " +
                    std::to_string(weights.input_dim()));
  }
  if (state.hidden.size() != weights.layers.size()) state = initial_state(weights);

  const std::size_t hidden = weights.hidden_size();
  std::vector<double> gi(3 * hidden), gh(3 * hidden);
  std::span<const double> x = frame;
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    const auto& layer = weights.layers[l];
    auto& h = state.hidden[l];
    affine(layer.w_ih, layer.b_ih, x, gi);
    affine(layer.w_hh, layer.b_hh, h, gh);
    for (std::size_t i = 0; i < hidden; ++i) {
      const double z = sigmoid(gi[i] + gh[i]);
      const double r = sigmoid(gi[hidden + i] + gh[hidden + i]);
      const double n = std::tanh(gi[2 * hidden + i] + r * gh[2 * hidden + i]);
      h[i] = (1.0 - z) * n + z * h[i];
    }
    x = h;
  }

  std::vector<double> out(weights.num_outputs());
  affine(weights.w_out, weights.b_out, x, out);
  const double max = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (auto& v : out) {
    v = std::exp(v - max);
    sum += v;
  }
  for (auto& v : out) v /= sum;
  return out;
}

Posteriorgram run(const GruWeights& weights, const FeatureSequence& features) {
  if (features.dim() != weights.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "features have dim " + std::to_string(features.dim()) +
                    ", label model expects " + std::to_string(weights.input_dim()));
  }
  Posteriorgram post(weights.alphabet);
  GruState state = initial_state(weights);
  for (std::size_t t = 0; t < features.num_frames(); ++t) {
    post.append_row(run_streaming(weights, state, features.row(t)));
  }
  return post;
}

}  // namespace kws
