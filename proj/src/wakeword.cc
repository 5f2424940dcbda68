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

#include "kws/wakeword.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "kws/common.h"

namespace kws {

double confidence_weight(double enroll_log_prob) {
  return -1.0 / std::min(enroll_log_prob, kMaxEnrollLogProb);
}

void WakewordModel::validate() const {
  if (hypotheses.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "wakeword model has no hypotheses");
  }
  std::map<int, std::set<LabelSequence>> per_source;
  for (const auto& h : hypotheses) {
    validate_sequence(h.labels, alphabet.size());
    if (!std::isfinite(h.weight) || h.weight <= 0.0) {
      throw Error(ErrorCode::kInvariant, "hypothesis weight must be finite and > 0");
    }
    if (h.source >= 0 && !per_source[h.source].insert(h.labels).second) {
      throw Error(ErrorCode::kInvariant,
                  "duplicate sequence from one enrollment recording");
    }
  }
  if (nbest > 0) {
    for (const auto& [source, seqs] : per_source) {
      if (static_cast<int>(seqs.size()) > nbest) {
        throw Error(ErrorCode::kInvariant, "more than N hypotheses per recording");
      }
    }
  }
}

LearnResult learn_from_nbest(std::span<const NBestList> nbest_lists, int nbest,
                             const LabelAlphabet& alphabet, int beam_width) {
  if (nbest < 1) throw Error(ErrorCode::kInvalidArgument, "N must be >= 1");
  if (beam_width > 0 && nbest > beam_width) {
    throw Error(ErrorCode::kInvalidArgument, "N must not exceed the beam width");
  }
  if (nbest_lists.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no enrollment recordings");
  }
  LearnResult result;
  result.model.alphabet = alphabet;
  result.model.nbest = nbest;
  result.model.beam = beam_width;
  for (std::size_t i = 0; i < nbest_lists.size(); ++i) {
    const auto& list = nbest_lists[i];
    const std::size_t keep = std::min<std::size_t>(nbest, list.size());
    bool only_empty = true;
    for (std::size_t j = 0; j < keep; ++j) {
      const auto& entry = list[j];
      only_empty = only_empty && entry.labels.empty();
      result.model.hypotheses.push_back(
          {entry.labels, entry.log_prob, confidence_weight(entry.log_prob),
           static_cast<int>(i)});
    }
    if (only_empty) {
      result.warnings.push_back("enrollment recording " + std::to_string(i + 1) +
                                " decodes to the empty sequence only");
    }
  }
  if (result.model.hypotheses.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "enrollment produced no hypotheses");
  }
  result.model.validate();
  return result;
}

LearnResult learn(std::span<const Posteriorgram> posts, int beam_width,
                  int nbest) {
  if (posts.empty() || posts.size() > 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "enrollment takes one to three recordings");
  }
  if (nbest > beam_width) {
    throw Error(ErrorCode::kInvalidArgument, "N must not exceed the beam width");
  }
  std::vector<NBestList> lists;
  for (const auto& post : posts) {
    if (post.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty enrollment posteriorgram");
    }
    if (!(post.alphabet() == posts.front().alphabet())) {
      throw Error(ErrorCode::kDimensionMismatch, "enrollment alphabets differ");
    }
    lists.push_back(beam_search(post, beam_width));
  }
  return learn_from_nbest(lists, nbest, posts.front().alphabet(), beam_width);
}

WakewordModel model_from_sequence(const LabelSequence& labels,
                                  const LabelAlphabet& alphabet) {
  validate_sequence(labels, alphabet.size());
  WakewordModel model;
  model.alphabet = alphabet;
  model.nbest = 1;
  model.hypotheses.push_back({labels, -1.0, 1.0, -1});
  return model;
}

namespace {

void check_compatible(const WakewordModel& model, const Posteriorgram& post) {
  if (model.hypotheses.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "wakeword model has no hypotheses");
  }
  if (post.num_labels() != model.alphabet.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "posteriorgram alphabet does not match the wakeword model");
  }
}

}  // namespace

std::vector<double> hypothesis_log_probs(const WakewordModel& model,
                                         const Posteriorgram& post,
                                         CtcOpCounter* counter) {
  check_compatible(model, post);
  const std::size_t n = model.hypotheses.size();
  std::vector<double> log_probs(n);
  std::vector<std::uint64_t> cells(n, 0);
#pragma omp parallel for schedule(dynamic) if (n * post.num_frames() > 4096)
  for (std::size_t i = 0; i < n; ++i) {
    CtcOpCounter local;
    log_probs[i] = forward_logprob(post, model.hypotheses[i].labels, &local);
    cells[i] = local.cells;
  }
  if (counter) {
    for (auto c : cells) counter->cells += c;
  }
  return log_probs;
}

double aggregate(const WakewordModel& model, std::span<const double> log_probs,
                 Aggregation aggregation) {
  if (log_probs.size() != model.hypotheses.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one log-probability per hypothesis");
  }
  if (aggregation == Aggregation::kWeightedSum) {
    double total = 0.0;
    for (std::size_t i = 0; i < log_probs.size(); ++i) {
      if (log_probs[i] == kLogZero) return kLogZero;
      total += model.hypotheses[i].weight * log_probs[i];
    }
    return total;
  }
  double total = kLogZero;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    if (log_probs[i] == kLogZero) continue;
    total = log_add(total, model.hypotheses[i].enroll_log_prob + log_probs[i]);
  }
  return total;
}

double score_with(const WakewordModel& model, const Posteriorgram& post,
                  Aggregation aggregation) {
  return aggregate(model, hypothesis_log_probs(model, post), aggregation);
}

double score(const WakewordModel& model, const Posteriorgram& post) {
  return score_with(model, post, Aggregation::kWeightedSum);
}

double score_logsumexp_prior(const WakewordModel& model,
                             const Posteriorgram& post) {
  return score_with(model, post, Aggregation::kLogSumExpPrior);
}

namespace reference {

double score(const WakewordModel& model, const Posteriorgram& post) {
  check_compatible(model, post);
  double total = 0.0;
  for (const auto& h : model.hypotheses) {
    const double lp = forward_logprob(post, h.labels);
    if (lp == kLogZero) return kLogZero;
    total += h.weight * lp;
  }
  return total;
}

}  // namespace reference

std::string format_sequence(const LabelSequence& labels,
                            const LabelAlphabet& alphabet) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ' ';
    out += alphabet.symbol(labels[i]);
  }
  return out;
}

LabelSequence parse_sequence(const std::string& text,
                             const LabelAlphabet& alphabet) {
  LabelSequence labels;
  std::istringstream in(text);
  std::string symbol;
  while (in >> symbol) {
    const int index = alphabet.index_of(symbol);
    if (index <= kBlankIndex) {
      throw Error(ErrorCode::kParse, "unknown label '" + symbol + "'");
    }
    labels.push_back(index);
  }
  return labels;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "not a number: '" + s + "'");
  }
  if (used != s.size()) throw Error(ErrorCode::kParse, "not a number: '" + s + "'");
  return v;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string format_model(const WakewordModel& model) {
  std::ostringstream out;
  out << "# query-by-example wakeword model\n";
  out << "#alphabet_hash " << hash_hex(model.alphabet.hash()) << "\n";
  out << "#nbest " << model.nbest << "\n";
  out << "#beam " << model.beam << "\n";
  out << "#threshold "
      << (model.threshold ? format_double(*model.threshold) : "none") << "\n";
  for (const auto& h : model.hypotheses) {
    out << format_sequence(h.labels, model.alphabet) << '\t'
        << format_double(h.weight) << '\t' << format_double(h.enroll_log_prob)
        << '\n';
  }
  return out.str();
}

WakewordModel parse_model(const std::string& text,
                          const LabelAlphabet& alphabet) {
  WakewordModel model;
  model.alphabet = alphabet;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool saw_hash = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "model line " + std::to_string(line_no) + ": ";
    if (line[0] == '#') {
      std::istringstream header(line.substr(1));
      std::string key, value;
      header >> key >> value;
      if (key == "alphabet_hash") {
        if (value != hash_hex(alphabet.hash())) {
          throw Error(ErrorCode::kDimensionMismatch,
                      where + "model was built for a different alphabet");
        }
        saw_hash = true;
      } else if (key == "nbest") {
        model.nbest = static_cast<int>(parse_double(value));
      } else if (key == "beam") {
        model.beam = static_cast<int>(parse_double(value));
      } else if (key == "threshold") {
        if (value != "none") model.threshold = parse_double(value);
      }
      continue;
    }
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw Error(ErrorCode::kParse, where + "expected three tab-separated fields");
    }
    Hypothesis h;
    try {
      h.labels = parse_sequence(line.substr(0, tab1), alphabet);
      h.weight = parse_double(line.substr(tab1 + 1, tab2 - tab1 - 1));
      h.enroll_log_prob = parse_double(line.substr(tab2 + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, where + e.what());
    }
    model.hypotheses.push_back(std::move(h));
  }
  if (!saw_hash) throw Error(ErrorCode::kParse, "model has no #alphabet_hash line");
  try {
    model.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("invalid model: ") + e.what());
  }
  return model;
}

void save_model(const std::string& path, const WakewordModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << format_model(model);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

WakewordModel load_model(const std::string& path, const LabelAlphabet& alphabet) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str(), alphabet);
}

}  // namespace kws
