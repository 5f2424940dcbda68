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

#include "kws/episode.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kws/common.h"

namespace fs = std::filesystem;

namespace kws {

const char* to_string(Polarity p) {
  return p == Polarity::kPositive ? "positive" : "negative";
}
const char* to_string(NegativeTag t) {
  return t == NegativeTag::kConfusing ? "confusing" : "non_confusing";
}
const char* to_string(SpeakerMatch s) {
  return s == SpeakerMatch::kSame ? "same" : "different";
}

void Episode::validate() const {
  for (const auto& s : support) {
    if (s.audio.samples.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "episode " + id + ": empty support");
    }
  }
  if (tests.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "episode " + id + ": no tests");
  }
}

void write_manifest(const std::string& path, const std::vector<Episode>& episodes) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << "# few-shot episode manifest\n";
  for (const auto& e : episodes) {
    out << "episode " << e.id << "\n";
    if (!e.target.empty()) {
      out << "target";
      for (const auto& label : e.target) out << ' ' << label;
      out << "\n";
    }
    for (const auto& s : e.support) out << "support " << s.path << "\n";
    for (const auto& t : e.tests) {
      out << "test " << t.recording.path << ' ' << to_string(t.polarity) << ' '
          << to_string(t.tag) << ' ' << to_string(t.speaker) << "\n";
    }
    out << "end\n";
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

std::string write_episodes(const std::string& dir,
                           const std::vector<Episode>& episodes) {
  fs::create_directories(dir);
  std::vector<Episode> written = episodes;
  for (auto& e : written) {
    const fs::path sub = fs::path(dir) / e.id;
    fs::create_directories(sub);
    for (std::size_t i = 0; i < e.support.size(); ++i) {
      const std::string name = "support" + std::to_string(i) + ".wav";
      write_wav((sub / name).string(), e.support[i].audio);
      e.support[i].path = (fs::path(e.id) / name).string();
    }
    for (std::size_t i = 0; i < e.tests.size(); ++i) {
      const std::string name = "test" + std::to_string(i) + ".wav";
      write_wav((sub / name).string(), e.tests[i].recording.audio);
      e.tests[i].recording.path = (fs::path(e.id) / name).string();
    }
  }
  const std::string manifest = (fs::path(dir) / "manifest.txt").string();
  write_manifest(manifest, written);
  return manifest;
}

namespace {

Polarity parse_polarity(const std::string& s) {
  if (s == "positive") return Polarity::kPositive;
  if (s == "negative") return Polarity::kNegative;
  throw Error(ErrorCode::kParse, "bad polarity '" + s + "'");
}

NegativeTag parse_tag(const std::string& s) {
  if (s == "confusing") return NegativeTag::kConfusing;
  if (s == "non_confusing") return NegativeTag::kNonConfusing;
  throw Error(ErrorCode::kParse, "bad tag '" + s + "'");
}

SpeakerMatch parse_speaker(const std::string& s) {
  if (s == "same") return SpeakerMatch::kSame;
  if (s == "different") return SpeakerMatch::kDifferent;
  throw Error(ErrorCode::kParse, "bad speaker match '" + s + "'");
}

}  // namespace

std::vector<Episode> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  std::vector<Episode> episodes;
  std::optional<Episode> current;
  std::size_t supports = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string kind;
    if (!(fields >> kind) || kind[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    try {
      if (kind == "episode") {
        if (current) throw Error(ErrorCode::kParse, "missing 'end'");
        current.emplace();
        supports = 0;
        if (!(fields >> current->id)) throw Error(ErrorCode::kParse, "missing id");
        continue;
      }
      if (!current) throw Error(ErrorCode::kParse, "'" + kind + "' outside an episode");
      if (kind == "target") {
        std::string label;
        while (fields >> label) current->target.push_back(label);
      } else if (kind == "support") {
        std::string p;
        if (!(fields >> p)) throw Error(ErrorCode::kParse, "missing path");
        if (supports >= 3) throw Error(ErrorCode::kParse, "more than three supports");
        current->support[supports].path = p;
        current->support[supports].audio = read_wav(resolve(p));
        ++supports;
      } else if (kind == "test") {
        std::string p, pol, tag, spk;
        if (!(fields >> p >> pol >> tag >> spk)) {
          throw Error(ErrorCode::kParse, "test needs path, polarity, tag, speaker");
        }
        TestCase t;
        t.recording.path = p;
        t.recording.audio = read_wav(resolve(p));
        t.polarity = parse_polarity(pol);
        t.tag = parse_tag(tag);
        t.speaker = parse_speaker(spk);
        current->tests.push_back(std::move(t));
      } else if (kind == "end") {
        if (supports != 3) throw Error(ErrorCode::kParse, "episode needs three supports");
        current->validate();
        episodes.push_back(std::move(*current));
        current.reset();
      } else {
        throw Error(ErrorCode::kParse, "unknown record '" + kind + "'");
      }
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
  }
  if (current) throw Error(ErrorCode::kParse, path + ": last episode has no 'end'");
  return episodes;
}

}  // namespace kws
