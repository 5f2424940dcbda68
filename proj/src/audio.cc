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

#include "kws/audio.h"

#include <cstring>
#include <fstream>
#include <iterator>

#include "kws/common.h"

namespace kws {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kAudioTooShort: return "audio too short";
    case ErrorCode::kUnsupportedAudio: return "unsupported audio";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kUnknownVersion: return "unknown format version";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kRowSum: return "row sum violation";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kInvariant: return "invariant violation";
  }
  return "unknown error";
}

void validate_audio(const AudioBuffer& audio) {
  if (audio.sample_rate != kSampleRate) {
    throw Error(ErrorCode::kUnsupportedAudio,
                "sample rate must be 16000 Hz, got " +
                    std::to_string(audio.sample_rate));
  }
}

std::size_t num_frames(std::size_t num_samples) {
  if (num_samples < static_cast<std::size_t>(kWindowSamples)) return 0;
  return 1 + (num_samples - kWindowSamples) / kHopSamples;
}

namespace {

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

}  // namespace

AudioBuffer parse_wav(const std::vector<std::uint8_t>& bytes) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kUnsupportedAudio, "wav: " + msg);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail("not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  AudioBuffer audio;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    std::uint32_t chunk_size = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) fail("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16) fail("short fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      std::uint16_t format = read_u16(f);
      std::uint16_t channels = read_u16(f + 2);
      std::uint32_t rate = read_u32(f + 4);
      std::uint16_t bits = read_u16(f + 14);
      if (format != 1) fail("only PCM is supported");
      if (channels != 1) fail("only mono is supported");
      if (bits != 16) fail("only 16-bit samples are supported");
      if (rate != static_cast<std::uint32_t>(kSampleRate)) {
        fail("sample rate must be 16000 Hz, got " + std::to_string(rate));
      }
      audio.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) fail("data chunk before fmt chunk");
      std::size_t n = chunk_size / 2;
      audio.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        audio.samples[i] =
            static_cast<std::int16_t>(read_u16(bytes.data() + body + 2 * i));
      }
      return audio;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  fail("no data chunk");
  return audio;
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio) {
  validate_audio(audio);
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, kSampleRate);
  put_u32(out, kSampleRate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (std::int16_t s : audio.samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

AudioBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_wav(bytes);
}

void write_wav(const std::string& path, const AudioBuffer& audio) {
  auto bytes = encode_wav(audio);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace kws
