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

#ifndef KWS_COMMON_H_
#define KWS_COMMON_H_

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace kws {

enum class ErrorCode {
  kInvalidArgument,
  kAudioTooShort,
  kUnsupportedAudio,
  kIo,
  kBadMagic,
  kUnknownVersion,
  kDimensionMismatch,
  kNonFinite,
  kRowSum,
  kParse,
  kInvariant,
};

const char* error_code_name(ErrorCode code);

// All recoverable failures in the library are reported with this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) with -inf as the additive identity.
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

}  // namespace kws

#endif  // KWS_COMMON_H_
