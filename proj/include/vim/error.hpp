// include/vim/error.hpp

// Copyright 2026  The vimeval authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VIM_ERROR_HPP
#define VIM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace vim {

enum class ErrorCode {
  // configuration
  InvalidConfig,
  InvalidRatios,
  InvalidTarget,
  UnknownMatcher,
  UnknownPair,
  UsageError,
  // data
  IoError,
  ParseError,
  DuplicateUtteranceId,
  DuplicateSpeaker,
  UnknownSpace,
  UnknownUtterance,
  DimensionMismatch,
  CountMismatch,
  MagicMismatch,
  UnsupportedDtype,
  MissingEmbedding,
  MissingLatent,
  InsufficientSpeakers,
  EmptyInput,
  EmptyScores,
  EmptyOutcomes,
  MatcherSetMismatch,
  SpaceMismatch,
  // numeric / degenerate
  DegenerateVector,
  DegenerateDistances,
  PerplexityTooLarge,
  EmptyRange,
};

// Process exit codes: 0 success, 2 config, 3 data, 4 numeric.
enum class ErrorCategory : int { Config = 2, Data = 3, Numeric = 4 };

inline ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidRatios:
    case ErrorCode::InvalidTarget:
    case ErrorCode::UnknownMatcher:
    case ErrorCode::UnknownPair:
    case ErrorCode::UsageError:
      return ErrorCategory::Config;
    case ErrorCode::DegenerateVector:
    case ErrorCode::DegenerateDistances:
    case ErrorCode::PerplexityTooLarge:
    case ErrorCode::EmptyRange:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

inline const char *name_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidRatios: return "InvalidRatios";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::UnknownMatcher: return "UnknownMatcher";
    case ErrorCode::UnknownPair: return "UnknownPair";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateUtteranceId: return "DuplicateUtteranceId";
    case ErrorCode::DuplicateSpeaker: return "DuplicateSpeaker";
    case ErrorCode::UnknownSpace: return "UnknownSpace";
    case ErrorCode::UnknownUtterance: return "UnknownUtterance";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::MissingLatent: return "MissingLatent";
    case ErrorCode::InsufficientSpeakers: return "InsufficientSpeakers";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::EmptyOutcomes: return "EmptyOutcomes";
    case ErrorCode::MatcherSetMismatch: return "MatcherSetMismatch";
    case ErrorCode::SpaceMismatch: return "SpaceMismatch";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::DegenerateDistances: return "DegenerateDistances";
    case ErrorCode::PerplexityTooLarge: return "PerplexityTooLarge";
    case ErrorCode::EmptyRange: return "EmptyRange";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(name_of(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }
  ErrorCategory category() const { return category_of(code_); }
  int exit_code() const { return static_cast<int>(category()); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) {
  throw Error(code, message);
}

}  // namespace vim

#endif  // VIM_ERROR_HPP
