#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace signrec {

enum class ErrorKind {
  config,          // bad configuration / usage
  parse,           // malformed input file (message carries line number)
  validation,      // contract violation on otherwise well-formed input
  not_found,       // unknown code or missing entry
  io,              // filesystem failure
  format,          // unrecognized file magic/version
  corruption,      // truncated or inconsistent binary data
  transport,       // backend unreachable or HTTP failure (retryable)
  degraded_output, // backend reachable but returned unusable content
  consistency,     // cross-component drift (e.g. store/index mismatch)
  internal,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Pipeline stage that raised an error; drives retry policy and the latency
// profiler's failure accounting.
enum class Stage { descriptor, embedder, store, generation };

std::string_view to_string(Stage stage);

class StageError : public Error {
 public:
  StageError(Stage stage, ErrorKind kind, const std::string& message)
      : Error(kind, std::string(to_string(stage)) + ": " + message),
        stage_(stage) {}

  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

}  // namespace signrec
