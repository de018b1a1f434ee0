#include "signrec/errors.hpp"

namespace signrec {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::corruption: return "corruption";
    case ErrorKind::transport: return "transport";
    case ErrorKind::degraded_output: return "degraded-output";
    case ErrorKind::consistency: return "consistency";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::descriptor: return "descriptor";
    case Stage::embedder: return "embedder";
    case Stage::store: return "store";
    case Stage::generation: return "generation";
  }
  return "unknown";
}

}  // namespace signrec
