#include "synclust/error.hpp"

namespace synclust {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse: return "parse";
    case ErrorCode::integrity: return "integrity";
    case ErrorCode::shape: return "shape";
    case ErrorCode::degenerate_vector: return "degenerate_vector";
    case ErrorCode::index: return "index";
    case ErrorCode::state: return "state";
    case ErrorCode::config: return "config";
    case ErrorCode::label: return "label";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::oracle_unavailable: return "oracle_unavailable";
    case ErrorCode::unparseable_reply: return "unparseable_reply";
    case ErrorCode::budget: return "budget";
    case ErrorCode::undefined_metrics: return "undefined_metrics";
    case ErrorCode::contract: return "contract";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace synclust
