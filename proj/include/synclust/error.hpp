#pragma once

#include <stdexcept>
#include <string>

namespace synclust {

enum class ErrorCode {
  parse,
  integrity,
  shape,
  degenerate_vector,
  index,
  state,
  config,
  label,
  numeric,
  oracle_unavailable,
  unparseable_reply,
  budget,
  undefined_metrics,
  contract,
  io,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// C API and the CLI can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace synclust
