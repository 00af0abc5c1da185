#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bbis {

enum class ErrorCode {
  Domain,       // argument outside the mathematical domain of an operation
  Io,           // file missing or unreadable
  Parse,        // malformed document
  Schema,       // well-formed document with missing or mistyped fields
  Dimension,    // inconsistent shapes
  Invalid,      // value violates a type invariant
  Estimation,   // estimator precondition failed on the sampled data
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace bbis
